"""Coupled integration of the slow-fast system, its first-order limit,
the linear system, and the damped noise convolution.

The second-order equation with mass eps is stepped in slow-fast form

    V_{k+1} = e^{-h/eps} V_k + (1 - e^{-h/eps}) f(U_k) + eps**(theta-1) dL_k
    U_{k+1} = U_k + h V_k

treating the stiff 1/eps damping exactly (exponential integrator); each
step's noise increment is applied undamped at the right endpoint.  The limit
equation is plain Euler-Maruyama on the same increments,

    Ubar_{k+1} = Ubar_k + h f(Ubar_k) + eps**theta dL_k,

and sharing one NoiseRealization between the two is what makes the pathwise
sup error meaningful.  The stiffness guard h <= eps/10 keeps the undamped
jump-placement bias small.

All recursions also exist in array form (arbitrary leading batch axes) so
ensembles run vectorized over replicates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .path_space import GridPath
from .stable_noise import NoiseRealization, StableParams

__all__ = [
    "Drift",
    "ModelConfig",
    "CoupledTrajectories",
    "integrate_slow_fast",
    "integrate_limit",
    "integrate_linear",
    "integrate_ou",
    "steps_for",
]

STIFFNESS_RATIO = 10.0
_GUARD_SLACK = 1.0 + 1e-9


@dataclass(frozen=True)
class Drift:
    """Drift from the globally Lipschitz catalog (or a custom Lipschitz map).

    kinds: "zero"; "linear" f(x) = gain*x + offset; "sine" f(x) =
    gain*sin(x) componentwise; "tanh" f(x) = gain*tanh(x) componentwise;
    "custom" wraps a caller-supplied map (library use only, the CLI never
    executes user code).
    """

    kind: str
    gain: float = 1.0
    offset: float = 0.0
    func: object = None

    _KINDS = ("zero", "linear", "sine", "tanh", "custom")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"drift must be one of {self._KINDS}, got {self.kind!r}")
        if self.kind == "custom" and not callable(self.func):
            raise ValueError("custom drift requires a callable")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "linear":
            return self.gain * x + self.offset
        if self.kind == "sine":
            return self.gain * np.sin(x)
        if self.kind == "tanh":
            return self.gain * np.tanh(x)
        return np.asarray(self.func(x))

    def describe(self) -> dict:
        return {"kind": self.kind, "gain": self.gain, "offset": self.offset}


def steps_for(eps: float, T: float) -> int:
    """Smallest power of two n with T/n <= eps/10 (grid refinement rule)."""
    need = max(1, math.ceil(STIFFNESS_RATIO * T / eps))
    return 1 << (need - 1).bit_length()


@dataclass(frozen=True)
class ModelConfig:
    """One simulation instance: drift, initial data, mass, noise exponent, grid."""

    drift: Drift
    u0: np.ndarray
    v0: np.ndarray
    eps: float
    theta: float
    stable: StableParams
    T: float = 1.0
    n_steps: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "u0", _as_state(self.u0, self.stable.dim, "u0"))
        object.__setattr__(self, "v0", _as_state(self.v0, self.stable.dim, "v0"))
        if not (0.0 < self.eps <= 1.0):
            raise ValueError(f"eps must lie in (0,1], got {self.eps}")
        if not (0.0 <= self.theta < 1.0):
            raise ValueError(f"theta must lie in [0,1), got {self.theta}")
        if self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.n_steps == 0:
            object.__setattr__(self, "n_steps", steps_for(self.eps, self.T))
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be positive, got {self.n_steps}")
        if self.h > self.eps / STIFFNESS_RATIO * _GUARD_SLACK:
            raise ValueError(
                f"stiffness guard requires h <= eps/10, got h={self.h} for eps={self.eps}"
            )

    @property
    def h(self) -> float:
        return self.T / self.n_steps

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    def with_eps(self, eps: float, refresh_steps: bool = True) -> "ModelConfig":
        n = steps_for(eps, self.T) if refresh_steps else self.n_steps
        return replace(self, eps=eps, n_steps=n)

    def describe(self) -> dict:
        return {
            "drift": self.drift.describe(),
            "u0": self.u0.tolist(),
            "v0": self.v0.tolist(),
            "eps": self.eps,
            "theta": self.theta,
            "alpha": self.stable.alpha,
            "c": self.stable.c,
            "dim": self.stable.dim,
            "T": self.T,
            "n_steps": self.n_steps,
            "seed": self.seed,
        }


def _as_state(x, dim: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.size == 1 and dim > 1:
        arr = np.full(dim, float(arr[0]))
    if arr.shape != (dim,):
        raise ValueError(f"{name} must be a vector of dimension {dim}, got shape {arr.shape}")
    return arr


@dataclass
class CoupledTrajectories:
    """Everything one coupled run can produce, on the shared noise grid."""

    U: GridPath
    V: GridPath
    Ubar: GridPath
    u_lin: GridPath | None = None
    v_lin: GridPath | None = None
    Z: GridPath | None = None
    noise: NoiseRealization | None = None


# ---------------------------------------------------------------------------
# array kernels (leading axes broadcast; time axis is -2)

def slow_fast_arrays(drift, u0, v0, eps, theta, h, dL):
    """Run the exponential-integrator recursion; returns (U, V) node arrays."""
    n = dL.shape[-2]
    a = math.exp(-h / eps)
    g = 1.0 - a
    nf = eps ** (theta - 1.0)
    shape = dL.shape[:-2] + (n + 1, dL.shape[-1])
    U = np.empty(shape)
    V = np.empty(shape)
    U[..., 0, :] = u0
    V[..., 0, :] = v0
    for k in range(n):
        uk = U[..., k, :]
        vk = V[..., k, :]
        V[..., k + 1, :] = a * vk + g * drift(uk) + nf * dL[..., k, :]
        U[..., k + 1, :] = uk + h * vk
    return U, V


def limit_arrays(drift, u0, eps, theta, h, dL):
    """Euler-Maruyama for the first-order limit equation on the same increments."""
    n = dL.shape[-2]
    nf = eps**theta
    shape = dL.shape[:-2] + (n + 1, dL.shape[-1])
    Ub = np.empty(shape)
    Ub[..., 0, :] = u0
    for k in range(n):
        uk = Ub[..., k, :]
        Ub[..., k + 1, :] = uk + h * drift(uk) + nf * dL[..., k, :]
    return Ub


def ou_arrays(eps, h, dL):
    """Damped convolution recursion Z_{k+1} = e^{-h/eps} Z_k + dL_k, Z_0 = 0."""
    n = dL.shape[-2]
    a = math.exp(-h / eps)
    shape = dL.shape[:-2] + (n + 1, dL.shape[-1])
    Z = np.zeros(shape)
    for k in range(n):
        Z[..., k + 1, :] = a * Z[..., k, :] + dL[..., k, :]
    return Z


# ---------------------------------------------------------------------------
# GridPath front ends

_ZERO = Drift("zero")


def _checked_noise(config: ModelConfig, noise: NoiseRealization) -> np.ndarray:
    grid = config.grid
    if noise.grid.size != grid.size or not np.allclose(noise.grid, grid, rtol=0, atol=1e-12):
        raise ValueError("noise grid does not match the configuration grid")
    return noise.take_increments()


def integrate_slow_fast(config: ModelConfig, noise: NoiseRealization):
    """Integrate the second-order system; returns (U, V) as step GridPaths."""
    dL = _checked_noise(config, noise)
    U, V = slow_fast_arrays(
        config.drift, config.u0, config.v0, config.eps, config.theta, config.h, dL
    )
    t = config.grid
    return GridPath(t, U, "step"), GridPath(t, V, "step")


def integrate_limit(config: ModelConfig, noise: NoiseRealization) -> GridPath:
    """Integrate the limit equation on the same increments (the coupling)."""
    dL = _checked_noise(config, noise)
    Ub = limit_arrays(config.drift, config.u0, config.eps, config.theta, config.h, dL)
    return GridPath(config.grid, Ub, "step")


def integrate_linear(config: ModelConfig, noise: NoiseRealization):
    """Slow-fast recursion with f == 0 and zero initial data."""
    dL = _checked_noise(config, noise)
    zero = np.zeros(config.stable.dim)
    u, v = slow_fast_arrays(_ZERO, zero, zero, config.eps, config.theta, config.h, dL)
    t = config.grid
    return GridPath(t, u, "step"), GridPath(t, v, "step")


def integrate_ou(eps: float, noise: NoiseRealization) -> GridPath:
    """Damped noise convolution Z on the realization's grid, Z(0) = 0."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    dt = np.diff(noise.grid)
    h = float(dt.max())
    if h > eps / STIFFNESS_RATIO * _GUARD_SLACK:
        raise ValueError(
            f"stiffness guard requires h <= eps/10, got h={h} for eps={eps}"
        )
    if not np.allclose(dt, dt[0], rtol=1e-12, atol=0):
        raise ValueError("integrate_ou requires a uniform grid")
    Z = ou_arrays(eps, h, noise.take_increments())
    return GridPath(noise.grid, Z, "step")
