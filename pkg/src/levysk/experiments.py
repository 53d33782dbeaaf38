"""Monte Carlo harness: convergence rate, metric dichotomy, moment and
convolution-floor sweeps.

Replicates are independent jobs keyed by (experiment tag, cell indices,
replicate index); each gets its own counter-based stream, so results are
bit-reproducible and order-independent.  Cells of an epsilon sweep re-sample
noise independently rather than subsampling one fine path.

Heavy-tail caveat: with 1 < alpha < 2 the sup-error functionals have a
finite mean but infinite variance, so plain normal-approximation confidence
intervals are indicative only.  Medians and trimmed means are reported
alongside means for robustness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import integrate as itg
from .integrate import ModelConfig, steps_for
from .path_space import GridPath, skorokhod_distance, uniform_distance
from .stable_noise import NoiseRealization, StableParams, sample_noise_realization, stream

__all__ = [
    "RateFit",
    "EnsembleSummary",
    "DichotomyRow",
    "OuFloorRow",
    "MomentRow",
    "estimate_sup_error",
    "sup_error_samples",
    "fit_convergence_rate",
    "run_theta_sweep",
    "run_skorokhod_dichotomy",
    "run_ou_floor",
    "run_moment_sweep",
]

# experiment tags prefixing replicate stream keys
TAG_RATE = 1
TAG_DICHOTOMY = 2
TAG_OU = 3
TAG_MOMENTS = 4

# soft cap on floats held per batch of replicate paths
_CHUNK_ELEMS = 2_000_000

EXCEEDANCE_LEVELS = (0.05, 0.1, 0.2)


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(error) against log(eps)."""

    eps_list: tuple
    errors: tuple
    ci_half_widths: tuple
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class EnsembleSummary:
    """Per-cell statistics of one path functional over an ensemble."""

    theta: float
    eps: float
    n_steps: int
    n: int
    mean: float
    ci_half_width: float
    median: float
    trimmed_mean: float
    q10: float
    q25: float
    q75: float
    q90: float
    seed: int


@dataclass(frozen=True)
class DichotomyRow:
    eps: float
    n_steps: int
    n: int
    median_skorokhod: float
    mean_skorokhod: float
    median_uniform: float
    mean_uniform: float
    median_max_jump: float
    exceed_005: float
    exceed_010: float
    exceed_020: float


@dataclass(frozen=True)
class OuFloorRow:
    eps: float
    n_steps: int
    n: int
    mean_sup: float
    median_sup: float
    mean_abs_at_T: float


@dataclass(frozen=True)
class MomentRow:
    eps: float
    n_steps: int
    n: int
    mean_sup: float
    median_sup: float
    blow_up: bool


def _batch_increments(stable: StableParams, grid, seed, key, j0, count) -> np.ndarray:
    rows = [
        sample_noise_realization(stable, grid, stream(seed, *key, j)).increments
        for j in range(j0, j0 + count)
    ]
    return np.stack(rows)


def _sup_norm(paths: np.ndarray) -> np.ndarray:
    """Max over nodes of the euclidean norm, per leading index."""
    return np.sqrt((paths**2).sum(axis=-1)).max(axis=-1)


def _chunks(n_rep: int, n_steps: int, dim: int):
    chunk = max(1, _CHUNK_ELEMS // max(1, n_steps * dim))
    for j0 in range(0, n_rep, chunk):
        yield j0, min(chunk, n_rep - j0)


def sup_error_samples(config: ModelConfig, n_rep: int, key=(TAG_RATE, 0, 0)) -> np.ndarray:
    """Per-replicate sup-node |U - Ubar| on shared noise, vectorized in batches."""
    if n_rep < 1:
        raise ValueError(f"replicate count must be positive, got {n_rep}")
    grid = config.grid
    out = np.empty(n_rep)
    for j0, cnt in _chunks(n_rep, config.n_steps, config.stable.dim):
        dL = _batch_increments(config.stable, grid, config.seed, key, j0, cnt)
        U, _ = itg.slow_fast_arrays(
            config.drift, config.u0, config.v0, config.eps, config.theta, config.h, dL
        )
        Ub = itg.limit_arrays(config.drift, config.u0, config.eps, config.theta, config.h, dL)
        out[j0 : j0 + cnt] = _sup_norm(U - Ub)
    return out


def estimate_sup_error(config: ModelConfig, n_rep: int, key=(TAG_RATE, 0, 0)):
    """Monte Carlo mean of sup|U - Ubar| and a 95% normal half-width.

    The mean estimator is consistent (the functional has a finite first
    moment) but the half-width is approximate under infinite variance.
    """
    if n_rep < 2:
        raise ValueError(f"estimate_sup_error needs at least 2 replicates, got {n_rep}")
    samples = sup_error_samples(config, n_rep, key)
    mean = float(samples.mean())
    ci = 1.96 * float(samples.std(ddof=1)) / math.sqrt(n_rep)
    return mean, ci


def _trimmed_mean(samples: np.ndarray, prop: float = 0.1) -> float:
    s = np.sort(samples)
    k = int(prop * s.size)
    return float(s[k : s.size - k].mean()) if s.size > 2 * k else float(s.mean())


def _summarize(samples: np.ndarray, config: ModelConfig) -> EnsembleSummary:
    n = samples.size
    q10, q25, med, q75, q90 = np.quantile(samples, [0.1, 0.25, 0.5, 0.75, 0.9])
    return EnsembleSummary(
        theta=config.theta,
        eps=config.eps,
        n_steps=config.n_steps,
        n=n,
        mean=float(samples.mean()),
        ci_half_width=1.96 * float(samples.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0,
        median=float(med),
        trimmed_mean=_trimmed_mean(samples),
        q10=float(q10),
        q25=float(q25),
        q75=float(q75),
        q90=float(q90),
        seed=config.seed,
    )


def fit_convergence_rate(eps_list, errors, ci_half_widths=None) -> RateFit:
    """Ordinary least squares of log(errors) on log(eps_list)."""
    eps_arr = np.asarray(eps_list, dtype=float)
    err_arr = np.asarray(errors, dtype=float)
    if eps_arr.size != err_arr.size:
        raise ValueError("eps_list and errors must have the same length")
    if eps_arr.size < 3:
        raise ValueError("rate fit requires at least 3 points")
    if np.any(eps_arr <= 0) or np.any(err_arr <= 0):
        raise ValueError("rate fit requires positive eps and error values")
    if ci_half_widths is None:
        ci_half_widths = np.zeros_like(err_arr)
    x = np.log(eps_arr)
    y = np.log(err_arr)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float((resid**2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot <= 1e-30:
        r2 = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RateFit(
        eps_list=tuple(float(e) for e in eps_arr),
        errors=tuple(float(e) for e in err_arr),
        ci_half_widths=tuple(float(c) for c in np.asarray(ci_half_widths, dtype=float)),
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(r2),
    )


def run_theta_sweep(config: ModelConfig, theta_list, eps_list, n_rep: int):
    """Estimate sup-error across the (theta, eps) grid and fit rates.

    Returns (fits, cells): a map theta -> RateFit on the Monte Carlo means,
    plus an EnsembleSummary per cell.  Each cell uses its own stream family
    and an eps-dependent grid with n_steps = next power of two >= 10*T/eps.
    """
    fits: dict[float, RateFit] = {}
    cells: list[EnsembleSummary] = []
    for ti, theta in enumerate(theta_list):
        means, cis = [], []
        for ei, eps in enumerate(eps_list):
            cfg = replace(config, theta=float(theta)).with_eps(float(eps))
            samples = sup_error_samples(cfg, n_rep, key=(TAG_RATE, ti, ei))
            summary = _summarize(samples, cfg)
            cells.append(summary)
            means.append(summary.mean)
            cis.append(summary.ci_half_width)
        fits[float(theta)] = fit_convergence_rate(eps_list, means, cis)
    return fits, cells


def run_skorokhod_dichotomy(config: ModelConfig, eps_list, n_rep: int) -> list[DichotomyRow]:
    """Per eps: grid-Skorokhod vs uniform distance of U to Ubar at theta = 0.

    Also records the largest per-step noise jump magnitude, whose half is the
    asymptotic floor under the uniform metric while the Skorokhod distance
    keeps shrinking.
    """
    if config.theta != 0.0:
        raise ValueError("the metric dichotomy experiment requires theta = 0")
    rows: list[DichotomyRow] = []
    for ei, eps in enumerate(eps_list):
        cfg = config.with_eps(float(eps))
        grid = cfg.grid
        d_sk = np.empty(n_rep)
        d_un = np.empty(n_rep)
        max_jump = np.empty(n_rep)
        for j in range(n_rep):
            noise = sample_noise_realization(cfg.stable, grid, stream(cfg.seed, TAG_DICHOTOMY, ei, j))
            U, _ = itg.integrate_slow_fast(cfg, noise)
            Ub = itg.integrate_limit(cfg, noise)
            d_sk[j] = skorokhod_distance(U, Ub)
            d_un[j] = uniform_distance(U, Ub)
            jumps = np.linalg.norm(noise.increments, axis=1) * cfg.eps**cfg.theta
            max_jump[j] = jumps.max()
        rows.append(
            DichotomyRow(
                eps=float(eps),
                n_steps=cfg.n_steps,
                n=n_rep,
                median_skorokhod=float(np.median(d_sk)),
                mean_skorokhod=float(d_sk.mean()),
                median_uniform=float(np.median(d_un)),
                mean_uniform=float(d_un.mean()),
                median_max_jump=float(np.median(max_jump)),
                exceed_005=float((d_sk > EXCEEDANCE_LEVELS[0]).mean()),
                exceed_010=float((d_sk > EXCEEDANCE_LEVELS[1]).mean()),
                exceed_020=float((d_sk > EXCEEDANCE_LEVELS[2]).mean()),
            )
        )
    return rows


def run_ou_floor(eps_list, stable: StableParams, T: float, n_rep: int, seed: int) -> list[OuFloorRow]:
    """Monte Carlo E sup|Z| of the damped noise convolution per eps.

    The sup-mean stays above a positive floor as eps shrinks (the largest
    jump survives the damping); the marginal mean |Z(T)| scales like
    (eps/alpha)**(1/alpha) and is recorded for the scale-fit experiment.
    """
    rows: list[OuFloorRow] = []
    for ei, eps in enumerate(eps_list):
        eps = float(eps)
        n_steps = steps_for(eps, T)
        grid = np.linspace(0.0, T, n_steps + 1)
        h = T / n_steps
        sups = np.empty(n_rep)
        abs_end = np.empty(n_rep)
        for j0, cnt in _chunks(n_rep, n_steps, stable.dim):
            dL = _batch_increments(stable, grid, seed, (TAG_OU, ei), j0, cnt)
            Z = itg.ou_arrays(eps, h, dL)
            sups[j0 : j0 + cnt] = _sup_norm(Z)
            abs_end[j0 : j0 + cnt] = np.sqrt((Z[..., -1, :] ** 2).sum(axis=-1))
        rows.append(
            OuFloorRow(
                eps=eps,
                n_steps=n_steps,
                n=n_rep,
                mean_sup=float(sups.mean()),
                median_sup=float(np.median(sups)),
                mean_abs_at_T=float(abs_end.mean()),
            )
        )
    return rows


def run_moment_sweep(config: ModelConfig, eps_list, n_rep: int) -> list[MomentRow]:
    """Monte Carlo E sup|U| per eps, flagging growth beyond 10x the baseline.

    The baseline is the cell with the largest eps (eps = 1 in the canonical
    sweep); a blow-up flag on any cell falsifies the uniform moment bound.
    """
    rows: list[MomentRow] = []
    baseline: float | None = None
    order = np.argsort(np.asarray(eps_list, dtype=float))[::-1]
    means = {}
    meds = {}
    cfgs = {}
    for ei, eps in enumerate(eps_list):
        cfg = config.with_eps(float(eps))
        sups = np.empty(n_rep)
        for j0, cnt in _chunks(n_rep, cfg.n_steps, cfg.stable.dim):
            dL = _batch_increments(cfg.stable, cfg.grid, cfg.seed, (TAG_MOMENTS, ei), j0, cnt)
            U, _ = itg.slow_fast_arrays(
                cfg.drift, cfg.u0, cfg.v0, cfg.eps, cfg.theta, cfg.h, dL
            )
            sups[j0 : j0 + cnt] = _sup_norm(U)
        means[ei] = float(sups.mean())
        meds[ei] = float(np.median(sups))
        cfgs[ei] = cfg
    baseline = means[int(order[0])]
    for ei, eps in enumerate(eps_list):
        rows.append(
            MomentRow(
                eps=float(eps),
                n_steps=cfgs[ei].n_steps,
                n=n_rep,
                mean_sup=means[ei],
                median_sup=meds[ei],
                blow_up=bool(means[ei] > 10.0 * baseline),
            )
        )
    return rows
