"""Parameter-grid scans and noise sweeps with reproducible CSV output.

Grid rows are independent tasks mapped over a process pool; workers rebuild
the problem family from its registry name (closures never cross process
boundaries), so the worker count cannot change any row's values.  Per-trial
randomness is keyed as (seed, sigma index, trial index), independent of the
scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import lru_cache

import numpy as np

from .certify import CertifySettings, certify_gap
from .errors import InvalidInputError
from .problems.registry import build_problem
from .stability import stability_radius

SCAN_VERDICT_ERROR = "error"


@dataclass(frozen=True)
class ScanAxis:
    index: int
    lo: float
    hi: float
    steps: int

    def values(self) -> np.ndarray:
        if self.steps < 2:
            raise InvalidInputError("each axis needs at least 2 steps")
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass(frozen=True)
class ScanConfig:
    problem: str
    params: dict = field(default_factory=dict)
    axes: tuple[ScanAxis, ...] = ()
    fixed: dict = field(default_factory=dict)      # coordinate -> constant
    derived: dict = field(default_factory=dict)    # coordinate -> expr in a, b
    base_theta: tuple | None = None                # marks the corollary ball
    settings: CertifySettings = field(default_factory=CertifySettings)
    workers: int = 1
    seed: int = 0
    reproducible: bool = False


def _coordinate_plan(cfg: ScanConfig, d: int):
    axis_idx = [ax.index for ax in cfg.axes]
    if len(cfg.axes) not in (1, 2):
        raise InvalidInputError("scans take one or two axes")
    if len(set(axis_idx)) != len(axis_idx):
        raise InvalidInputError("axes must use distinct coordinates")
    fixed = {int(k): float(v) for k, v in cfg.fixed.items()}
    derived = {int(k): str(v) for k, v in cfg.derived.items()}
    covered = set(axis_idx) | set(fixed) | set(derived)
    if len(covered) != len(axis_idx) + len(fixed) + len(derived):
        raise InvalidInputError("axes, fixed and derived coordinates overlap")
    missing = sorted(set(range(d)) - covered)
    extra = sorted(covered - set(range(d)))
    if missing or extra:
        raise InvalidInputError(
            f"coordinate plan mismatch: missing {missing}, out of range {extra}")
    return fixed, derived


_EVAL_GLOBALS = {"__builtins__": {}}
_EVAL_FUNCS = {name: getattr(math, name)
               for name in ("sqrt", "sin", "cos", "tan", "exp", "log", "pi")}


def _theta_for(cfg: ScanConfig, d: int, fixed, derived, a: float, b: float | None):
    theta = np.empty(d)
    theta[cfg.axes[0].index] = a
    if len(cfg.axes) == 2:
        theta[cfg.axes[1].index] = b
    for k, v in fixed.items():
        theta[k] = v
    env = dict(_EVAL_FUNCS)
    env["a"] = a
    if b is not None:
        env["b"] = b
    for k, expr in derived.items():
        theta[k] = float(eval(expr, _EVAL_GLOBALS, env))
    return theta


@lru_cache(maxsize=8)
def _cached_problem(name: str, params_key: tuple):
    return build_problem(name, dict(params_key))


def _params_key(params: dict) -> tuple:
    return tuple(sorted((str(k), _freeze(v)) for k, v in params.items()))


def _freeze(v):
    if isinstance(v, (list, tuple)):
        return tuple(_freeze(x) for x in v)
    return v


def _scan_point(task):
    name, params_key, theta, settings = task
    fam = _cached_problem(name, params_key)
    try:
        cert = certify_gap(fam, np.array(theta), settings)
    except Exception as exc:  # per-point failures recorded, scan continues
        return (theta, math.nan, math.nan, math.nan, SCAN_VERDICT_ERROR, -1,
                math.nan, 0.0, f"{type(exc).__name__}: {exc}")
    return (
        theta,
        cert.dval,
        math.nan if cert.pval_candidate is None else cert.pval_candidate,
        math.nan if cert.gap_rel is None else cert.gap_rel,
        cert.verdict,
        cert.rank_S,
        cert.nu2,
        cert.solve_time,
        "",
    )


def _pool_map(fn, tasks, workers: int):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(tasks) // (8 * workers))
        return list(pool.map(fn, tasks, chunksize=chunk))


def effective_workers(requested: int | None) -> int:
    env = os.environ.get("QCQP_STAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidInputError("QCQP_STAB_THREADS must be an integer")
    return max(1, requested or 1)


def run_scan(cfg: ScanConfig):
    """Certify every grid point; returns (header, rows) in row-major order."""
    fam = build_problem(cfg.problem, cfg.params)
    fixed, derived = _coordinate_plan(cfg, fam.d)
    params_key = _params_key(cfg.params)

    axis_a = cfg.axes[0].values()
    axis_b = cfg.axes[1].values() if len(cfg.axes) == 2 else [None]
    tasks = []
    thetas = []
    for a in axis_a:
        for b in axis_b:
            theta = _theta_for(cfg, fam.d, fixed, derived, float(a),
                               None if b is None else float(b))
            thetas.append(theta)
            tasks.append((cfg.problem, params_key, tuple(theta), cfg.settings))

    results = _pool_map(_scan_point, tasks, effective_workers(cfg.workers))

    radius = None
    base = None
    if cfg.base_theta is not None:
        base = np.asarray(cfg.base_theta, dtype=float)
        radius = corollary_radius_at(fam, base)

    header = [f"theta_{i}" for i in range(fam.d)]
    header += ["dval", "pval_candidate", "gap_rel", "verdict", "rank_S", "nu2",
               "solve_time"]
    if radius is not None:
        header.append("in_radius")
    rows = []
    for theta, res in zip(thetas, results):
        _, dval, pval, gap, verdict, rank_s, nu2, solve_time, _err = res
        row = list(theta) + [dval, pval, gap, verdict, rank_s, nu2,
                             0.0 if cfg.reproducible else solve_time]
        if radius is not None:
            row.append(int(bool(np.linalg.norm(theta - base) < radius)))
        rows.append(row)
    return header, rows


def corollary_radius_at(fam, theta_bar) -> float:
    """Nearest-point radius sigma_s/(2M) at an on-variety base point."""
    from .stability import check_acq, operator_norm_M

    if fam.affine_view is None:
        raise InvalidInputError("the corollary radius needs an affine view")
    view = fam.affine_view(np.asarray(theta_bar, dtype=float))
    if not view.is_nearest_point_form:
        raise InvalidInputError("the corollary radius applies to nearest-point forms")
    y_bar = np.asarray(theta_bar, dtype=float)
    acq = check_acq(view.jacobian(y_bar), view.dim_variety)
    M = operator_norm_M([f.hessian for f in view.constraints])
    return stability_radius(sigma_s=acq.sigma_s, M=M, mode="corollary").value


# ---------------------------------------------------------------------------
# noise sweeps

def _sweep_trial(task):
    name, params_key, sigma, sigma_idx, trial_idx, seed, settings = task
    fam = _cached_problem(name, params_key)
    rng = np.random.default_rng([seed, sigma_idx, trial_idx])
    theta_bar, x_bar = fam.ground_truth(rng)
    theta = theta_bar + sigma * rng.standard_normal(theta_bar.shape)
    try:
        cert = certify_gap(fam, theta, settings)
    except Exception:
        return (False, math.nan, math.nan)
    tight = cert.verdict == "certified_tight"
    gap = math.nan if cert.gap_rel is None else cert.gap_rel
    recovery = math.nan
    if cert.x_hat is not None:
        recovery = float(np.linalg.norm(cert.x_hat - x_bar))
    return (tight, gap, recovery)


def run_noise_sweep(problem: str, params: dict, sigmas, trials: int, seed: int = 0,
                    workers: int = 1, settings: CertifySettings | None = None):
    """Tightness-vs-noise aggregation; returns (header, rows), one row per sigma."""
    fam = build_problem(problem, params)
    if fam.ground_truth is None:
        raise InvalidInputError(f"problem '{problem}' has no ground-truth sampler")
    if trials < 1:
        raise InvalidInputError("trials must be positive")
    settings = settings or CertifySettings()
    params_key = _params_key(params)
    tasks = []
    for si, sigma in enumerate(sigmas):
        for k in range(trials):
            tasks.append((problem, params_key, float(sigma), si, k, seed, settings))
    results = _pool_map(_sweep_trial, tasks, effective_workers(workers))

    header = ["sigma", "tight_fraction", "mean_gap_rel", "mean_recovery_error"]
    rows = []
    for si, sigma in enumerate(sigmas):
        chunk = results[si * trials:(si + 1) * trials]
        tight = np.array([c[0] for c in chunk], dtype=float)
        gaps = np.array([c[1] for c in chunk])
        recov = np.array([c[2] for c in chunk])
        rows.append([
            float(sigma),
            float(np.mean(tight)),
            _nanmean(gaps),
            _nanmean(recov),
        ])
    return header, rows


def _nanmean(v: np.ndarray) -> float:
    good = v[np.isfinite(v)]
    return float(np.mean(good)) if good.size else math.nan


# ---------------------------------------------------------------------------
# CSV rendering: %.12e floats, lowercase verdict tokens, fixed column order

def render_csv(header, rows, reproducible: bool) -> str:
    lines = []
    if not reproducible:
        lines.append(f"# generated {datetime.now(timezone.utc).isoformat()}")
    lines.append(",".join(header))
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, str):
                cells.append(v)
            elif isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                cells.append(str(int(v)))
            elif isinstance(v, bool):
                cells.append(str(int(v)))
            else:
                cells.append(f"{float(v):.12e}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
