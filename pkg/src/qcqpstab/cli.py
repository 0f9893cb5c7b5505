"""Command-line front end.

Subcommands: certify, stability, slater, radius, scan, sweep, list-problems,
dump-sdp.  Options can come from flags or a JSON configuration file
(--config); flags win.  QCQP_STAB_THREADS overrides the worker count.

Exit codes for certify: 0 certified_tight, 2 gap_positive, 3 anything else
(inconclusive or degenerate-tight), 1 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .certify import CertifySettings, certify_gap
from .errors import InvalidInputError
from .problems.registry import build_problem, list_problems
from .scan import (
    ScanAxis,
    ScanConfig,
    corollary_radius_at,
    render_csv,
    run_noise_sweep,
    run_scan,
)
from .sdp import SDPSettings, build_relaxation, to_sdpa
from .stability import stability_radius, stability_report

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_GAP = 2
EXIT_INCONCLUSIVE = 3


def _parse_theta(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v != ""])
    except ValueError:
        raise InvalidInputError(f"could not parse theta list: {text!r}")


def _parse_axis(text: str) -> ScanAxis:
    parts = text.split(":")
    if len(parts) != 4:
        raise InvalidInputError("axis format is index:lo:hi:steps")
    return ScanAxis(int(parts[0]), float(parts[1]), float(parts[2]), int(parts[3]))


def _parse_assign(items, cast):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InvalidInputError(f"expected index=value, got {item!r}")
        k, v = item.split("=", 1)
        out[int(k)] = cast(v)
    return out


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _merged(args, key: str, cfg: dict, default=None):
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    if key in cfg:
        return cfg[key]
    return default


def _certify_settings(args, cfg: dict) -> CertifySettings:
    kw = {}
    for key in ("gap_tol", "feas_tol", "rank_tol", "ratio_tol"):
        v = _merged(args, key, cfg)
        if v is not None:
            kw[key] = float(v)
    sdp_kw = {}
    for key in ("sdp_feas_tol", "sdp_gap_tol", "max_iter"):
        v = _merged(args, key, cfg)
        if v is not None:
            sdp_kw[{"sdp_feas_tol": "feas_tol", "sdp_gap_tol": "gap_tol",
                    "max_iter": "max_iter"}[key]] = float(v) if "tol" in key else int(v)
    base = CertifySettings()
    if sdp_kw:
        merged = {"feas_tol": base.sdp.feas_tol, "gap_tol": base.sdp.gap_tol,
                  "max_iter": base.sdp.max_iter}
        merged.update(sdp_kw)
        kw["sdp"] = SDPSettings(feas_tol=merged["feas_tol"], gap_tol=merged["gap_tol"],
                                max_iter=int(merged["max_iter"]))
    return CertifySettings(**kw) if kw else base


def _problem_from(args, cfg: dict):
    name = _merged(args, "problem", cfg)
    if not name:
        raise InvalidInputError("missing --problem")
    params = _merged(args, "params", cfg, {})
    if isinstance(params, str):
        params = json.loads(params)
    return name, params, build_problem(name, params)


def _emit(payload: dict, out: str | None):
    text = json.dumps(payload, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _theta_or_truth(args, cfg, fam):
    theta_text = _merged(args, "theta", cfg)
    if theta_text is not None:
        theta = theta_text if isinstance(theta_text, (list, tuple)) \
            else _parse_theta(theta_text)
        return fam.check_theta(np.asarray(theta, dtype=float)), None
    seed = _merged(args, "truth_seed", cfg)
    if seed is None or fam.ground_truth is None:
        raise InvalidInputError("provide --theta (or --truth-seed for sampled truth)")
    theta, x_bar = fam.ground_truth(np.random.default_rng(int(seed)))
    return theta, x_bar


# ---------------------------------------------------------------------------
# subcommands

def certificate_csv(cert) -> str:
    """One-line CSV rendering of a certificate (scan row schema)."""
    import math

    header = [f"theta_{i}" for i in range(len(cert.theta))]
    header += ["dval", "pval_candidate", "gap_rel", "verdict", "rank_S", "nu2",
               "solve_time"]
    row = list(cert.theta) + [
        cert.dval,
        math.nan if cert.pval_candidate is None else cert.pval_candidate,
        math.nan if cert.gap_rel is None else cert.gap_rel,
        cert.verdict,
        cert.rank_S,
        cert.nu2,
        cert.solve_time,
    ]
    return render_csv(header, [row], reproducible=True)


def stability_csv(report) -> str:
    """One-line CSV summary of a stability report."""
    import math

    header = [f"theta_{i}" for i in range(len(report.theta))]
    header += ["sigma_s", "acq_holds", "nu2", "M", "radius_thm", "radius_cor",
               "rs_t_star", "rs_holds", "rs_V_dim", "branch_min_norm",
               "is_branch_point", "regularity_full_rank", "r2"]
    row = list(report.theta) + [
        report.acq_sigma_s, report.acq_holds, report.nu2, report.M,
        math.nan if report.radius_thm is None else report.radius_thm,
        math.nan if report.radius_cor is None else report.radius_cor,
        report.rs_t_star, report.rs_holds, report.rs_V_dim,
        report.branch_min_norm, report.is_branch_point,
        report.regularity_matrix_full_rank, report.r2,
    ]
    return render_csv(header, [row], reproducible=True)


def cmd_certify(args) -> int:
    cfg = _load_config(args.config)
    name, params, fam = _problem_from(args, cfg)
    theta, _ = _theta_or_truth(args, cfg, fam)
    settings = _certify_settings(args, cfg)
    cert = certify_gap(fam, theta, settings)
    if args.csv:
        text = certificate_csv(cert)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        print(text, end="")
    else:
        _emit({"problem": name, **cert.to_dict()}, args.out)
    if cert.verdict == "certified_tight":
        return EXIT_OK
    if cert.verdict == "gap_positive":
        return EXIT_GAP
    return EXIT_INCONCLUSIVE


def cmd_stability(args) -> int:
    cfg = _load_config(args.config)
    name, params, fam = _problem_from(args, cfg)
    theta, x_bar = _theta_or_truth(args, cfg, fam)
    if args.x_bar is not None:
        x_bar = _parse_theta(args.x_bar)
    K = _merged(args, "K", cfg)
    L = _merged(args, "L", cfg)
    report = stability_report(fam, theta, x_bar=x_bar,
                              K=None if K is None else float(K),
                              L=None if L is None else float(L))
    if args.csv:
        text = stability_csv(report)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        print(text, end="")
    else:
        _emit({"problem": name, **report.to_dict()}, args.out)
    return EXIT_OK


def cmd_slater(args) -> int:
    cfg = _load_config(args.config)
    name, params, fam = _problem_from(args, cfg)
    theta, x_bar = _theta_or_truth(args, cfg, fam)
    if args.x_bar is not None:
        x_bar = _parse_theta(args.x_bar)
    report = stability_report(fam, theta, x_bar=x_bar)
    _emit({"problem": name, "theta": [float(v) for v in report.theta],
           "rs": report.to_dict()["rs"]}, args.out)
    return EXIT_OK


def cmd_radius(args) -> int:
    cfg = _load_config(args.config)
    if args.problem or cfg.get("problem"):
        name, params, fam = _problem_from(args, cfg)
        theta, x_bar = _theta_or_truth(args, cfg, fam)
        if args.mode == "corollary":
            value = corollary_radius_at(fam, theta)
            _emit({"problem": name, "mode": "corollary", "radius": value}, args.out)
            return EXIT_OK
        report = stability_report(fam, theta, x_bar=x_bar,
                                  K=float(args.K), L=float(args.L))
        _emit({"problem": name, "mode": "theorem", "radius": report.radius_thm},
              args.out)
        return EXIT_OK
    if args.mode == "corollary":
        res = stability_radius(sigma_s=float(args.sigma_s), M=float(args.M),
                               mode="corollary")
    else:
        res = stability_radius(nu2=float(args.nu2), K=float(args.K),
                               L=float(args.L), M=float(args.M), mode="theorem")
    _emit({"mode": args.mode, "radius": res.value, "degenerate": res.degenerate},
          args.out)
    return EXIT_OK


def cmd_scan(args) -> int:
    cfg = _load_config(args.config)
    name = _merged(args, "problem", cfg)
    if not name:
        raise InvalidInputError("missing --problem")
    params = _merged(args, "params", cfg, {})
    if isinstance(params, str):
        params = json.loads(params)
    axes_raw = args.axis or cfg.get("axes")
    if not axes_raw:
        raise InvalidInputError("scan needs at least one --axis index:lo:hi:steps")
    axes = tuple(ax if isinstance(ax, ScanAxis) else _parse_axis(ax)
                 if isinstance(ax, str)
                 else ScanAxis(int(ax[0]), float(ax[1]), float(ax[2]), int(ax[3]))
                 for ax in axes_raw)
    fixed = _parse_assign(args.fix, float)
    fixed.update({int(k): float(v) for k, v in cfg.get("fixed", {}).items()
                  if int(k) not in fixed})
    derived = _parse_assign(args.derive, str)
    derived.update({int(k): str(v) for k, v in cfg.get("derived", {}).items()
                    if int(k) not in derived})
    base = _merged(args, "base_theta", cfg)
    if isinstance(base, str):
        base = tuple(_parse_theta(base))
    elif base is not None:
        base = tuple(float(v) for v in base)
    scan_cfg = ScanConfig(
        problem=name,
        params=params,
        axes=axes,
        fixed=fixed,
        derived=derived,
        base_theta=base,
        settings=_certify_settings(args, cfg),
        workers=int(_merged(args, "workers", cfg, 1)),
        seed=int(_merged(args, "seed", cfg, 0)),
        reproducible=bool(args.reproducible or cfg.get("reproducible", False)),
    )
    header, rows = run_scan(scan_cfg)
    text = render_csv(header, rows, scan_cfg.reproducible)
    out = _merged(args, "out", cfg)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.plot is not None:
        from .plots import plot_scan
        path = args.plot or _default_plot_path(out)
        plot_scan(header, rows, axes, path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    name = _merged(args, "problem", cfg)
    if not name:
        raise InvalidInputError("missing --problem")
    params = _merged(args, "params", cfg, {})
    if isinstance(params, str):
        params = json.loads(params)
    sigmas_raw = _merged(args, "sigmas", cfg)
    if sigmas_raw is None:
        raise InvalidInputError("sweep needs --sigmas")
    sigmas = [float(v) for v in (sigmas_raw.split(",")
                                 if isinstance(sigmas_raw, str) else sigmas_raw)]
    trials = int(_merged(args, "trials", cfg, 20))
    seed = int(_merged(args, "seed", cfg, 0))
    workers = int(_merged(args, "workers", cfg, 1))
    reproducible = bool(args.reproducible or cfg.get("reproducible", False))
    header, rows = run_noise_sweep(name, params, sigmas, trials, seed=seed,
                                   workers=workers,
                                   settings=_certify_settings(args, cfg))
    text = render_csv(header, rows, reproducible)
    out = _merged(args, "out", cfg)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.plot is not None:
        from .plots import plot_sweep
        path = args.plot or _default_plot_path(out)
        plot_sweep(header, rows, path)
    return EXIT_OK


def _default_plot_path(out: str | None) -> str:
    if not out:
        return "scan.png"
    stem = out[:-4] if out.endswith(".csv") else out
    return stem + ".png"


def cmd_list_problems(args) -> int:
    for name, desc in list_problems():
        print(f"{name:18s} {desc}")
    return EXIT_OK


def cmd_dump_sdp(args) -> int:
    cfg = _load_config(args.config)
    name, params, fam = _problem_from(args, cfg)
    theta, _ = _theta_or_truth(args, cfg, fam)
    text = to_sdpa(build_relaxation(fam.instantiate(theta)))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------

def _add_common(p, theta=True):
    p.add_argument("--problem", help="problem name (see list-problems)")
    p.add_argument("--params", default=None,
                   help="problem parameters as a JSON object")
    p.add_argument("--config", default=None, help="JSON configuration file")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    if theta:
        p.add_argument("--theta", default=None, help="comma-separated parameter vector")
        p.add_argument("--truth-seed", default=None,
                       help="sample (theta, x) from the ground-truth generator")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qcqpstab",
        description="SDP relaxations of parametric QCQPs: certificates, "
                    "stability radii, grid scans and noise sweeps.")
    sub = ap.add_subparsers(dest="command", required=True)

    tol_flags = (("--gap-tol", float), ("--feas-tol", float), ("--rank-tol", float),
                 ("--ratio-tol", float), ("--sdp-feas-tol", float),
                 ("--sdp-gap-tol", float), ("--max-iter", int))

    def add_tols(p):
        for flag, typ in tol_flags:
            p.add_argument(flag, type=typ, default=None)

    p = sub.add_parser("certify", help="certify zero duality gap at one parameter")
    _add_common(p)
    add_tols(p)
    p.add_argument("--csv", action="store_true", help="emit a one-line CSV row")
    p.set_defaults(fn=cmd_certify)

    p = sub.add_parser("stability", help="full stability report at a tight parameter")
    _add_common(p)
    add_tols(p)
    p.add_argument("--x-bar", default=None, help="comma-separated primal point")
    p.add_argument("--K", default=None, help="multiplier continuity constant")
    p.add_argument("--L", default=None, help="parameter Lipschitz constant")
    p.add_argument("--csv", action="store_true", help="emit a one-line CSV summary")
    p.set_defaults(fn=cmd_stability)

    p = sub.add_parser("slater", help="restricted-Slater check at a tight parameter")
    _add_common(p)
    add_tols(p)
    p.add_argument("--x-bar", default=None)
    p.set_defaults(fn=cmd_slater)

    p = sub.add_parser("radius", help="guaranteed stability radius")
    _add_common(p)
    p.add_argument("--mode", choices=("corollary", "theorem"), default="corollary")
    p.add_argument("--sigma-s", default=None)
    p.add_argument("--M", default=None)
    p.add_argument("--nu2", default=None)
    p.add_argument("--K", default=None)
    p.add_argument("--L", default=None)
    p.set_defaults(fn=cmd_radius)

    p = sub.add_parser("scan", help="grid scan over one or two parameter axes")
    _add_common(p, theta=False)
    add_tols(p)
    p.add_argument("--axis", action="append",
                   help="index:lo:hi:steps (repeat for a second axis)")
    p.add_argument("--fix", action="append", help="index=value for fixed coordinates")
    p.add_argument("--derive", action="append",
                   help="index=expr with a (and b) the axis values, e.g. 1=a*a")
    p.add_argument("--base-theta", default=None,
                   help="mark rows inside the guaranteed ball around this point")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reproducible", action="store_true")
    p.add_argument("--plot", nargs="?", const="", default=None,
                   help="render a verdict figure (optional path)")
    p.set_defaults(fn=cmd_scan)

    p = sub.add_parser("sweep", help="noise sweep against the ground truth")
    _add_common(p, theta=False)
    add_tols(p)
    p.add_argument("--sigmas", default=None, help="comma-separated noise levels")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reproducible", action="store_true")
    p.add_argument("--plot", nargs="?", const="", default=None)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("list-problems", help="show the problem zoo")
    p.set_defaults(fn=cmd_list_problems)

    p = sub.add_parser("dump-sdp", help="write the relaxation in sparse SDPA format")
    _add_common(p)
    p.set_defaults(fn=cmd_dump_sdp)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
