"""Command-line runner: ``fhd <job> --config FILE [--threads N] [--seed S] [--out DIR]``.

Every job writes report.json (sorted keys, no timings) and checks.csv into the
output directory, plus job-specific CSV and images; wall time goes to
timing.txt so the numeric outputs stay byte-identical across runs.  Exit code
0 when every check passes, 1 on a failed check or numeric failure, 2 on a
configuration error.
"""

import argparse
import math
import sys as _sys
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _backend, config, io
from .config import ConfigError, JobConfig
from .pk import PkSkewSystem

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


@dataclass
class RunReport:
    job: str
    system: str
    seed: int
    lam: complex
    params: dict
    checks: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def ok(self):
        return not self.failures and all(c["passed"] for c in self.checks)

    def check(self, name, value, passed, expected=None):
        self.checks.append({"name": name, "value": value, "expected": expected, "passed": bool(passed)})

    def to_dict(self):
        # wall_time is deliberately absent: report.json must be reproducible
        return {
            "job": self.job,
            "system": self.system,
            "seed": self.seed,
            "lambda": self.lam,
            "params": self.params,
            "checks": self.checks,
            "failures": self.failures,
            "results": self.results,
            "files": sorted(self.files),
            "ok": self.ok,
        }


def _param(cfg, name, default):
    return cfg.params.get(name, default)


def _require(cfg, pk):
    if isinstance(cfg.system, PkSkewSystem) != pk:
        kind = "a P^k" if pk else "a Hénon"
        raise ConfigError("/system", f"job {cfg.job!r} needs {kind} system")


def _window(cfg, sys):
    from .filtration import get_filtration
    from .slices import Window

    center = config.to_complex(_param(cfg, "center", 0.0))
    hw = _param(cfg, "half_width", get_filtration(sys).R + 1.0)
    return Window(center, hw, _param(cfg, "res", 512))


def _write_csv(rep, out, name, header, rows):
    io.write_csv(out / name, header, rows)
    rep.files.append(name)


def _write_image(rep, out, stem, gray):
    rep.files.extend(io.write_image(out, stem, gray))


def job_render_julia(cfg, rep, out):
    from .green import green_field
    from .slices import escape_boundary, vertical

    _require(cfg, False)
    sys = cfg.system
    window = _window(cfg, sys)
    x0 = config.to_complex(_param(cfg, "x0", 0.0))
    X, Y = vertical(x0).embed(window.grid())
    f = green_field(sys, cfg.lam, X, Y, "+", _param(cfg, "tol", 1e-8))
    bounded = f.bounded
    boundary = escape_boundary(bounded)
    with np.errstate(divide="ignore"):
        shade = np.where(bounded, -np.inf, np.log(np.maximum(f.value, 1e-300)))
    # grid is indexed (Re, Im); images want rows = Im descending
    _write_image(rep, out, "julia", io.to_gray(shade).T[::-1])
    edge = np.zeros(bounded.shape, dtype=np.uint8)
    edge[1:-1, 1:-1][boundary] = 255
    _write_image(rep, out, "julia_boundary", edge.T[::-1])
    rep.results.update(
        res=window.res, half_width=window.half_width, x0=x0,
        bounded_cells=int(bounded.sum()), boundary_cells=int(boundary.sum()),
    )
    _write_csv(rep, out, "render.csv", ["quantity", "value"],
               [("bounded_cells", int(bounded.sum())), ("boundary_cells", int(boundary.sum())), ("h", window.h)])
    rep.check("boundary_nonempty", int(boundary.sum()), boundary.any(), "> 0")


def _green_checks(cfg, rep, out, samples):
    from .green import check_invariance, julia_plus_samples, successive_differences

    sys = cfg.system
    tol = _param(cfg, "tol", 1e-8)
    inv = check_invariance(sys, cfg.lam, samples, tol, cfg.seed)
    rep.results["invariance"] = inv
    rep.check("green_invariance_residual", inv["max"], inv["max"] < 1e-6, "< 1e-6")
    X, Y = julia_plus_samples(sys, cfg.lam, samples, cfg.seed)
    sd = successive_differences(sys, cfg.lam, X, Y, 5, 40)
    rep.results["successive_differences"] = sd
    expected = 1.0 / sys.d
    rep.check("successive_difference_ratio", sd["ratio"], abs(sd["ratio"] - expected) <= 0.1 * expected,
              f"{expected:.6g} +- 10%")
    _write_csv(rep, out, "successive_differences.csv", ["n", "sup_diff"], zip(sd["n"], sd["sup_diff"]))


def job_green_eval(cfg, rep, out):
    from .green import box_samples, green_field

    _require(cfg, False)
    sys = cfg.system
    tol = _param(cfg, "tol", 1e-8)
    if "points" in cfg.params:
        pts = np.array([[config.to_complex(v) for v in p] for p in cfg.params["points"]], dtype=complex)
        X, Y = pts[:, 0], pts[:, 1]
    else:
        X, Y = box_samples(np.random.default_rng(cfg.seed), _param(cfg, "half_width", 3.0), _param(cfg, "samples", 100))
    gp = green_field(sys, cfg.lam, X, Y, "+", tol)
    gm = green_field(sys, cfg.lam, X, Y, "-", tol)
    rows = [
        (x.real, x.imag, y.real, y.imag, a, ea, int(sa), b, eb, int(sb))
        for x, y, a, ea, sa, b, eb, sb in zip(X, Y, gp.value, gp.error_bound, gp.status, gm.value, gm.error_bound, gm.status)
    ]
    _write_csv(rep, out, "green.csv",
               ["x_re", "x_im", "y_re", "y_im", "g_plus", "err_plus", "status_plus", "g_minus", "err_minus", "status_minus"],
               rows)
    bad = int((~np.isfinite(gp.value)).sum() + (~np.isfinite(gm.value)).sum())
    rep.check("finite_values", bad, bad == 0, "0 non-finite")
    worst = float(max(np.max(gp.error_bound), np.max(gm.error_bound)))
    rep.check("error_bound", worst, worst <= tol, f"<= {tol:g}")
    _green_checks(cfg, rep, out, min(_param(cfg, "samples", 1000), 1000))


def _slice_checks(cfg, rep, out, res):
    from .filtration import get_filtration
    from .slices import Window, mu_slice, pullback_identity_check, vertical

    sys = cfg.system
    window = Window(0j, get_filtration(sys).R + 1.0, res)
    m = mu_slice(sys, cfg.lam, "+", vertical(0), window)
    rep.results["slice_measure"] = m.to_dict()
    rep.check("slice_mass", m.total, abs(m.total - 1) <= 0.02, "1 +- 0.02")
    pb = pullback_identity_check(sys, cfg.lam, "+", 1, window=Window(0j, window.half_width, min(res, 256)))
    rep.results["pullback_identity"] = pb
    rep.check("pullback_mass_ratio", pb["ratio"], pb["relative_error"] <= 0.05, f"{pb['expected']:.6g} +- 5%")
    return m


def job_measure(cfg, rep, out):
    _require(cfg, False)
    m = _slice_checks(cfg, rep, out, _param(cfg, "res", 512))
    with np.errstate(divide="ignore"):
        shade = np.log10(np.maximum(m.masses, 0.0))
    _write_image(rep, out, "slice_measure", io.to_gray(shade, lo=-12.0).T[::-1])
    rows = m.masses.sum(axis=1)
    _write_csv(rep, out, "slice_measure_columns.csv", ["column", "mass"], enumerate(rows))


def job_convergence(cfg, rep, out):
    from .convergence import contraction_cauchy_check, pullback_convergence

    _require(cfg, False)
    sys = cfg.system
    if sys.base.map.kind == "identity":
        t = pullback_convergence(sys, cfg.lam, x0=config.to_complex(_param(cfg, "x0", 10.0)),
                              n_list=range(1, _param(cfg, "n_max", 8) + 1), res=_param(cfg, "res", 256))
        rep.results["pullback_convergence"] = t
        rows = [(r["n"], r["l1"], r["kappa"], r["fitted_multiple"], r["excluded_cells"]) for r in t["rows"]]
        _write_csv(rep, out, "pullback_convergence.csv", ["n", "l1", "kappa", "fitted_multiple", "excluded_cells"], rows)
        rep.check("l1_reduction", t["final_over_initial"], t["final_over_initial"] < 1e-2, "< 1e-2")
        rep.check("l1_tail_monotone", t["tail_monotone"], t["tail_monotone"], True)
    elif sys.base.map.is_contraction():
        c = contraction_cauchy_check(sys, n_list=range(2, _param(cfg, "n_max", 10) + 1), seed=cfg.seed)
        rep.results["reversed_composition"] = c
        _write_csv(rep, out, "reversed_composition.csv", ["n", "sup_diff"], zip(c["n"], c["sup_diff"]))
        rep.check("cauchy_ratio", c["ratio"], c["ratio"] <= c["bound"], f"<= {c['bound']:.6g}")
    else:
        raise ConfigError("/system/base/map", "convergence needs an identity or contracting base map")


def job_entropy(cfg, rep, out):
    from .entropy import entropy_estimate, sample_julia_cloud

    _require(cfg, False)
    sys = cfg.system
    cloud = sample_julia_cloud(sys, cfg.lam, _param(cfg, "count", 20_000), seed=cfg.seed)
    run = entropy_estimate(sys, cfg.lam, cloud, n_max=_param(cfg, "n_max", 12), eps=_param(cfg, "eps", 0.05),
                           seed=cfg.seed)
    rep.results["entropy"] = run.to_dict()
    _write_csv(rep, out, "separated_counts.csv", ["n", "count"], zip(run.n, run.counts))
    floor = math.log(sys.d) - 0.1
    rep.check("entropy_slope", run.slope, run.slope >= floor, f">= {floor:.6g}")


def _pk_checks(cfg, rep, out):
    from .pk import ball_inclusions, check_green_pk

    sys = cfg.system
    g = sys.growth()
    rep.results["growth"] = g.to_dict()
    chk = check_green_pk(sys, seed=cfg.seed, samples=_param(cfg, "samples", 1000))
    rep.results["green"] = chk
    rep.check("pk_homogeneity", chk["homogeneity"], chk["homogeneity"] < 1e-8, "< 1e-8")
    rep.check("pk_invariance", chk["invariance"], chk["invariance"] < 1e-8, "< 1e-8")
    rep.check("pk_difference_bound_violations", chk["bound_violations"], chk["bound_violations"] == 0, 0)
    balls = ball_inclusions(sys, cfg.lam, seed=cfg.seed)
    rep.results["balls"] = balls
    rep.check("inner_ball_halving", balls["max_ratio_at_r"], balls["inner_halving"], "<= 0.5")
    rep.check("outer_ball_doubling", balls["min_ratio_at_doubling_radius"], balls["outer_doubling"], ">= 2")


def job_pk_basin(cfg, rep, out):
    from .pk import basin_bitmap

    _require(cfg, True)
    _pk_checks(cfg, rep, out)
    b = basin_bitmap(cfg.system, cfg.lam, x0=config.to_complex(_param(cfg, "x0", 1.0)),
                     center=config.to_complex(_param(cfg, "center", 0.0)),
                     half_width=_param(cfg, "half_width", 2.0), res=_param(cfg, "res", 256),
                     tol=_param(cfg, "band", 1e-4))
    rep.results["basin"] = {"orbit_agreement": b["orbit_agreement"], "band_cells": b["band_cells"]}
    gray = ((b["bitmap"].astype(int) + 1) * 127).astype(np.uint8)
    _write_image(rep, out, "basin", gray[::-1])
    rep.check("basin_orbit_agreement", b["orbit_agreement"], b["orbit_agreement"] == 1.0, 1.0)


def job_pk_fatou(cfg, rep, out):
    from .pk import fatou_detect

    _require(cfg, True)
    f = fatou_detect(cfg.system, cfg.lam, center=config.to_complex(_param(cfg, "center", 0.0)),
                     half_width=_param(cfg, "half_width", 2.0), res=_param(cfg, "res", 256), seed=cfg.seed)
    rep.results["fatou"] = {
        k: f[k] for k in ("agreement", "raw_agreement", "theta_harm", "h")
    } | {"indeterminate_cells": int(f["indeterminate"].sum()), "harmonic_cells": int(f["harmonic"].sum())}
    _write_image(rep, out, "fatou_harmonic", (f["harmonic"] * 255).astype(np.uint8)[::-1])
    _write_image(rep, out, "fatou_normal", (f["normal"] * 255).astype(np.uint8)[::-1])
    rep.check("fatou_agreement", f["agreement"], f["agreement"] >= 0.95, ">= 0.95")


def job_verify_all(cfg, rep, out):
    from .filtration import get_filtration, verify_invariance

    sys = cfg.system
    if isinstance(sys, PkSkewSystem):
        _pk_checks(cfg, rep, out)
        return
    filt = get_filtration(sys)
    rep.results["filtration"] = {"R": filt.R, "rho": filt.rho, "a_sup": filt.a_sup, "R_min": filt.R_min}
    inv = verify_invariance(sys, filt, samples=_param(cfg, "samples", 10_000), seed=cfg.seed)
    rep.results["filtration_invariance"] = inv.to_dict()
    rep.check("filtration_violations", inv.violations + inv.inverse_violations, inv.ok, 0)
    _green_checks(cfg, rep, out, 1000)
    _slice_checks(cfg, rep, out, _param(cfg, "res", 256))
    _write_csv(rep, out, "checks_detail.csv", ["name", "value"],
               [(c["name"], c["value"]) for c in rep.checks])


JOBS = {
    "render-julia": job_render_julia,
    "green-eval": job_green_eval,
    "measure": job_measure,
    "convergence": job_convergence,
    "entropy": job_entropy,
    "pk-basin": job_pk_basin,
    "pk-fatou": job_pk_fatou,
    "verify-all": job_verify_all,
}


def run(cfg: JobConfig, out_dir) -> RunReport:
    """Execute one job; numeric failures become report entries, config errors propagate."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep = RunReport(cfg.job, cfg.system.name, cfg.seed, cfg.lam, cfg.params)
    start = time.perf_counter()
    try:
        JOBS[cfg.job](cfg, rep, out)
    except ConfigError:
        raise
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        rep.failures.append({"type": type(exc).__name__, "message": str(exc),
                             "where": traceback.extract_tb(exc.__traceback__)[-1].name})
    rep.wall_time = time.perf_counter() - start
    _write_csv(rep, out, "checks.csv", ["name", "value", "expected", "passed"],
               [(c["name"], c["value"], c["expected"], c["passed"]) for c in rep.checks])
    rep.files.append("report.json")
    io.write_json(out / "report.json", rep.to_dict())
    with open(out / "timing.txt", "w") as fh:
        fh.write(f"{rep.wall_time:.3f}\n")
    return rep


def build_parser():
    p = argparse.ArgumentParser(prog="fhd", description="Fibered Hénon and P^k dynamics jobs.")
    p.add_argument("job", choices=sorted(JOBS))
    p.add_argument("--config", required=True, help="JSON job configuration")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: FHD_THREADS, else all cores)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", default="out", help="output directory")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    _backend.set_threads(args.threads)
    try:
        cfg = config.load(args.config)
        if cfg.job is not None and cfg.job != args.job:
            raise ConfigError("/job", f"config is for {cfg.job!r}, not {args.job!r}")
        cfg.job = args.job
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("/seed", "seed must be >= 0")
            cfg.seed = args.seed
        rep = run(cfg, args.out)
    except (ConfigError, OSError) as exc:
        print(f"fhd: config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    for c in rep.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']} = {c['value']} (expected {c['expected']})")
    for f in rep.failures:
        print(f"ERROR {f['where']}: {f['type']}: {f['message']}")
    print(f"{rep.job}: {'ok' if rep.ok else 'FAILED'} in {rep.wall_time:.2f} s -> {args.out}")
    return EXIT_OK if rep.ok else EXIT_FAILED


if __name__ == "__main__":
    _sys.exit(main())
