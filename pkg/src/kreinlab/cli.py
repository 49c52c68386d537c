"""Batch experiment runner and command-line interface.

``krein-lab run <config>`` executes one mesh -> measure -> assemble ->
solve pipeline plus the checks requested in the config and writes
deterministic CSV reports.  ``krein-lab mesh`` generates meshes in the
KLMESH text format; ``krein-lab dim`` runs the dimension estimator on a
measure config.

Exit codes: 0 all checks pass, 1 check failure, 2 configuration error,
3 numerical error.
"""

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import assemble as assemblemod
from . import green as greenmod
from . import measure as measuremod
from . import mesh as meshmod
from . import nodal as nodalmod
from . import spectral as spectralmod
from .conformal import pushforward_measure

KNOWN_CHECKS = ("spectrum", "nodal", "courant", "green", "dim",
                "maxprinciple", "conformal-roundtrip")

REPORT_HEADER = "KREIN-LAB REPORT v1"
SPECTRUM_HEADER = "index,lambda,nodal_count,courant_bound,residual"
NODAL_HEADER = "index,lambda,multiplicity_cluster,nodal_count,bound,pass"
GREEN_HEADER = "check,domain,measure,value,tolerance,pass"


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    name: str
    domain: dict
    measure_cfg: dict
    boundary: str
    eigen_count: int
    checks: tuple
    seed: int = 0
    expected_eigenvalues: tuple = ()
    eigenvalue_rel_tol: float = 0.02
    green_cfg: dict = field(default_factory=dict)
    dim_cfg: dict = field(default_factory=dict)
    nodal_cfg: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    MAX_RECT_N = 150  # 300x300 cells
    MAX_DISK_N = 7
    MAX_SPHERE_LEVEL = 6

    @classmethod
    def from_dict(cls, raw):
        try:
            version = raw.get("version", 1)
            if version != 1:
                raise ConfigError(f"unsupported config version: {version}")
            checks = tuple(raw.get("checks", []))
            for c in checks:
                if c not in KNOWN_CHECKS:
                    raise ConfigError(f"unknown check {c!r}; known: "
                                      f"{', '.join(KNOWN_CHECKS)}")
            cfg = cls(
                name=raw.get("name", "experiment"),
                domain=dict(raw["domain"]),
                measure_cfg=dict(raw["measure"]),
                boundary=raw.get("boundary", "dirichlet"),
                eigen_count=int(raw.get("eigen_count", 4)),
                checks=checks,
                seed=int(raw.get("seed", 0)),
                expected_eigenvalues=tuple(raw.get("expected_eigenvalues",
                                                   [])),
                eigenvalue_rel_tol=float(raw.get("eigenvalue_rel_tol",
                                                 0.02)),
                green_cfg=dict(raw.get("green", {})),
                dim_cfg=dict(raw.get("dim", {})),
                nodal_cfg=dict(raw.get("nodal", {})),
                tolerances=dict(raw.get("tolerances", {})),
            )
        except KeyError as e:
            raise ConfigError(f"missing config field: {e.args[0]}") from e
        cfg.validate()
        return cfg

    def validate(self):
        if self.boundary not in ("dirichlet", "closed"):
            raise ConfigError("boundary must be 'dirichlet' or 'closed'")
        if self.eigen_count < 1:
            raise ConfigError("eigen_count must be positive")
        kind = self.domain.get("type")
        if kind == "rectangle":
            if int(self.domain.get("n", 0)) > self.MAX_RECT_N:
                raise ConfigError("rectangle resolution exceeds the "
                                  f"documented limit n={self.MAX_RECT_N}")
        elif kind == "disk":
            if int(self.domain.get("n", 0)) > self.MAX_DISK_N:
                raise ConfigError("disk refinement exceeds the documented "
                                  f"limit n={self.MAX_DISK_N}")
        elif kind == "sphere":
            if int(self.domain.get("level", 0)) > self.MAX_SPHERE_LEVEL:
                raise ConfigError("sphere level exceeds the documented "
                                  f"limit {self.MAX_SPHERE_LEVEL}")
        else:
            raise ConfigError(f"unknown domain type: {kind!r}")


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: tuple  # lines for the summary


@dataclass
class ExperimentReport:
    name: str
    checks: tuple
    spectrum_rows: tuple
    nodal_rows: tuple
    green_rows: tuple
    all_pass: bool
    mpi_proxy: float | None = None


def build_domain(cfg):
    kind = cfg.domain["type"]
    if kind == "rectangle":
        return meshmod.gen_rectangle(float(cfg.domain.get("half_width", 1.0)),
                                     float(cfg.domain.get("half_height", 1.0)),
                                     int(cfg.domain.get("n", 16)))
    if kind == "disk":
        return meshmod.gen_disk(float(cfg.domain.get("radius", 1.0)),
                                int(cfg.domain.get("n", 3)))
    if kind == "sphere":
        return meshmod.gen_sphere(float(cfg.domain.get("radius", 1.0)),
                                  int(cfg.domain.get("level", 3)))
    raise ConfigError(f"unknown domain type: {kind!r}")


def _refined_config_domain(domain):
    d = dict(domain)
    if d["type"] == "rectangle":
        d["n"] = 2 * int(d.get("n", 16))
    elif d["type"] == "disk":
        d["n"] = int(d.get("n", 3)) + 1
    else:
        d["level"] = int(d.get("level", 3)) + 1
    return d


def run_experiment(cfg, out_dir=None):
    """Execute the configured pipeline; optionally emit reports."""
    mesh = build_domain(cfg)
    m = measuremod.parse_measure_config(cfg.measure_cfg)
    pencil = assemblemod.build_pencil(mesh, m, cfg.boundary)
    pairs = spectralmod.solve_eigenpairs(pencil, cfg.eigen_count,
                                         seed=cfg.seed)
    decomps = [nodalmod.nodal_components(mesh, p.coeffs) for p in pairs]
    courant = nodalmod.courant_check(pairs, decomps, cfg.boundary)

    if "courant" in cfg.checks and not courant.all_pass:
        # one automatic mesh-doubling retry before reporting failure
        fine_cfg = ExperimentConfig(**{**cfg.__dict__,
                                       "domain":
                                       _refined_config_domain(cfg.domain)})
        mesh = build_domain(fine_cfg)
        pencil = assemblemod.build_pencil(mesh, m, cfg.boundary)
        pairs = spectralmod.solve_eigenpairs(pencil, cfg.eigen_count,
                                             seed=cfg.seed)
        decomps = [nodalmod.nodal_components(mesh, p.coeffs) for p in pairs]
        courant = nodalmod.courant_check(pairs, decomps, cfg.boundary)

    checks = []
    green_rows = []
    for name in cfg.checks:
        if name == "spectrum":
            checks.append(_check_spectrum(cfg, pencil, pairs))
        elif name == "nodal":
            checks.append(_check_nodal(cfg, decomps))
        elif name == "courant":
            checks.append(CheckResult("courant", courant.all_pass, tuple(
                f"index {r.index}: count {r.nodal_count} <= bound {r.bound}"
                f" -> {'pass' if r.passed else 'FAIL'}"
                for r in courant.rows)))
        elif name == "green":
            res, rows = _check_green(cfg, mesh, m, pairs)
            checks.append(res)
            green_rows.extend(rows)
        elif name == "dim":
            checks.append(_check_dim(cfg, m))
        elif name == "maxprinciple":
            checks.append(_check_maxprinciple(cfg, mesh, pencil))
        elif name == "conformal-roundtrip":
            checks.append(_check_conformal(cfg, mesh, m, pairs))

    mpi_proxy = 1.0 / pairs[0].lam if pairs and pairs[0].lam > 0 else (
        1.0 / pairs[1].lam if len(pairs) > 1 and pairs[1].lam > 0 else None)
    spectrum_rows = _spectrum_rows(pencil, pairs, decomps, courant)
    nodal_rows = tuple((r.index, r.lam, r.multiplicity, r.nodal_count,
                        r.bound, r.passed) for r in courant.rows)
    report = ExperimentReport(cfg.name, tuple(checks), spectrum_rows,
                              nodal_rows, tuple(green_rows),
                              all(c.passed for c in checks), mpi_proxy)
    if out_dir is not None:
        emit_report(report, out_dir)
    return report


def _spectrum_rows(pencil, pairs, decomps, courant):
    rows = []
    for p, d, c in zip(pairs, decomps, courant.rows):
        u = pencil.reduce(p.coeffs)
        Ku = pencil.K_red @ u
        Mu = pencil.M_red @ u
        denom = max(np.linalg.norm(Ku), np.linalg.norm(Mu), 1e-300)
        res = np.linalg.norm(Ku - p.lam * Mu) / denom
        rows.append((p.index, p.lam, d.count, c.bound, res))
    return tuple(rows)


def _check_spectrum(cfg, pencil, pairs):
    lines = []
    ok = True
    for i, p in enumerate(pairs):
        lines.append(f"lambda_{p.index} = {p.lam:.12g}")
        if i < len(cfg.expected_eigenvalues):
            target = cfg.expected_eigenvalues[i]
            denom = max(abs(target), 1e-12)
            good = abs(p.lam - target) / denom <= cfg.eigenvalue_rel_tol
            ok = ok and good
            lines[-1] += (f" (expected {target:.12g}, rel tol "
                          f"{cfg.eigenvalue_rel_tol:g}) -> "
                          f"{'pass' if good else 'FAIL'}")
    lams = [p.lam for p in pairs]
    if sorted(lams) != lams:
        ok = False
        lines.append("ordering violated -> FAIL")
    return CheckResult("spectrum", ok, tuple(lines))


def _check_nodal(cfg, decomps):
    lines = []
    ok = True
    expect1 = cfg.nodal_cfg.get("expected_count_u1")
    expect2 = cfg.nodal_cfg.get("expected_count_u2")
    counts = [d.count for d in decomps]
    lines.append("counts: " + ",".join(str(c) for c in counts))
    if expect1 is not None and counts:
        good = counts[0] == expect1
        ok = ok and good
        lines.append(f"u1 count {counts[0]} == {expect1} -> "
                     f"{'pass' if good else 'FAIL'}")
    if expect2 is not None and len(counts) > 1:
        good = counts[1] == expect2
        ok = ok and good
        lines.append(f"u2 count {counts[1]} == {expect2} -> "
                     f"{'pass' if good else 'FAIL'}")
    return CheckResult("nodal", ok, tuple(lines))


def _build_kernel(cfg, mesh):
    kind = cfg.green_cfg.get("kernel")
    if kind is None:
        dom = cfg.domain["type"]
        kind = {"rectangle": "rectangle", "disk": "disk",
                "sphere": "sphere"}[dom]
    if kind == "rectangle":
        return greenmod.RectangleDirichlet(
            float(cfg.domain.get("half_width", 1.0)),
            float(cfg.domain.get("half_height", 1.0)),
            int(cfg.green_cfg.get("series_terms", 200)))
    if kind == "disk":
        return greenmod.DiskDirichlet(float(cfg.domain.get("radius", 1.0)))
    if kind == "sphere":
        return greenmod.SphereClosed(float(cfg.domain.get("radius", 1.0)))
    raise ConfigError(f"unknown green kernel: {kind!r}")


def _green_samples(cfg, mesh):
    if mesh.chart.kind == "sphere":
        step = max(1, mesh.n_vertices // 16)
        return mesh.embedded[::step][:16]
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    g = np.linspace(0.15, 0.85, 4)
    pts = [lo + np.array([gx, gy]) * (hi - lo) for gx in g for gy in g]
    pts.append(0.5 * (lo + hi))
    return np.asarray(pts)


def _check_green(cfg, mesh, m, pairs):
    rng = np.random.default_rng(cfg.seed)
    kernel = _build_kernel(cfg, mesh)
    domain_name = cfg.domain["type"]
    measure_name = cfg.measure_cfg.get("type", "?")
    rows = []
    lines = []

    def add(check, value, tol, good):
        rows.append((check, domain_name, measure_name, value, tol, good))
        lines.append(f"{check}: {value:.6g} (tol {tol:g}) -> "
                     f"{'pass' if good else 'FAIL'}")

    # symmetry / positivity on random pairs
    n_pairs = int(cfg.green_cfg.get("pair_samples", 200))
    X, Y = _random_domain_pairs(kernel, mesh, rng, n_pairs)
    if isinstance(kernel, greenmod.RectangleDirichlet):
        gxy = kernel.eval_pairs(X, Y)
        gyx = kernel.eval_pairs(Y, X)
    else:
        gxy = np.array([greenmod.kernel_eval(kernel, x, y)
                        for x, y in zip(X, Y)])
        gyx = np.array([greenmod.kernel_eval(kernel, y, x)
                        for x, y in zip(X, Y)])
    sym = float(np.abs(gxy - gyx).max())
    add("symmetry", sym, 1e-10, sym <= 1e-10)
    if not isinstance(kernel, greenmod.SphereClosed):
        mn = float(gxy.min())
        add("positivity", mn, 1e-10, mn >= -1e-10)

    # boundary vanishing / zero mean
    if isinstance(kernel, greenmod.DiskDirichlet):
        R = kernel.radius
        ang = rng.uniform(0, 2 * np.pi, 20)
        bpts = np.column_stack([R * np.cos(ang), R * np.sin(ang)])
        worst = max(abs(greenmod.kernel_eval(kernel, b, (0.2 * R, 0.1 * R)))
                    for b in bpts)
        add("boundary_vanishing", worst, 1e-6, worst <= 1e-6)
    elif isinstance(kernel, greenmod.RectangleDirichlet):
        a, b = kernel.half_width, kernel.half_height
        bpts = [(a, 0.3 * b), (-a, -0.4 * b), (0.2 * a, b), (-0.7 * a, -b)]
        worst = max(abs(greenmod.kernel_eval(kernel, p, (0.1, 0.05)))
                    for p in bpts)
        add("boundary_vanishing", worst, 1e-8, worst <= 1e-8)
    else:
        t, w = np.polynomial.legendre.leggauss(400)
        val = abs(0.5 * float((w * kernel.eval_cos(t)).sum()))
        add("zero_mean", val, 1e-6, val <= 1e-6)

    # distributional identity on bump tests
    n_bumps = int(cfg.green_cfg.get("bump_tests", 3))
    worst = 0.0
    for _ in range(n_bumps):
        worst = max(worst, _one_bump_test(kernel, rng))
    add("distributional_identity", worst, 1e-4, worst <= 1e-4)

    # C2 constant stability under sample doubling
    if not isinstance(kernel, greenmod.SphereClosed):
        samples = _green_samples(cfg, mesh)
        half = samples[::2]
        c_half = greenmod.c2_constant(kernel, m, half, mesh)
        c_full = greenmod.c2_constant(kernel, m, samples, mesh)
        tol = float(cfg.green_cfg.get("c2_stability_tol", 0.02))
        rel = abs(c_full - c_half) / max(c_full, 1e-300)
        add("c2_constant", c_full, tol, rel <= tol and np.isfinite(c_full))

    # fixed point for the configured mode
    fp_index = cfg.green_cfg.get("fixed_point_index")
    if fp_index is not None:
        pair = next((p for p in pairs if p.index == int(fp_index)), None)
        if pair is None:
            raise ConfigError(f"fixed_point_index {fp_index} not among the "
                              "computed pairs")
        tol = float(cfg.green_cfg.get("fixed_point_tol", 0.05))
        res = greenmod.fixed_point_residual(kernel, m, mesh, pair,
                                            _green_samples(cfg, mesh))
        add("fixed_point_residual", res, tol, res <= tol)

    ok = all(r[5] for r in rows)
    return CheckResult("green", ok, tuple(lines)), rows


def _random_domain_pairs(kernel, mesh, rng, n):
    if isinstance(kernel, greenmod.SphereClosed):
        p = rng.standard_normal((2 * n, 3))
        p /= np.linalg.norm(p, axis=1, keepdims=True)
        return kernel.radius * p[:n], kernel.radius * p[n:]
    if isinstance(kernel, greenmod.DiskDirichlet):
        r = kernel.radius * np.sqrt(rng.uniform(0, 0.96, 2 * n))
        t = rng.uniform(0, 2 * np.pi, 2 * n)
        p = np.column_stack([r * np.cos(t), r * np.sin(t)])
        return p[:n], p[n:]
    a, b = kernel.half_width, kernel.half_height
    p = rng.uniform([-0.98 * a, -0.98 * b], [0.98 * a, 0.98 * b],
                    (2 * n, 2))
    return p[:n], p[n:]


def _one_bump_test(kernel, rng):
    if isinstance(kernel, greenmod.SphereClosed):
        c = rng.standard_normal(3)
        c /= np.linalg.norm(c)
        bump = greenmod.SphereBump(tuple(c * kernel.radius),
                                   float(np.cos(rng.uniform(0.5, 1.0))),
                                   kernel.radius)
        y = rng.standard_normal(3)
        y = y / np.linalg.norm(y) * kernel.radius
        return greenmod.verify_distributional_identity(kernel, y, bump)
    if isinstance(kernel, greenmod.DiskDirichlet):
        R = kernel.radius
        c = rng.uniform(-0.3, 0.3, 2) * R
        r = rng.uniform(0.2, 0.4) * R
        y = rng.uniform(-0.5, 0.5, 2) * R
    else:
        a, b = kernel.half_width, kernel.half_height
        c = rng.uniform([-0.3 * a, -0.3 * b], [0.3 * a, 0.3 * b])
        r = rng.uniform(0.2, 0.4) * min(a, b)
        y = rng.uniform([-0.5 * a, -0.5 * b], [0.5 * a, 0.5 * b])
    bump = greenmod.PlanarBump(tuple(c), float(r))
    return greenmod.verify_distributional_identity(kernel, y, bump)


def _check_dim(cfg, m):
    est = measuremod.estimate_dim_infinity(m)
    lines = [f"slope = {est.slope:.6g} over deltas "
             f"[{est.delta_range[0]:.3g}, {est.delta_range[1]:.3g}]"]
    ok = True
    expected = cfg.dim_cfg.get("expected_slope")
    if expected is not None:
        tol = float(cfg.dim_cfg.get("slope_tol", 0.1))
        ok = abs(est.slope - float(expected)) <= tol
        lines.append(f"expected {expected} +- {tol} -> "
                     f"{'pass' if ok else 'FAIL'}")
    return CheckResult("dim", ok, tuple(lines))


def _check_maxprinciple(cfg, mesh, pencil):
    if pencil.boundary_condition != "dirichlet":
        return CheckResult("maxprinciple", True,
                           ("skipped: closed pencil has no Dirichlet "
                            "source problem",))
    rng = np.random.default_rng(cfg.seed + 1)
    trials = int(cfg.tolerances.get("maxprinciple_trials", 50))
    tol = float(cfg.tolerances.get("maxprinciple_tol", 1e-10))
    interior = pencil.dof_map
    worst = 0.0
    for _ in range(trials):
        f = -np.abs(rng.standard_normal(pencil.n_vertices))
        u = spectralmod.solve_dirichlet_source(pencil, f)
        scale = max(np.abs(u).max(), 1e-300)
        worst = max(worst, u[interior].max() / scale)
        g = np.abs(rng.standard_normal(pencil.n_vertices))
        v = spectralmod.solve_dirichlet_source(pencil, g)
        scale = max(np.abs(v).max(), 1e-300)
        worst = max(worst, -v[interior].min() / scale)
    ok = worst <= tol
    return CheckResult("maxprinciple", ok,
                       (f"worst signed violation {worst:.3e} (tol {tol:g})"
                        f" -> {'pass' if ok else 'FAIL'}",))


def _check_conformal(cfg, mesh, m, pairs):
    if cfg.domain["type"] != "rectangle" or mesh.chart.kind != "planar":
        return CheckResult("conformal-roundtrip", False,
                           ("conformal roundtrip needs a planar rectangle "
                            "domain",))
    radius = float(cfg.green_cfg.get("sphere_radius", 2.0))
    hemi = meshmod.gen_hemisphere_chart(radius, mesh)
    pushed = pushforward_measure(m, chart=_chart_of(radius))
    K_flat = assemblemod.assemble_stiffness(mesh)
    K_hemi = assemblemod.assemble_stiffness(hemi)
    M_flat = assemblemod.assemble_measure_mass(mesh, m)
    M_hemi = assemblemod.assemble_measure_mass(hemi, pushed)
    dK = abs(K_flat - K_hemi).max()
    dM = abs(M_flat - M_hemi).max()
    pen = assemblemod.build_pencil(hemi, pushed, cfg.boundary)
    lam1 = spectralmod.solve_eigenpairs(pen, 1, seed=cfg.seed)[0].lam
    ref = pairs[0].lam
    rel = abs(lam1 - ref) / max(abs(ref), 1e-300)
    ok = dK <= 1e-8 and dM <= 1e-12 and rel <= 0.01
    return CheckResult("conformal-roundtrip", ok, (
        f"stiffness entrywise diff {dK:.3e} (tol 1e-8)",
        f"mass entrywise diff {dM:.3e} (tol 1e-12)",
        f"lambda_1 hemisphere {lam1:.10g} vs flat {ref:.10g} "
        f"(rel {rel:.3e}, tol 1e-2) -> {'pass' if ok else 'FAIL'}",
    ))


def _chart_of(radius):
    from .conformal import StereoChart
    return StereoChart(radius)


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def emit_report(report, out_dir):
    """Write spectrum.csv, nodal.csv, green.csv and summary.txt."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "spectrum.csv", "w") as f:
        f.write(SPECTRUM_HEADER + "\n")
        for row in report.spectrum_rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")
    with open(out / "nodal.csv", "w") as f:
        f.write(NODAL_HEADER + "\n")
        for row in report.nodal_rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")
    with open(out / "green.csv", "w") as f:
        f.write(GREEN_HEADER + "\n")
        for row in report.green_rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")
    with open(out / "summary.txt", "w") as f:
        f.write(REPORT_HEADER + "\n")
        f.write(f"experiment: {report.name}\n")
        if report.mpi_proxy is not None:
            f.write("poincare constant proxy (1/lambda_1): "
                    f"{report.mpi_proxy:.12g}\n")
        for c in report.checks:
            f.write(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}\n")
            for line in c.details:
                f.write(f"    {line}\n")
        f.write(f"result: {'PASS' if report.all_pass else 'FAIL'}\n")
    return [out / n for n in ("spectrum.csv", "nodal.csv", "green.csv",
                              "summary.txt")]


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

def load_config(name_or_path):
    """Load a config from a path or a bundled config name."""
    p = Path(name_or_path)
    if p.exists():
        text = p.read_text()
    else:
        ref = resources.files("kreinlab.configs").joinpath(
            f"{name_or_path}.json")
        if not ref.is_file():
            raise ConfigError(f"no such config file or bundled config: "
                              f"{name_or_path}")
        text = ref.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: line {e.lineno}, "
                          f"column {e.colno}: {e.msg}") from e
    return ExperimentConfig.from_dict(raw)


def bundled_config_names():
    out = []
    for ref in resources.files("kreinlab.configs").iterdir():
        if ref.name.endswith(".json"):
            out.append(ref.name[:-5])
    return sorted(out)


def _cmd_run(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    t0 = time.time()
    report = run_experiment(cfg, out_dir=args.out)
    dt = time.time() - t0
    for c in report.checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}")
    print(f"{'PASS' if report.all_pass else 'FAIL'} "
          f"({len(report.checks)} checks, {dt:.1f} s)")
    return 0 if report.all_pass else 1


def _cmd_mesh(args):
    if args.type == "rectangle":
        mesh = meshmod.gen_rectangle(args.half_width, args.half_height,
                                     args.n)
    elif args.type == "disk":
        mesh = meshmod.gen_disk(args.radius, args.n)
    elif args.type == "sphere":
        mesh = meshmod.gen_sphere(args.radius, args.n)
    elif args.type == "hemisphere":
        base = meshmod.gen_rectangle(args.half_width, args.half_height,
                                     args.n)
        mesh = meshmod.gen_hemisphere_chart(args.radius, base)
    else:
        raise ConfigError(f"unknown mesh type {args.type!r}")
    meshmod.write_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_vertices} vertices, "
          f"{mesh.n_triangles} triangles")
    return 0


def _cmd_dim(args):
    p = Path(args.measure_config)
    if not p.exists():
        raise ConfigError(f"no such measure config: {args.measure_config}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"measure config is not valid JSON: {e.msg}") \
            from e
    m = measuremod.parse_measure_config(raw)
    est = measuremod.estimate_dim_infinity(m)
    print(f"slope {est.slope:.6g}  intercept {est.intercept:.6g}  deltas "
          f"[{est.delta_range[0]:.4g}, {est.delta_range[1]:.4g}]")
    if args.out:
        with open(args.out, "w") as f:
            f.write("delta,sup_ball_mass\n")
            for d, s in est.table:
                f.write(f"{d:.12g},{s:.12g}\n")
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="krein-lab",
                                 description="measure-weighted Laplacian "
                                 "laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="config path or bundled name "
                       f"({', '.join(bundled_config_names())})")
    p_run.add_argument("--out", default=None, help="report directory")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_mesh = sub.add_parser("mesh", help="generate a KLMESH file")
    p_mesh.add_argument("--type", required=True,
                        choices=["rectangle", "disk", "sphere",
                                 "hemisphere"])
    p_mesh.add_argument("--n", type=int, default=4,
                        help="resolution / refinement level")
    p_mesh.add_argument("--half-width", type=float, default=1.0)
    p_mesh.add_argument("--half-height", type=float, default=1.0)
    p_mesh.add_argument("--radius", type=float, default=1.0)
    p_mesh.add_argument("--out", required=True)
    p_mesh.set_defaults(func=_cmd_mesh)

    p_dim = sub.add_parser("dim", help="estimate the lower dimension of a "
                           "measure config")
    p_dim.add_argument("measure_config")
    p_dim.add_argument("--out", default=None, help="per-delta table CSV")
    p_dim.set_defaults(func=_cmd_dim)

    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
