import itertools
import math
import re
from typing import Callable, Dict, List, Optional

import numpy as np

from core.config import get_config
from core.errors import LabError
from core.logging import get_logger
from current_module import (
    WalkEnsemble, leafwise_walk, accumulate_current, current_distance, exit_distribution_test, model_current
)
from experiments_module.report import Report
from experiments_module.run_config import RunConfig
from foliation_module import (
    preset, parse_complex, degree_of, singular_points, projective_singular_points, best_chart,
    homogeneous_to_chart
)
from harmonic_module import (
    from_csv, lorentzian, random_cauchy_mixture, poisson_extend_with_error, weighted_norm, kernel_mass
)
from intersection_module import PerturbationFamily, wedge_sum_experiment
from leafgeom_module import SectorChart, sector_of, bidisc_window, psi_array, tangency_residual
from metric_module import (
    from_formula, on_halfplane, on_sector, metric_sample, curvature_at, poincare_density, ahlfors_schwarz_gap,
    rho_at, mu_mass, mass_profile
)
from monitoring import command_timer
from singularity_module import analyze_singularity, HYPERBOLIC
from tracer_module import trace_leaf, lattice_grid
from utils.worker_pool import map_tasks, spawn_seeds, make_rng

logger = get_logger()

# Точки с |h_z| < NEAR_CRITICAL·h в проверке кривизны не учитываются
NEAR_CRITICAL = 1e-3
POINTS_PER_FUNCTION = 10


def parse_point(text: str) -> np.ndarray:
    """Точка карты из "z,w"; координаты в записи parse_complex без запятой"""
    parts = text.split(",")
    if len(parts) != 2:
        raise LabError("config", f"expected a point 'z,w', got '{text}'")
    return np.array([parse_complex(p) for p in parts], dtype=complex)


def parse_lambda_path(text: str) -> List[complex]:
    ends = [p for p in re.split(r"->|→", text) if p.strip()]
    if len(ends) != 2:
        raise LabError("config", f"expected a λ path 'start -> end', got '{text}'")
    return [parse_complex(e) for e in ends]


def _worst(values, default=0.0) -> float:
    return max(values, default=default)


def _singularities(cfg: RunConfig, report: Report, jobs: Optional[int]):
    f = preset(cfg.preset)
    found = singular_points(f, cfg.chart)
    table = report.table("points", ["chart", "re_z", "im_z", "re_w", "im_w", "residual", "flag"])
    for p, residual, flag in zip(found.points, found.residuals, found.multiplicity_flags):
        table.add(cfg.chart, p[0].real, p[0].imag, p[1].real, p[1].imag, residual, flag)
    report.payload["foliation"] = {"name": f.name, "degree": degree_of(f)}
    report.payload["singular_points"] = found.to_dict()

    worst = _worst(found.residuals)
    report.check("residual", worst < cfg.residual_tol, f"max residual {worst:.3g} ≥ {cfg.residual_tol:g}")
    report.check("bezout-bound", len(found) <= f.delta ** 2, f"{len(found)} points exceed δ² = {f.delta ** 2}")


def _classify(cfg: RunConfig, report: Report, jobs: Optional[int]):
    f = preset(cfg.preset)
    table = report.table("singularities", ["chart", "re_z", "im_z", "re_w", "im_w", "re_lambda", "im_lambda",
                                           "class", "moves"])
    records = []
    for x in projective_singular_points(f):
        chart = best_chart(x)
        p = homogeneous_to_chart(chart, x)
        s = analyze_singularity(f, p, chart)
        table.add(chart, p[0].real, p[0].imag, p[1].real, p[1].imag, s.lam.real, s.lam.imag,
                  s.classification, "|".join(s.normalization_log))
        records.append(s.to_dict())
    report.payload["singularities"] = records

    report.check("found", bool(records), f"no singular points of {f.name} located")
    bad = [r for r in records if r["class"] == HYPERBOLIC and not r["lambda"][1] > 0]
    report.check("normalized", not bad, f"{len(bad)} hyperbolic points keep Im λ ≤ 0 after normalization")


def _sector(cfg: RunConfig, report: Report, jobs: Optional[int]):
    chart = sector_of(parse_complex(cfg.lam), allow_mirror=True)
    report.payload["sector"] = chart.to_dict()
    report.check("gamma-above-one", chart.gamma > 1, f"γ = {chart.gamma:.17g} ≤ 1")
    if not cfg.trace_model:
        return

    alpha = parse_complex(cfg.alpha)
    zetas = np.linspace(0, 2 * math.pi, cfg.points) + 1j
    z, w = psi_array(chart, alpha, zetas)
    table = report.table("polyline", ["re_zeta", "im_zeta", "re_z", "im_z", "re_w", "im_w", "inside"])
    for zeta, zi, wi in zip(zetas, z, w):
        table.add(zeta.real, zeta.imag, zi.real, zi.imag, wi.real, wi.imag, bidisc_window(chart, zeta))

    identity = np.maximum(np.abs(np.abs(z) / np.exp(-zetas.imag) - 1),
                          np.abs(np.abs(w) / np.exp(-(chart.b * zetas.real + chart.a * zetas.imag)) - 1))
    report.check("leaf-identities", float(np.max(identity)) < 1e-12,
                 f"|z| = e^(-v) or |w| = e^(-bu-av) off by {float(np.max(identity)):.3g}")
    worst = _worst(tangency_residual(chart, alpha, zeta) for zeta in zetas)
    report.check("tangency", worst < 1e-12, f"tangency residual {worst:.3g}")


def _trace(cfg: RunConfig, report: Report, jobs: Optional[int]):
    f = preset(cfg.preset)
    trace = trace_leaf(f, parse_point(cfg.start), cfg.arc, chart=cfg.chart)
    table = report.table("trace", ["chart", "re_z", "im_z", "re_w", "im_w", "s"])
    for row in trace.rows():
        table.add(int(row[0]), *(float(v) for v in row[1:]))
    report.payload["trace"] = trace.to_dict()

    worst = _worst(trace.transition_gaps())
    report.check("chart-transitions", worst < 1e-6, f"chart switch mismatch {worst:.3g}")


def _poisson(cfg: RunConfig, report: Report, jobs: Optional[int]):
    H = from_csv(cfg.data, cfg.tail, cfg.decay) if cfg.data else lorentzian()
    at = parse_complex(cfg.at)
    point = (at.real, at.imag)
    value, error = poisson_extend_with_error(H, point)
    norm = weighted_norm(H, cfg.gamma)
    mass = kernel_mass(point)
    table = report.table("poisson", ["U", "V", "value", "error", "weighted_norm", "kernel_mass"])
    table.add(point[0], point[1], value, error, norm, mass)
    report.payload["boundary"] = H.to_dict()

    report.check("positivity", value >= 0, f"P[H]({point}) = {value:.17g} < 0")
    report.check("kernel-mass", abs(mass - 1) < cfg.residual_tol, f"kernel mass {mass:.17g}")
    if H.exact is not None:
        exact = H.exact(*point)
        report.check("closed-form", abs(value - exact) <= max(10 * error, 1e-7),
                     f"quadrature {value:.17g} vs closed form {exact:.17g}")


def _wedge(cfg: RunConfig, report: Report, jobs: Optional[int]):
    chart = sector_of(parse_complex(cfg.lam))
    fam = PerturbationFamily(parse_complex(cfg.a1), parse_complex(cfg.b1))
    rows = wedge_sum_experiment(chart, fam, cfg.eps, deltas=cfg.delta, pairs=cfg.pairs, seed=cfg.seed,
                                spread=cfg.spread, jobs=jobs)
    table = report.table("wedge", ["eps", "delta", "J", "stderr", "unresolved_frac", "pairs"])
    for row in rows:
        table.add(row.eps, row.delta, row.J, row.stderr, row.unresolved_frac, row.pairs)

    for delta in sorted(set(row.delta for row in rows)):
        series = sorted((r for r in rows if r.delta == delta), key=lambda r: -r.eps)
        broken = [(a, b) for a, b in zip(series[:-1], series[1:]) if b.J > cfg.slack * a.J]
        witness = ", ".join(f"J({b.eps:g}) = {b.J:.6g} > {cfg.slack:g}·J({a.eps:g}) = {cfg.slack * a.J:.6g}"
                            for a, b in broken)
        report.check(f"wedge-trend[delta={delta:g}]", not broken, witness)


def _ergodic(cfg: RunConfig, report: Report, jobs: Optional[int]):
    f = preset(cfg.preset)
    starts = [parse_point(s) for s in cfg.starts]
    if len(starts) < 2:
        raise LabError("config", "ergodic comparison needs at least two starts")
    h_walk = get_config().current.h_walk if cfg.h_walk is None else cfg.h_walk
    horizons = sorted({max(1, cfg.horizon >> (cfg.doublings - k)) for k in range(cfg.doublings + 1)})
    grid = lattice_grid(f, cfg.chart, spacing=cfg.spacing, extent=cfg.extent)

    walks = []
    for start, seed_seq in zip(starts, spawn_seeds(cfg.seed, len(starts))):
        ensemble = WalkEnsemble(start=tuple(start), chart=cfg.chart, count=cfg.N, h_walk=h_walk,
                                steps=cfg.horizon, seed=int(seed_seq.generate_state(1)[0]))
        walks.append(leafwise_walk(f, ensemble, jobs=jobs))
    report.payload["discarded"] = [w.discarded for w in walks]

    table = report.table("ergodic", ["horizon", "distance"])
    distances = []
    for horizon in horizons:
        currents = [accumulate_current([p.prefix((horizon + 0.5) * h_walk) for p in w.paths], grid,
                                       provenance={"horizon": horizon, "seed": cfg.seed})
                    for w in walks]
        distance = max(current_distance(a, b) for a, b in itertools.combinations(currents, 2))
        distances.append(distance)
        table.add(horizon, distance)
    broken = [(h, d0, d1) for h, d0, d1 in zip(horizons[1:], distances[:-1], distances[1:]) if d1 > cfg.slack * d0]
    report.check("distance-trend", not broken,
                 ", ".join(f"horizon {h}: {d1:.6g} > {cfg.slack:g}·{d0:.6g}" for h, d0, d1 in broken))

    chart = sector_of(parse_complex(cfg.lam))
    ks, pvalue = exit_distribution_test(chart, parse_complex(cfg.exit_start), count=cfg.N, h_walk=h_walk,
                                        seed=cfg.seed)
    exit_table = report.table("exit-law", ["ks", "pvalue"])
    exit_table.add(ks, pvalue)
    report.check("exit-law", ks < cfg.ks_max, f"KS distance {ks:.4g} ≥ {cfg.ks_max:g}")


def _metric_curvature(cfg: RunConfig, report: Report, rng: np.random.Generator):
    table = report.table("curvature", ["function", "x", "y", "kappa", "kappa_imag"])
    functions = math.ceil(cfg.samples / POINTS_PER_FUNCTION)
    worst, skipped = 0.0, 0
    for k in range(functions):
        h = on_halfplane(random_cauchy_mixture(rng))
        for _ in range(POINTS_PER_FUNCTION):
            p = (float(rng.uniform(-3, 3)), float(rng.uniform(0.3, 3)))
            if abs(h.h_z(p)) < NEAR_CRITICAL * h.value(p):
                skipped += 1
                continue
            sample = metric_sample(h, p)
            table.add(k, p[0], p[1], sample.kappa, sample.kappa_imag)
            worst = max(worst, abs(sample.kappa + 1))
    report.payload["near_critical_skipped"] = skipped
    report.check("curvature-identity", worst <= cfg.curvature_tol, f"max |κ + 1| = {worst:.3g}")

    square = from_formula(lambda x, y: x * x, distance=lambda x, y: x, description="x^2")
    kappa = curvature_at(square, (1.0, 0.5))
    report.check("negative-control", abs(kappa + 1) > cfg.curvature_tol,
                 f"non-harmonic x² passed the identity with κ = {kappa:.6g}")


def _metric_schwarz(cfg: RunConfig, report: Report, rng: np.random.Generator):
    chart = sector_of(parse_complex(cfg.lam))
    table = report.table("schwarz", ["x", "y", "rho_P", "rho_T", "gap"])
    functions = math.ceil(cfg.samples / POINTS_PER_FUNCTION)
    worst = math.inf
    for _ in range(functions):
        h = on_sector(random_cauchy_mixture(rng), chart)
        for _ in range(POINTS_PER_FUNCTION):
            rho = rng.uniform(0.3, 2.0)
            theta = chart.theta_max * rng.uniform(0.1, 0.9)
            p = (float(rho * math.cos(theta)), float(rho * math.sin(theta)))
            rho_p, rho_t = poincare_density(chart, p), rho_at(h, p)
            table.add(p[0], p[1], rho_p, rho_t, rho_p - rho_t)
            worst = min(worst, (rho_p - rho_t) / max(1.0, rho_p))
    report.check("schwarz-inequality", worst >= -cfg.schwarz_tol, f"min normalized gap {worst:.3g}")

    halfplane = SectorChart(lam=1j, theta_max=math.pi, gamma=1.0)
    height = from_formula(lambda x, y: y, distance=lambda x, y: y, description="Im z")
    equality = _worst(abs(ahlfors_schwarz_gap(halfplane, height, p)) / poincare_density(halfplane, p)
                      for p in ((0.3, 0.7), (-2.0, 0.1), (5.0, 3.0)))
    report.check("equality-case", equality <= max(cfg.schwarz_tol, 1e-10), f"relative gap {equality:.3g}")


def _metric_mass(cfg: RunConfig, report: Report, rng: np.random.Generator):
    chart = sector_of(parse_complex(cfg.lam))
    radii = sorted({1.0, *cfg.radii}, reverse=True)
    rows = mass_profile(chart, lorentzian(), radii, panels=cfg.panels)
    table = report.table("mass", ["r", "mass", "error"])
    for r, value, error in rows:
        table.add(r, value, error)

    report.check("finite", all(math.isfinite(v) for _, v, _ in rows), "μ_T mass is not finite")
    unstable = [(r, v, e) for r, v, e in rows if e > cfg.mass_tol * v]
    report.check("mesh-stable", not unstable,
                 ", ".join(f"r = {r:g}: error {e:.3g} on mass {v:.6g}" for r, v, e in unstable))
    inner = [v for r, v, _ in rows if r < 1]
    report.check("decreasing", all(a > b > 0 for a, b in zip(inner[:-1], inner[1:])),
                 f"masses {inner} do not decrease strictly toward 0")
    full = rows[0][1]
    report.check("full-bidisc-mass", abs(full - math.pi / 4) <= cfg.mass_tol * math.pi / 4,
                 f"mass {full:.17g} on the unit bidisc, expected π/4")


def _metric(cfg: RunConfig, report: Report, jobs: Optional[int]):
    rng = make_rng(cfg.seed)
    {"curvature": _metric_curvature, "schwarz": _metric_schwarz, "mass": _metric_mass}[cfg.check](cfg, report, rng)


def _sweep_point(lam: complex, radius: float, panels: int):
    chart = sector_of(lam)
    H = lorentzian()
    mass, error = mu_mass(chart, H, radius, panels)
    return model_current(chart, H), mass, error, chart.gamma


def _family_sweep(cfg: RunConfig, report: Report, jobs: Optional[int]):
    start, end = parse_lambda_path(cfg.lambda_path)
    lams = [start + (end - start) * k / (cfg.steps - 1) for k in range(cfg.steps)]
    results = map_tasks(_sweep_point, [(lam, cfg.mass_radius, cfg.panels) for lam in lams], jobs)
    failed = [lam for lam, r in zip(lams, results) if r is None]
    if failed:
        raise LabError("empty", f"family sweep failed at λ = {failed}")

    distances = report.table("distances", ["from", "to", "distance"])
    values = []
    for k in range(1, len(results)):
        d = current_distance(results[k - 1][0], results[k][0])
        values.append(d)
        distances.add(k - 1, k, d)
    family = report.table("family", ["index", "re_lambda", "im_lambda", "gamma", "mu_mass", "mass_error"])
    for k, (lam, (_, mass, error, gamma)) in enumerate(zip(lams, results)):
        family.add(k, lam.real, lam.imag, gamma, mass, error)

    report.check("finite-distances", all(math.isfinite(d) for d in values), f"distances {values}")
    report.check("finite-masses", all(math.isfinite(r[1]) for r in results), "a μ_T mass is not finite")


COMMAND_HANDLERS: Dict[str, Callable[[RunConfig, Report, Optional[int]], None]] = {
    "singularities": _singularities,
    "classify": _classify,
    "sector": _sector,
    "trace": _trace,
    "poisson": _poisson,
    "wedge": _wedge,
    "ergodic": _ergodic,
    "metric": _metric,
    "family-sweep": _family_sweep,
}


def run_command(cfg: RunConfig, jobs: Optional[int] = None) -> Report:
    """
    Выполняет команду и собирает отчет.

    Ошибка LabError не пробрасывается: она логируется с контекстом команды
    и становится строкой FAIL со свидетелем.
    """
    report = Report(command=cfg.command, config=cfg.to_dict())
    logger.info(f"Запуск команды {cfg.command}")
    with command_timer(cfg.command) as timer:
        try:
            COMMAND_HANDLERS[cfg.command](cfg, report, jobs)
        except LabError as e:
            logger.error(f"Команда {cfg.command} прервана: [{e.code}] {e.message}")
            report.check("error", False, f"{e.code}: {e.message}")
    report.wall_clock = timer.elapsed
    logger.info(f"Команда {cfg.command} завершена за {report.wall_clock:.3f} с: "
                f"{len(report.checks) - len(report.failed)} PASS, {len(report.failed)} FAIL")
    return report
