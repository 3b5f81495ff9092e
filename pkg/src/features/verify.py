from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from src.features.appendix import check_radon_nikodym, check_rw_bound, rn_bound, rn_closed_form, rn_hypothesis
from src.features.records import Check
from src.features.runner import run_replicas
from src.model.busemann import (
    DEFAULT_FAR_MULTIPLIER,
    busemann_ne_process,
    busemann_sw_process,
    check_additivity,
    check_busemann_consistency,
    check_dual_restriction,
    check_duality_events,
    check_noncrossing,
    coalescence_point,
    dual_field,
    dual_geodesic,
    reflected_primal_geodesic,
    sample_busemann,
    semi_infinite_geodesic,
    step_fraction,
)
from src.model.lattice import DIAG, E1, E2, ORIGIN, LatticePoint, LatticeRect, Step
from src.model.lpp import (
    DEFAULT_MAX_CELLS,
    WeightField,
    backtrack_geodesic,
    brute_force_lpp,
    check_increment_monotonicity,
    generate_bulk,
    lpp_backward,
    lpp_forward,
    path_weight,
    paths_cross,
    trace_geodesic,
)
from src.model.stationary import (
    boundary_exit_scan,
    characteristic_point,
    check_exit_equivalence,
    check_nested_geodesic_agreement,
    down_right_increment_sample,
    exit_time,
    sample_stationary,
    scaled_floor,
    staircase_path,
    stationary_geodesic,
)
from src.utils.errors import ContractError
from src.utils.rng import RngStream, make_stream
from src.utils.stats import KS_LEVEL, ks_exponential, ks_two_sample, lag1_autocorrelation, mean_within_sigma

log = logging.getLogger(__name__)

_MODULE = "experiments"

ORACLE_NAMESPACE = 1000
STATIONARITY_NAMESPACE = 1001
MARGINAL_NAMESPACE = 1002
STEP_FRACTION_NAMESPACE = 1003
EXACT_NAMESPACE = 1100

EXACT_CHECKS = (
    "increment monotonicity",
    "nested geodesic agreement",
    "exit equivalence",
    "exit labels non-increasing along the boundary",
    "exit sign matches the geodesic",
    "busemann additivity",
    "primal/dual step biconditional",
    "primal and dual geodesics do not cross",
    "busemann consistency of both stationary processes",
    "dual restriction",
    "coalescence point lies on both geodesics",
    "duality events agree at s = 2N^(2/3)",
    "duality events agree at s = 0.1N^(2/3)",
)

ORACLE_CHECKS = (
    "forward value equals brute force",
    "backtracked geodesic attains the value",
    "traced geodesic attains the backward value",
)


@dataclass(frozen=True)
class VerifyPlan:
    rho: float = 0.5
    sizes: tuple[int, ...] = (50, 200)
    realizations: int = 200
    oracle_fields: int = 1000
    oracle_max_side: int = 6
    stationarity_N: int = 500
    stationarity_replicas: int = 2000
    marginal_N: int = 200
    marginal_samples: int = 10_000
    step_fraction_N: int = 200
    step_fraction_replicas: int = 2000
    rn_samples: int = 1_000_000
    rw_replicas: int = 100_000
    far_multiplier: float = DEFAULT_FAR_MULTIPLIER

    @classmethod
    def quick(cls) -> "VerifyPlan":
        return cls(
            sizes=(50,),
            realizations=20,
            oracle_fields=100,
            stationarity_N=100,
            stationarity_replicas=200,
            marginal_N=50,
            marginal_samples=500,
            step_fraction_N=50,
            step_fraction_replicas=200,
            rn_samples=100_000,
            rw_replicas=20_000,
        )

    def as_dict(self) -> dict:
        data = asdict(self)
        data["sizes"] = list(self.sizes)
        return data


@dataclass
class VerifyReport:
    plan: VerifyPlan
    master_seed: int
    checks: list[Check] = field(default_factory=list)
    reports: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def failed(self, strict: bool = False) -> list[Check]:
        return [c for c in self.checks if not c.passed and (strict or c.kind == "invariant")]


def _pick(stream: RngStream, lo: int, hi: int) -> int:
    # uniform integer in [lo, hi]
    return min(hi, lo + int(stream.uniform() * (hi - lo + 1)))


def oracle_realization(index, *, master_seed, namespace, max_side):
    stream = make_stream(master_seed, index, namespace)
    shape = (_pick(stream, 1, max_side), _pick(stream, 1, max_side))
    weights = WeightField.from_array(stream.exponential(1.0, size=shape))
    lo, hi = weights.rect.lo, weights.rect.hi
    forward = lpp_forward(weights, lo)
    value = forward.value(hi)
    brute, _ = brute_force_lpp(weights, lo, hi)
    attained = path_weight(weights, backtrack_geodesic(forward, hi)) == value
    backward = lpp_backward(weights, hi)
    traced = path_weight(weights, trace_geodesic(backward, lo))
    return np.array([value == brute, attained, math.isclose(traced, backward.value(lo), rel_tol=1e-12)], dtype=bool)


def exact_realization(index, *, master_seed, namespace, rho, N, far_multiplier, max_cells):
    stream = make_stream(master_seed, index, namespace)
    picks = stream.child(9)
    v = characteristic_point(rho, N).point
    out = []

    bulk = generate_bulk(LatticeRect(ORIGIN, v), stream.child(3), max_cells)
    x = LatticePoint(_pick(picks, 1, v.x1), _pick(picks, 1, v.x2))
    out.append(check_increment_monotonicity(bulk, x))

    table = sample_stationary(rho, ORIGIN, v.x1, v.x2, stream.child(4), max_cells)
    z = LatticePoint(_pick(picks, 0, v.x1 - 1), _pick(picks, 0, v.x2 - 1))
    y = LatticePoint(_pick(picks, z.x1 + 1, v.x1), _pick(picks, z.x2 + 1, v.x2))
    out.append(check_nested_geodesic_agreement(table, z, y))

    m, n = _pick(picks, 1, v.x1 // 3), _pick(picks, 1, v.x2 // 3)
    shared = LatticePoint(_pick(picks, m + 1, v.x1), _pick(picks, n + 1, v.x2))
    out.append(check_exit_equivalence(table, m, n, shared))

    labels = boundary_exit_scan(table, v).labels
    out.append(bool(np.all(np.diff(labels) <= 0)))

    endpoint = LatticePoint(_pick(picks, 1, v.x1), _pick(picks, 0, v.x2))
    out.append(_exit_sign_consistent(table, endpoint))

    window = LatticeRect(ORIGIN, v + DIAG)
    busemann = sample_busemann(rho, N, window, stream.child(5), far_multiplier, max_cells)
    out.append(check_additivity(busemann))
    out.append(check_noncrossing(busemann))
    out.append(not paths_cross(semi_infinite_geodesic(busemann, ORIGIN), dual_geodesic(busemann, busemann.dual_rect.hi)))

    span = window.hi - window.lo
    ne = busemann_ne_process(busemann, window.hi, span.x1, span.x2)
    sw = busemann_sw_process(busemann, window.lo, span.x1, span.x2)
    out.append(check_busemann_consistency(busemann, sw, ne))
    out.append(check_dual_restriction(busemann, v + DIAG))

    s = max(1, min(v.x1, v.x2) // 4)
    out.append(_coalescence_on_both(busemann, E1 * s, E2 * s))

    cap = min(v.x1, v.x2)
    for separation in (2.0, 0.1):
        primal, dual = check_duality_events(busemann, rho, N, min(cap, scaled_floor(separation, N)))
        out.append(primal == dual)
    return np.array(out, dtype=bool)


def _exit_sign_consistent(table, endpoint: LatticePoint) -> bool:
    z = exit_time(table, endpoint).value
    path = stationary_geodesic(table, endpoint)
    points = path.as_array()
    if z > 0:
        return path.steps[0] is Step.E1 and int(points[points[:, 1] == 0, 0].max()) == z
    return path.steps[0] is Step.E2 and int(points[points[:, 0] == 0, 1].max()) == -z


def _coalescence_on_both(busemann, x: LatticePoint, y: LatticePoint) -> bool:
    result = coalescence_point(busemann, x, y)
    if result.point is None:
        return True
    a = semi_infinite_geodesic(busemann, x).points()
    b = semi_infinite_geodesic(busemann, y).points()
    if result.point not in a or result.point not in b:
        return False
    return a[a.index(result.point) :] == b[b.index(result.point) :]


def stationarity_sample(index, *, master_seed, namespace, rho, N, max_cells):
    stream = make_stream(master_seed, index, namespace)
    v = characteristic_point(rho, N).point
    table = sample_stationary(rho, ORIGIN, v.x1, v.x2, stream, max_cells)
    return down_right_increment_sample(table, staircase_path(table.rect)).values


def marginal_sample(index, *, master_seed, namespace, rho, N, far_multiplier, max_cells):
    stream = make_stream(master_seed, index, namespace)
    v = characteristic_point(rho, N).point
    busemann = sample_busemann(rho, N, LatticeRect(ORIGIN, v), stream, far_multiplier, max_cells)
    weights = dual_field(busemann)
    return np.array([busemann.horizontal_edge(ORIGIN), busemann.vertical_edge(ORIGIN), weights.value(DIAG)])


def step_fraction_sample(index, *, master_seed, namespace, rho, N, far_multiplier, max_cells, k):
    stream = make_stream(master_seed, index, namespace)
    v = characteristic_point(rho, N).point
    busemann = sample_busemann(rho, N, LatticeRect(ORIGIN, v + DIAG), stream, far_multiplier, max_cells)
    dual = dual_geodesic(busemann, busemann.dual_rect.hi)
    primal = reflected_primal_geodesic(busemann, ORIGIN)
    return np.array([step_fraction(dual, k), step_fraction(primal, k)])


def _count_checks(report: VerifyReport, prefix: str, names, indicators: np.ndarray) -> None:
    total = indicators.shape[0]
    for column, name in enumerate(names):
        violations = int(total - indicators[:, column].sum())
        report.checks.append(
            Check(f"{prefix}{name}", violations == 0, "exact per realization", "invariant", f"{violations} of {total} realizations violate")
        )


def _ks_check(name: str, result) -> Check:
    return Check(name, bool(result.pvalue >= KS_LEVEL), f"KS p-value >= {KS_LEVEL}", "shape", f"statistic = {result.statistic:.6g}, p = {result.pvalue:.6g}")


def _require_room(rho: float, N: int, minimum: int = 3) -> None:
    v = characteristic_point(rho, N).point
    if v.x1 < minimum or v.x2 < minimum:
        raise ContractError(_MODULE, f"N = {N} gives v_N = {v.as_tuple()}, too small for the exact suite")


def verify_oracle(report: VerifyReport, workers: int) -> None:
    plan = report.plan
    indicators = run_replicas(
        oracle_realization,
        plan.oracle_fields,
        workers=workers,
        master_seed=report.master_seed,
        namespace=ORACLE_NAMESPACE,
        max_side=plan.oracle_max_side,
    )
    _count_checks(report, "oracle: ", ORACLE_CHECKS, indicators)


def verify_exact(report: VerifyReport, workers: int, max_cells: int) -> None:
    plan = report.plan
    for position, N in enumerate(plan.sizes):
        _require_room(plan.rho, N)
        started = time.perf_counter()
        indicators = run_replicas(
            exact_realization,
            plan.realizations,
            workers=workers,
            master_seed=report.master_seed,
            namespace=EXACT_NAMESPACE + position,
            rho=plan.rho,
            N=N,
            far_multiplier=plan.far_multiplier,
            max_cells=max_cells,
        )
        _count_checks(report, f"N={N}: ", EXACT_CHECKS, indicators)
        log.info("exact suite at N=%s: %s realizations in %.2fs", N, plan.realizations, time.perf_counter() - started)


def verify_stationarity(report: VerifyReport, workers: int, max_cells: int) -> None:
    plan = report.plan
    rho = plan.rho
    v = characteristic_point(rho, plan.stationarity_N).point
    path = staircase_path(LatticeRect(ORIGIN, v))
    horizontal = np.array([q - p == E1 for p, q in zip(path, path[1:])], dtype=bool)
    samples = run_replicas(
        stationarity_sample,
        plan.stationarity_replicas,
        workers=workers,
        master_seed=report.master_seed,
        namespace=STATIONARITY_NAMESPACE,
        rho=rho,
        N=plan.stationarity_N,
        max_cells=max_cells,
    )
    h = samples[:, horizontal].ravel()
    vert = samples[:, ~horizontal].ravel()
    report.checks.append(Check("staircase horizontal mean", mean_within_sigma(h, 1.0 / (1.0 - rho)), "3 sigma", "shape", f"mean = {h.mean():.6g}"))
    report.checks.append(Check("staircase vertical mean", mean_within_sigma(vert, 1.0 / rho), "3 sigma", "shape", f"mean = {vert.mean():.6g}"))
    r = lag1_autocorrelation(samples[:, horizontal])
    report.checks.append(Check("staircase horizontal lag-1 autocorrelation", abs(r) < 0.05, "|r| < 0.05", "shape", f"r = {r:.6g}"))
    report.checks.append(_ks_check("staircase horizontal increments ~ Exp(1-rho)", ks_exponential(h, 1.0 - rho)))
    report.checks.append(_ks_check("staircase vertical increments ~ Exp(rho)", ks_exponential(vert, rho)))


def verify_marginals(report: VerifyReport, workers: int, max_cells: int) -> None:
    plan = report.plan
    rho = plan.rho
    samples = run_replicas(
        marginal_sample,
        plan.marginal_samples,
        workers=workers,
        master_seed=report.master_seed,
        namespace=MARGINAL_NAMESPACE,
        rho=rho,
        N=plan.marginal_N,
        far_multiplier=plan.far_multiplier,
        max_cells=max_cells,
    )
    report.checks.append(_ks_check("busemann horizontal edges ~ Exp(1-rho)", ks_exponential(samples[:, 0], 1.0 - rho)))
    report.checks.append(_ks_check("busemann vertical edges ~ Exp(rho)", ks_exponential(samples[:, 1], rho)))
    report.checks.append(_ks_check("dual weights ~ Exp(1)", ks_exponential(samples[:, 2], 1.0)))


def verify_step_fractions(report: VerifyReport, workers: int, max_cells: int) -> None:
    plan = report.plan
    v = characteristic_point(plan.rho, plan.step_fraction_N).point
    k = max(1, min(v.x1, v.x2))
    samples = run_replicas(
        step_fraction_sample,
        plan.step_fraction_replicas,
        workers=workers,
        master_seed=report.master_seed,
        namespace=STEP_FRACTION_NAMESPACE,
        rho=plan.rho,
        N=plan.step_fraction_N,
        far_multiplier=plan.far_multiplier,
        max_cells=max_cells,
        k=k,
    )
    report.reports["step_fractions"] = {"k": k, "dual_mean": float(samples[:, 0].mean()), "primal_mean": float(samples[:, 1].mean())}
    report.checks.append(_ks_check("dual and reflected primal step fractions agree", ks_two_sample(samples[:, 0], samples[:, 1])))


def verify_appendix(report: VerifyReport, workers: int) -> None:
    plan = report.plan
    rn = check_radon_nikodym(0.5, 0.75, 1, plan.rn_samples, report.master_seed, workers=workers)
    report.checks.append(Check("radon-nikodym closed form at (1/2, 3/4, 1) is 1.125", math.isclose(rn.reports["radon_nikodym"]["closed_form"], 1.125), "exact"))
    report.checks.extend(rn.checks)
    report.reports["radon_nikodym"] = rn.reports["radon_nikodym"]

    violations = []
    for rho in (0.2, 0.5, 0.8):
        for eta in (0.25, 0.5, 0.75):
            for ratio in np.linspace(0.5, 1.5, 21):
                lam = float(rho * ratio)
                series_valid = abs(2.0 * (lam - rho) / rho) <= 1.0 - eta
                if not (rn_hypothesis(rho, lam, eta) and series_valid):
                    continue
                for n in (1, 5, 50):
                    if rn_closed_form(rho, lam, n) > rn_bound(rho, lam, n, eta) * (1 + 1e-12):
                        violations.append((rho, eta, lam, n))
    report.checks.append(Check("closed form <= bound across the hypothesis region", not violations, "exact", "invariant", f"{len(violations)} violations"))

    rw = check_rw_bound(2.0, 1.0, (1, 10, 100), plan.rw_replicas, report.master_seed, workers=workers)
    report.checks.extend(rw.checks)
    report.reports["rw_bound"] = rw.reports["rw_bound"]


def run_verify(plan: VerifyPlan, master_seed: int, workers: int = 1, max_cells: int = DEFAULT_MAX_CELLS) -> VerifyReport:
    started = time.perf_counter()
    report = VerifyReport(plan, int(master_seed))
    log.info("verify: sizes=%s realizations=%s workers=%s", list(plan.sizes), plan.realizations, workers)
    verify_oracle(report, workers)
    verify_exact(report, workers, max_cells)
    verify_stationarity(report, workers, max_cells)
    verify_marginals(report, workers, max_cells)
    verify_step_fractions(report, workers, max_cells)
    verify_appendix(report, workers)
    report.wall_time_s = time.perf_counter() - started
    failed = report.failed()
    log.info("verify finished in %.2fs: %s checks, %s invariant failures", report.wall_time_s, len(report.checks), len(failed))
    return report
