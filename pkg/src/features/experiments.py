from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from src.features.records import (
    Check,
    EstimateRecord,
    ExperimentConfig,
    ExperimentKind,
    ExperimentResult,
    build_records,
    monotone_check,
    rowwise_monotone_check,
)
from src.features.runner import run_replicas
from src.model.busemann import busemann_stability, check_duality_events, coalesces_inside, far_target, sample_busemann, semi_infinite_geodesic
from src.model.lattice import DIAG, E1, ORIGIN, LatticePoint, LatticeRect
from src.model.lpp import generate_bulk
from src.model.stationary import (
    BULK_TAG,
    HORIZONTAL_TAG,
    VERTICAL_TAG,
    BoundarySide,
    BoundarySpec,
    boundary_exit_scan,
    characteristic_point,
    exit_time,
    sample_stationary,
    scaled_ceil,
    scaled_floor,
    stationary_forward,
)
from src.utils.errors import ContractError, DegenerateParameterError, HypothesisError, InsufficientDataError
from src.utils.rng import exp_from_uniform, make_stream
from src.utils.stats import ScalingFit, ScalingTransform, fit_scaling_points, mean_and_stderr, variance_and_stderr

log = logging.getLogger(__name__)

_MODULE = "experiments"

SLOPE_BAND = (0.7, 1.3)
STABILITY_TOLERANCE = 0.05


def _target(rho: float, N: int) -> LatticePoint:
    v = characteristic_point(rho, N).point
    if v.x1 < 1 or v.x2 < 1:
        raise HypothesisError(_MODULE, "v_N >= (1,1)", f"N = {N} gives v_N = {v.as_tuple()}")
    return v


_BUSEMANN_KINDS = (
    ExperimentKind.COAL_SLOW,
    ExperimentKind.COAL_FAST,
    ExperimentKind.COAL_CORNER,
    ExperimentKind.FLUCTUATION,
    ExperimentKind.DUALITY_CHECK,
)


def _check_far_target(config: ExperimentConfig, v: LatticePoint, multiplier: float) -> None:
    target = far_target(config.rho, config.N, multiplier)
    if not (v + DIAG).lt(target):
        raise HypothesisError(_MODULE, "far target beyond v_N + (1,1)", f"multiplier {multiplier:g} gives {target.as_tuple()}")


def check_hypotheses(config: ExperimentConfig) -> None:
    kind = config.experiment
    if kind is ExperimentKind.RW_BOUND:
        if config.alpha is None or config.beta is None or not config.alpha > config.beta > 0:
            raise HypothesisError(_MODULE, "alpha > beta > 0", f"alpha = {config.alpha}, beta = {config.beta}")
        if any(n < 1 or int(n) != n for n in config.grid):
            raise HypothesisError(_MODULE, "n >= 1 integer", f"grid = {list(config.grid)}")
        return
    if not 0.0 < config.rho < 1.0:
        raise HypothesisError(_MODULE, "rho in (0,1)", f"rho = {config.rho}")
    if kind is ExperimentKind.RADON_NIKODYM:
        if config.lam is None or not config.lam > 0:
            raise HypothesisError(_MODULE, "lambda > 0", f"lambda = {config.lam}")
        if not 0.0 < config.eta < 1.0:
            raise HypothesisError(_MODULE, "eta in (0,1)", f"eta = {config.eta}")
        return
    if config.N < 1:
        raise HypothesisError(_MODULE, "N >= 1", f"N = {config.N}")
    if config.far_multiplier < 1:
        raise HypothesisError(_MODULE, "far_multiplier >= 1", f"far_multiplier = {config.far_multiplier}")
    v = _target(config.rho, config.N)
    if kind in _BUSEMANN_KINDS:
        _check_far_target(config, v, config.far_multiplier)
    if kind in (ExperimentKind.COAL_SLOW, ExperimentKind.COAL_CORNER):
        for delta in config.grid:
            # the corner estimate allows s = 0: both geodesics start at the origin
            if kind is ExperimentKind.COAL_SLOW and scaled_floor(delta, config.N) < 1:
                raise DegenerateParameterError(_MODULE, "delta >= N^(-2/3)", f"floor(delta N^(2/3)) = 0 at delta = {delta}")
            if scaled_floor(delta, config.N) > min(v.x1, v.x2):
                raise HypothesisError(_MODULE, "floor(delta N^(2/3)) <= min(v_N)", f"delta = {delta}")
    if kind in (ExperimentKind.COAL_FAST, ExperimentKind.COAL_CORNER):
        r_grid = config.grid if kind is ExperimentKind.COAL_FAST else config.secondary_grid
        bound = min((1 - config.rho) ** 2, config.rho**2) * config.N ** (1.0 / 3.0)
        for r in r_grid:
            if not 0 <= r <= bound:
                raise HypothesisError(_MODULE, "r <= min((1-rho)^2, rho^2) N^(1/3)", f"r = {r}, bound = {bound:.6g}")
    if kind in (ExperimentKind.EXIT_TAIL, ExperimentKind.EXIT_SMALL, ExperimentKind.FLUCTUATION, ExperimentKind.DUALITY_CHECK):
        if any(value < 0 for value in config.grid):
            raise HypothesisError(_MODULE, "grid >= 0", f"grid = {list(config.grid)}")
    if kind is ExperimentKind.EXIT_SHIFTED:
        for b in config.grid:
            if b < 0 or scaled_floor(b, config.N) > v.x1:
                raise HypothesisError(_MODULE, "floor(b N^(2/3)) <= v_N.e1", f"b = {b}")
    if kind is ExperimentKind.DUALITY_CHECK:
        for s in config.grid:
            if scaled_floor(s, config.N) > min(v.x1, v.x2):
                raise HypothesisError(_MODULE, "floor(s N^(2/3)) <= min(v_N)", f"s = {s}")
    if kind is ExperimentKind.TILTED_EXIT:
        for r in config.grid:
            lam = config.rho + r * config.N ** (-1.0 / 3.0)
            if not r > 0 or not lam < 1:
                raise HypothesisError(_MODULE, "rho < rho + r N^(-1/3) < 1", f"r = {r}")
            if v.x1 - _tilt_shift(config.rho, r, config.N) < 1:
                raise HypothesisError(_MODULE, "w_N.e1 >= 1", f"r = {r}")
    if kind is ExperimentKind.BUSEMANN_STABILITY:
        if any(m < 1 for m in config.grid):
            raise HypothesisError(_MODULE, "far multipliers >= 1", f"grid = {list(config.grid)}")
        for m in config.grid:
            _check_far_target(config, v, m)
    if kind is ExperimentKind.VARIANCE_IDENTITY:
        if any(not 0 < t <= 1 for t in config.grid):
            raise HypothesisError(_MODULE, "endpoint fractions in (0,1]", f"grid = {list(config.grid)}")


def _tilt_shift(rho: float, r: float, N: int) -> int:
    return scaled_floor((1 - rho) * r / 10.0, N)


def _fit(result: ExperimentResult, name: str, records: list[EstimateRecord], transform: ScalingTransform) -> ScalingFit | None:
    try:
        fit = fit_scaling(records, transform)
    except InsufficientDataError as exc:
        result.reports.setdefault("skipped_fits", {})[name] = exc.message
        return None
    result.fits[name] = fit
    return fit


def fit_scaling(records: list[EstimateRecord], transform: ScalingTransform) -> ScalingFit:
    return fit_scaling_points(((r.param_value, r.p_hat) for r in records), transform)


@dataclass(frozen=True)
class CorollaryParameters:
    N: int
    delta: float


def corollary_parameters(R: int, k: int) -> CorollaryParameters:
    """N = R k and delta = R^(-2/3): the rescaled form of the slow/fast coalescence estimates."""
    if R < 1 or k < 1:
        raise ContractError(_MODULE, f"R and k must be >= 1, got ({R}, {k})")
    return CorollaryParameters(int(R * k), float(R) ** (-2.0 / 3.0))


# per-replica kernels: module level so worker processes can unpickle them


def coalescence_indicators(index, *, master_seed, namespace, rho, N, far_multiplier, max_cells, pairs, inside):
    stream = make_stream(master_seed, index, namespace)
    v = characteristic_point(rho, N).point
    window = LatticeRect(ORIGIN, v + DIAG)
    busemann = sample_busemann(rho, N, window, stream, far_multiplier, max_cells)
    box = LatticeRect(ORIGIN, v)
    out = np.empty(len(pairs), dtype=bool)
    for k, ((x1, x2), (y1, y2)) in enumerate(pairs):
        merged = coalesces_inside(busemann, LatticePoint(x1, x2), LatticePoint(y1, y2), box)
        out[k] = merged if inside[k] else not merged
    return out


def exit_tail_indicators(index, *, master_seed, namespace, rho, N, max_cells, thresholds):
    stream = make_stream(master_seed, index, namespace)
    v = characteristic_point(rho, N).point
    table = sample_stationary(rho, ORIGIN, v.x1, v.x2, stream, max_cells)
    z = abs(exit_time(table, v).value)
    return np.array([z >= t for t in thresholds], dtype=bool)


def exit_shifted_indicators(index, *, master_seed, namespace, rho, N, max_cells, shifts):
    stream = make_stream(master_seed, index, namespace)
    v = characteristic_point(rho, N).point
    table = sample_stationary(rho, ORIGIN, v.x1 + max(shifts), v.x2, stream, max_cells)
    plus = [exit_time(table, v + E1 * k).value <= -1 for k in shifts]
    minus = [exit_time(table, v - E1 * k).value >= 1 for k in shifts]
    return np.array(plus + minus, dtype=bool)


def exit_small_indicators(index, *, master_seed, namespace, rho, N, max_cells, floors, ceils):
    stream = make_stream(master_seed, index, namespace)
    v = characteristic_point(rho, N).point
    corner = v + DIAG
    table = sample_stationary(rho, ORIGIN, corner.x1, corner.x2, stream, max_cells)
    smallest = int(np.min(np.abs(boundary_exit_scan(table, corner).labels)))
    exists = [smallest <= t for t in floors]
    forall = [smallest >= t for t in ceils]
    return np.array(exists + forall, dtype=bool)


def fluctuation_indicators(index, *, master_seed, namespace, rho, N, far_multiplier, max_cells, widths):
    stream = make_stream(master_seed, index, namespace)
    v = characteristic_point(rho, N).point
    window = LatticeRect(ORIGIN, v + DIAG)
    busemann = sample_busemann(rho, N, window, stream, far_multiplier, max_cells)
    points = semi_infinite_geodesic(busemann, ORIGIN).as_array()
    below = np.all(points <= np.array([v.x1, v.x2]), axis=1)
    out = np.empty(len(widths), dtype=bool)
    for k, width in enumerate(widths):
        lo = np.array([max(0, v.x1 - width), max(0, v.x2 - width)])
        out[k] = bool(np.any(below & np.all(points >= lo, axis=1)))
    return out


def duality_indicators(index, *, master_seed, namespace, rho, N, far_multiplier, max_cells, separations):
    stream = make_stream(master_seed, index, namespace)
    v = characteristic_point(rho, N).point
    window = LatticeRect(ORIGIN, v + DIAG)
    busemann = sample_busemann(rho, N, window, stream, far_multiplier, max_cells)
    events = [check_duality_events(busemann, rho, N, s) for s in separations]
    return np.array([p for p, _ in events] + [d for _, d in events], dtype=bool)


def variance_samples(index, *, master_seed, namespace, rho, max_cells, endpoints):
    stream = make_stream(master_seed, index, namespace)
    ex = max(w[0] for w in endpoints)
    ey = max(w[1] for w in endpoints)
    table = sample_stationary(rho, ORIGIN, ex, ey, stream, max_cells)
    passage, boundary = [], []
    for w1, w2 in endpoints:
        w = LatticePoint(w1, w2)
        z = exit_time(table, w).value
        passage.append(table.value(w))
        boundary.append(float(table.weights[1 : z + 1, 0].sum()) if z > 0 else 0.0)
    return np.array(passage + boundary, dtype=np.float64)


def tilted_exit_indicators(index, *, master_seed, namespace, rho, N, max_cells, r_grid):
    stream = make_stream(master_seed, index, namespace)
    v = characteristic_point(rho, N).point
    bulk = generate_bulk(LatticeRect(DIAG, v), stream.child(BULK_TAG), max_cells)
    u_horizontal = stream.child(HORIZONTAL_TAG).uniform(v.x1)
    u_vertical = stream.child(VERTICAL_TAG).uniform(v.x2)
    scale = float(N) ** (2.0 / 3.0)
    out = np.empty(len(r_grid), dtype=bool)
    for k, r in enumerate(r_grid):
        lam = rho + r * float(N) ** (-1.0 / 3.0)
        w = v - E1 * _tilt_shift(rho, r, N)
        boundary = BoundarySpec(lam, ORIGIN, BoundarySide.SOUTH_WEST, exp_from_uniform(u_horizontal, 1 - lam), exp_from_uniform(u_vertical, lam))
        table = stationary_forward(boundary, bulk.restrict(LatticeRect(DIAG, w)))
        z = exit_time(table, w).value
        out[k] = (1 - rho) * r * scale / 10.0 <= z <= 20.0 * r * scale / rho**2
    return out


def stability_fractions(index, *, master_seed, namespace, rho, N, max_cells, multipliers):
    stream = make_stream(master_seed, index, namespace)
    v = characteristic_point(rho, N).point
    window = LatticeRect(ORIGIN, v + DIAG)
    bulk = generate_bulk(LatticeRect(ORIGIN, far_target(rho, N, 2 * max(multipliers))), stream, max_cells)
    return np.array([busemann_stability(bulk, rho, window, N, m) for m in multipliers], dtype=np.float64)


# estimators


def _config(kind: ExperimentKind, rho, N, grid, replicas, seed, **extra) -> ExperimentConfig:
    return ExperimentConfig(kind, float(rho), int(N), tuple(float(x) for x in grid), int(replicas), int(seed), **extra)


def _run(config: ExperimentConfig, fn, **params) -> np.ndarray:
    log.info("%s: rho=%s N=%s replicas=%s workers=%s", config.experiment.label, config.rho, config.N, config.replicas, config.workers)
    return run_replicas(
        fn,
        config.replicas,
        workers=config.workers,
        master_seed=config.master_seed,
        namespace=config.experiment.code,
        **params,
    )


def _coalescence(config: ExperimentConfig, result: ExperimentResult, values, pairs_for, inside: bool, param_name: str) -> list[EstimateRecord]:
    pairs, flags = [], []
    for value in values:
        s = scaled_floor(value, config.N)
        pairs.append(pairs_for(s))
        flags.append(inside)
    indicators = _run(
        config,
        coalescence_indicators,
        rho=config.rho,
        N=config.N,
        far_multiplier=config.far_multiplier,
        max_cells=config.max_cells,
        pairs=pairs,
        inside=flags,
    )
    records = build_records(config, param_name, values, indicators)
    label = "outside" if not inside else "inside"
    result.checks.append(rowwise_monotone_check(f"{param_name}: coalescence-{label} indicator monotone", values, indicators, increasing=not inside))
    return records


def _symmetric_pair(s: int):
    return (s, 0), (0, s)


def _corner_pair(s: int):
    return (0, 0), (s, 0)


def _finish(result: ExperimentResult, started: float) -> ExperimentResult:
    result.wall_time_s = time.perf_counter() - started
    result.records = [replace(r, wall_time_s=result.wall_time_s) for r in result.records]
    log.info("%s finished in %.3fs", result.config.experiment.label, result.wall_time_s)
    return result


def _slope_band_check(name: str, fit: ScalingFit | None) -> None | Check:
    if fit is None:
        return None
    lo, hi = SLOPE_BAND
    return Check(name, lo <= fit.slope <= hi, f"slope in [{lo}, {hi}]", "shape", f"slope = {fit.slope:.6g}")


def run_coal_slow_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    check_hypotheses(config)
    result = ExperimentResult(config)
    result.records = _coalescence(config, result, config.grid, _symmetric_pair, False, "delta")
    result.checks.append(monotone_check("p_hat non-decreasing in delta", result.records, increasing=True))
    fit = _fit(result, "delta_loglog", result.records, ScalingTransform.LOG_LOG)
    band = _slope_band_check("delta log-log slope", fit)
    if band is not None:
        result.checks.append(band)
    return _finish(result, started)


def run_coal_fast_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    check_hypotheses(config)
    result = ExperimentResult(config)
    result.records = _coalescence(config, result, config.grid, _symmetric_pair, True, "r")
    result.checks.append(monotone_check("p_hat non-increasing in r", result.records, increasing=False))
    fit = _fit(result, "r_logvsr3", result.records, ScalingTransform.LOG_VS_R3)
    if fit is not None:
        result.checks.append(Check("-log p_hat vs r^3 slope positive", fit.slope > 0, "slope > 0", "shape", f"slope = {fit.slope:.6g}"))
        result.checks.append(Check("-log p_hat vs r^3 linearity", fit.r_squared >= 0.8, "r^2 >= 0.8", "shape", f"r^2 = {fit.r_squared:.6g}"))
    return _finish(result, started)


def run_coal_corner_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    check_hypotheses(config)
    result = ExperimentResult(config)
    records = _coalescence(config, result, config.grid, _corner_pair, False, "delta")
    result.checks.append(monotone_check("p_hat non-decreasing in delta", records, increasing=True))
    if config.secondary_grid:
        r_records = _coalescence(config, result, config.secondary_grid, _corner_pair, True, "r")
        result.checks.append(monotone_check("p_hat non-increasing in r", r_records, increasing=False))
        records += r_records
    result.records = records
    return _finish(result, started)


def run_exit_tail_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    check_hypotheses(config)
    result = ExperimentResult(config)
    thresholds = [scaled_ceil(r, config.N) for r in config.grid]
    indicators = _run(config, exit_tail_indicators, rho=config.rho, N=config.N, max_cells=config.max_cells, thresholds=thresholds)
    result.records = build_records(config, "r", config.grid, indicators)
    result.checks.append(rowwise_monotone_check("exit tail indicator non-increasing in r", config.grid, indicators, increasing=False))
    result.checks.append(monotone_check("tail p_hat non-increasing in r", result.records, increasing=False))
    fit = _fit(result, "r_logvsr3", result.records, ScalingTransform.LOG_VS_R3)
    if fit is not None:
        result.checks.append(Check("-log p_hat increasing in r^3", fit.slope > 0, "slope > 0", "shape", f"slope = {fit.slope:.6g}"))
    return _finish(result, started)


def run_exit_shifted_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    check_hypotheses(config)
    result = ExperimentResult(config)
    shifts = [scaled_floor(b, config.N) for b in config.grid]
    indicators = _run(config, exit_shifted_indicators, rho=config.rho, N=config.N, max_cells=config.max_cells, shifts=shifts)
    k = len(shifts)
    plus = build_records(config, "b_plus", config.grid, indicators[:, :k])
    minus = build_records(config, "b_minus", config.grid, indicators[:, k:])
    result.records = plus + minus
    result.checks.append(monotone_check("wrong-sign p_hat non-increasing in b (+)", plus, increasing=False))
    result.checks.append(monotone_check("wrong-sign p_hat non-increasing in b (-)", minus, increasing=False))
    for column, shift in enumerate(shifts):
        if shift == 0:
            total = indicators[:, column].astype(int) + indicators[:, k + column].astype(int)
            result.checks.append(Check("b = 0 wrong-sign events complementary", bool(np.all(total == 1)), "exact per realization"))
    return _finish(result, started)


def run_exit_small_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    check_hypotheses(config)
    result = ExperimentResult(config)
    floors = [scaled_floor(d, config.N) for d in config.grid]
    ceils = [scaled_ceil(d, config.N) for d in config.grid]
    degenerate = [d for d, f in zip(config.grid, floors) if f == 0]
    if degenerate:
        result.reports["degenerate_parameters"] = {"outcome": "floor(delta N^(2/3)) = 0", "delta": degenerate}
    indicators = _run(config, exit_small_indicators, rho=config.rho, N=config.N, max_cells=config.max_cells, floors=floors, ceils=ceils)
    k = len(floors)
    exists = build_records(config, "delta", config.grid, indicators[:, :k])
    forall = build_records(config, "r_forall", config.grid, indicators[:, k:])
    result.records = exists + forall
    result.checks.append(rowwise_monotone_check("small-exit indicator non-decreasing in delta", config.grid, indicators[:, :k], increasing=True))
    for column, (f, c) in enumerate(zip(floors, ceils)):
        if c == f + 1:
            total = indicators[:, column].astype(int) + indicators[:, k + column].astype(int)
            result.checks.append(
                Check(f"exists/forall complementary at delta = {config.grid[column]:g}", bool(np.all(total == 1)), "exact per realization")
            )
    usable = [r for r, f in zip(exists, floors) if f > 0]
    fit = _fit(result, "delta_loglog", usable, ScalingTransform.LOG_LOG)
    band = _slope_band_check("delta log-log slope", fit)
    if band is not None:
        result.checks.append(band)
    return _finish(result, started)


def run_fluctuation_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    check_hypotheses(config)
    result = ExperimentResult(config)
    widths = [scaled_floor(d, config.N) for d in config.grid]
    indicators = _run(
        config,
        fluctuation_indicators,
        rho=config.rho,
        N=config.N,
        far_multiplier=config.far_multiplier,
        max_cells=config.max_cells,
        widths=widths,
    )
    result.records = build_records(config, "delta", config.grid, indicators)
    result.checks.append(rowwise_monotone_check("fluctuation indicator non-decreasing in delta", config.grid, indicators, increasing=True))
    result.checks.append(monotone_check("fluctuation p_hat non-decreasing in delta", result.records, increasing=True))
    by_delta = {r.param_value: r.p_hat for r in result.records}
    if 0.1 in by_delta and 0.4 in by_delta and by_delta[0.4] > 0:
        ratio = by_delta[0.1] / by_delta[0.4]
        result.checks.append(Check("p(0.1)/p(0.4) < 0.6", ratio < 0.6, "ratio < 0.6", "shape", f"ratio = {ratio:.6g}"))
    return _finish(result, started)


def run_duality_check_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    check_hypotheses(config)
    result = ExperimentResult(config)
    separations = [scaled_floor(s, config.N) for s in config.grid]
    indicators = _run(
        config,
        duality_indicators,
        rho=config.rho,
        N=config.N,
        far_multiplier=config.far_multiplier,
        max_cells=config.max_cells,
        separations=separations,
    )
    k = len(separations)
    primal, dual = indicators[:, :k], indicators[:, k:]
    result.records = build_records(config, "s", config.grid, primal)
    mismatches = int(np.sum(primal != dual))
    result.checks.append(Check("primal and dual events agree", mismatches == 0, "exact per realization", "invariant", f"{mismatches} mismatches"))
    return _finish(result, started)


def check_variance_identity_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    check_hypotheses(config)
    result = ExperimentResult(config)
    rho = config.rho
    v = _target(rho, config.N)
    endpoints = [(max(1, math.floor(t * v.x1)), max(1, math.floor(t * v.x2))) for t in config.grid]
    samples = _run(config, variance_samples, rho=rho, max_cells=config.max_cells, endpoints=endpoints)
    k = len(endpoints)
    rows = []
    for column, (w1, w2) in enumerate(endpoints):
        lhs, lhs_se = variance_and_stderr(samples[:, column])
        mean_boundary, mean_se = mean_and_stderr(samples[:, k + column])
        rhs = -w1 / (1 - rho) ** 2 + w2 / rho**2 + 2.0 / (1 - rho) * mean_boundary
        rhs_se = 2.0 / (1 - rho) * mean_se
        rows.append({"w": [w1, w2], "lhs": lhs, "lhs_se": lhs_se, "rhs": rhs, "rhs_se": rhs_se})
        if rhs != 0:
            result.checks.append(
                Check(
                    f"variance identity at w = ({w1}, {w2})",
                    abs(lhs / rhs - 1) < 0.1,
                    "|lhs/rhs - 1| < 0.1",
                    "shape",
                    f"lhs = {lhs:.6g} +- {lhs_se:.3g}, rhs = {rhs:.6g} +- {rhs_se:.3g}",
                )
            )
    result.reports["variance_identity"] = rows
    return _finish(result, started)


def run_tilted_exit_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    check_hypotheses(config)
    result = ExperimentResult(config)
    indicators = _run(config, tilted_exit_indicators, rho=config.rho, N=config.N, max_cells=config.max_cells, r_grid=list(config.grid))
    result.records = build_records(config, "r", config.grid, indicators)
    result.checks.append(monotone_check("tilted exit window p_hat non-decreasing in r", result.records, increasing=True))
    return _finish(result, started)


def run_busemann_stability_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    check_hypotheses(config)
    result = ExperimentResult(config)
    multipliers = list(config.grid)
    fractions = _run(config, stability_fractions, rho=config.rho, N=config.N, max_cells=config.max_cells, multipliers=multipliers)
    rows = []
    for column, m in enumerate(multipliers):
        mean, se = mean_and_stderr(fractions[:, column])
        rows.append({"far_multiplier": m, "changed_fraction": mean, "stderr": se})
        result.checks.append(
            Check(f"step decisions stable at M = {m:g}N", mean < STABILITY_TOLERANCE, f"< {STABILITY_TOLERANCE}", "shape", f"fraction = {mean:.6g}")
        )
    result.reports["busemann_stability"] = rows
    return _finish(result, started)


# keyword entry points


def run_coal_slow(rho, N, delta_grid, replicas, seed, **options) -> ExperimentResult:
    return run_coal_slow_config(_config(ExperimentKind.COAL_SLOW, rho, N, delta_grid, replicas, seed, **options))


def run_coal_fast(rho, N, r_grid, replicas, seed, **options) -> ExperimentResult:
    return run_coal_fast_config(_config(ExperimentKind.COAL_FAST, rho, N, r_grid, replicas, seed, **options))


def run_coal_corner(rho, N, delta_grid, r_grid, replicas, seed, **options) -> ExperimentResult:
    config = _config(ExperimentKind.COAL_CORNER, rho, N, delta_grid, replicas, seed, secondary_grid=tuple(float(r) for r in r_grid), **options)
    return run_coal_corner_config(config)


def run_exit_tail(rho, N, r_grid, replicas, seed, **options) -> ExperimentResult:
    return run_exit_tail_config(_config(ExperimentKind.EXIT_TAIL, rho, N, r_grid, replicas, seed, **options))


def run_exit_shifted(rho, N, b_grid, replicas, seed, **options) -> ExperimentResult:
    return run_exit_shifted_config(_config(ExperimentKind.EXIT_SHIFTED, rho, N, b_grid, replicas, seed, **options))


def run_exit_small(rho, N, delta_grid, replicas, seed, **options) -> ExperimentResult:
    return run_exit_small_config(_config(ExperimentKind.EXIT_SMALL, rho, N, delta_grid, replicas, seed, **options))


def run_fluctuation(rho, N, delta_grid, replicas, seed, **options) -> ExperimentResult:
    return run_fluctuation_config(_config(ExperimentKind.FLUCTUATION, rho, N, delta_grid, replicas, seed, **options))


def run_duality_check(rho, N, s_grid, replicas, seed, **options) -> ExperimentResult:
    return run_duality_check_config(_config(ExperimentKind.DUALITY_CHECK, rho, N, s_grid, replicas, seed, **options))


def check_variance_identity(rho, N, replicas, seed, endpoint_fractions=(1.0,), **options) -> ExperimentResult:
    return check_variance_identity_config(_config(ExperimentKind.VARIANCE_IDENTITY, rho, N, endpoint_fractions, replicas, seed, **options))


def run_tilted_exit(rho, N, r_grid, replicas, seed, **options) -> ExperimentResult:
    return run_tilted_exit_config(_config(ExperimentKind.TILTED_EXIT, rho, N, r_grid, replicas, seed, **options))


def run_busemann_stability(rho, N, multipliers, replicas, seed, **options) -> ExperimentResult:
    return run_busemann_stability_config(_config(ExperimentKind.BUSEMANN_STABILITY, rho, N, multipliers, replicas, seed, **options))


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    from src.features import appendix

    handlers = {
        ExperimentKind.COAL_SLOW: run_coal_slow_config,
        ExperimentKind.COAL_FAST: run_coal_fast_config,
        ExperimentKind.COAL_CORNER: run_coal_corner_config,
        ExperimentKind.EXIT_TAIL: run_exit_tail_config,
        ExperimentKind.EXIT_SHIFTED: run_exit_shifted_config,
        ExperimentKind.EXIT_SMALL: run_exit_small_config,
        ExperimentKind.FLUCTUATION: run_fluctuation_config,
        ExperimentKind.DUALITY_CHECK: run_duality_check_config,
        ExperimentKind.VARIANCE_IDENTITY: check_variance_identity_config,
        ExperimentKind.TILTED_EXIT: run_tilted_exit_config,
        ExperimentKind.BUSEMANN_STABILITY: run_busemann_stability_config,
        ExperimentKind.RW_BOUND: appendix.check_rw_bound_config,
        ExperimentKind.RADON_NIKODYM: appendix.check_radon_nikodym_config,
    }
    return handlers[config.experiment](config)
