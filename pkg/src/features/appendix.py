from __future__ import annotations

import logging
import math
import time

import numpy as np

from src.features.records import Check, ExperimentConfig, ExperimentKind, ExperimentResult, records_from_hits
from src.features.runner import run_replicas
from src.utils.errors import ContractError, HypothesisError
from src.utils.rng import make_stream

log = logging.getLogger(__name__)

_MODULE = "experiments"

# draws per chunk; chunks are keyed by index so totals do not depend on worker count
CHUNK_DRAWS = 1 << 20
MC_RELATIVE_TOLERANCE = 0.01


def _chunks(replicas: int, width: int) -> list[int]:
    rows = max(1, min(replicas, CHUNK_DRAWS // max(1, width)))
    sizes = [rows] * (replicas // rows)
    if replicas % rows:
        sizes.append(replicas % rows)
    return sizes


def rw_chunk_hits(index, *, master_seed, namespace, sizes, alpha, beta, n_grid):
    stream = make_stream(master_seed, index, namespace)
    length = max(n_grid)
    steps = stream.child(0).exponential(alpha, size=(sizes[index], length)) - stream.child(1).exponential(beta, size=(sizes[index], length))
    running_max = np.maximum.accumulate(np.cumsum(steps, axis=1), axis=1)
    return np.array([int(np.sum(running_max[:, n - 1] < 0)) for n in n_grid], dtype=np.int64)


def rn_chunk_moments(index, *, master_seed, namespace, sizes, rho, lam, n):
    stream = make_stream(master_seed, index, namespace)
    omega = stream.exponential(rho, size=(sizes[index], n))
    log_f = n * math.log(lam / rho) - (lam - rho) * omega.sum(axis=1)
    f2 = np.exp(2.0 * log_f)
    return np.array([f2.sum(), np.square(f2).sum()], dtype=np.float64)


def rw_bound_terms(alpha: float, beta: float, n: int) -> tuple[float, float]:
    """Constant-free pieces of the persistence bound: (bracket, limit term)."""
    bracket = (1.0 - ((alpha - beta) / (alpha + beta)) ** 2) ** n / math.sqrt(n)
    return bracket, (alpha - beta) / alpha


def check_rw_bound_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    alpha, beta = config.alpha, config.beta
    if alpha is None or beta is None or not alpha > beta > 0:
        raise ContractError(_MODULE, f"need alpha > beta > 0, got alpha = {alpha}, beta = {beta}")
    n_grid = [int(n) for n in config.grid]
    if any(n < 1 for n in n_grid):
        raise ContractError(_MODULE, f"walk lengths must be >= 1, got {n_grid}")
    result = ExperimentResult(config)
    sizes = _chunks(config.replicas, max(n_grid))
    log.info("RwBound: alpha=%s beta=%s replicas=%s chunks=%s", alpha, beta, config.replicas, len(sizes))
    hits = run_replicas(
        rw_chunk_hits,
        len(sizes),
        workers=config.workers,
        block_size=1,
        master_seed=config.master_seed,
        namespace=config.experiment.code,
        sizes=sizes,
        alpha=alpha,
        beta=beta,
        n_grid=n_grid,
    ).sum(axis=0)
    result.records = records_from_hits(config, "n", n_grid, hits, config.replicas)
    rows = []
    for record, n in zip(result.records, n_grid):
        bracket, limit = rw_bound_terms(alpha, beta, n)
        rows.append(
            {
                "n": n,
                "p_hat": record.p_hat,
                "ci": [record.ci_lo, record.ci_hi],
                "second_term": limit,
                "bracket": bracket,
                "implied_C": (record.p_hat - limit) / bracket if bracket > 0 else float("nan"),
            }
        )
    result.reports["rw_bound"] = rows
    order = np.argsort(n_grid, kind="stable")
    ordered = hits[order]
    result.checks.append(
        Check("persistence hits non-increasing in n", bool(np.all(np.diff(ordered) <= 0)), "exact, nested events on shared walks")
    )
    limit = (alpha - beta) / alpha
    above = all(r.ci_hi >= limit for r in result.records)
    result.checks.append(Check("estimate stays above (alpha-beta)/alpha", above, "ci_hi >= limit", "shape"))
    result.wall_time_s = time.perf_counter() - started
    return result


def check_rw_bound(alpha, beta, n_grid, replicas, seed, **options) -> ExperimentResult:
    config = ExperimentConfig(
        ExperimentKind.RW_BOUND,
        float("nan"),
        0,
        tuple(float(n) for n in n_grid),
        int(replicas),
        int(seed),
        alpha=float(alpha),
        beta=float(beta),
        **options,
    )
    return check_rw_bound_config(config)


def rn_closed_form(rho: float, lam: float, n: int) -> float:
    if 2 * lam <= rho:
        return math.inf
    return (lam * lam / (rho * (2 * lam - rho))) ** n


def rn_bound(rho: float, lam: float, n: int, eta: float = 0.5) -> float:
    b = abs(lam - rho)
    return math.exp(n * b * b / (rho * rho) + 10.0 * n * b**3 / (3.0 * rho**3 * eta))


def rn_hypothesis(rho: float, lam: float, eta: float) -> bool:
    return abs(lam - rho) <= (1.0 - eta) * rho


def check_radon_nikodym_config(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    rho, lam, eta = config.rho, config.lam, config.eta
    if lam is None or not lam > 0:
        raise ContractError(_MODULE, f"lambda must be > 0, got {lam}")
    if not 0 < rho < 1 or not 0 < eta < 1:
        raise HypothesisError(_MODULE, "rho, eta in (0,1)", f"rho = {rho}, eta = {eta}")
    n = int(config.grid[0])
    if n < 1:
        raise ContractError(_MODULE, f"n must be >= 1, got {n}")
    result = ExperimentResult(config)
    report = {"rho": rho, "lambda": lam, "n": n, "eta": eta}
    if 2 * lam <= rho:
        report.update(divergent=True, closed_form=math.inf)
        log.warning("RadonNikodym: 2*lambda <= rho, second moment diverges")
        result.reports["radon_nikodym"] = report
        result.wall_time_s = time.perf_counter() - started
        return result
    closed = rn_closed_form(rho, lam, n)
    bound = rn_bound(rho, lam, n, eta)
    hypothesis = rn_hypothesis(rho, lam, eta)
    # the bound follows from a log-series expansion valid only while |2(lam-rho)/rho| <= 1 - eta
    series_valid = abs(2.0 * (lam - rho) / rho) <= 1.0 - eta
    sizes = _chunks(config.replicas, n)
    moments = run_replicas(
        rn_chunk_moments,
        len(sizes),
        workers=config.workers,
        block_size=1,
        master_seed=config.master_seed,
        namespace=config.experiment.code,
        sizes=sizes,
        rho=rho,
        lam=lam,
        n=n,
    ).sum(axis=0)
    count = config.replicas
    mc = moments[0] / count
    variance = max(moments[1] / count - mc * mc, 0.0)
    stderr = math.sqrt(variance / count)
    report.update(
        divergent=False,
        closed_form=closed,
        monte_carlo=mc,
        monte_carlo_stderr=stderr,
        bound=bound,
        hypothesis_holds=hypothesis,
        series_valid=series_valid,
    )
    result.reports["radon_nikodym"] = report
    if hypothesis and series_valid:
        result.checks.append(Check("closed form <= bound", closed <= bound * (1 + 1e-12), "exact", "invariant", f"{closed:.6g} vs {bound:.6g}"))
    tolerance = max(MC_RELATIVE_TOLERANCE * closed, 4.0 * stderr)
    result.checks.append(
        Check(
            "Monte Carlo second moment matches closed form",
            abs(mc - closed) <= tolerance,
            "1% or 4 standard errors",
            "shape",
            f"mc = {mc:.6g} +- {stderr:.3g}, closed = {closed:.6g}",
        )
    )
    result.wall_time_s = time.perf_counter() - started
    return result


def check_radon_nikodym(rho, lam, n, replicas, seed, eta=0.5, **options) -> ExperimentResult:
    config = ExperimentConfig(
        ExperimentKind.RADON_NIKODYM,
        float(rho),
        0,
        (float(n),),
        int(replicas),
        int(seed),
        lam=float(lam),
        eta=float(eta),
        **options,
    )
    return check_radon_nikodym_config(config)
