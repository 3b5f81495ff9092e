import math

import numpy as np
import pytest

from src.features.experiments import (
    check_hypotheses,
    check_variance_identity,
    corollary_parameters,
    exit_tail_indicators,
    fit_scaling,
    run_busemann_stability,
    run_coal_corner,
    run_coal_fast,
    run_coal_slow,
    run_duality_check,
    run_exit_shifted,
    run_exit_small,
    run_exit_tail,
    run_experiment,
    run_fluctuation,
    run_tilted_exit,
)
from src.features.records import ExperimentConfig, ExperimentKind
from src.features.runner import run_replicas
from src.utils.errors import CapacityError, ContractError, DegenerateParameterError, HypothesisError
from src.utils.stats import ScalingTransform

RHO = 0.5
N = 50  # v_N = (12, 12), N^(2/3) ~ 13.57


def _square(index, *, offset):
    return np.array([index * index + offset], dtype=np.int64)


def test_run_replicas_keeps_replica_order():
    serial = run_replicas(_square, 70, offset=1)
    parallel = run_replicas(_square, 70, workers=2, block_size=8, offset=1)
    assert np.array_equal(serial[:, 0], np.arange(70) ** 2 + 1)
    assert np.array_equal(serial, parallel)
    with pytest.raises(ContractError):
        run_replicas(_square, 0, offset=1)


@pytest.mark.parametrize("workers", [1, 2])
def test_run_replicas_surfaces_worker_capacity_error(workers):
    with pytest.raises(CapacityError, match="max_cells="):
        run_replicas(
            exit_tail_indicators, 64, workers=workers,
            master_seed=3, namespace=4, rho=RHO, N=N, max_cells=10, thresholds=[1],
        )


def test_coal_slow_records_and_invariants():
    result = run_coal_slow(RHO, N, [0.1, 0.2, 0.4], 40, 7)
    assert [r.param_value for r in result.records] == [0.1, 0.2, 0.4]
    assert all(r.replicas == 40 and r.experiment == "CoalSlow" for r in result.records)
    assert all(r.ci_lo <= r.p_hat <= r.ci_hi for r in result.records)
    assert result.failed() == []
    assert result.wall_time_s > 0


def test_results_do_not_depend_on_worker_count():
    a = run_exit_tail(RHO, N, [0.0, 0.3, 0.6], 70, 123)
    b = run_exit_tail(RHO, N, [0.0, 0.3, 0.6], 70, 123, workers=2)
    assert [r.hits for r in a.records] == [r.hits for r in b.records]


def test_same_seed_reproduces_results():
    a = run_coal_fast(RHO, N, [0.2, 0.5, 0.9], 60, 1)
    c = run_coal_fast(RHO, N, [0.2, 0.5, 0.9], 60, 1)
    assert [r.hits for r in a.records] == [r.hits for r in c.records]


def test_coal_slow_degenerate_delta():
    with pytest.raises(DegenerateParameterError, match="delta"):
        run_coal_slow(RHO, N, [0.05, 0.2], 10, 0)


def test_coal_fast_r_beyond_hypothesis():
    with pytest.raises(HypothesisError, match="N\\^\\(1/3\\)"):
        run_coal_fast(RHO, N, [0.5, 2.0], 10, 0)


def test_coal_corner_allows_zero_separation():
    result = run_coal_corner(RHO, N, [0.05, 0.2, 0.4], [0.3, 0.6], 30, 4)
    deltas = result.records_for("delta")
    assert deltas[0].hits == 0  # both geodesics start at the origin
    assert len(result.records_for("r")) == 2
    assert result.failed() == []


def test_exit_tail_at_zero_is_certain():
    result = run_exit_tail(RHO, N, [0.0, 0.5], 30, 9)
    assert result.records[0].p_hat == 1.0
    assert result.failed() == []


def test_exit_shifted_sign_events_are_complementary_at_zero():
    result = run_exit_shifted(RHO, N, [0.0, 0.2, 0.5], 40, 3)
    plus, minus = result.records_for("b_plus"), result.records_for("b_minus")
    assert plus[0].hits + minus[0].hits == 40
    assert any(c.name.startswith("b = 0") and c.passed for c in result.checks)
    assert result.failed() == []


def test_exit_small_reports_degenerate_deltas():
    result = run_exit_small(RHO, N, [0.05, 0.3, 0.6], 40, 5)
    assert result.reports["degenerate_parameters"]["delta"] == [0.05]
    assert result.records_for("delta")[0].hits == 0
    assert len(result.records_for("r_forall")) == 3
    assert result.failed() == []


def test_fluctuation_invariant():
    result = run_fluctuation(RHO, N, [0.1, 0.4, 1.0], 40, 2)
    assert result.failed() == []
    hits = [r.hits for r in result.records]
    assert hits == sorted(hits)


def test_duality_events_agree():
    result = run_duality_check(RHO, N, [0.0, 0.1, 0.3, 0.8], 30, 8)
    assert result.failed() == []
    assert result.records[0].hits == 0


def test_variance_identity_report():
    result = check_variance_identity(RHO, N, 200, 1, endpoint_fractions=(0.5, 1.0))
    rows = result.reports["variance_identity"]
    assert [row["w"] for row in rows] == [[6, 6], [12, 12]]
    assert all(row["lhs"] > 0 for row in rows)
    assert result.failed() == []


def test_tilted_exit_runs():
    result = run_tilted_exit(RHO, N, [0.5, 1.0], 30, 6)
    assert all(0.0 <= r.p_hat <= 1.0 for r in result.records)
    with pytest.raises(HypothesisError):
        run_tilted_exit(RHO, N, [0.0], 10, 0)


def test_busemann_stability_report():
    result = run_busemann_stability(RHO, N, [1.5, 2.0], 4, 0)
    rows = result.reports["busemann_stability"]
    assert [row["far_multiplier"] for row in rows] == [1.5, 2.0]
    assert all(0.0 <= row["changed_fraction"] <= 1.0 for row in rows)


def test_capacity_is_reported():
    with pytest.raises(CapacityError):
        run_coal_slow(RHO, N, [0.2], 2, 0, max_cells=100)


def test_fit_scaling_uses_record_estimates():
    result = run_exit_tail(RHO, N, [0.1, 0.2, 0.3, 0.4], 60, 10)
    usable = [r for r in result.records if 0 < r.p_hat < 1]
    if len(usable) >= 3:
        fit = fit_scaling(result.records, ScalingTransform.LOG_VS_R3)
        assert fit.used == len(usable)
        assert "r_logvsr3" in result.fits
    else:
        assert "r_logvsr3" in result.reports["skipped_fits"]


def test_corollary_parameters():
    params = corollary_parameters(8, 10)
    assert params.N == 80
    assert math.isclose(params.delta, 0.25)
    with pytest.raises(ContractError):
        corollary_parameters(0, 10)


@pytest.mark.parametrize(
    "kind, overrides, message",
    [
        (ExperimentKind.COAL_SLOW, {"rho": 1.5}, "rho"),
        (ExperimentKind.COAL_SLOW, {"N": 2}, "v_N"),
        (ExperimentKind.EXIT_TAIL, {"grid": (-0.1,)}, "grid"),
        (ExperimentKind.EXIT_SHIFTED, {"grid": (5.0,)}, "b N"),
        (ExperimentKind.BUSEMANN_STABILITY, {"grid": (0.5,)}, "multipliers"),
        (ExperimentKind.BUSEMANN_STABILITY, {"grid": (1.0,)}, "far target"),
        (ExperimentKind.COAL_SLOW, {"far_multiplier": 1.0}, "far target"),
        (ExperimentKind.VARIANCE_IDENTITY, {"grid": (1.5,)}, "fractions"),
        (ExperimentKind.RW_BOUND, {"alpha": 1.0, "beta": 2.0}, "alpha > beta"),
        (ExperimentKind.RADON_NIKODYM, {"lam": -1.0}, "lambda"),
    ],
)
def test_hypothesis_violations_name_the_hypothesis(kind, overrides, message):
    base = {"rho": RHO, "N": N, "grid": (0.2,), "replicas": 1, "master_seed": 0}
    base.update(overrides)
    config = ExperimentConfig(kind, **base)
    with pytest.raises(HypothesisError, match=message) as info:
        check_hypotheses(config)
    assert str(info.value).startswith("[experiments]")


def test_run_experiment_dispatches():
    config = ExperimentConfig(ExperimentKind.EXIT_TAIL, RHO, N, (0.0,), 5, 1)
    assert run_experiment(config).records[0].p_hat == 1.0
    rw = ExperimentConfig(ExperimentKind.RW_BOUND, float("nan"), 0, (1.0, 2.0), 100, 1, alpha=2.0, beta=1.0)
    assert len(run_experiment(rw).records) == 2
