import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from erdy_meanfield import (
    GridMismatchError,
    InvalidInputError,
    StudyConfig,
    derive_seed,
    fit_loglog,
    fit_loglog_slope,
    run_convergence_study,
    sup_error,
)
from erdy_meanfield import experiments
from erdy_meanfield.experiments import ROW_FIELDS
from erdy_meanfield.export import write_aggregates, write_study_rows

SIS_SPEC = {"type": "sis", "parameters": {"beta": 2.0, "gamma": 1.0}}


def tiny_config(**overrides):
    base = dict(
        model=SIS_SPEC, ladder=[60], edge_prob=0.3, horizon=2.0, u0=[0.8, 0.2],
        master_seed=5, replications=1, sample_points=21,
    )
    base.update(overrides)
    return StudyConfig(**base)


class TestSupError:
    def test_identical(self):
        a = np.random.default_rng(0).random((10, 3))
        assert sup_error(a, a.copy()) == 0.0

    def test_unit_vectors(self):
        a = np.tile([1.0, 0.0], (5, 1))
        b = np.tile([0.0, 1.0], (5, 1))
        assert sup_error(a, b) == 2.0

    def test_single_point(self):
        assert sup_error([[0.3, 0.7]], [[0.4, 0.6]]) == pytest.approx(0.2)

    def test_grid_mismatch(self):
        a = np.zeros((3, 2))
        with pytest.raises(GridMismatchError):
            sup_error(a, a, [0, 1, 2], [0, 1, 3])
        with pytest.raises(GridMismatchError):
            sup_error(a, np.zeros((4, 2)))

    @given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
    def test_nonnegative_and_symmetric(self, vals):
        a = np.array(vals).reshape(2, 2)
        b = a[::-1].copy()
        assert sup_error(a, b) == sup_error(b, a) >= 0


class TestLoglog:
    @given(st.lists(st.integers(2, 10**6), min_size=2, max_size=6, unique=True))
    def test_exact_power_law(self, ns):
        assert fit_loglog_slope([(n, n**-0.5) for n in ns]) == pytest.approx(-0.5, abs=1e-9)

    def test_hand_values(self):
        assert fit_loglog_slope([(1, 1), (10, 0.1)]) == pytest.approx(-1.0)
        assert fit_loglog_slope([(10, 3.0), (100, 3.0), (1000, 3.0)]) == 0.0
        fit = fit_loglog([(1, 2.0), (100, 0.2)])
        assert fit.intercept == pytest.approx(math.log(2.0))
        assert fit.r2 == pytest.approx(1.0)

    @pytest.mark.parametrize("points", [[(1, 1.0)], [(1, 1.0), (2, 0.0)], [(1, 1.0), (2, -1.0)]])
    def test_rejects_bad_input(self, points):
        with pytest.raises(ValueError):
            fit_loglog_slope(points)


class TestDeriveSeed:
    def test_pinned_values(self):
        assert derive_seed(0, 250, 0) == 17877461521465163926
        assert derive_seed(20240601, 8000, 9) == 12054416278537784394

    def test_repeatable(self):
        assert derive_seed(3, 4, 5) == derive_seed(3, 4, 5)

    def test_no_collisions_over_study_range(self):
        ladder = [250, 500, 1000, 2000, 4000, 8000]
        for master in (0, 20240601):
            seeds = [derive_seed(master, n, r) for n, r in itertools.product(ladder, range(100))]
            assert len(set(seeds)) == len(seeds)
            assert all(0 <= s < 2**64 for s in seeds)


class TestStudy:
    def test_config_invariants(self):
        with pytest.raises(InvalidInputError):
            tiny_config(ladder=[])
        with pytest.raises(InvalidInputError):
            tiny_config(horizon=0.0)
        with pytest.raises(InvalidInputError):
            tiny_config(replications=0)

    def test_single_row_fully_populated(self):
        result = run_convergence_study(tiny_config())
        assert len(result.rows) == 1
        row = result.rows[0]
        assert row["status"] == "ok"
        assert row["seed"] == derive_seed(5, 60, 0)
        assert row["r2_mode"] == "exact"
        for f in ROW_FIELDS:
            if isinstance(row[f], float):
                assert math.isfinite(row[f]), f
        assert row["gronwall_slack"] >= -1e-9

    def test_row_reproducible_alone(self):
        config = tiny_config(ladder=[40, 60], replications=2)
        result = run_convergence_study(config)
        again = experiments.run_row(config, 60, 1)
        target = next(r for r in result.rows if r["n"] == 60 and r["replication"] == 1)
        for f in ROW_FIELDS[:-1]:
            assert again[f] == target[f] or (again[f] != again[f] and target[f] != target[f])

    def test_failure_is_isolated(self, monkeypatch):
        real = experiments.simulate

        def flaky(graph, *args, **kwargs):
            if graph.n == 40:
                raise RuntimeError("boom, at n=40")
            return real(graph, *args, **kwargs)

        monkeypatch.setattr(experiments, "simulate", flaky)
        result = run_convergence_study(tiny_config(ladder=[40, 60]))
        by_n = {r["n"]: r for r in result.rows}
        assert by_n[40]["status"].startswith("error: RuntimeError")
        assert "," not in by_n[40]["status"]
        assert by_n[60]["status"] == "ok"
        assert math.isnan(result.metric("sup_err_x", 40))
        assert math.isfinite(result.metric("sup_err_x", 60))

    def test_on_row_callback(self):
        seen = []
        run_convergence_study(tiny_config(replications=3), on_row=seen.append)
        assert len(seen) == 3

    def test_sampled_r2_above_cap(self):
        result = run_convergence_study(tiny_config(r2_cap=50, r2_pairs=500))
        assert result.rows[0]["r2_mode"] == "sampled"

    def test_p_rule(self):
        config = tiny_config(p_rule={"alpha": 0.5, "scale": 2.0})
        assert config.edge_prob_for(100) == pytest.approx(0.2)
        assert config.edge_prob_for(1) == 1.0

    def test_worker_count_does_not_change_output(self, tmp_path):
        config = tiny_config(ladder=[40, 60], replications=2)
        outputs = []
        for workers in (1, 2):
            result = run_convergence_study(config, workers=workers)
            rows = tmp_path / f"rows{workers}.csv"
            agg = tmp_path / f"agg{workers}.csv"
            write_study_rows(rows, result.rows, wall_clock=False)
            write_aggregates(agg, [a for a in result.aggregates])
            outputs.append((rows.read_bytes(), agg.read_bytes()))
        assert outputs[0] == outputs[1]
