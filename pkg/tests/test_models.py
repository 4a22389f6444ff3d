import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from erdy_meanfield import (
    SIR,
    SIS,
    CustomModel,
    GraphParams,
    ModelContractError,
    QuadraticSIS,
    Voter,
    WeightedGraph,
    local_environment,
    local_environments,
    model_from_spec,
    sample_graph,
)
from erdy_meanfield.models import estimate_drift_lipschitz

BUILTINS = [SIS(2.0, 1.0), SIR(3.0, 0.5), Voter(1.5), QuadraticSIS(2.0, 1.0)]
IDS = ["sis", "sir", "voter", "quadratic"]


def drift_reference(model, u):
    """Drift written out by hand for each built-in."""
    if isinstance(model, QuadraticSIS):
        s, i = u
        flow = model.beta * i**2 * s - model.gamma * i
        return np.array([-flow, flow])
    if isinstance(model, SIS):
        s, i = u
        flow = model.beta * i * s - model.gamma * i
        return np.array([-flow, flow])
    if isinstance(model, SIR):
        s, i, r = u
        inf = model.beta * i * s
        return np.array([-inf, inf - model.gamma * i, model.gamma * i])
    if isinstance(model, Voter):
        return np.zeros(2)
    raise TypeError(model)


def phi_strategy(S):
    return arrays(np.float64, S, elements=st.floats(0.0, 4.0))


def simplex_points(S, m, seed):
    return np.random.default_rng(seed).dirichlet(np.ones(S), m)


class TestRates:
    def test_sis_hand_rates(self):
        q = SIS(2.0, 1.0).rate_matrix([0.5, 0.5])
        np.testing.assert_array_equal(q, [[-1.0, 1.0], [1.0, -1.0]])

    def test_isolated_vertex_only_recovers(self):
        q = SIS(2.0, 1.0).rate_matrix([0.0, 0.0])
        assert q[1, 0] == 0.0
        assert q[0, 1] == 1.0

    @pytest.mark.parametrize("model", BUILTINS, ids=IDS)
    @settings(max_examples=60, deadline=None)
    @given(data=st.data())
    def test_column_sums_vanish(self, model, data):
        phi = data.draw(phi_strategy(model.state_count))
        q = model.rate_matrix(phi)
        sums = q.sum(axis=0)
        if model.state_count == 2:
            assert np.all(sums == 0.0)
        else:
            np.testing.assert_allclose(sums, 0.0, atol=8 * np.finfo(float).eps * max(1.0, np.abs(q).max()))

    @pytest.mark.parametrize("model", BUILTINS, ids=IDS)
    def test_offdiagonal_nonnegative(self, model):
        phi = np.random.default_rng(0).uniform(0, 4, (500, model.state_count))
        r = model.offdiagonal(phi)
        assert np.all(r >= 0)
        idx = np.arange(model.state_count)
        assert np.all(r[:, idx, idx] == 0)

    @pytest.mark.parametrize("model", BUILTINS, ids=IDS)
    def test_fast_exit_rates_match_generic(self, model):
        rng = np.random.default_rng(1)
        S = model.state_count
        phi = rng.uniform(0, 3, (400, S))
        states = rng.integers(0, S, 400)
        r = model.offdiagonal(phi)
        generic = r[np.arange(400), :, states]
        np.testing.assert_array_equal(model.exit_rates(phi, states), generic)

    @pytest.mark.parametrize("model", BUILTINS, ids=IDS)
    def test_purity(self, model):
        phi = simplex_points(model.state_count, 1, 3)[0] * 1.7
        a = model.rate_matrix(phi)
        b = model.rate_matrix(phi.copy())
        assert a.tobytes() == b.tobytes()
        assert model.drift(phi).tobytes() == model.drift(phi).tobytes()

    def test_contract_violation_names_channel(self):
        bad = CustomModel(("a", "b"), {("a", "b"): lambda phi: phi[:, 1] - 0.5, ("b", "a"): lambda phi: phi[:, 0]})
        with pytest.raises(ModelContractError) as info:
            bad.rate_matrix([0.9, 0.1])
        err = info.value
        assert (err.from_state, err.to_state) == (0, 1)
        np.testing.assert_array_equal(err.phi, [0.9, 0.1])

    def test_nan_rate_is_a_contract_violation(self):
        bad = CustomModel(("a", "b"), {("a", "b"): lambda phi: np.full(len(phi), np.nan)})
        with pytest.raises(ModelContractError):
            bad.rate_matrix([0.5, 0.5])

    def test_custom_cannot_set_diagonal(self):
        with pytest.raises(ValueError):
            CustomModel(("a", "b"), {("a", "a"): lambda phi: phi[:, 0]})

    def test_negative_parameters_rejected(self):
        with pytest.raises(ValueError):
            SIS(-1.0, 1.0)


class TestDrift:
    def test_sis_hand_values(self):
        np.testing.assert_allclose(SIS(2, 1).drift([0.9, 0.1]), [-0.08, 0.08], atol=1e-15)
        np.testing.assert_array_equal(SIS(2, 1).drift([0.5, 0.5]), [0.0, 0.0])

    @pytest.mark.parametrize("model", BUILTINS, ids=IDS)
    def test_matches_reference(self, model):
        for u in simplex_points(model.state_count, 50, 2):
            np.testing.assert_allclose(model.drift(u), drift_reference(model, u), atol=1e-14)

    @pytest.mark.parametrize("model", BUILTINS, ids=IDS)
    @settings(max_examples=50, deadline=None)
    @given(data=st.data())
    def test_drift_conserves_mass(self, model, data):
        u = data.draw(phi_strategy(model.state_count))
        assert abs(model.drift(u).sum()) <= 1e-13 * max(1.0, np.abs(u).max() ** 3)

    @pytest.mark.parametrize("model", BUILTINS, ids=IDS)
    def test_declared_lipschitz_bounds_estimate(self, model):
        est = estimate_drift_lipschitz(model, pairs=10_000, seed=0)
        declared = model.lipschitz.drift
        assert est <= declared + 1e-12
        if declared > 0:
            assert est >= 0.5 * declared

    def test_voter_drift_vanishes(self):
        for u in simplex_points(2, 20, 5):
            assert np.all(Voter(2.0).drift(u) == 0.0)


class TestSpec:
    @pytest.mark.parametrize("model", BUILTINS, ids=IDS)
    def test_roundtrip(self, model):
        rebuilt = model_from_spec(model.spec)
        phi = np.full(model.state_count, 0.4)
        np.testing.assert_array_equal(rebuilt.rate_matrix(phi), model.rate_matrix(phi))

    def test_unknown_type(self):
        with pytest.raises(ValueError):
            model_from_spec({"type": "zombie"})

    def test_global_lipschitz_flags(self):
        assert SIS().globally_lipschitz and SIR().globally_lipschitz and Voter().globally_lipschitz
        assert not QuadraticSIS().globally_lipschitz


class TestEnvironments:
    def test_triangle(self):
        g = sample_graph(GraphParams(3, 1.0, seed=0))
        xi = np.array([0, 0, 1])
        np.testing.assert_allclose(local_environment(g, xi, 0, 2), [0.5, 0.5])

    def test_isolated_vertex(self):
        g = WeightedGraph.from_edges(3, [(0, 1, 1.0)], mean_degree=1.0)
        np.testing.assert_array_equal(local_environment(g, np.zeros(3, int), 2, 2), [0.0, 0.0])

    def test_complete_graph_unit_mass(self):
        g = sample_graph(GraphParams(12, 1.0, seed=0))
        xi = np.random.default_rng(0).integers(0, 3, 12)
        phi = local_environments(g, xi, 3)
        np.testing.assert_allclose(phi.sum(axis=1), 1.0, rtol=1e-15)

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(2, 40), seed=st.integers(0, 2**32))
    def test_batch_matches_single_and_mass_identity(self, n, seed):
        g = sample_graph(GraphParams(n, 0.3, seed=seed))
        xi = np.random.default_rng(seed).integers(0, 2, n)
        phi = local_environments(g, xi, 2)
        for i in range(n):
            np.testing.assert_allclose(phi[i], local_environment(g, xi, i, 2), atol=1e-14)
        np.testing.assert_allclose(phi.sum(axis=1), g.degree_sums / g.mean_degree, atol=1e-12)
