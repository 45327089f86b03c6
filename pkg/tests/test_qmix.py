import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmixlab.envs.base import Observation
from qmixlab.errors import DimensionError
from qmixlab.mixture import MixedStrategy
from qmixlab.qlearn.networks import TabularQ
from qmixlab.qmix import (ComponentSet, OracleEvidence, QMixingPolicy, belief_from_evidence, mix_q_prior,
                          mix_q_with_belief)

OBS = Observation(np.ones(1, dtype=np.uint8), 0)


def components(q_rows):
    qs = []
    for row in q_rows:
        q = TabularQ(len(row), 1)
        q.row(0)[:] = row
        qs.append(q)
    return ComponentSet([f"p{k}" for k in range(len(qs))], qs)


class TestPriorMixing:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=100, deadline=None)
    def test_single_state_expectation(self, seed):
        rng = np.random.default_rng(seed)
        K, A = rng.integers(2, 6), rng.integers(2, 11)
        Q = rng.normal(size=(K, A))
        sigma = MixedStrategy([f"p{k}" for k in range(K)], rng.dirichlet(np.ones(K)))
        expected = sum(sigma.weights[k] * Q[k] for k in range(K))
        np.testing.assert_allclose(mix_q_prior(OBS, components(Q), sigma), expected, atol=1e-12)

    def test_point_mass_selects_component(self):
        comps = components([[1.0, 2.0], [5.0, 0.0]])
        sigma = MixedStrategy.point(comps.ids, 1)
        np.testing.assert_array_equal(mix_q_prior(OBS, comps, sigma), [5.0, 0.0])

    def test_ids_are_matched_by_name(self):
        comps = components([[1.0, 0.0], [0.0, 1.0]])
        sigma = MixedStrategy(["p1", "p0"], [0.9, 0.1])
        np.testing.assert_allclose(mix_q_prior(OBS, comps, sigma), [0.1, 0.9])

    def test_unknown_id(self):
        with pytest.raises(KeyError):
            mix_q_prior(OBS, components([[0.0], [0.0]]), MixedStrategy(["zz"], [1.0]))

    def test_action_count_mismatch(self):
        with pytest.raises(DimensionError):
            ComponentSet(["a", "b"], [TabularQ(2), TabularQ(3)])


class TestBeliefs:
    def test_posterior_reweighting(self):
        sigma = MixedStrategy(["a", "b"], [0.5, 0.5])
        psi = belief_from_evidence(OBS, sigma, [0.8, 0.2])
        np.testing.assert_allclose(psi.weights, [0.8, 0.2])

    def test_zero_evidence_falls_back_to_prior(self):
        sigma = MixedStrategy(["a", "b"], [0.3, 0.7])
        psi = belief_from_evidence(OBS, sigma, [0.0, 0.0])
        np.testing.assert_allclose(psi.weights, [0.3, 0.7])

    def test_evidence_shape(self):
        with pytest.raises(DimensionError):
            belief_from_evidence(OBS, MixedStrategy(["a", "b"], [0.5, 0.5]), [1.0])

    def test_mix_with_belief(self):
        comps = components([[1.0, 0.0], [0.0, 1.0]])
        sigma = MixedStrategy(comps.ids, [0.5, 0.5])
        psi = belief_from_evidence(OBS, sigma, [1.0, 3.0])
        np.testing.assert_allclose(mix_q_with_belief(OBS, comps, psi), [0.25, 0.75])


class TestPolicy:
    def test_oracle_evidence_follows_label(self):
        comps = components([[1.0, 0.0], [0.0, 1.0]])
        pol = QMixingPolicy(comps, MixedStrategy.uniform(comps.ids), OracleEvidence(comps.ids))
        pol.begin_episode("p1")
        assert pol.act(OBS) == 1
        pol.begin_episode("p0")
        assert pol.act(OBS) == 0

    def test_prior_policy_ties_to_lowest(self):
        comps = components([[1.0, 0.0], [0.0, 1.0]])
        pol = QMixingPolicy(comps, MixedStrategy.uniform(comps.ids))
        assert pol.act(OBS) == 0
        np.testing.assert_array_equal(pol.probs(OBS), [1.0, 0.0])
