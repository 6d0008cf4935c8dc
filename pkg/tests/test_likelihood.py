"""Likelihood curves of the symmetric 2-state model and the EM-vs-true
consistency experiment."""

import numpy as np
import pytest

from spechmm import (
    ConsistencyCell,
    EmConfig,
    FormatError,
    LikelihoodCurve,
    SymmetricHmmSpec,
    ValidationError,
    count_unimodal_modes,
    em_consistency_experiment,
    likelihood_at,
    likelihood_curve,
    random_hmm,
    read_consistency_csv,
    write_consistency_csv,
    write_curve_csv,
)
from spechmm.seeding import STREAM_DATA, derive_seed

from oracles import joint_prob_paths


class TestSpec:
    def test_to_params_layout(self):
        p = SymmetricHmmSpec(theta=0.8).to_params()
        np.testing.assert_allclose(p.T, [[0.8, 0.2], [0.2, 0.8]], atol=1e-15)
        np.testing.assert_allclose(p.O, [[0.7, 0.3], [0.3, 0.7]], atol=1e-15)
        np.testing.assert_allclose(p.pi, [0.5, 0.5], atol=1e-15)

    def test_emission_override(self):
        p = SymmetricHmmSpec(theta=0.5, emission_correct=0.9).to_params()
        np.testing.assert_allclose(p.O, [[0.9, 0.1], [0.1, 0.9]], atol=1e-15)

    def test_theta_bounds(self):
        with pytest.raises(ValidationError):
            SymmetricHmmSpec(theta=1.5)
        with pytest.raises(ValidationError):
            SymmetricHmmSpec(theta=-0.1)

    def test_initial_must_be_distribution(self):
        with pytest.raises(ValidationError):
            SymmetricHmmSpec(theta=0.5, initial=(0.7, 0.7))


class TestLikelihoodAt:
    def test_single_symbol_is_half(self):
        # symmetric channel + uniform start: any one symbol has mass 0.5
        # regardless of theta
        for th in (0.0, 0.25, 0.6, 1.0):
            assert likelihood_at(SymmetricHmmSpec(th), [1]) == pytest.approx(0.5, abs=1e-15)
            assert likelihood_at(SymmetricHmmSpec(th), [2]) == pytest.approx(0.5, abs=1e-15)

    def test_frozen_theta_one(self):
        # frozen hidden state: 0.5*(0.7^2 + 0.3^2) = 0.29
        assert likelihood_at(SymmetricHmmSpec(1.0), [1, 1]) == pytest.approx(0.29, abs=1e-15)

    def test_theta_half_is_iid(self):
        assert likelihood_at(SymmetricHmmSpec(0.5), [1, 2]) == pytest.approx(0.25, abs=1e-12)
        assert likelihood_at(SymmetricHmmSpec(0.5), [2, 2, 1]) == pytest.approx(0.125, abs=1e-12)

    def test_matches_path_enumeration(self):
        rng = np.random.default_rng(60)
        for _ in range(40):
            spec = SymmetricHmmSpec(
                theta=float(rng.random()), emission_correct=float(rng.random())
            )
            t = int(rng.integers(1, 9))
            seq = rng.integers(1, 3, size=t)
            got = likelihood_at(spec, seq)
            p = spec.to_params()
            want = joint_prob_paths(p.pi, p.T, p.O, seq)
            assert got == pytest.approx(want, abs=1e-12)


class TestCurve:
    def test_grid_is_inclusive_linspace(self):
        c = likelihood_curve(SymmetricHmmSpec(0.5), [1, 2, 1], grid_size=11)
        np.testing.assert_allclose(c.thetas, np.linspace(0, 1, 11), atol=1e-15)
        assert c.sequence_length == 3

    def test_template_theta_ignored(self):
        a = likelihood_curve(SymmetricHmmSpec(0.1), [1, 1, 2], grid_size=21)
        b = likelihood_curve(SymmetricHmmSpec(0.9), [1, 1, 2], grid_size=21)
        np.testing.assert_array_equal(a.values, b.values)

    def test_length_one_is_flat(self):
        c = likelihood_curve(SymmetricHmmSpec(0.5), [2], grid_size=101)
        np.testing.assert_allclose(c.values, 0.5, atol=1e-15)

    def test_values_are_probabilities(self):
        rng = np.random.default_rng(61)
        seq = rng.integers(1, 3, size=12)
        c = likelihood_curve(SymmetricHmmSpec(0.5), seq, grid_size=101)
        assert np.all(c.values >= 0) and np.all(c.values <= 1)

    def test_endpoints_match_pointwise_eval(self):
        seq = [1, 2, 2, 1, 1]
        c = likelihood_curve(SymmetricHmmSpec(0.5), seq, grid_size=5)
        assert c.values[0] == likelihood_at(SymmetricHmmSpec(0.0), seq)
        assert c.values[-1] == likelihood_at(SymmetricHmmSpec(1.0), seq)

    def test_grid_size_floor(self):
        with pytest.raises(ValidationError):
            likelihood_curve(SymmetricHmmSpec(0.5), [1, 2], grid_size=1)

    def test_constant_sequence_peaks_at_persistence(self):
        # a run of identical symbols favors a frozen hidden chain
        c = likelihood_curve(SymmetricHmmSpec(0.5), [1] * 20, grid_size=1001)
        assert count_unimodal_modes(c) == 1
        assert c.thetas[np.argmax(c.values)] == 1.0

    def test_alternating_sequence_peaks_at_flipping(self):
        c = likelihood_curve(SymmetricHmmSpec(0.5), [1, 2] * 10, grid_size=1001)
        assert count_unimodal_modes(c) == 1
        assert c.thetas[np.argmax(c.values)] == 0.0


def curve_of(values):
    v = np.asarray(values, dtype=np.float64)
    return LikelihoodCurve(thetas=np.linspace(0, 1, v.size), values=v, sequence_length=1)


class TestModeCount:
    def test_constant(self):
        assert count_unimodal_modes(curve_of([0.3, 0.3, 0.3, 0.3])) == 1

    def test_single_interior_peak(self):
        assert count_unimodal_modes(curve_of([0.0, 1.0, 0.0])) == 1

    def test_two_peaks(self):
        assert count_unimodal_modes(curve_of([0.0, 1.0, 0.0, 1.0, 0.0])) == 2

    def test_plateau_counts_once(self):
        assert count_unimodal_modes(curve_of([0.0, 1.0, 1.0, 1.0, 0.0])) == 1

    def test_monotone_rise_end_maximum(self):
        assert count_unimodal_modes(curve_of([0.0, 0.5, 1.0])) == 1

    def test_monotone_fall_start_maximum(self):
        assert count_unimodal_modes(curve_of([1.0, 0.5, 0.0])) == 1

    def test_valley_has_two_endpoint_maxima(self):
        assert count_unimodal_modes(curve_of([1.0, 0.0, 1.0])) == 2

    def test_plateau_at_end(self):
        assert count_unimodal_modes(curve_of([0.0, 1.0, 1.0])) == 1

    def test_too_few_points(self):
        with pytest.raises(ValidationError):
            count_unimodal_modes(curve_of([0.0, 1.0]))


class TestCurveCsv:
    def test_export(self, tmp_path):
        c = likelihood_curve(SymmetricHmmSpec(0.5), [1, 2, 1, 1], grid_size=5)
        path = tmp_path / "curve.csv"
        write_curve_csv(c, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "theta,likelihood,t"
        assert len(lines) == 6
        theta, lik, t = lines[2].split(",")
        assert float(theta) == c.thetas[1]
        assert float(lik) == c.values[1]
        assert int(t) == 4


@pytest.fixture(scope="module")
def cells():
    params = random_hmm(2, 2, seed=5)
    config = EmConfig(m_hyper=2, max_iterations=150, rel_tolerance=1e-6,
                      restarts=2, seed=7)
    return em_consistency_experiment(
        params, sample_sizes=[50, 200], trials=2, em_config=config,
        sequence_length=10, base_seed=99,
    )


class TestConsistency:
    def test_grid_shape(self, cells):
        assert [(c.N, c.trial) for c in cells] == [
            (50, 0), (50, 1), (200, 0), (200, 1)
        ]

    def test_seed_column_is_dataset_seed(self, cells):
        assert cells[0].seed == derive_seed(99, STREAM_DATA, 0, 0)
        assert cells[3].seed == derive_seed(99, STREAM_DATA, 1, 1)
        assert len({c.seed for c in cells}) == 4

    def test_em_at_least_true(self, cells):
        # the fitted model maximizes training likelihood over the same family
        # the true parameters live in, so barring optimizer failure the gap
        # is non-negative
        for c in cells:
            assert c.em_loglik >= c.true_loglik - 1e-6

    def test_deterministic(self, cells):
        params = random_hmm(2, 2, seed=5)
        config = EmConfig(m_hyper=2, max_iterations=150, rel_tolerance=1e-6,
                          restarts=2, seed=7)
        again = em_consistency_experiment(
            params, sample_sizes=[50, 200], trials=2, em_config=config,
            sequence_length=10, base_seed=99,
        )
        assert again == cells

    def test_rejects_wrong_shape(self):
        config = EmConfig(m_hyper=2)
        with pytest.raises(ValidationError, match="2-state"):
            em_consistency_experiment(random_hmm(3, 2, seed=0), [10], 1, config)

    def test_rejects_bad_grid(self):
        params = random_hmm(2, 2, seed=5)
        config = EmConfig(m_hyper=2)
        with pytest.raises(ValidationError):
            em_consistency_experiment(params, [], 1, config)
        with pytest.raises(ValidationError):
            em_consistency_experiment(params, [10], 0, config)

    def test_csv_round_trip(self, cells, tmp_path):
        path = tmp_path / "consistency.csv"
        write_consistency_csv(cells, path)
        assert read_consistency_csv(path) == cells

    def test_csv_bad_header(self, tmp_path):
        path = tmp_path / "consistency.csv"
        path.write_text("N,trial,seed\n")
        with pytest.raises(FormatError, match="header"):
            read_consistency_csv(path)

    def test_csv_bad_row(self, tmp_path):
        path = tmp_path / "consistency.csv"
        path.write_text(
            "N,trial,seed,em_loglik,true_loglik\n50,0,1,-10.0\n"
        )
        with pytest.raises(FormatError, match="line 2"):
            read_consistency_csv(path)
