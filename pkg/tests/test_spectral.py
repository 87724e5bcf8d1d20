"""Quadratic-form matrices, the Jacobi eigensolver, and inertia statistics."""

import itertools

import numpy as np
import pytest

from quadnet.network import DenseQuadraticLayer, QuadraticNeuron, neuron_forward
from quadnet.spectral import (
    InertiaSignature,
    JacobiConvergenceError,
    MinimaSurveyRecord,
    classify_inertia,
    classify_neuron,
    eigen_spectrum,
    frequency_variance,
    good_minima_entropy,
    hoffman_wielandt_bound,
    jacobi_eigh,
    layer_spectrum,
    quadratic_form_matrix,
    signature_witness_pair,
    spectrum_entropy,
    type_count,
    weighted_generalization_score,
)

from _oracles import eig2_closed_form, eig3_charpoly_roots, shannon_bits


def random_neuron(rng, n):
    return QuadraticNeuron(rng.normal(size=n), rng.normal(size=n), rng.normal(size=n),
                           rng.normal(), rng.normal(), rng.normal())


class TestQuadraticFormMatrix:
    def test_xor_neuron_matrix(self):
        neuron = QuadraticNeuron([1, 1], [-1, -1], [0, 0], -0.5, 1.5, 0.0)
        j = quadratic_form_matrix(neuron)
        assert np.array_equal(j, [[-1.0, -1.0], [-1.0, -1.0]])

    def test_pure_square_weights_give_diagonal(self):
        neuron = QuadraticNeuron([0, 0, 0], [0, 0, 0], [3.0, -2.0, 0.5], 0, 0, 0)
        assert np.array_equal(quadratic_form_matrix(neuron), np.diag([3.0, -2.0, 0.5]))

    def test_rank_one_product(self):
        neuron = QuadraticNeuron([1, 0], [1, 0], [0, 0], 0, 0, 0)
        assert np.array_equal(quadratic_form_matrix(neuron), np.diag([1.0, 0.0]))

    def test_quadratic_form_identity(self):
        """x J x^T equals the bias-free quadratic part for 1000 random cases."""
        rng = np.random.default_rng(100)
        for _ in range(1000):
            n = int(rng.integers(1, 8))
            neuron = random_neuron(rng, n)
            j = quadratic_form_matrix(neuron)
            assert np.array_equal(j, j.T)
            x = rng.normal(size=n)
            lhs = x @ j @ x
            rhs = (neuron.w_r @ x) * (neuron.w_g @ x) + neuron.w_b @ (x * x)
            assert abs(lhs - rhs) < 1e-9

    def test_matrix_matches_forward_minus_offsets(self):
        """The quadratic form is the neuron output with offsets removed."""
        rng = np.random.default_rng(101)
        for _ in range(100):
            n = int(rng.integers(1, 6))
            neuron = random_neuron(rng, n)
            bare = QuadraticNeuron(neuron.w_r, neuron.w_g, neuron.w_b, 0.0, 0.0, 0.0)
            j = quadratic_form_matrix(neuron)
            x = rng.normal(size=n)
            assert x @ j @ x == pytest.approx(neuron_forward(bare, x), abs=1e-9)


class TestJacobiSolver:
    def test_diagonal_matrix(self):
        assert np.allclose(eigen_spectrum(np.diag([3.0, -1.0])), [3.0, -1.0], atol=1e-12)

    def test_xor_matrix(self):
        values = eigen_spectrum(np.array([[-1.0, -1.0], [-1.0, -1.0]]))
        assert np.allclose(values, [0.0, -2.0], atol=1e-12)

    def test_exchange_matrix(self):
        values = eigen_spectrum(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(values, [1.0, -1.0], atol=1e-12)

    def test_all_small_integer_2x2(self):
        """Exhaustive 2x2 check against the quadratic-formula oracle."""
        span = (-2, -1, 0, 1, 2)
        for a, b, c in itertools.product(span, repeat=3):
            m = np.array([[a, b], [b, c]], dtype=float)
            got = eigen_spectrum(m)
            want = eig2_closed_form(a, b, c)
            assert np.abs(got - want).max() < 1e-9, (a, b, c)

    def test_all_small_integer_3x3(self):
        """Exhaustive 3x3 check against the characteristic-cubic oracle."""
        span = (-2, -1, 0, 1, 2)
        for a, b, c, d, e, f in itertools.product(span, repeat=6):
            m = np.array([[a, b, c], [b, d, e], [c, e, f]], dtype=float)
            got = eigen_spectrum(m)
            want = eig3_charpoly_roots(m)
            assert np.abs(got - want).max() < 1e-9, (a, b, c, d, e, f)

    def test_reconstruction_residual(self):
        rng = np.random.default_rng(102)
        for n in (2, 5, 16, 64):
            a = rng.normal(size=(n, n))
            a = a + a.T
            values, vectors = jacobi_eigh(a)
            residual = np.linalg.norm(vectors @ np.diag(values) @ vectors.T - a)
            assert residual < 1e-8 * max(1.0, np.linalg.norm(a))
            assert np.all(np.diff(values) <= 0)

    def test_sweep_limit_raises(self):
        m = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(JacobiConvergenceError):
            jacobi_eigh(m, max_sweeps=0)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            jacobi_eigh(np.array([[0.0, 1.0], [0.5, 0.0]]))


class TestInertiaClassification:
    def test_positive_pair(self):
        sig = classify_inertia([1.0, 1.0])
        assert (sig.n_pos, sig.n_neg, sig.n_zero) == (2, 0, 0)

    def test_saddle(self):
        sig = classify_inertia([1.0, -1.0])
        assert (sig.n_pos, sig.n_neg, sig.n_zero) == (1, 1, 0)

    def test_zero_counts_as_positive_in_simplified_mode(self):
        sig = classify_inertia([0.0, -2.0])
        assert (sig.n_pos, sig.n_neg, sig.n_zero) == (0, 1, 1)
        assert sig.positive_count == 1

    def test_all_zero_spectrum(self):
        sig = classify_inertia([0.0, 0.0, 0.0])
        assert (sig.n_pos, sig.n_neg, sig.n_zero) == (0, 0, 3)

    def test_relative_threshold(self):
        sig = classify_inertia([1.0, 1e-7, -1e-5], eps_rel=1e-6)
        assert (sig.n_pos, sig.n_neg, sig.n_zero) == (1, 1, 1)

    def test_signature_arithmetic(self):
        sig = InertiaSignature(2, 1, 1)
        assert sig.n == 4 and sig.positive_count == 3


class TestTypeCount:
    def test_paper_counts(self):
        assert type_count(4, "full") == 15
        assert type_count(9, "simplified") == 10
        assert type_count(16, "simplified") == 17

    def test_two_inputs(self):
        assert type_count(2, "full") == 6
        assert type_count(2, "simplified") == 3

    def test_counts_match_enumeration(self):
        for n in range(1, 10):
            full = sum(1 for a in range(n + 1) for b in range(n + 1 - a) for c in (n - a - b,))
            assert type_count(n, "full") == full
            assert type_count(n, "simplified") == n + 1


def _neuron_with_signature(kind):
    if kind == "pos2":
        return QuadraticNeuron([0, 0], [0, 0], [1.0, 1.0], 0, 0, 0)     # (2,0,0)
    if kind == "saddle":
        return QuadraticNeuron([1, 0], [0, 1], [0, 0], 0, 0, 0)        # (1,1,0)
    return QuadraticNeuron([0, 0], [0, 0], [-1.0, -1.0], 0, 0, 0)      # (0,2,0)


class TestLayerSpectrum:
    def test_compact_key_231(self):
        neurons = ([_neuron_with_signature("pos2")] * 2 +
                   [_neuron_with_signature("saddle")] * 3 +
                   [_neuron_with_signature("neg2")])
        layer = DenseQuadraticLayer.from_neurons(neurons)
        spec = layer_spectrum(layer, "simplified")
        assert spec.key() == (2, 3, 1)

    def test_identical_neurons_single_bin(self):
        layer = DenseQuadraticLayer.from_neurons([_neuron_with_signature("saddle")] * 5)
        spec = layer_spectrum(layer, "simplified")
        assert spec.counts == {1: 5}
        assert spec.entropy_bits() == 0.0

    def test_counts_sum_to_width_randomized(self):
        rng = np.random.default_rng(103)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            width = int(rng.integers(1, 9))
            layer = DenseQuadraticLayer(n, width)
            for p in layer.params():
                p[...] = rng.normal(size=p.shape)
            for mode in ("simplified", "full"):
                spec = layer_spectrum(layer, mode)
                assert spec.width == width
                assert sum(spec.counts.values()) == width

    def test_full_mode_keys_are_signatures(self):
        layer = DenseQuadraticLayer.from_neurons(
            [_neuron_with_signature("pos2"), _neuron_with_signature("saddle")])
        spec = layer_spectrum(layer, "full")
        assert spec.counts == {(2, 0, 0): 1, (1, 1, 0): 1}


class TestSpectrumEntropy:
    def test_single_type_is_zero(self):
        assert spectrum_entropy([1.0]) == 0.0
        assert spectrum_entropy([7]) == 0.0

    def test_uniform_four_types(self):
        assert spectrum_entropy([0.25] * 4) == pytest.approx(2.0, abs=1e-12)

    def test_dyadic_case(self):
        assert spectrum_entropy([0.5, 0.25, 0.25]) == pytest.approx(1.5, abs=1e-12)

    def test_counts_normalized(self):
        assert spectrum_entropy([2, 1, 1]) == pytest.approx(1.5, abs=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            spectrum_entropy([0.5, -0.1, 0.6])

    def test_bounds_random(self):
        rng = np.random.default_rng(104)
        for _ in range(200):
            k = int(rng.integers(1, 12))
            counts = rng.integers(1, 50, size=k)
            h = spectrum_entropy(counts)
            assert -1e-12 <= h <= np.log2(k) + 1e-12
            assert h == pytest.approx(shannon_bits(counts / counts.sum()), abs=1e-12)


def _records(keyed_accuracies, base_seed=0):
    return [MinimaSurveyRecord(key, 1.0, acc, base_seed + i)
            for i, (key, acc) in enumerate(keyed_accuracies)]


class TestSurveyStatistics:
    def test_entropy_single_key(self):
        records = _records([(("a",), 0.9)] * 6)
        assert good_minima_entropy(records) == 0.0

    def test_entropy_dyadic(self):
        records = _records([(("a",), 0.9), (("a",), 0.9), (("b",), 0.9), (("c",), 0.9)])
        assert good_minima_entropy(records) == pytest.approx(1.5, abs=1e-12)

    def test_entropy_empty_rejected(self):
        with pytest.raises(ValueError):
            good_minima_entropy([])

    def test_variance_single_key(self):
        assert frequency_variance(_records([(("a",), 0.9)] * 4)) == 0.0

    def test_variance_three_to_one(self):
        records = _records([(("a",), 0.9)] * 3 + [(("b",), 0.9)])
        assert frequency_variance(records) == pytest.approx(0.0625, abs=1e-15)

    def test_score_single_record(self):
        assert weighted_generalization_score(_records([(("a",), 0.97)])) == pytest.approx(0.97)

    def test_score_two_groups(self):
        records = _records([(("a",), 0.9), (("a",), 0.9), (("b",), 1.0), (("b",), 1.0)])
        assert weighted_generalization_score(records) == pytest.approx(0.95, abs=1e-12)

    def test_score_equals_mean_test_accuracy(self):
        rng = np.random.default_rng(105)
        keys = [tuple(rng.integers(0, 3, size=3)) for _ in range(40)]
        accs = rng.uniform(0.9, 1.0, size=40)
        records = _records(list(zip(keys, accs)))
        assert weighted_generalization_score(records) == pytest.approx(
            float(np.mean(accs)), abs=1e-9)


class TestHoffmanWielandt:
    def test_equal_matrices(self):
        m = np.diag([2.0, -1.0])
        lhs, rhs, holds = hoffman_wielandt_bound(m, m)
        assert lhs == 0.0 and rhs == 0.0 and holds

    def test_diagonal_shift_is_tight(self):
        lhs, rhs, holds = hoffman_wielandt_bound(np.diag([1.0, 0.0]), np.diag([1.1, 0.0]))
        assert lhs == pytest.approx(0.01, abs=1e-12)
        assert rhs == pytest.approx(0.01, abs=1e-12)
        assert holds

    def test_thousand_random_pairs(self):
        rng = np.random.default_rng(106)
        for _ in range(1000):
            a = rng.normal(size=(5, 5))
            b = rng.normal(size=(5, 5))
            a, b = a + a.T, b + b.T
            lhs, rhs, holds = hoffman_wielandt_bound(a, b)
            assert holds, (lhs, rhs)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            hoffman_wielandt_bound(np.eye(2), np.eye(3))


class TestInvariances:
    def test_orthonormal_congruence_preserves_signature(self):
        rng = np.random.default_rng(107)
        for _ in range(200):
            n = int(rng.integers(2, 7))
            neuron = random_neuron(rng, n)
            j = quadratic_form_matrix(neuron)
            base = classify_inertia(eigen_spectrum(j))
            q, _ = np.linalg.qr(rng.normal(size=(n, n)))
            rotated = q.T @ j @ q
            rotated = (rotated + rotated.T) / 2.0  # restore exact symmetry
            assert classify_inertia(eigen_spectrum(rotated)) == base

    def test_small_perturbations_keep_signature(self):
        """Eigenvalues move continuously, so generic signatures are stable."""
        rng = np.random.default_rng(108)
        for _ in range(50):
            neuron = random_neuron(rng, 4)
            base_vals = eigen_spectrum(quadratic_form_matrix(neuron))
            if np.abs(base_vals).min() < 1e-3 * np.abs(base_vals).max():
                continue  # skip near-threshold spectra; stability is not claimed there
            base = classify_inertia(base_vals)
            for delta in (1e-8, 1e-7):
                bumped = QuadraticNeuron(
                    neuron.w_r + delta, neuron.w_g - delta, neuron.w_b + delta,
                    neuron.b_r, neuron.b_g, neuron.c)
                vals = eigen_spectrum(quadratic_form_matrix(bumped))
                assert np.abs(vals - base_vals).max() < 1e-5
                assert classify_inertia(vals) == base

    def test_witness_pair_same_signature_different_regions(self):
        first, second = signature_witness_pair()
        assert classify_neuron(first) == classify_neuron(second)
        probes = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
        signs_a = [neuron_forward(first, p) > 0 for p in probes]
        signs_b = [neuron_forward(second, p) > 0 for p in probes]
        assert signs_a != signs_b
