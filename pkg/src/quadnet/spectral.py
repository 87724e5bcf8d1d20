"""Spectral fingerprinting of quadratic units.

The pure quadratic part of a neuron is the quadratic form ``x J x^T`` of a
real symmetric matrix built from the neuron's weights.  The signs of J's
eigenvalues (its inertia) are invariant under congruence, so they classify
the unit into one of a small number of boundary-shape types: for n inputs
there are (n+2)(n+1)/2 full types or n+1 simplified types when near-zero
eigenvalues are absorbed into the positive count.

Tallying these types across a layer gives a compact signature of a trained
network; entropies and frequency statistics of those signatures summarize
whole families of trained minima.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .network import QuadraticNeuron

MODES = ("full", "simplified")


class JacobiConvergenceError(RuntimeError):
    """The cyclic Jacobi sweep limit was reached before convergence."""


@dataclass(frozen=True)
class InertiaSignature:
    """Counts of positive, negative, and (near-)zero eigenvalues."""

    n_pos: int
    n_neg: int
    n_zero: int

    @property
    def n(self) -> int:
        return self.n_pos + self.n_neg + self.n_zero

    @property
    def positive_count(self) -> int:
        """Simplified type index: zeros are counted as positive."""
        return self.n_pos + self.n_zero


def quadratic_form_matrix(neuron: QuadraticNeuron) -> np.ndarray:
    """Symmetric matrix J with x J x^T == (w_r.x)(w_g.x) + w_b.(x*x).

    Diagonal entries are w_r[i]*w_g[i] + w_b[i]; off-diagonal entries are
    (w_r[i]*w_g[j] + w_r[j]*w_g[i]) / 2.  The construction is exactly
    symmetric in floating point.
    """
    j = (np.outer(neuron.w_r, neuron.w_g) + np.outer(neuron.w_g, neuron.w_r)) / 2.0
    j[np.diag_indices_from(j)] += neuron.w_b
    return j


def _check_symmetric(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.array_equal(a, a.T):
        raise ValueError("matrix is not exactly symmetric")
    return a


def jacobi_eigh(a, rel_tol: float = 1e-12, max_sweeps: int = 100):
    """All eigenvalues (descending) and eigenvectors of a symmetric matrix.

    Cyclic Jacobi rotations run until the off-diagonal Frobenius norm drops
    below ``rel_tol`` times the Frobenius norm of the input, raising
    JacobiConvergenceError after ``max_sweeps`` full sweeps.  Returns
    ``(values, vectors)`` with eigenvector k in ``vectors[:, k]``.
    """
    a = _check_symmetric(a)
    n = a.shape[0]
    work = a.copy()
    vecs = np.eye(n)
    norm = np.linalg.norm(a)
    if norm == 0.0 or n == 1:
        return np.diag(work).copy(), vecs
    threshold = rel_tol * norm

    def off_norm(m):
        off = m.copy()
        off[np.diag_indices_from(off)] = 0.0
        return np.linalg.norm(off)

    sweeps = 0
    while off_norm(work) > threshold:
        if sweeps >= max_sweeps:
            raise JacobiConvergenceError(
                f"no convergence after {max_sweeps} sweeps (off-norm {off_norm(work):.3e})")
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if apq == 0.0:
                    continue
                tau = (work[q, q] - work[p, p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 0.5 / tau  # asymptotic root; tau*tau would overflow
                elif tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                cos = 1.0 / math.sqrt(1.0 + t * t)
                sin = t * cos
                rot = np.array([[cos, sin], [-sin, cos]])
                work[:, [p, q]] = work[:, [p, q]] @ rot
                work[[p, q], :] = rot.T @ work[[p, q], :]
                work[p, q] = work[q, p] = 0.0
                vecs[:, [p, q]] = vecs[:, [p, q]] @ rot
        sweeps += 1
    values = np.diag(work).copy()
    order = np.argsort(-values, kind="stable")
    return values[order], vecs[:, order]


def eigen_spectrum(a, rel_tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, sorted descending."""
    values, _ = jacobi_eigh(a, rel_tol=rel_tol, max_sweeps=max_sweeps)
    return values


def classify_inertia(eigenvalues, eps_rel: float = 1e-6) -> InertiaSignature:
    """Count eigenvalue signs, treating |v| < eps_rel * max|v| as zero."""
    if eps_rel <= 0:
        raise ValueError("eps_rel must be positive")
    lam = np.asarray(eigenvalues, dtype=np.float64)
    scale = np.abs(lam).max() if lam.size else 0.0
    if scale == 0.0:
        return InertiaSignature(0, 0, int(lam.size))
    threshold = eps_rel * scale
    n_pos = int(np.count_nonzero(lam >= threshold))
    n_neg = int(np.count_nonzero(lam <= -threshold))
    return InertiaSignature(n_pos, n_neg, int(lam.size) - n_pos - n_neg)


def type_count(n: int, mode: str = "full") -> int:
    """Number of distinct gate types for n-input quadratic units."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if mode == "full":
        return (n + 2) * (n + 1) // 2
    if mode == "simplified":
        return n + 1
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


@dataclass
class LayerSpectrum:
    """Tally of gate types across one layer's neurons or kernels."""

    input_dim: int
    mode: str
    counts: dict

    @property
    def width(self) -> int:
        return sum(self.counts.values())

    def key(self) -> tuple:
        """Canonical signature tuple.

        Simplified mode: neuron counts per positive-index type, ordered
        from all-positive (n) down to all-negative (0), so a 2-input layer
        reads (count type-2, count type-1, count type-0).
        """
        if self.mode == "simplified":
            return tuple(self.counts.get(k, 0) for k in range(self.input_dim, -1, -1))
        return tuple(sorted(self.counts.items()))

    def probabilities(self) -> np.ndarray:
        counts = np.array(sorted(self.counts.values(), reverse=True), dtype=np.float64)
        return counts / counts.sum()

    def entropy_bits(self) -> float:
        return spectrum_entropy(self.probabilities())


def classify_neuron(neuron: QuadraticNeuron, eps_rel: float = 1e-6) -> InertiaSignature:
    return classify_inertia(eigen_spectrum(quadratic_form_matrix(neuron)), eps_rel)


def layer_spectrum(layer, mode: str = "simplified", eps_rel: float = 1e-6) -> LayerSpectrum:
    """Classify every unit of a dense or convolutional quadratic layer."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    neurons = layer.neurons()
    if not neurons:
        raise ValueError("layer has no neurons to classify")
    counts = Counter()
    for neuron in neurons:
        sig = classify_neuron(neuron, eps_rel)
        counts[sig.positive_count if mode == "simplified" else
               (sig.n_pos, sig.n_neg, sig.n_zero)] += 1
    return LayerSpectrum(neurons[0].n, mode, dict(counts))


# ---------------------------------------------------------------------------
# entropy and survey statistics
# ---------------------------------------------------------------------------

def spectrum_entropy(weights) -> float:
    """Shannon entropy in bits of a type distribution.

    Accepts probabilities (must sum to 1 within 1e-9) or raw counts, which
    are normalized internally.  Zero-weight entries contribute nothing.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.size == 0:
        raise ValueError("empty distribution")
    if np.any(w < 0):
        raise ValueError("negative probabilities are not allowed")
    total = w.sum()
    if total <= 0:
        raise ValueError("distribution has zero total weight")
    if abs(total - 1.0) > 1e-9:
        w = w / total
    w = w[w > 0]
    return float(-(w * np.log2(w)).sum() + 0.0)  # +0.0 normalizes -0.0


@dataclass(frozen=True)
class MinimaSurveyRecord:
    """One trained network kept by a survey: signature plus accuracies."""

    key: tuple
    train_accuracy: float
    test_accuracy: float
    seed: int


def _key_frequencies(records):
    if not records:
        raise ValueError("no survey records")
    counts = Counter(r.key for r in records)
    total = len(records)
    return {k: c / total for k, c in counts.items()}


def good_minima_entropy(records) -> float:
    """Entropy in bits of the distribution of signature keys across records."""
    freqs = _key_frequencies(records)
    return spectrum_entropy(np.array(list(freqs.values())))


def frequency_variance(records) -> float:
    """Population variance of the observed key frequencies."""
    freqs = _key_frequencies(records)
    return float(np.var(np.array(list(freqs.values()))))


def weighted_generalization_score(records) -> float:
    """Frequency-weighted mean test accuracy, grouped by signature key.

    Equals the plain mean test accuracy over all records.
    """
    freqs = _key_frequencies(records)
    by_key = {}
    for r in records:
        by_key.setdefault(r.key, []).append(r.test_accuracy)
    return float(sum(p * np.mean(by_key[k]) for k, p in freqs.items()))


def hoffman_wielandt_bound(a, b, slack: float = 1e-9):
    """Compare eigenvalue displacement against the Frobenius perturbation.

    Returns ``(lhs, rhs, holds)`` with lhs the sum of squared differences of
    descending-sorted eigenvalues and rhs the squared Frobenius norm of a-b;
    the sorted pairing always satisfies lhs <= rhs for symmetric matrices.
    """
    a = _check_symmetric(a)
    b = _check_symmetric(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    la = eigen_spectrum(a)
    lb = eigen_spectrum(b)
    lhs = float(((la - lb) ** 2).sum())
    rhs = float(((a - b) ** 2).sum())
    return lhs, rhs, lhs <= rhs + slack


def signature_witness_pair():
    """Two 2-input neurons with equal inertia but different decision regions.

    Both classify the four corners of the unit square, one with the XOR sign
    pattern and one with a vertical-band pattern, yet share the signature
    (0 positive, 1 negative, 1 zero): the signature alone cannot identify a
    unit's decision boundary.
    """
    xor_like = QuadraticNeuron(
        w_r=np.array([1.0, 1.0]), w_g=np.array([-1.0, -1.0]),
        w_b=np.zeros(2), b_r=-0.5, b_g=1.5, c=0.0)
    band_like = QuadraticNeuron(
        w_r=np.array([1.0, 0.0]), w_g=np.array([-1.0, 0.0]),
        w_b=np.zeros(2), b_r=-0.5, b_g=1.5, c=0.0)
    return xor_like, band_like
