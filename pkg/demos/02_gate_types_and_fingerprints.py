"""Classifying quadratic units into gate types and fingerprinting a layer.

Each unit's pure quadratic part is a symmetric matrix; the signs of its
eigenvalues (inertia) are congruence-invariant, so they sort units into
(n+2)(n+1)/2 shape families, or n+1 when near-zero eigenvalues count as
positive.  Tallying the types across a layer fingerprints a trained network.
"""

import numpy as np

import quadnet as qn

rng = np.random.default_rng(0)

# --- the three 2-input families ---------------------------------------------
bowl = qn.QuadraticNeuron([0, 0], [0, 0], [1.0, 1.0], 0, 0, 0)      # x^2 + y^2
saddle = qn.QuadraticNeuron([1, 0], [0, 1], [0, 0], 0, 0, 0)        # x * y
dome = qn.QuadraticNeuron([0, 0], [0, 0], [-1.0, -1.0], 0, 0, 0)    # -(x^2 + y^2)
for name, neuron in [("bowl", bowl), ("saddle", saddle), ("dome", dome)]:
    sig = qn.classify_neuron(neuron)
    print(f"{name:7s} inertia ({sig.n_pos}, {sig.n_neg}, {sig.n_zero})  "
          f"simplified type {sig.positive_count}")

print("\ntype counts by input size:")
for n in (2, 4, 9, 16):
    print(f"  n={n:3d}: full {qn.type_count(n, 'full'):3d}   "
          f"simplified {qn.type_count(n, 'simplified'):3d}")

# --- fingerprint a randomly initialized hidden layer ------------------------
net = qn.build_mlp((2, 6, 6, 1))
qn.init_truncated_gaussian(net, 0.3, rng)
spectrum = qn.layer_spectrum(net.layers[0], "simplified")
print("\nfirst hidden layer fingerprint (counts per type, type 2 first):",
      spectrum.key())
print("layer entropy:", round(spectrum.entropy_bits(), 4), "bits")

# --- the fingerprint is robust to small parameter noise ---------------------
layer = net.layers[0]
j_before = [qn.quadratic_form_matrix(layer.neuron(i)) for i in range(6)]
for p in layer.params():
    p += rng.normal(0.0, 1e-7, size=p.shape)
j_after = [qn.quadratic_form_matrix(layer.neuron(i)) for i in range(6)]
moves = [qn.hoffman_wielandt_bound(a, b)[0] for a, b in zip(j_before, j_after)]
print("\nafter 1e-7 parameter noise, summed squared eigenvalue movement per unit:")
print("  max", max(moves), "-> fingerprint still", qn.layer_spectrum(layer).key())

# --- but the fingerprint is not injective ----------------------------------
first, second = qn.signature_witness_pair()
print("\nwitness pair: same inertia", qn.classify_neuron(first),
      "despite different decision regions on the unit-square corners:")
for point in [(0, 0), (1, 0), (0, 1), (1, 1)]:
    print(f"  {point}: {qn.neuron_forward(first, point):+.2f} vs "
          f"{qn.neuron_forward(second, point):+.2f}")
