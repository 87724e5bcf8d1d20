"""A single quadratic neuron solves XOR.

One unit computing (w_r.x + b_r)(w_g.x + b_g) + w_b.x^2 + c carves a conic
decision boundary, so the four XOR corners separate without any hidden
layer.  This script evaluates a hand-built solution, then trains one from
random starts and rasterizes its boundary.
"""

import quadnet as qn
from quadnet.experiments import pgm_bytes, raster_neuron

# --- the analytic solution -------------------------------------------------
neuron = qn.QuadraticNeuron(w_r=[1.0, 1.0], w_g=[-1.0, -1.0], w_b=[0.0, 0.0],
                            b_r=-0.5, b_g=1.5, c=0.0)
xor = qn.gen_xor()
print("analytic neuron signs (positive = class 1):")
for point, label in zip(xor.x, xor.labels):
    value = qn.neuron_forward(neuron, point)
    print(f"  f{tuple(point)} = {value:+.2f}   label {label}")

# Its quadratic form has one negative and one (near-)zero eigenvalue: a
# degenerate "valley" type, the gate family XOR belongs to.
j = qn.quadratic_form_matrix(neuron)
print("\nquadratic-form matrix:\n", j)
print("eigenvalues:", qn.eigen_spectrum(j))
print("inertia:", qn.classify_neuron(neuron))

# --- learn the same behavior from scratch ----------------------------------
print("\ntraining a single quadratic neuron + sigmoid on the 4 XOR points:")
for seed in range(5):
    net = qn.Network((2,), [qn.DenseQuadraticLayer(2, 1, "sigmoid")])
    config = qn.TrainConfig(seed=seed, iterations=500, lr_schedule=((500, 0.25),),
                            sigma=1.0, loss="mse", reduction="sum")
    qn.train(net, xor, config)
    accuracy, _ = qn.evaluate(net, xor)
    print(f"  seed {seed}: accuracy {accuracy:.2f}  "
          f"type {qn.classify_neuron(net.layers[0].neuron(0))}")

with open("xor_boundary.pgm", "wb") as fh:
    fh.write(pgm_bytes(raster_neuron(neuron, 256)))
print("\nwrote xor_boundary.pgm (white = positive region)")
