"""Watching layer entropy evolve while a quadratic conv net trains.

Kernels drift between gate families early in training and settle as the
optimizer converges, so the per-layer type entropy stabilizes.  Starting
from the linear-collapse state instead pins every kernel to the same family
(entropy exactly zero) until the quadratic terms are learned.
"""

import numpy as np

import quadnet as qn
from quadnet.experiments import ImageNetConfig, build_image_net, run_entropy_dynamics
from quadnet.spectral import layer_spectrum
from quadnet.training import TrainConfig


def noisy_template_set(n, classes=10, size=10, seed=1, noise=0.5):
    rng = np.random.default_rng(seed)
    templates = rng.uniform(0.0, 1.0, size=(classes, size, size))
    labels = rng.integers(0, classes, size=n)
    images = np.clip(templates[labels] + rng.normal(0, noise, (n, size, size)), 0, 1)
    return qn.LabeledDataset(images[:, None, :, :], labels, classes)


dataset = noisy_template_set(2000)
config = ImageNetConfig(kernels=8, n_classes=10)

# linear-collapse start: every kernel has the zero quadratic form
collapsed = build_image_net(dataset.x.shape[1:], config)
qn.init_linear_collapse(collapsed, 0)
print("entropy at the linear-collapse start:",
      layer_spectrum(collapsed.layers[0]).entropy_bits(), "bits")

net = build_image_net(dataset.x.shape[1:], config)
train_config = TrainConfig(seed=0, iterations=5000,
                           lr_schedule=((1000, 0.1), (99000, 0.02)),
                           batch_size=50, loss="cross_entropy", reduction="mean")
series = run_entropy_dynamics(net, dataset, train_config, cadence=400)

print("\nstep  entropy (bits) for the conv layer")
for step, entropy in series.for_layer(series.layer_indices[0]):
    bar = "#" * int(round(entropy * 12))
    print(f"{step:5d}  {entropy:6.3f}  {bar}")

values = np.array([e for _, e in series.for_layer(series.layer_indices[0])])
quarter = len(values) // 4
print(f"\nearly-phase std {values[:quarter].std():.4f}  "
      f"late-phase std {values[-quarter:].std():.4f}")
print("final conv fingerprint:", layer_spectrum(net.layers[0]).counts)
