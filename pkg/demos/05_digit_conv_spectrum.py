"""Gate-type histogram of a quadratic conv net trained on handwritten digits.

Uses scikit-learn's bundled 8x8 digits (serialized through the IDX codec the
same way external MNIST files are read).  With the real MNIST IDX files the
identical pipeline runs via:

    QUADNET_MNIST_DIR=/path/to/idx quadnet mnist-spectrum --out histogram.csv
"""

import numpy as np
from sklearn.datasets import load_digits

import quadnet as qn
from quadnet.experiments import ImageNetConfig, run_image_spectrum

digits = load_digits()
pixels = (digits.images / 16.0 * 255).astype(np.uint8)
blob = qn.load_idx(qn.images_to_idx_bytes(pixels),
                   qn.labels_to_idx_bytes(digits.target))
train_set = qn.LabeledDataset(blob.x[:1500], blob.labels[:1500], 10)
test_set = qn.LabeledDataset(blob.x[1500:], blob.labels[1500:], 10)

config = ImageNetConfig(seed=0, iterations=3000, train_subset=0)
result = run_image_spectrum(train_set, test_set, config)

print(f"train accuracy {result.train_accuracy:.4f}   "
      f"test accuracy {result.test_accuracy:.4f}")
for layer_index, bins in sorted(result.histograms.items()):
    n = len(bins) - 1
    print(f"\nlayer {layer_index}: {bins.sum()} kernels over {n + 1} possible types")
    for gate_type, count in enumerate(bins):
        marker = "#" * int(count)
        print(f"  type {gate_type:2d}: {count:2d} {marker}")

with open("digit_spectrum.csv", "w", newline="\n") as fh:
    fh.write(result.to_csv())
print("\nwrote digit_spectrum.csv")
