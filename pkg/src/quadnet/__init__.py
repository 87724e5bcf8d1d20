"""Quadratic neural networks with spectral fingerprinting of trained minima."""

from .data import (
    IdxFormatError,
    LabeledDataset,
    gen_taiji,
    gen_xor,
    images_to_idx_bytes,
    labels_to_idx_bytes,
    load_idx,
    load_idx_files,
    taiji_label,
)
from .network import (
    Activation,
    DenseQuadraticLayer,
    FlattenLayer,
    MaxPoolLayer,
    Network,
    QuadConvLayer,
    QuadraticNeuron,
    ShapeError,
    build_mlp,
    neuron_backward,
    neuron_forward,
)
from .spectral import (
    InertiaSignature,
    JacobiConvergenceError,
    LayerSpectrum,
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
from .training import (
    NonFiniteLossError,
    TrainConfig,
    TrainReport,
    evaluate,
    init_linear_collapse,
    init_truncated_gaussian,
    learning_rate_at,
    loss_grad,
    loss_value,
    train,
)

__version__ = "0.1.0"
