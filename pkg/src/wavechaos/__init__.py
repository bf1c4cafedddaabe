"""wavechaos: chaos-modulated CDF9/7 wavelet image enhancement, a
from-scratch CNN classifier, and a cross-validation/ablation harness."""

from .chaos import (
    ChaosState,
    ChaosTrajectory,
    ChuaParams,
    derivatives,
    integrate,
    modulation_sequence,
    q_nonlinearity,
)
from .errors import (
    DivergenceError,
    FormatError,
    InvalidInputError,
    InvalidStateError,
    WavechaosError,
)
from .metrics import (
    ConfusionMatrix,
    MetricReport,
    compute_metrics,
    mcnemar_test,
    paired_t_test,
    roc_auc,
    wilcoxon_signed_rank,
)
from .modulate import ModulationConfig, difference_map, enhance_image, modulate_pyramid
from .wavelet import (
    FilterBank,
    WaveletPyramid,
    default_cdf97,
    dwt1d_forward,
    dwt1d_inverse,
    dwt2d_forward,
    dwt2d_inverse,
)

__version__ = "0.1.0"
