"""Matrix-free optoacoustic tomography reconstruction toolkit."""

from .core import (
    ArrayGeometry,
    Image,
    MultispectralStack,
    Sinogram,
    SosGrid,
    SpectraMatrix,
    UnmixResult,
)
from .acoustic import (
    EirSpec,
    ForwardOperator,
    adjoint_apply,
    bandpass_filter,
    crop_leading_samples,
    delay_transform,
    eir_filter,
    forward_apply,
    one_hot_sos,
    reach_mask,
)
from .direct import DirectReconConfig, backproject, direct_reconstruct, dmas_cf
from .shearlet import (
    ShearletSystem,
    build_shearlet_system,
    default_scale_count,
    shearlet_analysis,
    shearlet_synthesis,
    shears_per_scale,
    soft_threshold,
)
from .solver import LCurveResult, MbConfig, SolveReport, l_curve_select, sparsa_reconstruct
from .analysis import (
    MetricReport,
    image_metrics,
    optimal_scale,
    residual_norm,
    unmix_nnls,
)
from .synthesis import (
    PREPROCESS_SCALE,
    SynthesisConfig,
    generate_dataset,
    image_to_initial_pressure,
    item_rng,
    make_phantom,
    manifest_hash,
    postprocess_image,
    preprocess_pair,
    synthesize_sinogram,
)
from .io import (
    read_image,
    read_sinogram,
    read_spectra,
    write_image,
    write_sinogram,
    write_spectra,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
