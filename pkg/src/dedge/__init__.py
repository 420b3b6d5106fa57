"""Edge detection with dilated classical kernels, plus a benchmark harness."""

from .bench import (
    DatasetError,
    GroundTruth,
    MatchResult,
    Score,
    cpm_match,
    default_max_dist,
    evaluate,
    evaluate_dataset,
    run_sweep,
)
from .imgproc import (
    MacCounter,
    convolve,
    convolve_dense,
    convolve_sparse,
    gaussian_blur,
    read_image,
    scale_to_byte,
    threshold_global,
    to_grayscale,
    write_edge_map,
)
from .kernels import (
    Kernel,
    SparseKernel,
    UnknownKernelError,
    UnsupportedSizeError,
    build_gaussian,
    build_log,
    catalog_get,
    catalog_names,
    compass_set,
    dilate,
    rotate_orthogonal,
    sparse_from_kernel,
)
from .operators import (
    CompassResponse,
    FreiChenResponse,
    GradientMap,
    compass_gradient,
    frei_chen,
    gradient_orthogonal,
    laplace,
    log_response,
)
from .pipelines import (
    CannyParams,
    EdParams,
    FirstOrderParams,
    IsefParams,
    LaplaceParams,
    LogParams,
    MarrHildrethParams,
    ParameterError,
    build_runner,
    isef_filter,
    run_canny,
    run_edge_drawing,
    run_first_order,
    run_laplace,
    run_log,
    run_marr_hildreth,
    run_shen_castan,
)
from .postprocess import guo_hall_thin, hysteresis_link, non_max_suppression, zero_crossing

__version__ = "0.1.0"
