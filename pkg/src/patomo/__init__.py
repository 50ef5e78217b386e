"""Parallel-beam tomography with higher-order TV (polynomial annihilation) regularization."""

__version__ = "0.1.0"

from ._kernels import BACKEND  # noqa: E402
from .analysis import (  # noqa: E402
    ErrorReport,
    calibrate_lambda1,
    evaluate,
    relative_l2,
    segment_threshold,
)
from .operators import (  # noqa: E402
    AcquisitionGeometry,
    ImageGrid,
    MatrixOperator,
    RadonOperator,
    build_radon,
    estimate_norm,
    rescale_to_unit_norm,
)
from .pa_transform import PATransform, operator_l1_norm, stencil  # noqa: E402
from .phantom import (  # noqa: E402
    NoiseModel,
    RingPhantom,
    acquisition_preset,
    add_poisson_noise,
    make_ring_phantom,
)
from .solvers import (  # noqa: E402
    ReconstructionResult,
    SolverConfig,
    reconstruct_admm,
    reconstruct_sirt,
    select_lambda,
    shrink,
)
