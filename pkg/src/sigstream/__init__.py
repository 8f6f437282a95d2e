"""Path-signature toolkit for data streams."""

from .conformance import ConformanceModel, ConformanceScore, calibrate_threshold, conformance, variance_norm
from .distribution import (
    EmpiricalMeasure,
    RegressionModel,
    expected_signature,
    fit_kernel,
    fit_linear,
    kes_kernel,
    pathwise_expected_signature,
    predict,
    ses_features,
)
from .log_ode import CdeSolution, LinearField, linear_cde_series, log_ode_field, log_ode_step, solve_cde
from .sig_kernel import KernelGrid, gram, kernel_pde, kernel_phi, kernel_truncated
from .signature import (
    PsfFeatureVector,
    SignatureResult,
    chen_concat,
    coordinate,
    log_signature,
    psf_features,
    signature,
)
from .streams import (
    Interval,
    Stream,
    cumulative_sum,
    dyadic_intervals,
    invisibility_reset,
    lead_lag,
    read_csv,
    restrict,
    time_augment,
    write_csv,
)
from .tensor_algebra import (
    DimensionError,
    DomainError,
    TruncatedTensor,
    enumerate_words,
    inner_product,
    shuffle,
    sigkeys,
    tensor_exp,
    tensor_log,
    tensor_mul,
)

__version__ = "0.1.0"
