"""Singular value rearrangements, Cwikel-type estimates and quantized operator models."""
from .errors import AccuracyWarning, NumericalFailure, ReportIOError, UsageError
from .majorization import (
    DenseOperator,
    MajorizationVerdict,
    StepFunction,
    cesaro,
    decreasing_rearrangement,
    direct_sum,
    l2linf_gauge,
    lorentz_quasinorm,
    majorizes,
    power,
    schatten_norm,
    singular_step,
    submajorizes,
    tensor_rearrangement,
)

__version__ = "0.1.0"
