"""Operator norms, steepest-descent geometries and width-scaling probes."""

from ._core import (
    DomainError,
    ShapeError,
    UnsupportedError,
    __version__,
    attention_logit_scale,
    counterexample_check,
    descent_direction,
    dual_norm,
    fit_loglog,
    is_computable,
    matrix_sign,
    moga_scale,
    newton_schulz_sign,
    op_norm,
    op_norm_bruteforce,
    quadratic_probe,
    vec_norm,
)

__all__ = [
    "DomainError",
    "ShapeError",
    "UnsupportedError",
    "__version__",
    "attention_logit_scale",
    "counterexample_check",
    "descent_direction",
    "dual_norm",
    "fit_loglog",
    "is_computable",
    "matrix_sign",
    "moga_scale",
    "newton_schulz_sign",
    "op_norm",
    "op_norm_bruteforce",
    "quadratic_probe",
    "vec_norm",
]
