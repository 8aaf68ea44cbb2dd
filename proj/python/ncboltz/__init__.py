"""Python access to the ncb core library."""

from ._core import (
    AccuracyError,
    ConfigError,
    DivergenceError,
    DomainError,
    Error,
    KernelParams,
    NumericalError,
    SphereRule,
    VelocityGrid,
    angular_b,
    assemble,
    build_basis,
    decay_fit,
    default_config,
    integrate,
    jacobian_zeta_shift,
    L_apply,
    l2_weighted,
    maxwellian,
    metric_d,
    normalization_residual,
    nsg_norm,
    post_collisional,
    run,
    sqrt_maxwellian,
)

__all__ = [name for name in dir() if not name.startswith("_")]
