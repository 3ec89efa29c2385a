"""Python access to the odonav navigation core."""

from ._odonav import (
    SpeedNet,
    default_config,
    euler_to_rotation,
    fir_apply,
    fir_taps,
    fuse,
    geodetic_to_local,
    infer,
    local_to_geodetic,
    normalize_config,
    simulate,
    truth,
)

__all__ = [
    "SpeedNet",
    "default_config",
    "euler_to_rotation",
    "fir_apply",
    "fir_taps",
    "fuse",
    "geodetic_to_local",
    "infer",
    "local_to_geodetic",
    "normalize_config",
    "simulate",
    "truth",
]
