"""anisofdtd: 3D FDTD for fully anisotropic electric and magnetic media."""

from .lattice import FieldSet, YeeGrid, create_lattice, field_position
from .materials import (MaterialGrid, build_layout, check_spd, invert_tensor,
                        preset_tensor)
from .solver import (StepState, compute_cfl, make_state, step,
                     DEFAULT_CFL_FACTOR)

__version__ = "0.1.0"

__all__ = [
    "FieldSet", "YeeGrid", "create_lattice", "field_position",
    "MaterialGrid", "build_layout", "check_spd", "invert_tensor",
    "preset_tensor", "StepState", "compute_cfl", "make_state", "step",
    "DEFAULT_CFL_FACTOR", "__version__",
]
