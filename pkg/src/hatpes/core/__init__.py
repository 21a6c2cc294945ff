from .rng import RngStream
from .structure import (
    Structure,
    bond_graph_distances,
    distance_matrix,
    infer_bonds,
    merge_structures,
    neighbor_indices,
    rigid_transform,
)
from .units import (
    ATOMIC_MASSES,
    COVALENT_RADII,
    KB_EV_PER_K,
    KCALMOL_TO_MEV,
    UNITS,
    UnitConstants,
    UnknownElementError,
    atomic_mass,
    atomic_number_of,
    covalent_radius,
    symbol_of,
)
from .xyz import (
    Frame,
    XyzFormatError,
    read_frames,
    read_structure_file,
    write_frames,
    write_structure_file,
)

__all__ = [
    "ATOMIC_MASSES",
    "COVALENT_RADII",
    "Frame",
    "KB_EV_PER_K",
    "KCALMOL_TO_MEV",
    "RngStream",
    "Structure",
    "UNITS",
    "UnitConstants",
    "UnknownElementError",
    "XyzFormatError",
    "atomic_mass",
    "atomic_number_of",
    "bond_graph_distances",
    "covalent_radius",
    "distance_matrix",
    "infer_bonds",
    "merge_structures",
    "neighbor_indices",
    "read_frames",
    "read_structure_file",
    "rigid_transform",
    "symbol_of",
    "write_frames",
    "write_structure_file",
]
