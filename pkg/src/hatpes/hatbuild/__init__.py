from .assemble import (
    CHI2_DOF,
    CHI2_SCALE,
    DISTANCE_RANGE,
    assemble_inter_system,
    build_intra_system,
    sample_target_distance,
)
from .configs import (
    end_h_position,
    passes_clash_check,
    reference_energy,
    sample_reaction_configuration,
)
from .interpolate import (
    N_FRAMES,
    barriers_from_energies,
    interpolation_positions,
    linear_interpolation,
)
from .manifest import SystemRecord, read_manifest, write_manifest
from .radicals import (
    TransferPair,
    TransferPolicy,
    eligible_transfer_hydrogens,
    make_radical,
    radical_site,
    removable_hydrogens,
    select_transfer_pair,
)
from .types import (
    InterpolationPath,
    RadicalSystem,
    ReactionConfiguration,
    closest_hydrogen_ok,
)

__all__ = [
    "CHI2_DOF",
    "CHI2_SCALE",
    "DISTANCE_RANGE",
    "InterpolationPath",
    "N_FRAMES",
    "RadicalSystem",
    "ReactionConfiguration",
    "SystemRecord",
    "TransferPair",
    "TransferPolicy",
    "assemble_inter_system",
    "barriers_from_energies",
    "build_intra_system",
    "closest_hydrogen_ok",
    "eligible_transfer_hydrogens",
    "end_h_position",
    "interpolation_positions",
    "linear_interpolation",
    "make_radical",
    "passes_clash_check",
    "radical_site",
    "read_manifest",
    "reference_energy",
    "removable_hydrogens",
    "sample_reaction_configuration",
    "sample_target_distance",
    "select_transfer_pair",
    "write_manifest",
]
