"""Physical constants, unit conversions, and per-element data tables.

Internal units are fixed throughout the package: Angstrom, eV, eV/Angstrom.
kcal/mol and meV appear only at reporting boundaries.
"""

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

# Boltzmann constant in eV/K (CODATA).
KB_EV_PER_K = 8.617333262e-5

# 1 kcal/mol expressed in meV.
KCALMOL_TO_MEV = 43.3641

EV_TO_MEV = 1000.0

# Covalent radii in Angstrom (Cordero et al. consensus values). Coverage is
# intentionally limited to elements that occur in the template library plus
# the halogens.
COVALENT_RADII: Mapping[int, float] = MappingProxyType({
    1: 0.31,    # H
    6: 0.76,    # C (sp3)
    7: 0.71,    # N
    8: 0.66,    # O
    9: 0.57,    # F
    16: 1.05,   # S
    17: 1.02,   # Cl
    35: 1.20,   # Br
    53: 1.39,   # I
})

# Standard atomic weights in amu.
ATOMIC_MASSES: Mapping[int, float] = MappingProxyType({
    1: 1.008,
    6: 12.011,
    7: 14.007,
    8: 15.999,
    9: 18.998,
    16: 32.06,
    17: 35.45,
    35: 79.904,
    53: 126.904,
})

SYMBOLS: Mapping[int, str] = MappingProxyType({
    1: "H", 6: "C", 7: "N", 8: "O", 9: "F",
    16: "S", 17: "Cl", 35: "Br", 53: "I",
})

ATOMIC_NUMBERS: Mapping[str, int] = MappingProxyType(
    {sym: z for z, sym in SYMBOLS.items()}
)


class UnknownElementError(KeyError):
    """Raised when a per-element table has no entry for an atomic number."""

    def __init__(self, z: int, table: str):
        super().__init__(f"no {table} entry for atomic number {z}")
        self.atomic_number = z


def covalent_radius(z: int) -> float:
    try:
        return COVALENT_RADII[z]
    except KeyError:
        raise UnknownElementError(z, "covalent radius") from None


def atomic_mass(z: int) -> float:
    try:
        return ATOMIC_MASSES[z]
    except KeyError:
        raise UnknownElementError(z, "atomic mass") from None


def symbol_of(z: int) -> str:
    try:
        return SYMBOLS[z]
    except KeyError:
        raise UnknownElementError(z, "element symbol") from None


def atomic_number_of(symbol: str) -> int:
    try:
        return ATOMIC_NUMBERS[symbol]
    except KeyError:
        raise KeyError(f"unknown element symbol {symbol!r}") from None


@dataclass(frozen=True)
class UnitConstants:
    """Immutable bundle of the conversion constants used at report boundaries."""

    kcalmol_to_mev: float = KCALMOL_TO_MEV
    kB_T_300K: float = KB_EV_PER_K * 300.0
    covalent_radii: Mapping[int, float] = field(default=COVALENT_RADII)

    def kcalmol_to_ev(self, x: float) -> float:
        return x * self.kcalmol_to_mev / EV_TO_MEV

    def ev_to_kcalmol(self, x: float) -> float:
        return x * EV_TO_MEV / self.kcalmol_to_mev


UNITS = UnitConstants()
