"""Mechanism constants for the two-step methane-air model.

All numbers live in ``data/mechanism.json``; this module turns them into the
dense arrays consumed by the compiled reactor kernel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

ELEMENTS = ("C", "H", "O", "N")


@dataclass(frozen=True)
class Mechanism:
    species: tuple[str, ...]
    molecular_weights: np.ndarray  # (S,) g/mol
    element_matrix: np.ndarray  # (S, 4) atoms of C, H, O, N
    net: np.ndarray  # (R, S) net stoichiometric coefficients
    orders: np.ndarray  # (R, S) rate-law exponents
    pre_exponential: np.ndarray  # (R,) NaN marks the parameterized factor
    activation_energy: np.ndarray  # (R,) cal/mol
    thermo_low: np.ndarray  # (S, 7)
    thermo_high: np.ndarray  # (S, 7)
    t_mid: float
    r_cal: float
    r_si: float
    concentration_floor: float
    fuel: str
    oxidizer: dict
    stoich_o2_per_fuel: float
    baseline_A: float
    version: int

    def index(self, name: str) -> int:
        return self.species.index(name)

    @property
    def n_species(self) -> int:
        return len(self.species)

    def initial_mole_fractions(self, phi: float) -> np.ndarray:
        """Fuel/air mixture at equivalence ratio ``phi``."""
        if not phi > 0:
            raise ValueError(f"equivalence ratio must be positive, got {phi}")
        moles = np.zeros(self.n_species)
        moles[self.index(self.fuel)] = phi
        for name, per_o2 in self.oxidizer.items():
            moles[self.index(name)] += self.stoich_o2_per_fuel * per_o2
        return moles / moles.sum()

    def cp_molar(self, T: float) -> np.ndarray:
        """Molar heat capacities, J/(mol K)."""
        a = self.thermo_low if T < self.t_mid else self.thermo_high
        return self.r_si * (a[:, 0] + T * (a[:, 1] + T * (a[:, 2] + T * (a[:, 3] + T * a[:, 4]))))

    def enthalpy_molar(self, T: float) -> np.ndarray:
        """Molar enthalpies including formation, J/mol."""
        a = self.thermo_low if T < self.t_mid else self.thermo_high
        poly = a[:, 0] + T * (a[:, 1] / 2 + T * (a[:, 2] / 3 + T * (a[:, 3] / 4 + T * a[:, 4] / 5)))
        return self.r_si * (T * poly + a[:, 5])


def _read(text: str) -> Mechanism:
    raw = json.loads(text)
    species = tuple(raw["species"])
    S = len(species)
    reactions = raw["reactions"]
    net = np.zeros((len(reactions), S))
    orders = np.zeros((len(reactions), S))
    for r, rxn in enumerate(reactions):
        for name, nu in rxn["net"].items():
            net[r, species.index(name)] = nu
        for name, order in rxn["orders"].items():
            orders[r, species.index(name)] = order
    pre = np.array([np.nan if rxn["A"] is None else rxn["A"] for rxn in reactions])
    baseline = next(rxn["A_baseline"] for rxn in reactions if rxn["A"] is None)
    elements = np.array(
        [[raw["elements"][s].get(e, 0) for e in ELEMENTS] for s in species], dtype=float
    )
    return Mechanism(
        species=species,
        molecular_weights=np.array([raw["molecular_weights"][s] for s in species]),
        element_matrix=elements,
        net=net,
        orders=orders,
        pre_exponential=pre,
        activation_energy=np.array([rxn["Ea"] for rxn in reactions]),
        thermo_low=np.array([raw["thermo"]["low"][s] for s in species]),
        thermo_high=np.array([raw["thermo"]["high"][s] for s in species]),
        t_mid=float(raw["thermo"]["T_mid"]),
        r_cal=float(raw["gas_constant_cal"]),
        r_si=float(raw["gas_constant_si"]),
        concentration_floor=float(raw["concentration_floor"]),
        fuel=raw["fuel"],
        oxidizer=dict(raw["oxidizer"]),
        stoich_o2_per_fuel=float(raw["stoich_o2_per_fuel"]),
        baseline_A=float(baseline),
        version=int(raw["format_version"]),
    )


@lru_cache(maxsize=None)
def load_mechanism(path: str | None = None) -> Mechanism:
    """Load the bundled mechanism, or one at ``path`` with the same schema."""
    if path is None:
        text = resources.files("identifiability.kinetics").joinpath("data/mechanism.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return _read(text)
