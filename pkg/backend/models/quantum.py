"""
Quantum-side value types: states, multiport phase settings, qubit observables
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from models.errors import DimensionMismatchError, InconsistencyError, ParameterRangeError
from models.inequality import PARTIES

STATE_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class PureState:
    """Tripartite pure state, amplitudes indexed [a, b, c]"""

    amplitudes: np.ndarray
    label: str = ""

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex, copy=True)
        if amps.ndim != 3 or len(set(amps.shape)) != 1:
            raise DimensionMismatchError(f"Amplitude tensor must be d x d x d, got {amps.shape}")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > STATE_TOLERANCE:
            raise InconsistencyError(f"State is not normalized (norm^2 = {norm:.15f})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def d(self) -> int:
        return self.amplitudes.shape[0]

    def density_matrix(self) -> np.ndarray:
        vec = self.amplitudes.reshape(-1)
        return np.outer(vec, vec.conj())


@dataclass(frozen=True, eq=False)
class PhaseSettings:
    """Phase-shifter vectors phi for each party and local setting"""

    phases: np.ndarray  # shape (3 parties, 2 settings, d)

    def __post_init__(self):
        phases = np.array(self.phases, dtype=float, copy=True)
        if phases.ndim != 3 or phases.shape[:2] != (3, 2):
            raise DimensionMismatchError(f"Phase array must have shape (3, 2, d), got {phases.shape}")
        if phases.shape[2] < 2:
            raise DimensionMismatchError("Phase vectors need at least two entries")
        phases.setflags(write=False)
        object.__setattr__(self, "phases", phases)

    @property
    def d(self) -> int:
        return self.phases.shape[2]

    @classmethod
    def symmetric(cls, setting1: Sequence[float], setting2: Sequence[float]) -> "PhaseSettings":
        """Same pair of phase vectors for A, B and C"""
        s1 = np.asarray(setting1, dtype=float)
        s2 = np.asarray(setting2, dtype=float)
        if s1.shape != s2.shape:
            raise DimensionMismatchError("Both settings need the same number of phases")
        return cls(phases=np.stack([np.stack([s1, s2])] * 3))

    @classmethod
    def zeros(cls, d: int) -> "PhaseSettings":
        return cls(phases=np.zeros((3, 2, d)))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Sequence[float]]) -> "PhaseSettings":
        """{'A1': [...], 'A2': [...], ..., 'C2': [...]}"""
        rows = []
        for party in PARTIES:
            rows.append([np.asarray(mapping[f"{party}{s}"], dtype=float) for s in (1, 2)])
        return cls(phases=np.array(rows))

    def vector(self, party: str, setting: int) -> np.ndarray:
        return self.phases[PARTIES.index(party), setting - 1]

    def summed(self, triple: Tuple[int, int, int]) -> np.ndarray:
        """phi^l = phi^l_A + phi^l_B + phi^l_C for a setting triple"""
        i, j, k = triple
        return self.phases[0, i - 1] + self.phases[1, j - 1] + self.phases[2, k - 1]

    def as_mapping(self) -> Dict[str, list]:
        return {
            f"{party}{s}": [float(x) for x in self.phases[p, s - 1]]
            for p, party in enumerate(PARTIES)
            for s in (1, 2)
        }


@dataclass(frozen=True)
class QubitObservable:
    """Dichotomic qubit observable n . sigma"""

    nx: float
    ny: float
    nz: float

    def __post_init__(self):
        norm = np.sqrt(self.nx ** 2 + self.ny ** 2 + self.nz ** 2)
        if abs(norm - 1.0) > STATE_TOLERANCE:
            raise ParameterRangeError(f"Bloch vector must be unit length, got norm {norm}")

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "QubitObservable":
        return cls(
            float(np.sin(theta) * np.cos(phi)),
            float(np.sin(theta) * np.sin(phi)),
            float(np.cos(theta)),
        )

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz])


@dataclass(frozen=True)
class NoiseParameter:
    """White-noise admixture F in rho(F) = (1-F)|psi><psi| + F * I/d^3"""

    F: float

    def __post_init__(self):
        if not 0.0 <= self.F <= 1.0:
            raise ParameterRangeError(f"Noise parameter F must lie in [0, 1], got {self.F}")
