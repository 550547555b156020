"""Stochastic Pauli noise channels and single-parameter error schemes.

Every channel is a Pauli twirl: with the channel probability a uniformly random
non-identity Pauli is inserted on the touched qubits. Initialization faults
are X flips and readout faults flip the recorded bit, so both backends share
one noise semantics.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .circuit import NOISE_CHANNELS
from .pauli import PauliString


@dataclass(frozen=True)
class NoiseModel:
    p_1q: float = 0.0
    p_2q: float = 0.0
    p_init: float = 0.0
    p_meas: float = 0.0
    p_idle: float = 0.0
    p_res_idle: float = 0.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not 0.0 <= float(value) <= 1.0:
                raise ValueError(f"{name} = {value} is not a probability")
            object.__setattr__(self, name, float(value))

    def channel_probability(self, kind: str) -> float:
        try:
            return getattr(self, _FIELD[kind])
        except KeyError:
            raise ValueError(f"unknown channel kind {kind!r}") from None

    def is_noiseless(self) -> bool:
        return not any(asdict(self).values())

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    def replace(self, **changes) -> "NoiseModel":
        return NoiseModel(**{**asdict(self), **changes})


_FIELD = {
    "after-1q-gate": "p_1q",
    "after-2q-gate": "p_2q",
    "init": "p_init",
    "before-measure": "p_meas",
    "idle": "p_idle",
    "resonator-idle": "p_res_idle",
}
assert set(_FIELD) == set(NOISE_CHANNELS)

NOISELESS = NoiseModel()


class NoiseScheme(str, Enum):
    SD6 = "sd6"
    SI1000 = "si1000"
    CUSTOM = "custom"


# Multipliers of p for (1q, 2q, init, readout, idle, resonator idle).
_SCHEME_FACTORS = {
    NoiseScheme.SD6: (1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
    NoiseScheme.SI1000: (0.1, 1.0, 2.0, 5.0, 0.1, 2.0),
}


def scheme_to_model(scheme: NoiseScheme | str, p: float) -> NoiseModel:
    scheme = NoiseScheme(scheme)
    if scheme is NoiseScheme.CUSTOM:
        raise ValueError("the custom scheme takes explicit per-channel rates, not a single p")
    if not 0.0 <= p <= 0.2:
        raise ValueError(f"p = {p} outside [0, 0.2]")
    f1, f2, fi, fm, fid, fr = _SCHEME_FACTORS[scheme]
    return NoiseModel(p_1q=f1 * p, p_2q=f2 * p, p_init=fi * p, p_meas=fm * p, p_idle=fid * p, p_res_idle=fr * p)


# ---------------------------------------------------------------- seed streams

def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream labelled by ``keys`` under ``seed``.

    Streams are spawned from the master seed, so results do not depend on how
    work is split across workers.
    """
    if seed is None:
        raise ValueError("a seed is required")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


# ------------------------------------------------------------- fault sampling

def sample_pauli_fault(kind: str, qubits: Sequence[int], model: NoiseModel,
                       rng: np.random.Generator) -> PauliString | None:
    """One draw of the channel acting on ``qubits``; the Pauli is local to them.

    ``before-measure`` returns X when the recorded bit must be flipped and
    ``init`` returns X on a flipped qubit.
    """
    p = model.channel_probability(kind)
    k = len(qubits)
    if p == 0.0 or rng.random() >= p:
        return None
    if kind in ("init", "before-measure"):
        return PauliString(np.ones(k, bool), np.zeros(k, bool))
    code = int(rng.integers(1, 4**k))
    return _pauli_from_code(code, k)


def _pauli_from_code(code: int, k: int) -> PauliString:
    # two bits per qubit, qubit 0 in the high bits: 1 = X, 2 = Y, 3 = Z
    digits = [(code >> (2 * (k - 1 - j))) & 3 for j in range(k)]
    x = np.array([d in (1, 2) for d in digits])
    z = np.array([d in (2, 3) for d in digits])
    return PauliString(x, z)


def bernoulli_positions(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Sorted indices in [0, n) that fire independently with probability p."""
    if p <= 0.0 or n == 0:
        return np.empty(0, dtype=np.int64)
    if p >= 0.25:
        return np.flatnonzero(rng.random(n) < p)
    # Geometric gaps give an exact Bernoulli process with cost proportional to hits.
    expect = n * p
    size = int(expect + 6 * np.sqrt(expect) + 16)
    pos = np.cumsum(rng.geometric(p, size)) - 1
    while pos[-1] < n:
        more = np.cumsum(rng.geometric(p, size)) + pos[-1]
        pos = np.concatenate([pos, more])
    return pos[pos < n]


def sample_fault_batch(kind: str, k: int, model: NoiseModel, shots: int,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized channel draws over ``shots``.

    Returns ``(positions, xs, zs)``: the faulty shot indices and, for each, the
    X and Z bits of the inserted Pauli on the ``k`` touched qubits.
    """
    p = model.channel_probability(kind)
    pos = bernoulli_positions(shots, p, rng)
    if kind in ("init", "before-measure"):
        ones = np.ones((pos.size, k), bool)
        return pos, ones, np.zeros_like(ones)
    codes = rng.integers(1, 4**k, pos.size)
    shifts = 2 * np.arange(k - 1, -1, -1)
    digits = (codes[:, None] >> shifts[None, :]) & 3
    return pos, (digits == 1) | (digits == 2), (digits == 2) | (digits == 3)
