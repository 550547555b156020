"""Rotated surface-code patches and their lattice-surgery merge.

Data qubits sit on a grid of ``d`` rows. Patch 1 occupies columns 0..d-1,
the seam column is ``d`` and patch 2 occupies columns d+1..2d. Plaquettes are
labelled by their lower-right corner (r, c) and touch the data qubits
(r-1, c-1), (r-1, c), (r, c-1), (r, c). A plaquette is Z-type when r + c is
even. Top and bottom edges keep weight-2 Z plaquettes, left and right edges
keep weight-2 X plaquettes, so Z-bar runs vertically and X-bar horizontally.
Merging across the seam therefore measures Z-bar (x) Z-bar.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

# CNOT order over the (NW, NE, SW, SE) corners. Hook errors (the last two
# data qubits) come out perpendicular to the same-type logical operator.
X_ORDER = (0, 2, 1, 3)  # NW, SW, NE, SE: X hooks are vertical
Z_ORDER = (0, 1, 2, 3)  # NW, NE, SW, SE: Z hooks are horizontal


@dataclass(frozen=True)
class Stabilizer:
    kind: str  # "X" or "Z"
    corner: tuple[int, int]
    ancilla: int
    slots: tuple[int | None, ...]  # data qubit per (NW, NE, SW, SE), None when absent

    @property
    def data(self) -> tuple[int, ...]:
        return tuple(q for q in self.slots if q is not None)

    def ordered(self) -> tuple[int | None, ...]:
        order = X_ORDER if self.kind == "X" else Z_ORDER
        return tuple(self.slots[k] for k in order)


def _plaquettes(d: int, c_lo: int, c_hi: int) -> list[tuple[int, int, str, list[tuple[int, int]]]]:
    """Plaquettes of the rectangle with data columns c_lo..c_hi (inclusive)."""
    out = []
    for r in range(d + 1):
        for c in range(c_lo, c_hi + 2):
            kind = "Z" if (r + c) % 2 == 0 else "X"
            cells = [(r - 1, c - 1), (r - 1, c), (r, c - 1), (r, c)]
            inside = [(a, b) if 0 <= a < d and c_lo <= b <= c_hi else None for a, b in cells]
            weight = sum(x is not None for x in inside)
            if weight == 4:
                out.append((r, c, kind, inside))
            elif weight == 2:
                horizontal_edge = r in (0, d)
                if (horizontal_edge and kind == "Z") or (not horizontal_edge and kind == "X"):
                    out.append((r, c, kind, inside))
    return out


class SurgeryLayout:
    """Two d x d patches with a one-column seam; qubit numbering is data first, then ancillas."""

    def __init__(self, d: int):
        if d < 3 or d % 2 == 0:
            raise ValueError(f"code distance must be odd and >= 3, got {d}")
        self.d = d
        self.width = 2 * d + 1
        self.data_index: dict[tuple[int, int], int] = {}
        for c in range(self.width):
            for r in range(d):
                self.data_index[(r, c)] = len(self.data_index)
        self.num_data = len(self.data_index)
        self.ancilla_index: dict[tuple[int, int], int] = {}
        self.separate = self._build([(0, d - 1), (d + 1, 2 * d)])
        self.merged = self._build([(0, 2 * d)])

    def _build(self, blocks: list[tuple[int, int]]) -> list[Stabilizer]:
        stabs = []
        for lo, hi in blocks:
            for r, c, kind, cells in _plaquettes(self.d, lo, hi):
                key = (r, c)
                if key not in self.ancilla_index:
                    self.ancilla_index[key] = self.num_data + len(self.ancilla_index)
                slots = tuple(None if x is None else self.data_index[x] for x in cells)
                stabs.append(Stabilizer(kind, key, self.ancilla_index[key], slots))
        return stabs

    @property
    def num_qubits(self) -> int:
        return self.num_data + len(self.ancilla_index)

    def _patch(self, patch: int) -> int:
        if patch not in (0, 1):
            raise ValueError(f"patch must be 0 or 1, got {patch}")
        return patch

    def patch_data(self, patch: int) -> list[int]:
        cols = range(self.d) if self._patch(patch) == 0 else range(self.d + 1, 2 * self.d + 1)
        return [self.data_index[(r, c)] for c in cols for r in range(self.d)]

    @cached_property
    def seam_data(self) -> list[int]:
        return [self.data_index[(r, self.d)] for r in range(self.d)]

    @cached_property
    def all_patch_data(self) -> list[int]:
        return self.patch_data(0) + self.patch_data(1)

    def logical_z(self, patch: int) -> list[int]:
        """Vertical Z string on the column next to the seam."""
        c = self.d - 1 if self._patch(patch) == 0 else self.d + 1
        return [self.data_index[(r, c)] for r in range(self.d)]

    def logical_x(self, patch: int) -> list[int]:
        """Horizontal X string along row 0."""
        cols = range(self.d) if self._patch(patch) == 0 else range(self.d + 1, 2 * self.d + 1)
        return [self.data_index[(0, c)] for c in cols]

    @cached_property
    def seam_row0(self) -> int:
        return self.data_index[(0, self.d)]

    @cached_property
    def new_in_merge(self) -> list[Stabilizer]:
        """Merged-layout stabilizers whose ancilla is idle while the patches are separate."""
        sep = {s.ancilla for s in self.separate}
        return [s for s in self.merged if s.ancilla not in sep]

    @cached_property
    def extended_in_merge(self) -> list[Stabilizer]:
        """Merged stabilizers that grow from a weight-2 patch-boundary stabilizer."""
        sep = {s.ancilla: s for s in self.separate}
        return [s for s in self.merged if s.ancilla in sep and set(s.data) != set(sep[s.ancilla].data)]

    def coordinates(self) -> dict[int, tuple[float, float]]:
        """(row, column) of every qubit; ancillas sit at half-integer offsets."""
        out = {q: (float(r), float(c)) for (r, c), q in self.data_index.items()}
        out.update({q: (r - 0.5, c - 0.5) for (r, c), q in self.ancilla_index.items()})
        return out
