"""Uniform rectangular meshes of an interval or a 2D box.

Cells are ordered lexicographically by (row, column), i.e. ``c = j * nx + i``
with ``i`` the x-index.  Faces are ordered with all x-normal faces first and
then all y-normal faces; within each group the order is lexicographic in
(row, position) so assembled matrices are reproducible bit for bit.

Every interior face carries an orientation ``K1 -> K2`` along ``+e_axis``.
Under periodic tagging the wrap-around faces join the last cell of a row (K1)
to the first one (K2) and are stored as ordinary interior faces.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, ContractError

PERIODIC = "periodic"
PHYSICAL = "physical"


@dataclass(frozen=True)
class Face:
    index: int
    kind: str                      # "interior" or "boundary"
    cells: Tuple[int, ...]         # (K1, K2) or (K,)
    axis: int
    normal: Tuple[float, ...]      # K1 -> K2, or outward on the boundary
    measure: float                 # face length in 2D, 1.0 for a 1D point face
    position: float                # coordinate of the face along ``axis``
    boundary_h: Optional[float] = None
    wrap: bool = False


class Mesh:
    """Immutable uniform Cartesian mesh in 1 or 2 dimensions."""

    def __init__(self, lower, upper, counts, boundary=PHYSICAL):
        lower = tuple(float(v) for v in np.atleast_1d(lower))
        upper = tuple(float(v) for v in np.atleast_1d(upper))
        counts = tuple(int(n) for n in np.atleast_1d(counts))
        if not (len(lower) == len(upper) == len(counts)) or len(counts) not in (1, 2):
            raise ConfigError("mesh needs matching 1D or 2D bounds and counts, "
                              f"got {lower}, {upper}, {counts}")
        if any(n < 1 for n in counts):
            raise ConfigError(f"cell counts must be >= 1, got {counts}")
        if any(not np.isfinite(a) or not np.isfinite(b) or b <= a
               for a, b in zip(lower, upper)):
            raise ConfigError(f"degenerate box {lower} -> {upper}")
        if boundary not in (PERIODIC, PHYSICAL):
            raise ConfigError(f"unknown boundary kind {boundary!r}")

        self.dim = len(counts)
        self.lower = lower
        self.upper = upper
        self.counts = counts
        self.boundary = boundary
        self.h = tuple((b - a) / n for a, b, n in zip(lower, upper, counts))
        self.ncells = int(np.prod(counts))

        idx = np.indices(counts[::-1]).reshape(self.dim, -1)[::-1]   # (d, ncells), x fastest
        self.cell_ijk = idx.T.copy()
        self.centers = np.stack(
            [lower[a] + (idx[a] + 0.5) * self.h[a] for a in range(self.dim)], axis=1)
        self.extents = np.tile(np.asarray(self.h), (self.ncells, 1))
        for arr in (self.cell_ijk, self.centers, self.extents):
            arr.setflags(write=False)
        self._build_faces()

    # -- construction -----------------------------------------------------
    def cell_index(self, *ijk):
        c = 0
        for a in reversed(range(self.dim)):
            c = c * self.counts[a] + ijk[a]
        return c

    def _build_faces(self):
        axis_l, c1_l, c2_l, side_l, pos_l, wrap_l = [], [], [], [], [], []
        periodic = self.boundary == PERIODIC
        for axis in range(self.dim):
            n_ax = self.counts[axis]
            others = [a for a in range(self.dim) if a != axis]
            other_counts = [self.counts[a] for a in others]
            positions = range(1, n_ax + 1) if periodic else range(0, n_ax + 1)
            # lexicographic in (row, position): for x-faces the row is y; for
            # y-faces the "row" is the face position and columns run along x.
            if axis == 0:
                outer = list(np.ndindex(*other_counts[::-1])) if others else [()]
                order = [(o[::-1], p) for o in outer for p in positions]
            else:
                order = [(o, p) for p in positions for o in np.ndindex(*other_counts)]
            for o, p in order:
                def cell_at(k):
                    ijk = [0] * self.dim
                    ijk[axis] = k
                    for a, v in zip(others, o):
                        ijk[a] = v
                    return self.cell_index(*ijk)

                pos = self.lower[axis] + p * self.h[axis]
                if periodic:
                    wrap = p == n_ax
                    c1, c2 = cell_at(p - 1), cell_at(p % n_ax)
                    side = 0
                    if wrap:
                        pos = self.upper[axis]
                elif p == 0:
                    c1, c2, side, wrap = cell_at(0), -1, -1, False
                elif p == n_ax:
                    c1, c2, side, wrap = cell_at(n_ax - 1), -1, +1, False
                else:
                    c1, c2, side, wrap = cell_at(p - 1), cell_at(p), 0, False
                axis_l.append(axis)
                c1_l.append(c1)
                c2_l.append(c2)
                side_l.append(side)
                pos_l.append(pos)
                wrap_l.append(wrap)

        self.face_axis = np.array(axis_l, dtype=int)
        self.face_c1 = np.array(c1_l, dtype=int)
        self.face_c2 = np.array(c2_l, dtype=int)
        self.face_side = np.array(side_l, dtype=int)
        self.face_position = np.array(pos_l, dtype=float)
        self.face_wrap = np.array(wrap_l, dtype=bool)
        self.interior_faces = np.flatnonzero(self.face_side == 0)
        self.boundary_faces = np.flatnonzero(self.face_side != 0)
        self.nfaces = len(axis_l)
        for arr in (self.face_axis, self.face_c1, self.face_c2, self.face_side,
                    self.face_position, self.face_wrap, self.interior_faces,
                    self.boundary_faces):
            arr.setflags(write=False)

    # -- queries ----------------------------------------------------------
    @property
    def volume(self):
        return float(np.prod([b - a for a, b in zip(self.lower, self.upper)]))

    def face_measure(self, axis):
        return float(np.prod([self.h[a] for a in range(self.dim) if a != axis])) if self.dim > 1 else 1.0

    def face(self, f):
        f = int(f)
        axis = int(self.face_axis[f])
        side = int(self.face_side[f])
        normal = [0.0] * self.dim
        normal[axis] = float(side) if side else 1.0
        if side:
            return Face(f, "boundary", (int(self.face_c1[f]),), axis, tuple(normal),
                        self.face_measure(axis), float(self.face_position[f]),
                        boundary_h=0.5 * self.h[axis])
        return Face(f, "interior", (int(self.face_c1[f]), int(self.face_c2[f])), axis,
                    tuple(normal), self.face_measure(axis), float(self.face_position[f]),
                    wrap=bool(self.face_wrap[f]))

    def faces(self):
        return [self.face(f) for f in range(self.nfaces)]

    def cell_faces(self, c):
        """Faces touching cell ``c`` with the normal pointing out of ``c``."""
        out = []
        for f in range(self.nfaces):
            face = self.face(f)
            n = np.asarray(face.normal)
            if face.kind == "boundary":
                if face.cells[0] == c:
                    out.append((f, n))
            else:
                if face.cells[0] == c:
                    out.append((f, n))
                if face.cells[1] == c:
                    out.append((f, -n))
        return out

    def periodic_partner(self, f):
        """Boundary face on the opposite side of the box (same row/column)."""
        f = int(f)
        if self.face_side[f] == 0:
            raise ContractError(f"face {f} is not a boundary face")
        axis = self.face_axis[f]
        c = self.cell_ijk[self.face_c1[f]].copy()
        c[axis] = self.counts[axis] - 1 - c[axis]
        target = self.cell_index(*c)
        for g in self.boundary_faces:
            if (self.face_axis[g] == axis and self.face_side[g] == -self.face_side[f]
                    and self.face_c1[g] == target):
                return int(g)
        raise ContractError(f"no partner for face {f}")  # pragma: no cover

    def locate(self, points):
        """Cell index and reference coordinates of physical points, shape (P, d)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.dim == 1 and points.shape[0] == 1 and points.shape[1] != 1:
            points = points.T
        ijk = np.empty(points.shape, dtype=int)
        ref = np.empty(points.shape)
        for a in range(self.dim):
            s = (points[:, a] - self.lower[a]) / self.h[a]
            k = np.clip(np.floor(s).astype(int), 0, self.counts[a] - 1)
            ijk[:, a] = k
            ref[:, a] = 2.0 * (s - k) - 1.0
        cells = np.zeros(len(points), dtype=int)
        for a in reversed(range(self.dim)):
            cells = cells * self.counts[a] + ijk[:, a]
        return cells, ref

    def __repr__(self):
        return (f"Mesh(lower={self.lower}, upper={self.upper}, counts={self.counts}, "
                f"boundary={self.boundary!r})")


def build_rect_mesh(domain: Sequence, counts, boundary: str = PHYSICAL) -> Mesh:
    """Build a uniform mesh.

    ``domain`` is ``(lo, hi)`` for an interval or ``((x0, x1), (y0, y1))``
    for a box; ``counts`` is an int (1D) or ``(nx, ny)``.
    """
    dom = np.asarray(domain, dtype=float)
    if dom.ndim == 1:
        if dom.shape != (2,):
            raise ConfigError(f"bad 1D domain {domain!r}")
        lower, upper = dom[:1], dom[1:]
    elif dom.ndim == 2 and dom.shape[1] == 2:
        lower, upper = dom[:, 0], dom[:, 1]
    else:
        raise ConfigError(f"bad domain {domain!r}")
    counts = np.atleast_1d(np.asarray(counts))
    if counts.dtype.kind not in "iu":
        if not np.all(np.mod(counts, 1) == 0):
            raise ConfigError(f"cell counts must be integers, got {counts}")
        counts = counts.astype(int)
    if len(counts) != len(lower):
        raise ConfigError(f"counts {tuple(counts)} do not match a {len(lower)}D domain")
    return Mesh(lower, upper, counts, boundary)


def boundary_distance(mesh: Mesh, face) -> float:
    """Distance from the adjacent cell center to the boundary along the face normal."""
    f = face.index if isinstance(face, Face) else int(face)
    if mesh.face_side[f] == 0:
        raise ContractError(f"face {f} is an interior face; boundary_distance needs a boundary face")
    return 0.5 * float(mesh.extents[mesh.face_c1[f], mesh.face_axis[f]])
