"""Discrete fields in V_h: storage, projection, traces, norms and errors."""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .basis import TOTAL_DEGREE, ReferenceBasis, gauss_rule
from .errors import ConfigError, ContractError, NumericError
from .mesh import Mesh


class DGSpace:
    """A mesh, a reference basis and the single quadrature rule shared by every integral.

    All tables needed by assembly are built once here: basis values and
    reference gradients at the tensor Gauss nodes of a cell, and traces on
    each of the ``2 * dim`` cell sides.
    """

    def __init__(self, mesh: Mesh, degree: int, space: str = TOTAL_DEGREE,
                 quad_order: int = None):
        self.mesh = mesh
        self.dim = mesh.dim
        self.basis = ReferenceBasis(mesh.dim, int(degree), space)
        G = int(degree) + 1 if quad_order is None else int(quad_order)
        if G < int(degree) + 1:
            raise ConfigError(f"quadrature order {G} < k+1 = {int(degree) + 1}")
        self.rule = gauss_rule(G)
        self.N = self.basis.size
        self.ndofs = mesh.ncells * self.N

        self.vol_pts, self.vol_w = self.rule.tensor(self.dim)
        self.V, self.D = self.basis.eval(self.vol_pts)
        self.Q = len(self.vol_w)
        self.half_h = 0.5 * np.asarray(mesh.h)
        self.jac = float(np.prod(self.half_h))
        # quadrature mass of each mode (diagonal because the modes are Q-orthogonal)
        self.ref_mass = (self.V ** 2) @ self.vol_w

        face_pts, self.face_w = self.rule.tensor(self.dim - 1)
        self.Qf = len(self.face_w)
        self.face_ref_pts = face_pts
        self.trace = {}
        for axis in range(self.dim):
            others = [a for a in range(self.dim) if a != axis]
            for side in (-1, 1):
                pts = np.empty((self.Qf, self.dim))
                pts[:, axis] = side
                for col, a in enumerate(others):
                    pts[:, a] = face_pts[:, col]
                vals, grads = self.basis.eval(pts)
                self.trace[axis, side] = (vals, grads, pts)

    def face_jac(self, axis):
        return float(np.prod([self.half_h[a] for a in range(self.dim) if a != axis]))

    def normal_derivative_table(self, axis, side):
        """d/dx_axis of each mode on the given cell side, shape (N, Qf)."""
        _, grads, _ = self.trace[axis, side]
        return grads[axis] / self.half_h[axis]

    @cached_property
    def cell_nodes(self):
        """Physical coordinates of the shared quadrature nodes, shape (ncells, Q, dim)."""
        return self.mesh.centers[:, None, :] + self.vol_pts[None, :, :] * self.half_h

    def node_coords(self):
        """Tuple of coordinate arrays of shape (ncells, Q), one per axis."""
        X = self.cell_nodes
        return tuple(X[..., a] for a in range(self.dim))

    def face_nodes(self, faces, side_cell="c1"):
        """Physical coordinates of face quadrature nodes, shape (len(faces), Qf, dim)."""
        mesh = self.mesh
        faces = np.asarray(faces, dtype=int)
        out = np.empty((len(faces), self.Qf, self.dim))
        for n, f in enumerate(faces):
            axis = mesh.face_axis[f]
            c = mesh.face_c1[f]
            side = mesh.face_side[f] if mesh.face_side[f] else 1
            pts = self.trace[axis, side][2]
            out[n] = mesh.centers[c] + pts * self.half_h
            out[n, :, axis] = mesh.face_position[f]
        return out

    def integrate_against_basis(self, nodal):
        """(f, v_l) per cell for nodal values ``(ncells, Q)`` -> ``(ncells, N)``."""
        return self.jac * (nodal * self.vol_w) @ self.V.T

    def __repr__(self):
        return (f"DGSpace({self.mesh!r}, k={self.basis.degree}, "
                f"space={self.basis.space!r}, G={self.rule.order})")


@dataclass
class DGField:
    space: DGSpace
    coeffs: np.ndarray      # (ncells, N)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(self.space.mesh.ncells, self.space.N)

    @classmethod
    def zeros(cls, space):
        return cls(space, np.zeros((space.mesh.ncells, space.N)))

    @classmethod
    def from_vector(cls, space, vec):
        return cls(space, np.asarray(vec, dtype=float).reshape(space.mesh.ncells, space.N))

    @property
    def vector(self):
        return self.coeffs.reshape(-1)

    def nodal(self):
        """Values at the shared quadrature nodes, shape (ncells, Q)."""
        return self.coeffs @ self.space.V

    def evaluate(self, points):
        """Point values at physical points ``(P, dim)`` (cell found by location)."""
        cells, ref = self.space.mesh.locate(points)
        vals, _ = self.space.basis.eval(ref)
        return np.einsum("pl,lp->p", self.coeffs[cells], vals)

    def copy(self):
        return DGField(self.space, self.coeffs.copy())


@dataclass
class NodalCellFunction:
    space: DGSpace
    values: np.ndarray      # (ncells, Q)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.space.mesh.ncells, self.space.Q)
        if not np.all(np.isfinite(self.values)):
            c, p = np.argwhere(~np.isfinite(self.values))[0]
            raise NumericError(f"non-finite nodal value in cell {c}, node {p}")


def _sample(f, space, t=None):
    if isinstance(f, NodalCellFunction):
        return f.values
    if isinstance(f, DGField):
        return f.nodal()
    if isinstance(f, np.ndarray):
        return f.reshape(space.mesh.ncells, space.Q)
    coords = space.node_coords()
    vals = f(*coords) if t is None else f(*coords, t)
    return np.broadcast_to(np.asarray(vals, dtype=float), coords[0].shape)


def project(f, space: DGSpace, t=None) -> DGField:
    """Piecewise L2 projection under the shared quadrature inner product.

    ``f`` may be a callable of the physical coordinates (plus ``t`` when
    given), a :class:`NodalCellFunction`, or nodal values ``(ncells, Q)``.
    """
    vals = _sample(f, space, t)
    if not np.all(np.isfinite(vals)):
        c, p = np.argwhere(~np.isfinite(vals))[0]
        x = space.cell_nodes[c, p]
        raise NumericError(f"non-finite value of f in cell {c}, node {p} at x={tuple(x)}")
    coeffs = ((vals * space.vol_w) @ space.V.T) / space.ref_mass
    return DGField(space, coeffs)


def inner(space, a_nodal, b_nodal):
    """Quadrature inner product of two nodal arrays."""
    return space.jac * float(np.sum((a_nodal * b_nodal) @ space.vol_w))


def l2_norm(obj):
    """Quadrature L2 norm of a DGField or NodalCellFunction."""
    vals = obj.values if isinstance(obj, NodalCellFunction) else obj.nodal()
    return np.sqrt(inner(obj.space, vals, vals))


def trace_jump_average(field: DGField, face):
    """One-sided traces, jumps and averages on an interior (or periodic wrap) face.

    The normal points from K1 to K2 and ``[v] = v|K2 - v|K1``.
    """
    space, mesh = field.space, field.space.mesh
    f = face.index if hasattr(face, "index") else int(face)
    if mesh.face_side[f] != 0:
        raise ContractError(f"face {f} lies on the physical boundary; use a one-sided trace")
    axis = mesh.face_axis[f]
    c1, c2 = mesh.face_c1[f], mesh.face_c2[f]
    T1 = space.trace[axis, 1][0]
    T2 = space.trace[axis, -1][0]
    D1 = space.normal_derivative_table(axis, 1)
    D2 = space.normal_derivative_table(axis, -1)
    v1, v2 = field.coeffs[c1] @ T1, field.coeffs[c2] @ T2
    d1, d2 = field.coeffs[c1] @ D1, field.coeffs[c2] @ D2
    return {
        "value_k1": v1, "value_k2": v2,
        "dnu_k1": d1, "dnu_k2": d2,
        "jump": v2 - v1, "average": 0.5 * (v1 + v2),
        "jump_dnu": d2 - d1, "average_dnu": 0.5 * (d1 + d2),
    }


def _sampling_grid(space, order, endpoints):
    nodes = gauss_rule(order).nodes
    if endpoints:
        nodes = np.concatenate([[-1.0], nodes, [1.0]])
    grids = np.meshgrid(*([nodes] * space.dim), indexing="xy")
    return np.stack([g.ravel() for g in grids], axis=1)


def error_norms(field: DGField, exact, t=None, order=None, endpoints=False):
    """(L2, Linf) errors of ``field`` against ``exact``.

    By default both are sampled at the shared quadrature nodes.  ``order``
    switches to a separate Gauss rule with that many points per axis; with
    ``endpoints`` the Linf sample also includes the cell boundaries.
    """
    space = field.space
    if order is None and not endpoints:
        err = field.nodal() - _sample(exact, space, t)
        return float(np.sqrt(inner(space, err, err))), float(np.max(np.abs(err)))
    G = space.rule.order if order is None else int(order)
    fine = DGSpace(space.mesh, space.basis.degree, space.basis.space, quad_order=max(G, space.rule.order))
    err = field.coeffs @ fine.V - _sample(exact, fine, t)
    l2 = float(np.sqrt(inner(fine, err, err)))
    if not endpoints:
        return l2, float(np.max(np.abs(err)))
    pts = _sampling_grid(space, fine.rule.order, True)
    vals, _ = space.basis.eval(pts)
    X = space.mesh.centers[:, None, :] + pts[None] * space.half_h
    ex = _call(exact, tuple(X[..., a] for a in range(space.dim)), t)
    return l2, float(np.max(np.abs(field.coeffs @ vals - ex)))


def _call(f, coords, t):
    vals = f(*coords) if t is None else f(*coords, t)
    return np.broadcast_to(np.asarray(vals, dtype=float), coords[0].shape)


def eoc(errors):
    """Experimental orders log2(e_j / e_{j+1})."""
    e = np.asarray(errors, dtype=float)
    if e.size < 2:
        raise NumericError("EOC needs at least two errors")
    if np.any(~np.isfinite(e)) or np.any(e <= 0):
        raise NumericError(f"EOC needs positive finite errors, got {e}")
    return np.log2(e[:-1] / e[1:])
