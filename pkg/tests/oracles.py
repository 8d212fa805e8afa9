"""Brute-force reference computations used to check the assembled operators.

Everything here is written directly from the weak-form definitions with
numpy's own Legendre routines and a high-order Gauss rule, without going
through the package's tables.
"""
import numpy as np
from numpy.polynomial import legendre as L

GAUSS = L.leggauss(12)


def _leg(n, x, deriv=0):
    c = np.zeros(n + 1)
    c[n] = 1.0
    return L.legval(x, L.legder(c, deriv) if deriv else c)


class Cells:
    """Uniform box mesh with cell c = j * nx + i."""

    def __init__(self, x0, x1, y0, y1, nx, ny, modes):
        self.x0, self.y0 = x0, y0
        self.hx, self.hy = (x1 - x0) / nx, (y1 - y0) / ny
        self.nx, self.ny = nx, ny
        self.modes = modes
        self.N = len(modes)

    def center(self, c):
        i, j = c % self.nx, c // self.nx
        return self.x0 + (i + 0.5) * self.hx, self.y0 + (j + 0.5) * self.hy

    def basis(self, c, x, y):
        """Values, d/dx, d/dy of every mode of cell c at physical points."""
        xc, yc = self.center(c)
        xi, eta = 2 * (x - xc) / self.hx, 2 * (y - yc) / self.hy
        v = np.array([_leg(s, xi) * _leg(t, eta) for s, t in self.modes])
        dx = np.array([_leg(s, xi, 1) * _leg(t, eta) * 2 / self.hx for s, t in self.modes])
        dy = np.array([_leg(s, xi) * _leg(t, eta, 1) * 2 / self.hy for s, t in self.modes])
        return v, dx, dy


def _segment(a, b, rule=GAUSS):
    x, w = rule
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def dense_A(mesh: Cells, a, family, periodic, beta0=0.0, hpen=None):
    """Dense matrix with entry [j, l] = A(v_l, v_j) over global indices."""
    N, nx, ny = mesh.N, mesh.nx, mesh.ny
    n = nx * ny * N
    A = np.zeros((n, n))

    for c in range(nx * ny):
        xc, yc = mesh.center(c)
        X, wx = _segment(xc - mesh.hx / 2, xc + mesh.hx / 2)
        Y, wy = _segment(yc - mesh.hy / 2, yc + mesh.hy / 2)
        XX, YY = np.meshgrid(X, Y)
        W = np.outer(wy, wx).ravel()
        v, dx, dy = mesh.basis(c, XX.ravel(), YY.ravel())
        blk = (dx * W) @ dx.T + (dy * W) @ dy.T - 0.5 * a * (v * W) @ v.T
        A[c * N:(c + 1) * N, c * N:(c + 1) * N] += blk

    # x-normal faces
    for j in range(ny):
        y_lo = mesh.y0 + j * mesh.hy
        Y, w = _segment(y_lo, y_lo + mesh.hy)
        for p in range(1, nx + (1 if periodic else 0)):
            xf = mesh.x0 + p * mesh.hx
            c1, c2 = j * nx + (p - 1), j * nx + (p % nx)
            # on a wrap face K2 is evaluated at the matching point of the left edge
            x2 = mesh.x0 if p == nx else xf
            _face(A, mesh, c1, c2, (np.full_like(Y, xf), Y), (np.full_like(Y, x2), Y), w, 0)
    for p in range(1, ny + (1 if periodic else 0)):
        yf = mesh.y0 + p * mesh.hy
        for i in range(nx):
            x_lo = mesh.x0 + i * mesh.hx
            X, w = _segment(x_lo, x_lo + mesh.hx)
            c1, c2 = (p - 1) * nx + i, (p % ny) * nx + i
            y2 = mesh.y0 if p == ny else yf
            _face(A, mesh, c1, c2, (X, np.full_like(X, yf)), (X, np.full_like(X, y2)), w, 1)

    if not periodic and family in ("i", "ii"):
        for c, pts, w, axis, side in boundary_faces(mesh):
            v, *g = mesh.basis(c, *pts)
            dn = side * g[axis]
            h = hpen[axis]
            if family == "i":
                blk = -(dn * w) @ v.T
            else:
                blk = (beta0 / h) * (v * w) @ v.T - (dn * w) @ v.T - (v * w) @ dn.T
            A[c * N:(c + 1) * N, c * N:(c + 1) * N] += blk
    return A


def _face(A, mesh, c1, c2, pts1, pts2, w, axis):
    """{d_nu w}[v] + [w]{d_nu v} on one face, normal +e_axis from c1 to c2."""
    N = mesh.N
    v1, *g1 = mesh.basis(c1, *pts1)
    v2, *g2 = mesh.basis(c2, *pts2)
    V = {1: v1, 2: v2}
    D = {1: g1[axis], 2: g2[axis]}
    cells = {1: c1, 2: c2}
    sig = {1: -1.0, 2: 1.0}
    for t in (1, 2):
        for s in (1, 2):
            blk = 0.5 * sig[t] * (V[t] * w) @ D[s].T + 0.5 * sig[s] * (D[t] * w) @ V[s].T
            ct, cs = cells[t], cells[s]
            A[ct * N:(ct + 1) * N, cs * N:(cs + 1) * N] += blk


def boundary_faces(mesh: Cells, rule=GAUSS):
    """(cell, points, weights, axis, outward side) for every boundary face."""
    out = []
    x1 = mesh.x0 + mesh.nx * mesh.hx
    y1 = mesh.y0 + mesh.ny * mesh.hy
    for j in range(mesh.ny):
        Y, w = _segment(mesh.y0 + j * mesh.hy, mesh.y0 + (j + 1) * mesh.hy, rule)
        out.append((j * mesh.nx, (np.full_like(Y, mesh.x0), Y), w, 0, -1))
        out.append((j * mesh.nx + mesh.nx - 1, (np.full_like(Y, x1), Y), w, 0, 1))
    for i in range(mesh.nx):
        X, w = _segment(mesh.x0 + i * mesh.hx, mesh.x0 + (i + 1) * mesh.hx, rule)
        out.append((i, (X, np.full_like(X, mesh.y0)), w, 1, -1))
        out.append(((mesh.ny - 1) * mesh.nx + i, (X, np.full_like(X, y1)), w, 1, 1))
    return out


def dense_clamped_loads(mesh: Cells, g1, g2, t, beta1, hpen, points=12):
    """L1 = int beta1/h g1 v, L2 = int g1 d_nu v - g2 v over the boundary,
    each face integral taken with a ``points``-point Gauss rule."""
    N = mesh.N
    L1 = np.zeros(mesh.nx * mesh.ny * N)
    L2 = np.zeros_like(L1)
    for c, pts, w, axis, side in boundary_faces(mesh, L.leggauss(points)):
        v, *g = mesh.basis(c, *pts)
        dn = side * g[axis]
        normal = tuple(float(side) if d == axis else 0.0 for d in range(2))
        a1 = g1(*pts, t, normal)
        a2 = g2(*pts, t, normal)
        L1[c * N:(c + 1) * N] += (beta1 / hpen[axis]) * (v * w) @ a1
        L2[c * N:(c + 1) * N] += (dn * w) @ a1 - (v * w) @ a2
    return L1, L2
