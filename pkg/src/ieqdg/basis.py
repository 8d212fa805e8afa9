"""Legendre modal bases on [-1, 1]^d and Gauss-Legendre rules."""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError

TOTAL_DEGREE = "total_degree"
TENSOR_PRODUCT = "tensor_product"


def legendre_table(n, x):
    """Values and derivatives of P_0..P_n at ``x`` via the three-term recurrence.

    Returns two arrays of shape ``(n + 1,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    P = np.zeros((n + 1,) + x.shape)
    dP = np.zeros_like(P)
    P[0] = 1.0
    if n >= 1:
        P[1] = x
        dP[1] = 1.0
    for m in range(1, n):
        P[m + 1] = ((2 * m + 1) * x * P[m] - m * P[m - 1]) / (m + 1)
        # P'_{m+1} = P'_{m-1} + (2m+1) P_m
        dP[m + 1] = dP[m - 1] + (2 * m + 1) * P[m]
    return P, dP


@dataclass(frozen=True)
class QuadratureRule:
    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def tensor(self, dim):
        """Tensor grid in ``dim`` dimensions, x index fastest: (points (Q, dim), weights (Q,))."""
        x, w = self.nodes, self.weights
        if dim == 0:
            return np.zeros((1, 0)), np.ones(1)
        if dim == 1:
            return x[:, None].copy(), w.copy()
        G = len(x)
        pts = np.stack([np.tile(x, G), np.repeat(x, G)], axis=1)
        return pts, np.repeat(w, G) * np.tile(w, G)


def gauss_rule(G: int) -> QuadratureRule:
    """G-point Gauss-Legendre rule on [-1, 1], exact for degree <= 2G - 1."""
    if isinstance(G, bool) or int(G) != G or not 1 <= G <= 16:
        raise ConfigError(f"Gauss order must be an integer in [1, 16], got {G!r}")
    x, w = np.polynomial.legendre.leggauss(int(G))
    order = np.argsort(x)
    x, w = x[order], w[order]
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(int(G), x, w)


@dataclass(frozen=True)
class ReferenceBasis:
    """Products of Legendre polynomials ``P_s(xi) P_t(eta)``.

    ``modes`` holds zero-based multi-indices, constant mode first, then by
    total degree with the x-exponent descending.
    """
    dim: int
    degree: int
    space: str = TOTAL_DEGREE
    modes: tuple = field(init=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigError(f"basis dimension must be 1 or 2, got {self.dim}")
        if self.degree < 0:
            raise ConfigError(f"polynomial degree must be >= 0, got {self.degree}")
        if self.space not in (TOTAL_DEGREE, TENSOR_PRODUCT):
            raise ConfigError(f"unknown polynomial space {self.space!r}")
        k = self.degree
        if self.dim == 1:
            modes = [(s,) for s in range(k + 1)]
        else:
            top = 2 * k if self.space == TENSOR_PRODUCT else k
            modes = [(s, d - s) for d in range(top + 1) for s in range(d, -1, -1)
                     if s <= k and d - s <= k]
        object.__setattr__(self, "modes", tuple(modes))

    @property
    def size(self):
        return len(self.modes)

    def eval(self, points):
        """Values ``(N, P)`` and reference gradients ``(dim, N, P)`` at points ``(P, dim)``."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        tables = [legendre_table(self.degree, pts[:, a]) for a in range(self.dim)]
        vals = np.ones((self.size, len(pts)))
        grads = np.ones((self.dim, self.size, len(pts)))
        for l, m in enumerate(self.modes):
            for a in range(self.dim):
                P, dP = tables[a]
                vals[l] *= P[m[a]]
                for b in range(self.dim):
                    grads[b, l] *= dP[m[a]] if a == b else P[m[a]]
        return vals, grads

    @cached_property
    def mass_diagonal(self):
        return reference_mass_diagonal(self)


def reference_mass_diagonal(basis: ReferenceBasis) -> np.ndarray:
    """Exact L2([-1,1]^d) norms squared: prod 2/(2s+1) with zero-based s."""
    return np.array([np.prod([2.0 / (2 * s + 1) for s in m]) for m in basis.modes])


def basis_eval(basis: ReferenceBasis, points):
    return basis.eval(points)
