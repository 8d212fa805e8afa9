"""Nonlinear potentials and their quadratization H(w) = Phi'(w) / sqrt(Phi(w) + B)."""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

# Phi + B values within this relative band of zero are treated as touching
# zero (round-off), not as a violated lower bound.
_ROUNDOFF = 1e-12


@dataclass(frozen=True)
class PotentialSpec:
    """Psi and the shifted potential Phi(w) = Psi(w) - (a^2/8) w^2.

    ``params`` keeps the Swift-Hohenberg constants when the potential was
    built by :func:`swift_hohenberg`; the iterative baselines need them.
    """
    psi: Callable
    phi: Callable
    dphi: Callable
    B: float = 1.0
    d3phi: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def shifted(self, w):
        """Phi(w) + B, raising DomainError where it is genuinely non-positive."""
        w = np.asarray(w, dtype=float)
        s = self.phi(w) + self.B
        tol = _ROUNDOFF * max(1.0, abs(self.B))
        bad = ~(s > -tol)
        if np.any(bad):
            idx = np.unravel_index(np.argmax(bad), s.shape) if s.ndim else ()
            raise DomainError(f"Phi(w) + B = {float(s[idx]):.3e} <= 0 at node {idx} "
                              f"(w = {float(w[idx]):.6g}); increase B")
        return s, tol

    def U(self, w):
        s, _ = self.shifted(w)
        return np.sqrt(np.maximum(s, 0.0))

    def H(self, w):
        s, tol = self.shifted(w)
        return self.dphi(np.asarray(w, dtype=float)) / np.sqrt(np.maximum(s, tol))


def swift_hohenberg(eps, g=0.0, B=1.0, a=2.0):
    """Psi(u) = (1-eps)/2 u^2 - g/3 u^3 + u^4/4 (SH corresponds to a = 2)."""
    eps, g, a = float(eps), float(g), float(a)
    c2 = 0.5 * (1.0 - eps) - a * a / 8.0     # quadratic coefficient of Phi

    def psi(u):
        return 0.5 * (1.0 - eps) * u ** 2 - g / 3.0 * u ** 3 + 0.25 * u ** 4

    def phi(u):
        return c2 * u ** 2 - g / 3.0 * u ** 3 + 0.25 * u ** 4

    def dphi(u):
        return 2.0 * c2 * u - g * u ** 2 + u ** 3

    def d3phi(u):
        return 6.0 * u - 2.0 * g

    return PotentialSpec(psi, phi, dphi, float(B), d3phi,
                         params={"kind": "swift_hohenberg", "eps": eps, "g": g, "a": a})


def zero_potential(B=1.0, a=2.0):
    """Phi == 0: the linear problem, used for fixed-point and consistency checks."""
    a = float(a)

    def psi(u):
        return a * a / 8.0 * np.asarray(u) ** 2

    def zero(u):
        return np.zeros_like(np.asarray(u, dtype=float))

    return PotentialSpec(psi, zero, zero, float(B), zero, params={"kind": "zero", "a": a})
