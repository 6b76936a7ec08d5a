"""Gauss-Legendre panel quadrature, indefinite integration weights, z-grids."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss, legvander


@lru_cache(maxsize=64)
def gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    x, w = leggauss(n)
    return x, w


def mapped_rule(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule mapped to [a, b]."""
    x, w = gauss_rule(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def integrate(f, a: float, b: float, n: int = 40) -> float:
    x, w = mapped_rule(a, b, n)
    return float(np.dot(w, f(x)))


def integrate_panels(f, edges, n: int = 24) -> float:
    """Composite Gauss integral of f over consecutive panels given by `edges`."""
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate(f, lo, hi, n)
    return total


def geometric_edges(a: float, b: float, toward: str = "right",
                    n_panels: int = 30, ratio: float = 0.65) -> np.ndarray:
    """Panel edges on [a, b] geometrically refined toward one endpoint.

    Panel widths shrink by `ratio` toward the chosen endpoint; used for
    integrands with boundary-layer structure.
    """
    widths = ratio ** np.arange(n_panels)
    widths = widths / widths.sum() * (b - a)
    if toward == "right":
        cuts = a + np.concatenate(([0.0], np.cumsum(widths)))
    elif toward == "left":
        cuts = a + np.concatenate(([0.0], np.cumsum(widths[::-1])))
    else:
        raise ValueError("toward must be 'left' or 'right'")
    cuts[0], cuts[-1] = a, b
    return cuts


def indefinite_weights(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Matrix W with W[j, i] = integral of the i-th Lagrange cardinal on [-1, z_j].

    Built through the Legendre expansion of the cardinal functions, so that
    sum_i W[j, i] f(z_i) is the exact integral of the degree N-1 interpolant
    of f from -1 to z_j.
    """
    n = len(z)
    P = legvander(z, n - 1)                      # P[i, k] = P_k(z_i)
    coeff = P.T * w                              # before (2k+1)/2 scaling
    coeff *= ((2 * np.arange(n) + 1) / 2.0)[:, None]   # coeff[k, i]
    # I_k(x) = int_{-1}^x P_k: I_0 = x+1, I_k = (P_{k+1} - P_{k-1})/(2k+1)
    Pz = legvander(z, n)                         # up to degree n
    I = np.empty((n, n))                         # I[j, k] = I_k(z_j)
    I[:, 0] = z + 1.0
    ks = np.arange(1, n)
    I[:, 1:] = (Pz[:, 2:n + 1] - Pz[:, 0:n - 1]) / (2 * ks + 1)
    return I @ coeff


@dataclass(frozen=True)
class ZGrid:
    """Gauss-Legendre collocation grid on [-1, 1] for the band operators."""

    n: int = 96
    z: np.ndarray = field(init=False, repr=False)
    w: np.ndarray = field(init=False, repr=False)
    w_left: np.ndarray = field(init=False, repr=False)   # int_{-1}^{z_j}
    w_right: np.ndarray = field(init=False, repr=False)  # int_{z_j}^{1}

    def __post_init__(self):
        z, w = gauss_rule(self.n)
        wl = indefinite_weights(z, w)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "w_left", wl)
        object.__setattr__(self, "w_right", w[None, :] - wl)

    def integrate(self, fvals: np.ndarray) -> float:
        return float(np.dot(self.w, fvals))


def lobatto_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Lobatto-Legendre rule on [-1, 1] (includes both endpoints)."""
    if n < 2:
        raise ValueError("Lobatto rule needs n >= 2")
    from numpy.polynomial.legendre import Legendre
    inner = Legendre.basis(n - 1).deriv().roots()
    x = np.concatenate(([-1.0], np.real(inner), [1.0]))
    Pnm1 = legvander(x, n - 1)[:, n - 1]
    w = 2.0 / (n * (n - 1) * Pnm1 ** 2)
    return x, w
