"""Mollified trapezoidal vorticity profile on the annulus.

The profile rises from 0 to eps across the inner band (R1 - eps, R1 + eps),
stays flat at eps on the middle plateau, and descends back to 0 across the
outer band (R2 - eps, R2 + eps).  Both ramps are built from a single smooth
edge function (1 at the left edge, 0 at the right) obtained by a
kappa-regularization of the linear descent (1 - z)/2.
"""

from __future__ import annotations

import numpy as np

from .config import AnnulusConfig, RunConfig
from .errors import OutOfDomainError
from .mollifier import Mollifier, default_mollifier


class TrapezoidProfile:
    """Band half-width eps, edge regularization kappa, edge function tools.

    The edge function ``edge(z)`` on [-1, 1] satisfies edge(-1)=1, edge(1)=0,
    vanishing derivatives at both endpoints, edge' < 0 inside, and
    ||edge' + 1/2||_L1 = O(kappa).
    """

    def __init__(self, cfg: AnnulusConfig, eps: float, kappa: float,
                 moll: Mollifier | None = None):
        eps_max = min(cfg.R1 - cfg.r1, (cfg.R2 - cfg.R1) / 2.0, cfg.r2 - cfg.R2)
        if not 0.0 < eps < eps_max:
            raise OutOfDomainError(f"eps must lie in (0, {eps_max}); got {eps}")
        if not 0.0 < kappa < 1.0:
            raise OutOfDomainError(f"kappa must lie in (0, 1); got {kappa}")
        self.cfg = cfg
        self.eps = float(eps)
        self.kappa = float(kappa)
        self.moll = moll if moll is not None else default_mollifier()
        # int_{-1}^{1} of the inner convolution kernel; exact: 2*kappa*(1-kappa)
        self._norm = 2.0 * self.kappa * (1.0 - self.kappa)

    @classmethod
    def from_run(cls, run: RunConfig) -> "TrapezoidProfile":
        return cls(run.annulus, run.eps, run.kappa)

    # -- edge function -------------------------------------------------------

    def _check_z(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(np.abs(z) > 1.0 + 1e-14):
            raise OutOfDomainError("edge function argument must lie in [-1, 1]")
        return np.clip(z, -1.0, 1.0)

    def edge(self, z) -> np.ndarray:
        """Regularized descent from 1 (z=-1) to 0 (z=+1)."""
        z = self._check_z(z)
        k = self.kappa
        vp = (z + 1.0 - k) / k
        vm = (z - 1.0 + k) / k
        mass = k * k * (self.moll.cdf2(vp) - self.moll.cdf2(vm))
        return 1.0 - mass / self._norm

    def edge_prime(self, z) -> np.ndarray:
        z = self._check_z(z)
        k = self.kappa
        up = (z + 1.0 - k) / k
        um = (z - 1.0 + k) / k
        return -k * (self.moll.cdf(up) - self.moll.cdf(um)) / self._norm

    def edge_second(self, z) -> np.ndarray:
        z = self._check_z(z)
        k = self.kappa
        up = (z + 1.0 - k) / k
        um = (z - 1.0 + k) / k
        return -(self.moll.value(up) - self.moll.value(um)) / self._norm

    # -- weighted inner-product weights (nonnegative by edge' <= 0) ----------

    def weight_inner(self, z) -> np.ndarray:
        """sigma_-(z) = -edge'(-z); weight for the inner band."""
        return -self.edge_prime(-np.asarray(z, dtype=float))

    def weight_outer(self, z) -> np.ndarray:
        """sigma_+(z) = -edge'(z); weight for the outer band."""
        return -self.edge_prime(np.asarray(z, dtype=float))

    # -- radial profile ------------------------------------------------------

    def _regions(self, r):
        r = np.asarray(r, dtype=float)
        if np.any((r < self.cfg.r1 - 1e-12) | (r > self.cfg.r2 + 1e-12)):
            raise OutOfDomainError("radius outside the annulus")
        return r

    def value(self, r) -> np.ndarray:
        """Vorticity increment above the constant background."""
        r = self._regions(r)
        R1, R2, e = self.cfg.R1, self.cfg.R2, self.eps
        out = np.zeros_like(r)
        band1 = (r >= R1 - e) & (r <= R1 + e)
        band2 = (r >= R2 - e) & (r <= R2 + e)
        plateau = (r > R1 + e) & (r < R2 - e)
        out[band1] = e * self.edge((R1 - r[band1]) / e)
        out[plateau] = e
        out[band2] = e * self.edge((r[band2] - R2) / e)
        return out

    def derivative(self, r) -> np.ndarray:
        """d/dr of the profile; exactly zero outside the two bands."""
        r = self._regions(r)
        R1, R2, e = self.cfg.R1, self.cfg.R2, self.eps
        out = np.zeros_like(r)
        band1 = (r >= R1 - e) & (r <= R1 + e)
        band2 = (r >= R2 - e) & (r <= R2 + e)
        out[band1] = -self.edge_prime((R1 - r[band1]) / e)
        out[band2] = self.edge_prime((r[band2] - R2) / e)
        return out

    def second_derivative(self, r) -> np.ndarray:
        r = self._regions(r)
        R1, R2, e = self.cfg.R1, self.cfg.R2, self.eps
        out = np.zeros_like(r)
        band1 = (r >= R1 - e) & (r <= R1 + e)
        band2 = (r >= R2 - e) & (r <= R2 + e)
        out[band1] = self.edge_second((R1 - r[band1]) / e) / e
        out[band2] = self.edge_second((r[band2] - R2) / e) / e
        return out

    # -- band geometry helpers ----------------------------------------------

    @property
    def band_centers(self) -> tuple[float, float]:
        return self.cfg.R1, self.cfg.R2

    def band_edges(self) -> list[float]:
        R1, R2, e = self.cfg.R1, self.cfg.R2, self.eps
        return [R1 - e, R1 + e, R2 - e, R2 + e]

    def tabulate(self, n: int = 4096) -> np.ndarray:
        """(z, edge, edge') table for CSV export."""
        z = np.linspace(-1.0, 1.0, n)
        return np.column_stack([z, self.edge(z), self.edge_prime(z)])
