"""Linearized operator at the trivial branch, rescaled to the two bands.

On each band the radial variable is z = (r - R_i)/eps in [-1, 1].  The
operator acting on the pair of band profiles (a, b) is

    (L u)_i(z) = Lam_i(z) u_i(z)
                 + eps (R_i + eps z) int G_n(x_i(z), x_j(s)) d_j(s) u_j(s) ds,

with Lam_i(z) = lam (R_i+eps z)^2 + (R_i+eps z) phi'(R_i+eps z), the annulus
Green kernel G_n, and source densities d_j carrying the profile slope on the
band (positive weight on the inner band, negative on the outer one).  The
adjoint is taken in the slope-weighted L2 pair; both are assembled as dense
blocks on a shared Gauss grid, with the within-band kernel kink handled by
per-target indefinite integration weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .config import AnnulusConfig
from .domain import BaseStream, circulation, lambda0
from .poisson import _log_sn
from .profile import TrapezoidProfile
from .quadrature import ZGrid, mapped_rule


def p_coeff(i: int, m: int, cfg: AnnulusConfig) -> float:
    """Rank-one coupling scalar of the eps -> 0 band system (i in {1, 2})."""
    if m < 1:
        raise ValueError("mode must satisfy m >= 1")
    Ri = cfg.R1 if i == 1 else cfg.R2
    la, _ = _log_sn(m, np.log(np.array(Ri / cfg.r1)))
    lb, _ = _log_sn(m, np.log(np.array(cfg.r2 / cfg.R2)))
    lc, _ = _log_sn(m, np.log(np.array(cfg.r2 / cfg.r1)))
    return Ri * cfg.R2 * np.exp(la + lb - lc) / m


def _green(n: int, x: np.ndarray, y: np.ndarray, r1: float, r2: float,
           branch: str) -> np.ndarray:
    """Annulus Green kernel branch: 'left' treats y as the inner argument."""
    if branch == "left":
        lo, hi = y, x
    elif branch == "right":
        lo, hi = x, y
    else:
        raise ValueError("branch must be 'left' or 'right'")
    la, _ = _log_sn(n, np.log(lo / r1))
    lb, _ = _log_sn(n, np.log(r2 / hi))
    lc, _ = _log_sn(n, np.log(np.asarray(r2 / r1)))
    return -np.exp(la + lb - lc) / n


@dataclass
class CoefficientSet:
    """Expansion of the swirl moment (R_i + eps z) phi'(R_i + eps z).

    The moment splits exactly into order-0/1/2 pieces in eps; all pieces are
    evaluated by quadrature on the profile edge function.  Also carries the
    alpha coefficients of the eigenvalue expansion built on top of it.
    """

    cfg: AnnulusConfig
    profile: TrapezoidProfile
    n_gauss: int = 48

    def __post_init__(self):
        self.lam0 = lambda0(self.cfg)
        self.gamma = circulation(self.cfg)

    @cached_property
    def _stream(self) -> BaseStream:
        # same panel rule as the expansion moments so the exact identity
        # direct == order-0/1/2 expansion cancels quadrature error
        return BaseStream(self.cfg, self.profile, n_gauss=self.n_gauss)

    def band_radius(self, band: int) -> float:
        return self.cfg.R1 if band == 1 else self.cfg.R2

    def radii(self, band: int, z) -> np.ndarray:
        return self.band_radius(band) + self.profile.eps * np.asarray(z, float)

    # -- direct evaluation ----------------------------------------------

    def swirl_direct(self, band: int, z) -> np.ndarray:
        r = self.radii(band, z)
        return r * self._stream.phi_prime(r)

    # -- exact eps-expansion ----------------------------------------------

    @cached_property
    def swirl0(self) -> dict:
        cfg = self.cfg
        logr = np.log(cfg.r2 / cfg.r1)
        c0 = (self.gamma + cfg.A * ((cfg.r2 ** 2 - cfg.r1 ** 2) / 2.0
                                    - cfg.r1 ** 2 * logr)) / logr
        return {band: c0 - cfg.A * (self.band_radius(band) ** 2 - cfg.r1 ** 2)
                for band in (1, 2)}

    @cached_property
    def _swirl1_const(self) -> float:
        cfg = self.cfg
        logr = np.log(cfg.r2 / cfg.r1)
        return ((cfg.R2 ** 2 - cfg.R1 ** 2) / 2.0 * (np.log(cfg.r2) + 0.5)
                + cfg.R1 ** 2 / 2.0 * np.log(cfg.R1)
                - cfg.R2 ** 2 / 2.0 * np.log(cfg.R2)) / logr

    def swirl1(self, band: int, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        cfg = self.cfg
        out = self._swirl1_const - 2.0 * cfg.A * self.band_radius(band) * z
        if band == 2:
            out = out - (cfg.R2 ** 2 - cfg.R1 ** 2) / 2.0
        return out

    def _edge_moment(self, band: int, z, mirrored: bool) -> np.ndarray:
        """int_{-1}^{z} (R_band + eps t) edge(-+t) dt, vectorized in z."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        R = self.band_radius(band)
        e = self.profile.eps
        out = np.empty_like(z)
        for k, zk in enumerate(z):
            x, w = mapped_rule(-1.0, zk, self.n_gauss)
            ev = self.profile.edge(-x if mirrored else x)
            out[k] = np.dot(w, (R + e * x) * ev)
        return out

    @cached_property
    def remainder_const(self) -> float:
        cfg, e = self.cfg, self.profile.eps
        j1_full = float(self._edge_moment(1, 1.0, mirrored=True)[0])
        j2_full = float(self._edge_moment(2, 1.0, mirrored=False)[0])
        x, w = mapped_rule(-1.0, 1.0, self.n_gauss)
        k1 = float(np.dot(w, (cfg.R1 + e * x) * self.profile.edge(-x)
                          * np.log(cfg.R1 + e * x)))
        k2 = float(np.dot(w, (cfg.R2 + e * x) * self.profile.edge(x)
                          * np.log(cfg.R2 + e * x)))
        xi, wi = mapped_rule(0.0, e, self.n_gauss)
        tail = float(np.dot(wi, (cfg.R2 - xi) * np.log(cfg.R2 - xi)
                            + (cfg.R1 + xi) * np.log(cfg.R1 + xi))) / e
        return (np.log(cfg.r2) * (j1_full + j2_full - (cfg.R1 + cfg.R2))
                - (k1 + k2) + tail)

    def swirl2(self, band: int, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        cfg = self.cfg
        logr = np.log(cfg.r2 / cfg.r1)
        if band == 1:
            return (self.remainder_const / logr - cfg.A * z ** 2
                    - self._edge_moment(1, z, mirrored=True))
        base = (self.remainder_const / logr - cfg.A
                - float(self._edge_moment(1, 1.0, mirrored=True)[0]))
        return (base + cfg.A * (1.0 - z ** 2)
                - (self._edge_moment(2, z, mirrored=False)
                   - (cfg.R1 + cfg.R2)))

    def swirl_expansion(self, band: int, z) -> np.ndarray:
        e = self.profile.eps
        return (self.swirl0[band] + e * self.swirl1(band, z)
                + e * e * self.swirl2(band, z))

    # -- alpha coefficients of the eigenvalue expansion --------------------

    def alpha0(self, band: int) -> float:
        return self.lam0 * self.band_radius(band) ** 2 + self.swirl0[band]

    def alpha1(self, band: int, z, lam1: float) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        R = self.band_radius(band)
        return self.lam0 * 2.0 * R * z + lam1 * R ** 2 + self.swirl1(band, z)

    def beta_quad(self, z, lam1: float) -> np.ndarray:
        """Quadratic part of the order-2 outer coefficient (no lam2 term)."""
        z = np.asarray(z, dtype=float)
        return self.lam0 * z ** 2 + 2.0 * lam1 * self.cfg.R2 * z

    def alpha2(self, band: int, z, lam1: float, lam2: float,
               include_swirl2: bool = True) -> np.ndarray:
        """Order-two coefficient; carries every eps-dependent polynomial tail
        so that alpha0 + eps alpha1 + eps^2 alpha2 reproduces
        lam (R + eps z)^2 + swirl exactly (including the lam1 z^2 eps term)."""
        z = np.asarray(z, dtype=float)
        R = self.band_radius(band)
        e = self.profile.eps
        out = (self.lam0 * z ** 2 + lam1 * 2.0 * z * R + lam1 * z ** 2 * e
               + lam2 * R ** 2 + lam2 * 2.0 * z * R * e + lam2 * z ** 2 * e ** 2)
        if include_swirl2:
            out = out + self.swirl2(band, z)
        return out


@dataclass
class BandOperator:
    """Dense two-band operator blocks on a shared Gauss grid."""

    n: int
    eps: float
    lam: float
    zgrid: ZGrid
    blocks: list                       # 2x2 nested list of (N, N) arrays
    sqrt_weights: tuple                # sqrt(w * sigma) per band
    adjoint: bool = False

    def apply(self, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        out1 = self.blocks[0][0] @ a + self.blocks[0][1] @ b
        out2 = self.blocks[1][0] @ a + self.blocks[1][1] @ b
        return out1, out2

    def matrix(self) -> np.ndarray:
        return np.block(self.blocks)

    def weighted_matrix(self) -> np.ndarray:
        """Similarity transform into the weighted-L2 frame (no divisions by
        vanishing weights: the kernel columns carry the weight factor)."""
        s1, s2 = self.sqrt_weights
        S = np.concatenate([s1, s2])
        M = self.matrix().copy()
        N = self.zgrid.n
        diag = np.diag(M).copy()
        M[np.arange(2 * N), np.arange(2 * N)] = 0.0
        # scale rows by S and columns by 1/S where S > 0; zero-weight columns
        # have analytically zero kernel entries in the weighted frame
        safe = np.where(S > 0.0, S, 1.0)
        Mw = (S[:, None] / safe[None, :]) * M
        Mw[:, S == 0.0] = 0.0
        Mw[np.arange(2 * N), np.arange(2 * N)] = diag
        return Mw

    def weighted_vector(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        s1, s2 = self.sqrt_weights
        return np.concatenate([s1 * a, s2 * b])

    def inner(self, u: tuple, v: tuple) -> float:
        """Weighted inner product of band pairs."""
        s1, s2 = self.sqrt_weights
        return float(np.dot(s1 ** 2 * u[0], v[0]) + np.dot(s2 ** 2 * u[1], v[1]))

    def norm(self, u: tuple) -> float:
        return float(np.sqrt(max(self.inner(u, u), 0.0)))

    def operator_norm(self) -> float:
        return float(np.linalg.norm(self.weighted_matrix(), 2))

    def dump_csv(self, path: str) -> None:
        M = self.matrix()
        with open(path, "w") as fh:
            fh.write("row,col,value\n")
            for i in range(M.shape[0]):
                for j in range(M.shape[1]):
                    fh.write(f"{i},{j},{M[i, j]:.17g}\n")


def _band_data(profile: TrapezoidProfile, zgrid: ZGrid):
    z = zgrid.z
    sig = {1: profile.weight_inner(z), 2: profile.weight_outer(z)}
    slope = {1: sig[1], 2: -sig[2]}        # profile derivative on each band
    return sig, slope


def assemble(n: int, eps: float, lam: float, cfg: AnnulusConfig,
             profile: TrapezoidProfile, zgrid: ZGrid,
             coeffs: CoefficientSet | None = None) -> BandOperator:
    """Dense band operator for mode n at rotation rate lam."""
    if n < 1:
        raise ValueError("band operator is defined for modes n >= 1")
    if abs(profile.eps - eps) > 1e-15:
        profile = TrapezoidProfile(cfg, eps, profile.kappa, profile.moll)
    if coeffs is None or abs(coeffs.profile.eps - eps) > 1e-15:
        coeffs = CoefficientSet(cfg, profile)
    z, w = zgrid.z, zgrid.w
    sig, slope = _band_data(profile, zgrid)
    radii = {1: cfg.R1 + eps * z, 2: cfg.R2 + eps * z}
    lam_diag = {band: lam * radii[band] ** 2 + coeffs.swirl_direct(band, z)
                for band in (1, 2)}
    blocks = [[None, None], [None, None]]
    for i in (1, 2):
        ci = eps * radii[i]
        for j in (1, 2):
            dj = radii[j] * slope[j]
            if i == j:
                gl = _green(n, radii[i][:, None], radii[j][None, :],
                            cfg.r1, cfg.r2, "left")
                gr = _green(n, radii[i][:, None], radii[j][None, :],
                            cfg.r1, cfg.r2, "right")
                K = gl * zgrid.w_left + gr * zgrid.w_right
            else:
                branch = "left" if j < i else "right"
                K = _green(n, radii[i][:, None], radii[j][None, :],
                           cfg.r1, cfg.r2, branch) * w[None, :]
            B = ci[:, None] * K * dj[None, :]
            if i == j:
                B[np.arange(zgrid.n), np.arange(zgrid.n)] += lam_diag[i]
            blocks[i - 1][j - 1] = B
    sqrtw = (np.sqrt(w * sig[1]), np.sqrt(w * sig[2]))
    return BandOperator(n=n, eps=eps, lam=lam, zgrid=zgrid, blocks=blocks,
                        sqrt_weights=sqrtw)


def assemble_adjoint(n: int, eps: float, lam: float, cfg: AnnulusConfig,
                     profile: TrapezoidProfile, zgrid: ZGrid,
                     coeffs: CoefficientSet | None = None) -> BandOperator:
    """Adjoint of `assemble` in the slope-weighted L2 pair."""
    if n < 1:
        raise ValueError("band operator is defined for modes n >= 1")
    if abs(profile.eps - eps) > 1e-15:
        profile = TrapezoidProfile(cfg, eps, profile.kappa, profile.moll)
    if coeffs is None or abs(coeffs.profile.eps - eps) > 1e-15:
        coeffs = CoefficientSet(cfg, profile)
    z, w = zgrid.z, zgrid.w
    sig, _ = _band_data(profile, zgrid)
    radii = {1: cfg.R1 + eps * z, 2: cfg.R2 + eps * z}
    lam_diag = {band: lam * radii[band] ** 2 + coeffs.swirl_direct(band, z)
                for band in (1, 2)}
    sign = {1: 1.0, 2: -1.0}
    blocks = [[None, None], [None, None]]
    for j in (1, 2):                     # adjoint output band
        ej = sign[j] * radii[j]
        for i in (1, 2):                 # adjoint input band
            csig = eps * radii[i] * sig[i]
            if i == j:
                gl = _green(n, radii[j][:, None], radii[i][None, :],
                            cfg.r1, cfg.r2, "left")
                gr = _green(n, radii[j][:, None], radii[i][None, :],
                            cfg.r1, cfg.r2, "right")
                K = gl * zgrid.w_left + gr * zgrid.w_right
            else:
                branch = "left" if i < j else "right"
                K = _green(n, radii[j][:, None], radii[i][None, :],
                           cfg.r1, cfg.r2, branch) * w[None, :]
            B = ej[:, None] * K * csig[None, :]
            if i == j:
                B[np.arange(zgrid.n), np.arange(zgrid.n)] += lam_diag[j]
            blocks[j - 1][i - 1] = B
    sqrtw = (np.sqrt(w * sig[1]), np.sqrt(w * sig[2]))
    return BandOperator(n=n, eps=eps, lam=lam, zgrid=zgrid, blocks=blocks,
                        sqrt_weights=sqrtw, adjoint=True)
