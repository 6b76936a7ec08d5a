"""Nonlinear rotating-wave functional and branch continuation.

The level sets of the vorticity are written as r = rho + f(rho, theta) on
the two bands.  Prescribing the transported profile along them defines a
vorticity field; the wave condition is the vanishing of

    F[lam, f](rho, theta) = lam (rho + f)^2 / 2 + psi(rho + f, theta)
                            - angular_mean(...)(rho),

where psi solves the stream problem for the rearranged vorticity.  This
module builds the field, evaluates F, checks the linearization against the
band operators, estimates Sobolev distances to the background, and continues
the nontrivial branch in the amplitude with a bordered Newton iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import AnnulusConfig
from .domain import circulation
from .errors import NumericsError
from .kernel import EigenSolution
from .linop import assemble
from .poisson import RadialGrid, solve_full
from .profile import TrapezoidProfile
from .quadrature import ZGrid


@dataclass
class LevelSetPerturbation:
    """Single-mode band displacement f(r, theta) = g(z(r)) cos(m theta).

    g is sampled on the shared z-grid per band (inner, outer); evaluation
    interpolates in z and is exact in theta.
    """

    m: int
    zgrid: ZGrid
    g_inner: np.ndarray
    g_outer: np.ndarray
    cfg: AnnulusConfig
    eps: float

    def __post_init__(self):
        if self.g_inner.shape != (self.zgrid.n,) or \
           self.g_outer.shape != (self.zgrid.n,):
            raise ValueError("band samples must match the z-grid")

    @classmethod
    def from_kernel(cls, eig: EigenSolution, cfg: AnnulusConfig,
                    amplitude: float = 1.0) -> "LevelSetPerturbation":
        h = normalized_kernel(eig)
        return cls(m=eig.m, zgrid=eig.zgrid,
                   g_inner=amplitude * h[0], g_outer=amplitude * h[1],
                   cfg=cfg, eps=eig.eps)

    def profile_at(self, r, band: int) -> np.ndarray:
        R = self.cfg.R1 if band == 1 else self.cfg.R2
        z = (np.asarray(r, dtype=float) - R) / self.eps
        z = np.clip(z, -1.0, 1.0)
        g = self.g_inner if band == 1 else self.g_outer
        return _interp_gauss(self.zgrid, g, z)

    def __call__(self, r, theta, band: int) -> np.ndarray:
        return self.profile_at(r, band) * np.cos(self.m * np.asarray(theta))

    def max_slope(self) -> float:
        d_in = _diff_gauss(self.zgrid, self.g_inner) / self.eps
        d_out = _diff_gauss(self.zgrid, self.g_outer) / self.eps
        return float(max(np.max(np.abs(d_in)), np.max(np.abs(d_out))))


def normalized_kernel(eig: EigenSolution) -> tuple[np.ndarray, np.ndarray]:
    """Kernel element (inner, outer) scaled to unit plain-L2 norm over z."""
    a, b = eig.a, eig.b
    nrm = np.sqrt(float(np.dot(eig.zgrid.w, a ** 2)
                        + np.dot(eig.zgrid.w, b ** 2)))
    sgn = -np.sign(b[np.argmax(np.abs(b))])
    return sgn * a / nrm, sgn * b / nrm


_COEFF_CACHE: dict[int, np.ndarray] = {}


def _coeffs(zgrid: ZGrid, g: np.ndarray) -> np.ndarray:
    """Legendre coefficients via the discrete orthogonality of the grid
    (exact for data of polynomial degree < n)."""
    key = zgrid.n
    if key not in _COEFF_CACHE:
        from numpy.polynomial.legendre import legvander
        P = legvander(zgrid.z, zgrid.n - 1)        # P[i, k]
        scale = (2.0 * np.arange(zgrid.n) + 1.0) / 2.0
        _COEFF_CACHE[key] = scale[:, None] * (P.T * zgrid.w[None, :])
    return _COEFF_CACHE[key] @ g


def _interp_gauss(zgrid: ZGrid, g: np.ndarray, z) -> np.ndarray:
    from numpy.polynomial.legendre import legval
    return legval(np.asarray(z, dtype=float), _coeffs(zgrid, g))


def _diff_gauss(zgrid: ZGrid, g: np.ndarray) -> np.ndarray:
    from numpy.polynomial.legendre import legder, legval
    return legval(zgrid.z, legder(_coeffs(zgrid, g)))


@dataclass
class VorticityField:
    """Vorticity samples on a (radial x uniform angular) tensor grid."""

    grid: RadialGrid
    theta: np.ndarray
    values: np.ndarray

    def mass(self) -> float:
        """Integral over the annulus with the plane area measure."""
        dtheta = self.theta[1] - self.theta[0]
        radial = self.values @ np.full(len(self.theta), dtheta)
        return float(np.dot(self.grid.w, self.grid.r * radial))


def _default_grid(cfg: AnnulusConfig, eps: float, pad: float,
                  nodes=(48, 96, 48, 96, 48)) -> RadialGrid:
    return RadialGrid.for_profile(cfg, eps, nodes, pad=pad)


def vorticity_samples(f: LevelSetPerturbation, profile: TrapezoidProfile,
                      radii: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Transported vorticity sampled on an arbitrary (radii x theta) grid.

    Per theta-column the displaced band is inverted by monotone bisection of
    rho + f(rho, theta) = r; outside the bands the field is piecewise
    constant with the deformed plateau boundaries.
    """
    cfg = f.cfg
    eps = f.eps
    n_theta = len(theta)
    background = 2.0 * cfg.A
    values = np.full((len(radii), n_theta), background)
    cosm = np.cos(f.m * theta)
    slope = f.max_slope()
    if slope >= 1.0:
        raise NumericsError(
            f"level sets fold over: max |d f/d r| = {slope:.3f} >= 1")

    for band, R in ((1, cfg.R1), (2, cfg.R2)):
        lo_edge, hi_edge = R - eps, R + eps
        g_lo = float(f.profile_at(lo_edge, band))
        g_hi = float(f.profile_at(hi_edge, band))
        r_lo = lo_edge + g_lo * cosm
        r_hi = hi_edge + g_hi * cosm
        mask = (radii[:, None] >= r_lo[None, :]) &                (radii[:, None] <= r_hi[None, :])
        ii, jj = np.nonzero(mask)
        if len(ii):
            rho = _invert_map(f, band, radii[ii], cosm[jj])
            values[ii, jj] = background + profile.value(rho)

    # plateau between the deformed band edges
    g_in_hi = f.profile_at(cfg.R1 + eps, 1)
    g_out_lo = f.profile_at(cfg.R2 - eps, 2)
    lo = cfg.R1 + eps + g_in_hi * cosm
    hi = cfg.R2 - eps + g_out_lo * cosm
    plateau = (radii[:, None] > lo[None, :]) & (radii[:, None] < hi[None, :])
    values[plateau] = background + profile.eps
    return values


def build_vorticity(f: LevelSetPerturbation, profile: TrapezoidProfile,
                    grid: RadialGrid | None = None,
                    n_theta: int = 64) -> VorticityField:
    """Transported vorticity on the panel-refined radial grid."""
    cfg = f.cfg
    pad = 1.5 * float(max(np.max(np.abs(f.g_inner)), np.max(np.abs(f.g_outer)),
                          1e-12))
    if grid is None:
        grid = _default_grid(cfg, f.eps, pad)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    values = vorticity_samples(f, profile, grid.r, theta)
    return VorticityField(grid=grid, theta=theta, values=values)


def _invert_map(f: LevelSetPerturbation, band: int, r_targets: np.ndarray,
                cos_m: np.ndarray | float, tol: float = 1e-12) -> np.ndarray:
    """Solve rho + g(rho) cos = r on the band by vectorized bisection.

    cos_m may be a scalar or an array matching r_targets, so an entire
    band (all columns at once) inverts in one batched sweep.
    """
    cfg, eps = f.cfg, f.eps
    R = cfg.R1 if band == 1 else cfg.R2
    lo = np.full_like(r_targets, R - eps, dtype=float)
    hi = np.full_like(r_targets, R + eps, dtype=float)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        val = mid + f.profile_at(mid, band) * cos_m - r_targets
        pos = val > 0.0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.max(hi - lo) < tol:
            break
    return 0.5 * (lo + hi)


@dataclass
class ResidualField:
    """F[lam, f] sampled on (band z-nodes x theta)."""

    theta: np.ndarray
    inner: np.ndarray          # (nz, ntheta)
    outer: np.ndarray

    def sup(self) -> float:
        return float(max(np.max(np.abs(self.inner)), np.max(np.abs(self.outer))))

    def l2(self, zgrid: ZGrid) -> float:
        dtheta = self.theta[1] - self.theta[0]
        s = np.dot(zgrid.w, np.sum(self.inner ** 2, axis=1) * dtheta)
        s += np.dot(zgrid.w, np.sum(self.outer ** 2, axis=1) * dtheta)
        return float(np.sqrt(s))

    def mode(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """cos(m theta) coefficients per band radius."""
        n = len(self.theta)
        cosm = np.cos(m * self.theta)
        return (2.0 / n) * self.inner @ cosm, (2.0 / n) * self.outer @ cosm


def functional_F(lam: float, f: LevelSetPerturbation,
                 profile: TrapezoidProfile,
                 grid: RadialGrid | None = None, n_theta: int = 64,
                 field: VorticityField | None = None) -> ResidualField:
    """Wave residual on the bands for rotation rate lam."""
    cfg = f.cfg
    if field is None:
        field = build_vorticity(f, profile, grid=grid, n_theta=n_theta)
    grid = field.grid
    theta = field.theta
    gamma = circulation(cfg)
    psi = solve_full(field.values, gamma, grid, cfg)
    cosm = np.cos(f.m * theta)
    zg = f.zgrid
    out = {}
    for band, R, g in ((1, cfg.R1, f.g_inner), (2, cfg.R2, f.g_outer)):
        rho = R + f.eps * zg.z
        shift = np.add.outer(rho, np.zeros(len(theta))) + np.outer(g, cosm)
        psibar = _interp_columns(grid, psi, shift)
        vals = lam * shift ** 2 / 2.0 + psibar
        vals -= vals.mean(axis=1, keepdims=True)
        out[band] = vals
    return ResidualField(theta=theta, inner=out[1], outer=out[2])


def _interp_columns(grid: RadialGrid, psi: np.ndarray,
                    targets: np.ndarray) -> np.ndarray:
    """Interpolate psi(:, j) at targets(:, j) per column (cubic splines)."""
    from scipy.interpolate import CubicSpline
    cs = CubicSpline(grid.r, psi, axis=0)
    ntheta = psi.shape[1]
    out = np.empty_like(targets)
    for j in range(ntheta):
        out[:, j] = cs(targets[:, j])[:, j]
    return out


def linearization_check(eig: EigenSolution, cfg: AnnulusConfig,
                        profile: TrapezoidProfile,
                        directions: list | None = None,
                        taus=(1e-4, 5e-5), lam: float | None = None,
                        n_theta: int = 64, seed: int = 0) -> list[dict]:
    """Compare (F[lam, tau h] - F[lam, 0])/tau against the band operator.

    The trivial branch has F[lam, 0] = 0 identically, so the quotient is
    F[lam, tau h]/tau; the operator side is cos(m theta)/r times the
    assembled blocks applied to the band samples of h.
    """
    zg = eig.zgrid
    lam = eig.lam if lam is None else lam
    if directions is None:
        rng = np.random.default_rng(seed)
        directions = []
        for _ in range(5):
            c_in = rng.standard_normal(4)
            c_out = rng.standard_normal(4)
            g_in = sum(c * zg.z ** k for k, c in enumerate(c_in))
            g_out = sum(c * zg.z ** k for k, c in enumerate(c_out))
            directions.append((g_in, g_out))
    op = assemble(eig.m, eig.eps, lam, cfg, profile, zg)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    cosm = np.cos(eig.m * theta)

    def field_norm(inner, outer):
        return np.sqrt(float(np.dot(zg.w, np.mean(inner ** 2, axis=1))
                             + np.dot(zg.w, np.mean(outer ** 2, axis=1))))

    results = []
    for g_in, g_out in directions:
        o1, o2 = op.apply(g_in, g_out)
        lin_inner = np.outer(o1 / (cfg.R1 + eig.eps * zg.z), cosm)
        lin_outer = np.outer(o2 / (cfg.R2 + eig.eps * zg.z), cosm)
        ref = field_norm(lin_inner, lin_outer)
        errs = []
        for tau in taus:
            pert = LevelSetPerturbation(m=eig.m, zgrid=zg,
                                        g_inner=tau * g_in, g_outer=tau * g_out,
                                        cfg=cfg, eps=eig.eps)
            res = functional_F(lam, pert, profile, n_theta=n_theta)
            err = field_norm(res.inner / tau - lin_inner,
                             res.outer / tau - lin_outer)
            errs.append(err / ref)
        results.append({"taus": list(taus), "rel_errors": errs, "ref": ref})
    return results


def sobolev_distance(profile: TrapezoidProfile, s: float,
                     f: LevelSetPerturbation | None = None,
                     n_theta: int = 64, nz: int = 64) -> dict:
    """Band-quadrature Sobolev seminorms of the vorticity deviation.

    Returns the L2 deviation, the first/second band seminorms (with the
    level-set Jacobian factors when a perturbation is given), and the
    interpolated estimate for exponent s in [0, 3/2):
    |w|_{H^s} <= |w|_{H^1}^(2-s) |w|_{H^2}^(s-1) for s in [1, 2].
    """
    if not 0.0 <= s < 1.5:
        raise ValueError("Sobolev exponent must lie in [0, 3/2)")
    cfg = profile.cfg
    e = profile.eps
    zg = ZGrid(nz)

    # L2 of the deviation from the constant background
    grid = RadialGrid.for_profile(cfg, e, (24, 48, 24, 48, 24))
    varpi = profile.value(grid.r)
    l2 = np.sqrt(2.0 * np.pi * float(np.dot(grid.w, varpi ** 2)))

    if f is None:
        theta = np.zeros(1)
        ang_w = np.array([2.0 * np.pi])
    else:
        theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
        ang_w = np.full(n_theta, 2.0 * np.pi / n_theta)

    h1_sq = 0.0
    h2_sq = 0.0
    band_h1 = {}
    band_h2_curv = {}
    for band, R in ((1, cfg.R1), (2, cfg.R2)):
        rho = R + e * zg.z
        dp = profile.derivative(rho)[:, None]
        dpp = profile.second_derivative(rho)[:, None]
        if f is None:
            gv = np.zeros(zg.n)
            gz = np.zeros(zg.n)
            gzz = np.zeros(zg.n)
            cosm = np.ones(1)
            sinm = np.zeros(1)
            m = 1
        else:
            g = f.g_inner if band == 1 else f.g_outer
            gv = _interp_gauss(f.zgrid, g, zg.z)
            gz = _diff_gauss(zg, gv)
            gzz = _diff_gauss(zg, gz)
            cosm = np.cos(f.m * theta)
            sinm = np.sin(f.m * theta)
            m = f.m
        fr = np.outer(gz / e, cosm)
        frr = np.outer(gzz / e ** 2, cosm)
        ft = -m * np.outer(gv, sinm)
        jac = 1.0 + fr
        if np.min(jac) <= 0.0:
            raise NumericsError("level sets fold over in the Sobolev estimate")
        rr = rho[:, None] + np.outer(gv, cosm)
        wr = dp / jac
        wt = -ft * dp / jac
        grad_sq = wr ** 2 + (wt / rr) ** 2
        wrr = (dpp - frr * wr) / jac ** 2
        h1_band = float(np.dot(zg.w * e, (grad_sq * jac) @ ang_w))
        curv_band = float(np.dot(zg.w * e, (wrr ** 2 * jac) @ ang_w))
        band_h1[band] = h1_band / (2.0 * np.pi)
        band_h2_curv[band] = curv_band / (2.0 * np.pi)
        h1_sq += h1_band
        h2_sq += curv_band + h1_band
    h1 = np.sqrt(h1_sq)
    h2 = np.sqrt(h2_sq)
    if s <= 1.0:
        interp = l2 ** (1.0 - s) * h1 ** s
    else:
        interp = h1 ** (2.0 - s) * h2 ** (s - 1.0)
    return {"l2": l2, "h1": h1, "h2": h2, "s": s, "estimate": interp,
            "band_h1_sq": band_h1, "band_h2_curv_sq": band_h2_curv}


def h2_band_bound(profile: TrapezoidProfile) -> float:
    """Closed-form bound for the squared band seminorm of the curvature:
    (4 / (eps kappa)) * sup(bump)^2."""
    return 4.0 / (profile.eps * profile.kappa) * profile.moll.sup ** 2


@dataclass
class BranchPoint:
    sigma: float
    lam: float
    g_inner: np.ndarray
    g_outer: np.ndarray
    residual: float
    newton_iters: int


def continue_branch(eig: EigenSolution, cfg: AnnulusConfig,
                    profile: TrapezoidProfile, sigma_target: float,
                    steps: int = 4, n_theta: int = 48,
                    tol: float = 1e-9, max_newton: int = 12,
                    zgrid: ZGrid | None = None,
                    verbose: bool = False) -> list[BranchPoint]:
    """Continue the nontrivial branch to the target amplitude.

    Unknowns are the mode-m band samples of f plus the rate; the bordered
    system adds the amplitude constraint <f, h> = sigma against the
    normalized kernel element h.  Newton with a finite-difference Jacobian
    (frozen per amplitude step, rebuilt on stagnation) and step halving.
    An optional coarser collocation grid shrinks the Jacobian.
    """
    zg = zgrid if zgrid is not None else eig.zgrid
    h_in, h_out = normalized_kernel(eig)
    if zg.n != eig.zgrid.n:
        h_in = _interp_gauss(eig.zgrid, h_in, zg.z)
        h_out = _interp_gauss(eig.zgrid, h_out, zg.z)
        nrm = np.sqrt(float(np.dot(zg.w, h_in ** 2)
                            + np.dot(zg.w, h_out ** 2)))
        h_in, h_out = h_in / nrm, h_out / nrm
    w2 = np.concatenate([zg.w, zg.w])
    hvec = np.concatenate([h_in, h_out])
    n = zg.n

    def residual_vec(gvec: np.ndarray, lam: float, sigma: float) -> np.ndarray:
        pert = LevelSetPerturbation(m=eig.m, zgrid=zg, g_inner=gvec[:n],
                                    g_outer=gvec[n:], cfg=cfg, eps=eig.eps)
        res = functional_F(lam, pert, profile, n_theta=n_theta)
        f_in, f_out = res.mode(eig.m)
        constraint = float(np.dot(w2, hvec * gvec)) - sigma
        return np.concatenate([f_in, f_out, [constraint]])

    points: list[BranchPoint] = []
    gvec = np.zeros(2 * n)
    lam = eig.lam
    sigmas = sigma_target * (np.arange(1, steps + 1) / steps)
    for sigma in sigmas:
        guess = np.concatenate([gvec + (sigma - (points[-1].sigma if points
                                                 else 0.0)) * hvec, [lam]])
        x = guess.copy()
        ok = False
        J = None
        for it in range(max_newton):
            r = residual_vec(x[:-1], x[-1], sigma)
            rn = np.linalg.norm(r, np.inf)
            if verbose:
                print(f"  sigma={sigma:g} newton {it}: |r|={rn:.3e}")
            if rn <= tol:
                ok = True
                break
            if J is None:
                J = _fd_jacobian(residual_vec, x, sigma)
            try:
                dx = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError as exc:
                raise NumericsError(f"singular branch Jacobian: {exc}")
            # step halving safeguard; rebuild the Jacobian on stagnation
            step = 1.0
            for _ in range(5):
                cand = x + step * dx
                rc = np.linalg.norm(residual_vec(cand[:-1], cand[-1], sigma),
                                    np.inf)
                if rc < rn:
                    x = cand
                    break
                step /= 2.0
            else:
                if J is not None and it + 1 < max_newton:
                    J = _fd_jacobian(residual_vec, x, sigma)
                    continue
                raise NumericsError("branch Newton diverged after 5 halvings")
        if not ok:
            r = residual_vec(x[:-1], x[-1], sigma)
            if np.linalg.norm(r, np.inf) > tol:
                raise NumericsError(
                    f"branch Newton did not converge at sigma={sigma:g}")
        gvec, lam = x[:-1], float(x[-1])
        points.append(BranchPoint(sigma=float(sigma), lam=lam,
                                  g_inner=gvec[:n].copy(),
                                  g_outer=gvec[n:].copy(),
                                  residual=float(np.linalg.norm(
                                      residual_vec(gvec, lam, sigma), np.inf)),
                                  newton_iters=it + 1))
    return points


def _fd_jacobian(residual_vec, x: np.ndarray, sigma: float,
                 h: float = 1e-7) -> np.ndarray:
    base = residual_vec(x[:-1], x[-1], sigma)
    J = np.empty((len(base), len(x)))
    for k in range(len(x)):
        xp = x.copy()
        xp[k] += h
        J[:, k] = (residual_vec(xp[:-1], xp[-1], sigma) - base) / h
    return J
