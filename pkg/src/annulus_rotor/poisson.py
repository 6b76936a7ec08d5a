"""Modal Poisson solves on the annulus.

The stream problem -(lap) psi = omega with psi(r1)=0, psi(r2)=gamma is split
into Fourier modes in the angle.  Mode zero integrates the radial ODE in
closed form; modes n >= 1 use the explicit annulus Green's kernel

    G_n(r, s) = - S_n(min/r1) S_n(r2/max) / (n S_n(r2/r1)),
    S_n(x) = sinh(n log x),

evaluated in log space so arbitrary mode numbers stay finite.  An independent
second-order finite-difference boundary-value solver is provided as an
oracle; it shares no code with the Green's route.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os

import numpy as np
from scipy.linalg import solve_banded

from .config import AnnulusConfig
from .errors import NumericsError, OutOfDomainError
from .quadrature import indefinite_weights, lobatto_rule


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("ANNULUS_ROTOR_THREADS", "1")))
    except ValueError:
        return 1


def sn_cn(n: int, x):
    """Auxiliary hyperbolic pair (sinh(n log x), cosh(n log x)).

    Uses the power form for moderate exponents and a guarded log-space
    branch once n |log x| would overflow.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise OutOfDomainError("sn_cn requires x > 0")
    y = n * np.log(x)
    big = np.abs(y) > 700.0
    if not np.any(big):
        return np.sinh(y), np.cosh(y)
    s = np.empty_like(y)
    c = np.empty_like(y)
    s[~big] = np.sinh(y[~big])
    c[~big] = np.cosh(y[~big])
    # values overflow float64 here; callers needing ratios should work in
    # log space (see greens_kernel); keep the sign and saturate
    s[big] = np.sign(y[big]) * np.inf
    c[big] = np.inf
    return s, c


def _log_sn(n: int, logx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """log |S_n| and sign for S_n = sinh(n logx), stable for any n."""
    y = n * logx
    ay = np.abs(y)
    small = ay < 30.0
    out = np.empty_like(ay)
    out[small] = np.log(np.abs(np.sinh(ay[small])) + 1e-300)
    out[~small] = ay[~small] - np.log(2.0) + np.log1p(-np.exp(-2 * ay[~small]))
    return out, np.sign(y)


def greens_kernel(n: int, r: np.ndarray, s: np.ndarray,
                  r1: float, r2: float) -> np.ndarray:
    """G_n(r, s) for the homogeneous-Dirichlet modal problem (n >= 1).

    Symmetric, nonpositive, with a derivative kink on the diagonal.
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    lo = np.log(np.minimum(r, s) / r1)
    hi = np.log(r2 / np.maximum(r, s))
    full = np.log(r2 / r1)
    la, _ = _log_sn(n, lo)
    lb, _ = _log_sn(n, hi)
    lc, _ = _log_sn(n, np.asarray(full))
    return -np.exp(la + lb - lc) / n


@dataclass
class RadialGrid:
    """Panel-refined Lobatto collocation grid on [r1, r2].

    Panels split at the two band boundaries so integrands stay smooth per
    panel; every panel carries its own spectral quadrature and indefinite
    integration weights.  Band edges are nodes (Lobatto endpoints).
    """

    edges: np.ndarray
    nodes_per_panel: tuple
    r: np.ndarray = field(init=False, repr=False)
    w: np.ndarray = field(init=False, repr=False)
    panel_slices: list = field(init=False, repr=False)
    _panel_wleft: list = field(init=False, repr=False)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        if len(self.nodes_per_panel) != len(self.edges) - 1:
            raise ValueError("need one node count per panel")
        counts = [int(n) for n in self.nodes_per_panel]
        total = sum(counts) - (len(counts) - 1)      # shared panel endpoints
        self.r = np.empty(total)
        self.w = np.zeros(total)
        self.panel_slices = []
        self._panel_wleft = []
        start = 0
        for (a, b), npan in zip(zip(self.edges[:-1], self.edges[1:]), counts):
            x, w = lobatto_rule(npan)
            half = 0.5 * (b - a)
            idx = np.arange(start, start + npan)
            self.panel_slices.append(idx)
            self._panel_wleft.append(indefinite_weights(x, w) * half)
            self.r[idx] = a + half * (x + 1.0)
            self.w[idx] += half * w                  # shared node accumulates
            start += npan - 1
        if not np.all(np.diff(self.r) > 0):
            raise NumericsError("radial grid nodes are not strictly increasing")

    @classmethod
    def for_profile(cls, cfg: AnnulusConfig, eps: float,
                    nodes_per_panel=(64, 128, 64, 128, 64),
                    pad: float = 0.0) -> "RadialGrid":
        e = eps + pad
        edges = [cfg.r1, cfg.R1 - e, cfg.R1 + e, cfg.R2 - e, cfg.R2 + e, cfg.r2]
        return cls(np.array(edges), tuple(nodes_per_panel))

    @property
    def n(self) -> int:
        return len(self.r)

    def integrate(self, fvals: np.ndarray) -> float:
        return float(np.dot(self.w, fvals))

    def cumulative(self, fvals: np.ndarray) -> np.ndarray:
        """Values of int_{r1}^{r_j} f at every node (spectral per panel)."""
        out = np.empty_like(fvals, dtype=float)
        offset = 0.0
        for idx, wl in zip(self.panel_slices, self._panel_wleft):
            out[idx] = offset + wl @ fvals[idx]
            offset = out[idx][-1]      # wl[-1] integrates to the panel edge
        return out

    def refine(self) -> "RadialGrid":
        return RadialGrid(self.edges, tuple(2 * int(n) for n in self.nodes_per_panel))

    def _diff_matrices(self):
        if not hasattr(self, "_diffs"):
            mats = []
            for idx in self.panel_slices:
                mats.append(_bary_diff_matrix(self.r[idx]))
            self._diffs = mats
        return self._diffs

    def derivative(self, fvals: np.ndarray) -> np.ndarray:
        """Spectral radial derivative (per panel, averaged at shared nodes)."""
        fvals = np.asarray(fvals, dtype=float)
        out = np.zeros(fvals.shape, dtype=float)
        counts = np.zeros(len(self.r))
        for idx, D in zip(self.panel_slices, self._diff_matrices()):
            out[idx] += D @ fvals[idx]
            counts[idx] += 1
        shape = (-1,) + (1,) * (fvals.ndim - 1)
        return out / counts.reshape(shape)

    def interpolate(self, fvals: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Barycentric interpolation of nodal data at points x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(x.shape + fvals.shape[1:], dtype=fvals.dtype)
        panel_of = np.clip(np.searchsorted(self.edges, x, side="right") - 1,
                           0, len(self.panel_slices) - 1)
        for p, idx in enumerate(self.panel_slices):
            sel = panel_of == p
            if not np.any(sel):
                continue
            out[sel] = _bary_interp(self.r[idx], fvals[idx], x[sel])
        return out


def _bary_weights(x: np.ndarray) -> np.ndarray:
    """Barycentric weights, computed scale-invariantly in log space."""
    n = len(x)
    scale = 4.0 / (x[-1] - x[0])
    logs = np.zeros(n)
    signs = np.ones(n)
    for i in range(n):
        d = scale * (x[i] - np.delete(x, i))
        logs[i] = -np.sum(np.log(np.abs(d)))
        signs[i] = np.prod(np.sign(d))
    logs -= np.max(logs)
    return signs * np.exp(logs)


def _bary_diff_matrix(x: np.ndarray) -> np.ndarray:
    b = _bary_weights(x)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (b[None, :] / b[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -np.sum(D, axis=1))
    return D


def _bary_interp(xn: np.ndarray, fn: np.ndarray, x: np.ndarray) -> np.ndarray:
    b = _bary_weights(xn)
    diff = x[:, None] - xn[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-15)
    diff[exact] = 1.0
    wq = b[None, :] / diff
    num = wq @ fn
    den = np.sum(wq, axis=1)
    shape = (-1,) + (1,) * (fn.ndim - 1)
    out = num / den.reshape(shape)
    hit_rows, hit_cols = np.nonzero(exact)
    out[hit_rows] = fn[hit_cols]
    return out


@dataclass
class ModalField:
    """Radial coefficient array of a single Fourier mode."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("mode index must be nonnegative")


def solve_mode(n: int, g: np.ndarray | ModalField, grid: RadialGrid,
               r1: float, r2: float) -> np.ndarray:
    """Solve f'' + f'/r - (n/r)^2 f = g with f(r1) = f(r2) = 0 (n >= 1).

    Writes f(r) = -[S_n(r2/r) L(r) + S_n(r/r1) R(r)] / (n S_n(r2/r1)) with
    L(r) = int_{r1}^{r} S_n(s/r1) s g ds and R(r) the mirrored tail; the
    partial integrals are re-anchored at every target node through the
    panel indefinite-integration weights, so the kernel kink at s = r never
    crosses a quadrature interval.
    """
    if n < 1:
        raise ValueError("solve_mode handles n >= 1; use solve_axisymmetric")
    gv = g.values if isinstance(g, ModalField) else np.asarray(g, dtype=float)
    if gv.shape != grid.r.shape:
        raise NumericsError("modal field length does not match the grid")
    r = grid.r
    full = float(np.log(r2 / r1))
    if n * full > 600.0:
        raise NumericsError(f"mode {n} exceeds the stable range of the "
                            "Green solve; scale the ratio r2/r1 or cap modes")
    logx = np.log(r / r1)
    sn_lo = np.sinh(n * logx)                  # S_n(r/r1)
    sn_hi = np.sinh(n * (full - logx))         # S_n(r2/r)
    sn_full = np.sinh(n * full)
    A = sn_lo * r * gv                         # integrand of L
    B = sn_hi * r * gv                         # integrand of R
    L = np.empty_like(gv)
    R = np.empty_like(gv)
    # panel totals once, then per-node partials via the W matrices
    totals_A = [float(np.dot(wl[-1], A[idx]))
                for idx, wl in zip(grid.panel_slices, grid._panel_wleft)]
    totals_B = [float(np.dot(wl[-1], B[idx]))
                for idx, wl in zip(grid.panel_slices, grid._panel_wleft)]
    pref_A = np.concatenate(([0.0], np.cumsum(totals_A)))
    suff_B = np.concatenate((np.cumsum(totals_B[::-1])[::-1], [0.0]))
    for p, (idx, wl) in enumerate(zip(grid.panel_slices, grid._panel_wleft)):
        partA = wl @ A[idx]
        partB = wl @ B[idx]
        L[idx] = pref_A[p] + partA
        R[idx] = suff_B[p + 1] + (totals_B[p] - partB)
    f = -(sn_hi * L + sn_lo * R) / (n * sn_full)
    f[0] = 0.0
    f[-1] = 0.0
    return f


def solve_axisymmetric(grid: RadialGrid, w0: np.ndarray, gamma: float,
                       r1: float, r2: float) -> np.ndarray:
    """Solve -(f'' + f'/r) = w0 with f(r1) = 0, f(r2) = gamma."""
    w0 = np.asarray(w0, dtype=float)
    V = grid.cumulative(grid.r * w0)           # int_{r1}^{r} t w0(t) dt
    U = grid.cumulative(V / grid.r)            # int_{r1}^{r} V(s)/s ds
    logr = np.log(r2 / r1)
    C = (gamma + U[-1]) / logr
    return C * np.log(grid.r / r1) - U


def axisymmetric_prime(grid: RadialGrid, w0: np.ndarray, gamma: float,
                       r1: float, r2: float) -> np.ndarray:
    """Radial derivative of the axisymmetric solution (closed form)."""
    w0 = np.asarray(w0, dtype=float)
    V = grid.cumulative(grid.r * w0)
    U_end = grid.integrate(V / grid.r)
    C = (gamma + U_end) / np.log(r2 / r1)
    return C / grid.r - V / grid.r


def solve_full(omega: np.ndarray, gamma: float, grid: RadialGrid,
               cfg: AnnulusConfig, n_max: int | None = None) -> np.ndarray:
    """Solve the stream problem for omega sampled on (radial x angular) grid.

    omega has shape (Nr, Ntheta) on a uniform angular grid; returns psi of
    the same shape with psi(r1, .) = 0 and psi(r2, .) = gamma.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.shape[0] != grid.n:
        raise NumericsError("omega radial dimension does not match the grid")
    ntheta = omega.shape[1]
    what = np.fft.rfft(omega, axis=1)
    kmax = what.shape[1] - 1 if n_max is None else min(n_max, what.shape[1] - 1)
    psi_hat = np.zeros_like(what)
    psi_hat[:, 0] = solve_axisymmetric(grid, what[:, 0].real, gamma * ntheta,
                                       cfg.r1, cfg.r2)

    def one_mode(k):
        # -(lap) psi = omega  =>  modal ODE source is -omega_k
        re = solve_mode(k, -what[:, k].real, grid, cfg.r1, cfg.r2)
        im = solve_mode(k, -what[:, k].imag, grid, cfg.r1, cfg.r2)
        return k, re + 1j * im

    modes = range(1, kmax + 1)
    nthreads = thread_count()
    if nthreads > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            for k, vals in pool.map(one_mode, modes):
                psi_hat[:, k] = vals
    else:
        for k in modes:
            _, psi_hat[:, k] = one_mode(k)
    return np.fft.irfft(psi_hat, n=ntheta, axis=1)


def fd_bvp_solve(n: int, g_fn, r1: float, r2: float, n_nodes: int = 1024,
                 grid_nodes: np.ndarray | None = None,
                 richardson: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Independent second-order FD oracle for the modal BVP (n >= 1).

    Three-point scheme on a (possibly nonuniform) node set; `g_fn` is a
    callable so the oracle controls its own sampling.  Optional Richardson
    pass solves again on a doubled grid and extrapolates.
    """
    if grid_nodes is None:
        grid_nodes = np.linspace(r1, r2, n_nodes)
    r = np.asarray(grid_nodes, dtype=float)
    keep = np.concatenate(([True], np.diff(r) > 1e-12 * (r[-1] - r[0])))
    r = r[keep]

    def solve_on(rv):
        N = len(rv)
        h_l = rv[1:-1] - rv[:-2]
        h_r = rv[2:] - rv[1:-1]
        mid = rv[1:-1]
        # f'' and f' by nonuniform 3-point formulas
        a = 2.0 / (h_l * (h_l + h_r)) - 1.0 / (mid * (h_l + h_r)) * (h_r / h_l)
        c = 2.0 / (h_r * (h_l + h_r)) + 1.0 / (mid * (h_l + h_r)) * (h_l / h_r)
        b = (-2.0 / (h_l * h_r)
             + (h_r / h_l - h_l / h_r) / (mid * (h_l + h_r))
             - (n / mid) ** 2)
        band = np.zeros((3, N - 2))
        band[0, 1:] = c[:-1]
        band[1, :] = b
        band[2, :-1] = a[1:]
        rhs = g_fn(mid)
        inner = solve_banded((1, 1), band, rhs)
        full = np.zeros(N)
        full[1:-1] = inner
        return full

    coarse = solve_on(r)
    if not richardson:
        return r, coarse
    fine_nodes = np.sort(np.concatenate([r, 0.5 * (r[:-1] + r[1:])]))
    fine = solve_on(fine_nodes)
    fine_on_coarse = fine[::2]
    return r, (4.0 * fine_on_coarse - coarse) / 3.0
