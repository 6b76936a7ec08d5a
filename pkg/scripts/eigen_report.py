"""Eigenpair sweep: rates, residuals, and SVD gaps across modes and widths."""

from annulus_rotor import (TrapezoidProfile, ZGrid, build_eigensolution,
                           default_run_config, validate_kernel)
from annulus_rotor.kernel import operator_residual


def main():
    run = default_run_config()
    cfg = run.annulus
    zg = ZGrid(run.nz)
    print(f"{'m':>2} {'eps':>8} {'lambda':>12} {'residual':>10} "
          f"{'svd gap':>10} {'cosine':>10}")
    for m in (1, 2, 3):
        for eps in (1e-2, 5e-3):
            prof = TrapezoidProfile(cfg, eps, run.kappa)
            eig = build_eigensolution(cfg, prof, m, zg)
            diag = validate_kernel(eig, cfg, prof, M=run.M)
            res = operator_residual(eig, cfg, prof)
            print(f"{m:>2} {eps:>8g} {eig.lam:>12.8f} {res:>10.2e} "
                  f"{diag['gap_ratio']:>10.2e} {diag['cosine']:>10.7f}")


if __name__ == "__main__":
    main()
