"""Sobolev-distance scaling of the profile vorticity in the band width."""

import numpy as np

from annulus_rotor import TrapezoidProfile, default_run_config, sobolev_distance
from annulus_rotor.nonlinear import h2_band_bound


def main():
    run = default_run_config()
    cfg = run.annulus
    eps_list = (4e-2, 2e-2, 1e-2, 5e-3, 2.5e-3)
    print(f"{'eps':>9} {'L2':>12} {'H1':>12} {'H2':>12} "
          f"{'band curv^2':>12} {'its bound':>12}")
    h1 = []
    for eps in eps_list:
        prof = TrapezoidProfile(cfg, eps, run.kappa)
        out = sobolev_distance(prof, 1.0)
        bound = h2_band_bound(prof)
        curv = max(out["band_h2_curv_sq"].values())
        h1.append(out["h1"])
        print(f"{eps:>9g} {out['l2']:>12.5e} {out['h1']:>12.5e} "
              f"{out['h2']:>12.5e} {curv:>12.5e} {bound:>12.5e}")
    slope = np.polyfit(np.log(eps_list), np.log(h1), 1)[0]
    print(f"fitted H1 slope in eps: {slope:.4f} (expected 1/2)")


if __name__ == "__main__":
    main()
