"""Propagate the four reference panel regimes and emit series + spectra.

Panels: (eps0, beta, nu) in {(1, 0.02, 0.01), (0, 50, 0.01), (1, 0.02, 1),
(0, 50, 1)} at Omega = 0.75: a slow/fast noise pair at each temperature,
with both regression-only and corrected propagation plus absorption and
emission spectra.
"""

import argparse
from pathlib import Path

from telespin import BathSpec, NoiseSpec, SystemSpec
from telespin.config import ExperimentConfig, GridConfig, RunConfig
from telespin.runner import run_dynamics, run_spectrum

PANELS = [
    ("a", 1.0, 0.02, 0.01),
    ("b", 0.0, 50.0, 0.01),
    ("c", 1.0, 0.02, 1.0),
    ("d", 0.0, 50.0, 1.0),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/panels")
    ap.add_argument("--horizon", type=float, default=40.0)
    ap.add_argument("--omega", type=float, default=0.75)
    ap.add_argument("--seed", type=int, default=20260810)
    args = ap.parse_args()

    for tag, eps0, beta, nu in PANELS:
        cfg = ExperimentConfig(
            bath=BathSpec(kappa=2.0, omega0=1.0, gamma=0.5, beta=beta),
            noise=NoiseSpec(omega_n=args.omega, nu=nu, seed=args.seed),
            system=SystemSpec(epsilon0=eps0, v=1.0, initial_sz=1.0),
            grid=GridConfig(horizon=args.horizon),
            run=RunConfig(mode="both"),
        )
        outdir = Path(args.out) / f"panel_{tag}"
        run_dynamics(cfg, outdir)
        run_spectrum(cfg, outdir / "spectra")
        print(f"panel {tag}: eps0={eps0} beta={beta} nu={nu} -> {outdir}")


if __name__ == "__main__":
    main()
