"""sigma_min(X - zI) stays bounded below once z is a fixed distance outside the ellipse."""
import numpy as np

from ellipstat.atoms import AtomPairSpec, DiagonalSpec
from ellipstat.harness import ExperimentConfig, run_lsv_experiment

for n in (50, 100, 200):
    cfg = ExperimentConfig(kind="lsv", n=n, samples=5, seed=n, delta=0.1, lsv_levels=6,
                           lsv_angles=12, pair=AtomPairSpec.gaussian(0.5),
                           diag=DiagonalSpec.gaussian(1.5))
    rep = run_lsv_experiment(cfg)
    levels = np.unique(np.round(rep.grid_distance, 12))
    mins = [rep.min_at_distance(d) for d in levels]
    print(f"n = {n:3d}: " + "  ".join(f"d={d:.1f}:{m:.3f}" for d, m in zip(levels, mins)))
    print(f"         at eigenvalues sigma_min <= {rep.eig_sigma_max:.1e}")
