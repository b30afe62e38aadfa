"""The fourth cross moment E[xi^2 eta^2] shifts only the degree-two part of the covariance.

Rademacher pairs have kappa = 1 while Gaussian pairs with the same rho have
kappa = 1 + 2 rho^2, so Var tr X^2 differs between the two ensembles.
"""
from ellipstat.atoms import AtomPairSpec, DiagonalSpec
from ellipstat.harness import ExperimentConfig, run_clt_experiment
from ellipstat.theory import TestFunction

rho = 0.5
fs = (TestFunction.monomial(2), TestFunction.faber(3, rho))
for name, pair in [("gaussian", AtomPairSpec.gaussian(rho)),
                   ("rademacher", AtomPairSpec.rademacher(rho))]:
    cfg = ExperimentConfig(kind="clt", n=120, samples=400, seed=5, pair=pair,
                           diag=DiagonalSpec.gaussian(), functions=fs)
    cov, _ = run_clt_experiment(cfg)
    k = cov.moments.kappa
    print(f"{name:10s} kappa = {k:.2f}")
    for j, f in enumerate(fs):
        print(f"  Var tr {f.label:4s} theory {cov.theory_series[j, j]:.3f}  "
              f"empirical {cov.empirical[j, j]:.3f} +- {cov.stderr[j, j]:.3f}")
