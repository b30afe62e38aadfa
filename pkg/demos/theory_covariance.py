"""Limiting covariance of linear statistics, three ways.

The Faber basis diagonalises the limit, so the series route gives closed forms
that the two contour routes reproduce to quadrature accuracy.
"""
import numpy as np

from ellipstat.theory import (TestFunction, TheoryMoments, cov_contour, cov_series,
                              cov_upsilon_form, covariance_matrix)

rho = 0.5
mom = TheoryMoments.gaussian(rho)       # sigma^2 = 1 + rho, kappa = 1 + 2 rho^2
faber = [TestFunction.faber(j, rho) for j in range(1, 6)]

C = covariance_matrix(faber, mom, "series")
print(f"Gaussian atoms, rho = {rho}")
print("diag of the Faber covariance:", np.round(np.diag(C), 6))
print("largest off-diagonal entry:  ", np.abs(C - np.diag(np.diag(C))).max())

# a non-polynomial function needs the full machinery
f = TestFunction.exponential(0.25)
print(f"\nVar tr exp(X/4):")
for name, route in [("series", cov_series), ("contour", cov_contour),
                    ("upsilon", cov_upsilon_form)]:
    print(f"  {name:8s} {route(f, f, mom):.12f}")

# the fourth cross moment enters only through a_2
print("\nVar tr X^2 as kappa varies (expect 2 (kappa - rho^2)):")
z2 = TestFunction.monomial(2)
for kappa in (0.25, 1.0, 1.5, 3.0):
    v = cov_series(z2, z2, TheoryMoments(rho, 1.5, kappa))
    print(f"  kappa = {kappa:4.2f}  ->  {v:.6f}")
