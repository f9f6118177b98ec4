"""Kernels of the log-correlated field and their scalar functionals.

The composite covariance is K(x,y) = K0(x,y) + int_0^inf kappa(e^t|x-y|) dt,
which matches log(1/|x-y|) up to a bounded remainder.  This script walks
through the scale kernel kappa, the truncated kernels K_t, the mollified
kernel K_eps, and the scalar constants (j_kappa, ell_kappa, ell_theta) that
enter the normalizations v(eps) and v_bar(t).
"""

import numpy as np

from gmclab import (
    KernelSpec, Mollifier, ScaleKernel,
    ell_kappa, ell_theta, j_kappa, kernel_K_eps, kernel_K_t,
)
from gmclab.chaos import ComplexParam
from gmclab.scaling import v_bar, v_eps, xlink_limit_check

spec = KernelSpec.default(1)          # triangle kappa, K0 = 0
tri = spec.kappa
bump = Mollifier.standard_bump(1)

print("== scale kernel (triangle) ==")
for r in (0.0, 0.5, 1.0, 2.0):
    print(f"  kappa({r}) = {tri(r):.4f}")
print(f"  j_kappa = {j_kappa(tri):.6f}   (exactly 1 for the triangle)")
print(f"  ell_kappa(e) = {ell_kappa(tri, np.e):.6f}   (= log r for r >= 1)")
print(f"  ell_kappa(1/2) = {ell_kappa(tri, 0.5):.6f}  (= r - 1 for r <= 1)")

print("\n== K_t approaches the log kernel as t grows ==")
rho = 0.05
for t in (1.0, 3.0, 6.0, 12.0):
    kt = kernel_K_t(spec, 0.0, rho, t)
    print(f"  K_t(rho={rho}, t={t:4.1f}) = {kt:7.4f}   "
          f"log(1/rho) = {np.log(1/rho):.4f}")

print("\n== mollified kernel K_eps vs log(1/(rho v eps)) ==")
for eps in (0.2, 0.05, 0.01):
    for rho in (0.0, 0.02, 0.2):
        k = kernel_K_eps(KernelSpec.default(1, domain_side=np.inf), bump,
                         1.0, 1.0 + rho, eps)
        print(f"  eps={eps:5.2f} rho={rho:5.2f}: K_eps = {k:7.4f},  "
              f"log = {np.log(1/max(rho, eps)):7.4f}")

print("\n== ell_theta: the doubly mollified log ==")
for z in (0.0, 0.5, 2.0, 10.0):
    print(f"  ell_theta({z:4.1f}) = {ell_theta(bump, z):8.5f}   "
          f"log(1/|z|) = {np.log(1/z) if z else np.inf:8.5f}")

print("\n== normalization constants in phase III ==")
gam = ComplexParam(0.5, 1.3229)       # |gamma|^2 ~ 2 > d = 1
print(f"  gamma = {gam.gamma}, |gamma|^2 = {gam.abs_sq:.4f}")
vb = v_bar(8.0, tri, gam)
print(f"  v_bar(t=8) = {vb.value:.6e}  (integral {vb.integral:.6f}, "
      f"e^2+1 = {np.e**2+1:.6f})")
ve = v_eps(0.01, bump, gam)
print(f"  v(eps=0.01) = {ve.value:.6e}  (ell_theta integral "
      f"{ve.integral:.6f})")

print("\n== the bracket-normalization limit identity ==")
lhs, rhs = xlink_limit_check(12.0, tri, gam)
print(f"  v_bar(t)^2 |g|^2 int_0^t a(s) ds = {lhs:.6f}")
print(f"  2 e^(-|g|^2 j_kappa)             = {rhs:.6f}")
print(f"  gap at t = 12: {abs(lhs-rhs):.2e}")
