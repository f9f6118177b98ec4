"""The phase-III limit: rescaled complex chaos becomes conditionally
Gaussian white noise whose variance is a real chaos at parameter 2 alpha.

With gamma = alpha + i beta inside |alpha| < sqrt(d/2), alpha^2+beta^2 >= d,
the rescaled chaos v(eps) M_eps^(gamma)(f, omega) has, conditionally on the
field, the Gaussian characteristic function e^{-xi^2 Z / 2} with the random
intensity Z = M^(2 alpha)(e^{|gamma|^2 L} f^2).  This script estimates both
sides on the same replicas and shows the sign discrimination of the
intensity weight.
"""

import numpy as np

from gmclab import KernelSpec, Mollifier
from gmclab.analysis import default_xi_grid, paired_cf_discrepancy
from gmclab.chaos import ComplexParam, TestFunction, m_omega
from gmclab.experiments import FinalChaos, FinalIntensity
from gmclab.scaling import classify_phase, v_eps
from gmclab.synth import Grid, LayerSchedule, sample_layers

side = 2.5
grid = Grid(1, 2048, side)
spec = KernelSpec.default(1, domain_side=side)
sched = LayerSchedule.default(grid, t_extra=1.0)
gam = ComplexParam(0.5, 1.3229)
print(f"gamma = {gam.gamma}: region {classify_phase(gam.alpha, gam.beta, 1)}")

R = 1500
ens = sample_layers(spec, grid, sched, R, seed=7)
bump = Mollifier.standard_bump(1)
f = TestFunction.bump(grid)
eps = 8 * grid.h
name = ens.add_filter("eps", bump, eps)

fc = FinalChaos(R, f, [("m", gam, name)])
fi = FinalIntensity(R, f, gam.alpha, gam.abs_sq, spec.L_diag(), [name])
ens.stream([fc, fi])

v = v_eps(eps, bump, gam).value
vm = v * m_omega(fc.values["m"], 0.0)
z = fi.values[name]
print(f"v(eps) = {v:.4e};  E[Z] = {z.mean():.4f};  sd(vM) = {vm.std():.4f}"
      f"  (should be ~ sqrt(E[Z]) = {np.sqrt(z.mean()):.4f})")

xi = default_xi_grid(vm)
res = paired_cf_discrepancy(vm, z, xi, seed=1)
print("\nxi        |LHS-RHS|   3*stderr")
for k in range(len(xi)):
    print(f"{xi[k]:8.3f}  {res['abs_diff'][k]:9.4f}  "
          f"{3*res['stderr'][k]:9.4f}")

res_bad = paired_cf_discrepancy(vm, z * np.exp(4 * 1.0), xi, seed=1)
print(f"\nwrong intensity weight e^(-|g|^2 L): max discrepancy "
      f"{res_bad['abs_diff'].max():.3f} (vs {res['abs_diff'].max():.3f}) "
      "- the + sign in the weight is the one the data supports")
