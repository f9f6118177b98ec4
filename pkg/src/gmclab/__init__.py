"""gmclab: desk-scale laboratory for complex Gaussian multiplicative chaos.

Builds log-correlated Gaussian fields from star-scale invariant kernels,
forms their real and complex chaos measures, and statistically verifies the
phase-III white-noise limit with a random GMC intensity.
"""

from .kernels import (
    KernelSpec,
    Mollifier,
    ScaleKernel,
    SmoothKernel,
    default_scale_kernel,
    ell_kappa,
    ell_theta,
    eval_kappa,
    j_kappa,
    kernel_K_eps,
    kernel_K_t,
    kernel_Q_t,
)
from .chaos import ComplexParam, TestFunction, gmc, intensity_functional, m_omega
from .scaling import classify_phase, v_bar, v_eps
from .synth import (
    FieldEnsemble,
    Grid,
    LayerSchedule,
    cholesky_oracle,
    mollify,
    pair_with_measure,
    sample_layers,
)

__version__ = "0.1.0"

__all__ = [
    "KernelSpec", "Mollifier", "ScaleKernel", "SmoothKernel",
    "default_scale_kernel", "ell_kappa", "ell_theta", "eval_kappa",
    "j_kappa", "kernel_K_eps", "kernel_K_t", "kernel_Q_t",
    "ComplexParam", "TestFunction", "gmc", "intensity_functional", "m_omega",
    "classify_phase", "v_bar", "v_eps",
    "FieldEnsemble", "Grid", "LayerSchedule", "cholesky_oracle", "mollify",
    "pair_with_measure", "sample_layers",
]
