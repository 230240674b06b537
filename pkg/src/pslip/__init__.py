"""Phase-slip rates of a parametric oscillator and their spectroscopic response."""
from .params import DriveParams, OscParams
from .action_angle import WellGeometry, convergence_radii, fourier_coeffs, noise_kernel, well_geometry
from .keldysh import EffectiveHamiltonian
from .instanton import (
    InstantonPath,
    action_integral,
    classical_instanton,
    fragility_action,
    phase_portrait,
    quantum_finiteT_instanton,
    quantum_T0_instanton,
    quantum_Tto0_instanton,
)
from .susceptibility import (
    LSSpectrum,
    chi_n,
    chi_n_classical,
    chi_n_quantum,
    compute_spectrum,
    dominant_harmonic,
    exponent_correction,
    resonance_asymptotics,
)
from .bifurcation import BifurcationParams, base_exponent, bif_LS, effective_potential, regime_selector

__version__ = "0.1.0"
