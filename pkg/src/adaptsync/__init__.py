"""Stability of in-phase synchrony in adaptively coupled phase-oscillator networks.

Modules:
    model     parameters, topologies, plasticity rules, Laplacians, sync state
    spectra   per-mode (mu, nu) spectra: DFT, continuum, ring closed forms, Jacobi
    msf       master stability function, criteria, network verdicts, Gaussian maps
    simulate  RK4 simulation and synchronization-error diagnostics
    oracle    dense-Jacobian certification of the reduced spectra
    cli       command-line front end
"""

from .errors import (
    AdaptSyncError,
    CertificationError,
    ExistenceError,
    NumericError,
    ParameterError,
    SizeError,
    StructureError,
)
from .model import (
    CoupledLaplacians,
    ModelParams,
    PlasticityRule,
    SyncState,
    Topology,
    build_gaussian_adjacency,
    build_laplacians,
    build_ring_adjacency,
    ring_range,
    sinusoidal_rule,
    sync_state,
)
from .msf import MsfQuery, StabilityReport, msf_grid, msf_lambda, network_stability
from .spectra import ModeSpectrum, closed_form_ring_spectrum, continuum_spectrum, exact_spectrum

__version__ = "0.1.0"
