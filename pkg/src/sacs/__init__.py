"""Adiabatic preparation of coherent superpositions in a three-state ladder.

Simulator for Stark-assisted coherent superposition (SACS) and the related
adiabatic protocols (STIRAP, F-STIRAP, two-photon half-SCRAP): RWA
Hamiltonians, adiabatic eigensystems, unitary time propagation, mercury
spectroscopy conversions, parameter sweeps and level-line extraction.
"""

from ._version import __version__
from .atomdata import (DataFileError, PhysicsError, RowCheck, StarkContext,
                       TransitionRecord, dipole_from_einstein,
                       effective_two_photon_rabi, level_energies,
                       load_transition_table, mercury_stark_context,
                       rabi_from_intensity, stark_shift_from_intensity,
                       validate_table)
from .pulses import (PulseEnvelope, ZERO_ENVELOPE, as_envelope,
                     envelope_peak_bound, envelope_support, envelope_value,
                     gaussian_pulse, sin2_pulse)
from .quantum import (AdiabaticFrame, HamiltonianParams, build_hamiltonian,
                      dark_state, eigensystem, eigvals3, initial_frame,
                      nonadiabatic_coupling, spectral_norm3, track_adiabatic)
from .propagate import (StepSizeError, TimeGrid, Trajectory,
                        evolve_final_states, final_populations, propagate,
                        step, step_propagators, trajectory_to_csv,
                        uniform_grid)
from .protocols import (FwmContext, FwmSource, ScenarioConfig,
                        SuperpositionReport, analyze_final, default_grid,
                        fwm_source, half_scrap_detuning,
                        half_scrap_mixing_angle, hamiltonian_series,
                        make_half_scrap, make_sacs, make_stirap,
                        sacs_optimal_peaks, solve_half_scrap_readout)
from .sweeps import (Axis, EmptyPathError, ParameterPath, SweepGrid,
                     contour_sweep, detuning_scan, eigen_surfaces,
                     gap_surface, grid_to_csv, grid_to_json, level_line,
                     path_to_csv, scenario_path, weight_control_scan)

__all__ = [name for name in dir() if not name.startswith("_")]
