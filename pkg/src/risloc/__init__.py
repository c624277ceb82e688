"""RIS-assisted 3D localization toolkit.

Simulates narrowband uplink sounding through multiple passive reconfigurable
intelligent surfaces, separates the per-surface reflections with zero-forcing
combining, recovers each reflection's arrival angles with gridless atomic-norm
estimation, maps the bearings to a 3D position, and evaluates the
Fisher-information position error bound for the same scene.
"""

from .anm import (
    AnmSolution,
    SolverOptions,
    Toeplitz2Params,
    atomic_norm_exact,
    regularization_weight,
    solve_anm,
    solve_anm_reference,
    toeplitz2_adjoint,
    toeplitz2_assemble,
)
from .aoa import AoaEstimate, estimate_aoa, gammas_to_angles, kron_factorize, remove_aod, root_music_single
from .crlb import PebReport, efim_angles, fim_channel, fim_position, jacobian_position
from .geometry import (
    AnglePair,
    PathGain,
    Position3D,
    RadioParams,
    UpaLayout,
    angles_between,
    e2e_channel,
    gamma_components,
    pathloss,
    steering_axis,
    steering_upa,
)
from .harness import ExperimentConfig, apply_sweep, load_experiment, run_single_trial, run_sweep
from .locate import direction_vector, ls_intersection, ml_refine
from .sounding import (
    RisSpec,
    SceneConfig,
    SoundingRecord,
    dft_profiles,
    derive_truth,
    load_scene,
    simulate_sounding,
)
from .zf import SeparatedObservation, balance_report, build_bs_response_matrix, separate, zf_weights

__version__ = "0.1.0"
