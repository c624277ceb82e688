"""Uplink sounding simulation: scene configuration, DFT reflection profiles,
ground-truth channel parameters, and the noisy observation matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import yaml

from .geometry import (
    AnglePair,
    PathGain,
    Position3D,
    RadioParams,
    UpaLayout,
    angles_between,
    path_gain,
)


@dataclass(frozen=True)
class RisSpec:
    position: Position3D
    layout: UpaLayout

    def __post_init__(self):
        if self.layout.plane == "xy":
            raise ValueError("RIS panels mount on xz or yz planes")


@dataclass(frozen=True)
class SceneConfig:
    bs_position: Position3D
    bs_layout: UpaLayout
    ris: tuple[RisSpec, ...]
    ue_position: Position3D
    radio: RadioParams
    T: int

    def __post_init__(self):
        if len(self.ris) < 2:
            raise ValueError("at least 2 RISs are required for a 3D fix")
        if self.bs_layout.size < len(self.ris):
            raise ValueError("ZF needs at least as many BS antennas as RISs")
        if self.T < 1:
            raise ValueError("training slots must be >= 1")
        positions = [r.position.as_array() for r in self.ris]
        for i in range(len(positions)):
            for j in range(i + 1, len(positions)):
                if np.allclose(positions[i], positions[j]):
                    raise ValueError(f"RIS {i} and {j} share a position")

    @property
    def num_ris(self) -> int:
        return len(self.ris)


@dataclass(frozen=True)
class PathTruth:
    """Ground-truth parameters of one UE -> RIS -> BS path."""

    gain: PathGain
    bs_aoa: AnglePair     # arrival at the BS, direction BS -> RIS
    ris_aod: AnglePair    # departure from the RIS toward the BS
    ris_aoa: AnglePair    # arrival at the RIS, direction RIS -> UE
    facing_side: int      # sign of the out-of-plane component toward BS/UE


@dataclass(frozen=True)
class SoundingRecord:
    Y: np.ndarray                      # N x T observations
    schedule: tuple[np.ndarray, ...]   # per-RIS L x T profile matrices
    truth: tuple[PathTruth, ...]
    rng_seed: object


def dft_profiles(L: int, T: int, seed=None) -> np.ndarray:
    """L x T profile schedule from DFT-matrix columns, repeated cyclically
    when T > L.  ``seed`` is accepted for interface symmetry with random
    schedules but unused: the DFT schedule is deterministic.
    """
    k = np.arange(L)[:, None]
    cols = np.arange(T)[None, :] % L
    return np.exp(-2j * np.pi * k * cols / L)


def default_schedule(scene: SceneConfig, seed=None) -> tuple[np.ndarray, ...]:
    return tuple(dft_profiles(r.layout.size, scene.T, seed) for r in scene.ris)


def facing_side(ris: RisSpec, reference: Position3D) -> int:
    """Which half-space (sign of the out-of-plane coordinate) the reference
    point occupies relative to the RIS panel."""
    axis = ris.layout.normal_axis
    delta = reference.as_array() - ris.position.as_array()
    if delta[axis] == 0:
        raise ValueError("reference point lies in the RIS plane")
    return 1 if delta[axis] > 0 else -1


def derive_truth(scene: SceneConfig) -> tuple[PathTruth, ...]:
    """Geometry-derived channel parameters for every RIS path."""
    out = []
    for i, r in enumerate(scene.ris):
        d_ur = float(np.linalg.norm(scene.ue_position.as_array() - r.position.as_array()))
        d_rb = float(np.linalg.norm(scene.bs_position.as_array() - r.position.as_array()))
        if d_ur < 1e-9 or d_rb < 1e-9:
            raise ValueError(f"RIS {i} coincides with the UE or the BS")
        side_bs = facing_side(r, scene.bs_position)
        side_ue = facing_side(r, scene.ue_position)
        if side_bs != side_ue:
            raise ValueError(
                f"RIS {i}: UE and BS sit on opposite sides of the panel; "
                "a reflective surface cannot serve both"
            )
        out.append(
            PathTruth(
                gain=path_gain(d_ur, d_rb, scene.radio),
                bs_aoa=angles_between(scene.bs_position, r.position),
                ris_aod=angles_between(r.position, scene.bs_position),
                ris_aoa=angles_between(r.position, scene.ue_position),
                facing_side=side_bs,
            )
        )
    return tuple(out)


def noiseless_observations(
    scene: SceneConfig, schedule: tuple[np.ndarray, ...], truth=None
) -> np.ndarray:
    """Sum of the per-RIS channels times the pilot, without noise."""
    if truth is None:
        truth = derive_truth(scene)
    from .geometry import steering_upa

    N = scene.bs_layout.size
    pilot = np.sqrt(scene.radio.tx_power)
    Y = np.zeros((N, scene.T), dtype=complex)
    for r, tr, Om in zip(scene.ris, truth, schedule):
        if Om.shape != (r.layout.size, scene.T):
            raise ValueError("schedule dimensions do not match the scene")
        a_bs = steering_upa(tr.bs_aoa, scene.bs_layout)
        combined = steering_upa(tr.ris_aod, r.layout) * steering_upa(tr.ris_aoa, r.layout)
        inner = Om.T @ combined  # rank-1 over slots: same as e2e_channel per column
        Y += pilot * tr.gain.complex_gain * np.outer(a_bs, inner)
    return Y


def simulate_sounding(
    scene: SceneConfig, schedule: tuple[np.ndarray, ...] | None = None, seed=None
) -> SoundingRecord:
    """Simulate the T-slot uplink sounding with a deterministic sqrt(P) pilot
    and circularly-symmetric Gaussian noise of variance ``radio.noise_var``."""
    if schedule is None:
        schedule = default_schedule(scene, seed)
    truth = derive_truth(scene)
    Y = noiseless_observations(scene, schedule, truth)
    rng = np.random.default_rng(seed)
    rho = scene.radio.noise_var
    if rho > 0:
        noise = np.sqrt(rho / 2.0) * (
            rng.standard_normal(Y.shape) + 1j * rng.standard_normal(Y.shape)
        )
        Y = Y + noise
    return SoundingRecord(Y=Y, schedule=tuple(schedule), truth=truth, rng_seed=seed)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * np.log10(watts) + 30.0


def scene_with_power_dbm(scene: SceneConfig, power_dbm: float) -> SceneConfig:
    return replace(scene, radio=replace(scene.radio, tx_power=dbm_to_watts(power_dbm)))


def scene_from_dict(cfg: dict) -> SceneConfig:
    """Build a SceneConfig from the parsed YAML mapping (see configs/)."""
    try:
        bs = cfg["bs"]
        bs_shape = bs.get("shape", [10, 10])
        ris = []
        for entry in cfg["ris"]:
            shape = entry.get("shape", [4, 4])
            ris.append(
                RisSpec(
                    position=Position3D(*entry["position"]),
                    layout=UpaLayout(entry["plane"], int(shape[0]), int(shape[1])),
                )
            )
        radio_cfg = cfg["radio"]
        if "carrier_ghz" in radio_cfg:
            carrier = float(radio_cfg["carrier_ghz"]) * 1e9
        else:
            carrier = float(radio_cfg["carrier_hz"])
        radio = RadioParams(
            carrier_hz=carrier,
            tx_power=dbm_to_watts(float(radio_cfg["tx_power_dbm"])),
            noise_var=dbm_to_watts(float(radio_cfg["noise_power_dbm"])),
        )
        return SceneConfig(
            bs_position=Position3D(*bs["position"]),
            bs_layout=UpaLayout(bs.get("plane", "xy"), int(bs_shape[0]), int(bs_shape[1])),
            ris=tuple(ris),
            ue_position=Position3D(*cfg["ue"]["position"]),
            radio=radio,
            T=int(cfg.get("training_slots", 32)),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"malformed scene configuration: {exc}") from exc


def load_scene(path: str) -> SceneConfig:
    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("scene config must be a YAML mapping")
    return scene_from_dict(cfg)
