import numpy as np
import pytest

from risloc.geometry import Position3D, RadioParams, UpaLayout
from risloc.sounding import RisSpec, SceneConfig, dbm_to_watts


def reference_scene(
    power_dbm: float = 30.0,
    noise_dbm: float = -111.0,
    T: int = 32,
    n_side: int = 10,
    extra_ris: bool = False,
) -> SceneConfig:
    """The three-RIS indoor scene used throughout the experiments: BS ceiling
    panel at (1,1,3), UE at the origin, 4x4 wall-mounted RISs."""
    ris = [
        RisSpec(Position3D(0.5, 1.5, 2.9), UpaLayout("xz", 4, 4)),
        RisSpec(Position3D(-0.5, 0.5, 2.7), UpaLayout("yz", 4, 4)),
        RisSpec(Position3D(-0.5, -0.5, 2.5), UpaLayout("yz", 4, 4)),
    ]
    if extra_ris:
        ris.append(RisSpec(Position3D(1.1, 0.8, 2.8), UpaLayout("yz", 4, 4)))
    return SceneConfig(
        bs_position=Position3D(1.0, 1.0, 3.0),
        bs_layout=UpaLayout("xy", n_side, n_side),
        ris=tuple(ris),
        ue_position=Position3D(0.0, 0.0, 0.0),
        radio=RadioParams(
            carrier_hz=28e9,
            tx_power=dbm_to_watts(power_dbm),
            noise_var=dbm_to_watts(noise_dbm),
        ),
        T=T,
    )


@pytest.fixture
def scene():
    return reference_scene()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
