import numpy as np
import pytest
from dataclasses import replace

from risloc.crlb import (
    SingularFimError,
    efim_angles,
    fim_channel,
    fim_position,
    jacobian_position,
    slot_mean_derivatives_eta,
    slot_means_eta,
)
from risloc.geometry import AnglePair, Position3D, UpaLayout, angles_between
from risloc.locate import direction_vector
from risloc.sounding import default_schedule, derive_truth, dft_profiles
from conftest import reference_scene

FD_STEP = np.cbrt(np.finfo(float).eps)  # cube-root-of-epsilon central-difference rule


def fd_derivatives(eta, sqrt_g_rb, aod, omega, pilot, layout):
    D = np.zeros((omega.shape[1], 4), dtype=complex)
    for k in range(4):
        h = FD_STEP * max(1.0, abs(eta[k]))
        ep, em = eta.copy(), eta.copy()
        ep[k] += h
        em[k] -= h
        D[:, k] = (
            slot_means_eta(ep, sqrt_g_rb, aod, omega, pilot, layout)
            - slot_means_eta(em, sqrt_g_rb, aod, omega, pilot, layout)
        ) / (2 * h)
    return D


def random_config(rng):
    layout = UpaLayout(rng.choice(["xz", "yz"]), 4, 4)
    eta = np.array(
        [
            10 ** rng.uniform(-5, -2),            # sqrt(g_UR)
            rng.uniform(-np.pi, np.pi),           # nu
            rng.uniform(-np.pi + 0.2, np.pi - 0.2),
            rng.uniform(0.2, np.pi - 0.2),
        ]
    )
    aod = AnglePair(rng.uniform(-np.pi, np.pi), rng.uniform(0.2, np.pi - 0.2))
    omega = np.exp(2j * np.pi * rng.random((16, 12)))
    return eta, 10 ** rng.uniform(-4, -2), aod, omega, 1.3, layout


class TestSlotMeanDerivatives:
    def test_matches_finite_differences(self, rng):
        for _ in range(100):
            eta, gr, aod, omega, pilot, layout = random_config(rng)
            D = slot_mean_derivatives_eta(eta, gr, aod, omega, pilot, layout)
            Dfd = fd_derivatives(eta, gr, aod, omega, pilot, layout)
            err = np.max(np.abs(D - Dfd)) / np.max(np.abs(D))
            assert err < 1e-6


class TestFimChannel:
    def _path(self, scene, m=0):
        truth = derive_truth(scene)[m]
        return truth, scene.ris[m].layout

    def test_power_scaling(self, scene):
        sched = default_schedule(scene)
        truth, layout = self._path(scene)
        J1 = fim_channel(truth, sched[0], scene.radio, 0.1, layout)
        sc = replace(scene, radio=replace(scene.radio, tx_power=3 * scene.radio.tx_power))
        J3 = fim_channel(truth, sched[0], sc.radio, 0.1, layout)
        np.testing.assert_allclose(J3, 3 * J1, rtol=1e-12, atol=1e-10 * np.max(np.abs(J1)))

    def test_doubling_slots_doubles_fim(self, scene):
        truth, layout = self._path(scene)
        om = dft_profiles(16, 16)
        J1 = fim_channel(truth, om, scene.radio, 0.1, layout)
        J2 = fim_channel(truth, np.hstack([om, om]), scene.radio, 0.1, layout)
        np.testing.assert_allclose(J2, 2 * J1, rtol=1e-12, atol=1e-10 * np.max(np.abs(J1)))

    def test_psd(self, scene):
        sched = default_schedule(scene)
        truth, layout = self._path(scene)
        J = fim_channel(truth, sched[0], scene.radio, 0.1, layout)
        w = np.linalg.eigvalsh(J)
        assert w[0] >= -1e-10 * w[-1]


class TestEfim:
    def test_block_diagonal_unchanged(self):
        J = np.diag([4.0, 3.0, 2.0, 1.0])
        E = efim_angles(J)
        np.testing.assert_allclose(E, np.diag([1.0, 2.0]))  # (el, az) reorder

    def test_dominated_by_raw_block(self, rng):
        for _ in range(100):
            B = rng.standard_normal((4, 6))
            J = B @ B.T + 1e-6 * np.eye(4)
            E = efim_angles(J)
            raw = J[2:, 2:][np.ix_([1, 0], [1, 0])]
            w = np.linalg.eigvalsh(raw - E)
            assert w[0] >= -1e-9 * np.linalg.norm(raw)

    def test_reference_scene_positive_definite(self, scene):
        sched = default_schedule(scene)
        _, report = fim_position(scene, sched)
        for E in report.efim_angles:
            assert np.all(np.linalg.eigvalsh(E) > 0)


class TestJacobianPosition:
    def test_matches_finite_differences(self, rng):
        for _ in range(100):
            p_ris = Position3D.from_array(rng.uniform(-3, 3, 3))
            p_ue = Position3D.from_array(p_ris.as_array() + rng.uniform(0.5, 3) * _rand_dir(rng))
            T = jacobian_position(p_ue, p_ris)
            Tfd = np.zeros((3, 2))
            h = 1e-6
            for i in range(3):
                dp = np.zeros(3)
                dp[i] = h
                ap = angles_between(p_ris, Position3D.from_array(p_ue.as_array() + dp))
                am = angles_between(p_ris, Position3D.from_array(p_ue.as_array() - dp))
                Tfd[i, 0] = (ap.elevation - am.elevation) / (2 * h)
                daz = (ap.azimuth - am.azimuth + np.pi) % (2 * np.pi) - np.pi
                Tfd[i, 1] = daz / (2 * h)
            assert np.max(np.abs(T - Tfd)) / np.max(np.abs(T)) < 1e-6

    def test_radial_motion_invariant(self, scene):
        for r in scene.ris:
            T = jacobian_position(scene.ue_position, r.position)
            xi = direction_vector(angles_between(r.position, scene.ue_position))
            np.testing.assert_allclose(T.T @ xi, 0, atol=1e-12)

    def test_inverse_distance_scaling(self):
        p_ris = Position3D(0, 0, 0)
        p1 = Position3D(1.0, 2.0, 1.5)
        p2 = Position3D.from_array(3.0 * p1.as_array())
        T1 = jacobian_position(p1, p_ris)
        T2 = jacobian_position(p2, p_ris)
        np.testing.assert_allclose(T2, T1 / 3.0, rtol=1e-12)

    def test_zenith_flagged(self):
        with pytest.raises(ValueError, match="zenith"):
            jacobian_position(Position3D(0, 0, 1), Position3D(0, 0, 0))


def _rand_dir(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


class TestFimPosition:
    def test_single_ris_rank_deficient(self, scene):
        sched = default_schedule(scene)
        _, report = fim_position(scene, sched)
        # one path alone contributes rank <= 2: bearing-only, range unobservable
        Tm = jacobian_position(scene.ue_position, scene.ris[0].position)
        Jp1 = Tm @ report.efim_angles[0] @ Tm.T
        assert np.linalg.matrix_rank(Jp1, tol=1e-9 * np.linalg.norm(Jp1)) <= 2

    def test_peb_power_scaling(self, scene):
        sched = default_schedule(scene)
        _, r1 = fim_position(scene, sched)
        for kappa in (2.0, 10.0, 100.0):
            sc = replace(scene, radio=replace(scene.radio, tx_power=kappa * scene.radio.tx_power))
            _, r2 = fim_position(sc, sched)
            assert r2.peb_m == pytest.approx(r1.peb_m / np.sqrt(kappa), rel=1e-10)

    def test_extra_ris_never_hurts(self):
        sc3 = reference_scene()
        sc4 = reference_scene(extra_ris=True)
        _, r3 = fim_position(sc3, default_schedule(sc3))
        _, r4 = fim_position(sc4, default_schedule(sc4))
        assert r4.peb_m < r3.peb_m

    def test_peb_decreasing_in_power(self):
        pebs = []
        for dbm in range(0, 41, 10):
            sc = reference_scene(power_dbm=float(dbm))
            _, rep = fim_position(sc, default_schedule(sc))
            pebs.append(rep.peb_m)
        assert all(a > b for a, b in zip(pebs, pebs[1:]))

    def test_collinear_geometry_rejected(self, scene):
        # both RIS on one line through the UE: every bearing is parallel, so
        # range along that line is unobservable and the position FIM is rank 2
        from risloc.sounding import RisSpec

        ris = (
            RisSpec(Position3D(-1.0, -1.0, 2.0), UpaLayout("yz", 4, 4)),
            RisSpec(Position3D(-2.0, -2.0, 4.0), UpaLayout("yz", 4, 4)),
        )
        bad = replace(scene, ris=ris)
        with pytest.raises(SingularFimError, match="rank"):
            fim_position(bad, default_schedule(bad))
