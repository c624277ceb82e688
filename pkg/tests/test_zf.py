import numpy as np
import pytest
from dataclasses import replace

from risloc.geometry import Position3D, UpaLayout, steering_upa
from risloc.sounding import RisSpec, default_schedule, derive_truth, simulate_sounding
from risloc.zf import (
    RankDeficientGeometryError,
    balance_report,
    build_bs_response_matrix,
    separate,
    zf_weights,
)

from conftest import reference_scene


class TestBuildResponseMatrix:
    def test_reference_scene_shape_and_rank(self, scene):
        A = build_bs_response_matrix(scene)
        assert A.shape == (100, 3)
        assert np.linalg.matrix_rank(A) == 3

    def test_collinear_ris_rejected(self, scene):
        # second RIS on the same ray from the BS as the first
        bs = scene.bs_position.as_array()
        p0 = scene.ris[0].position.as_array()
        p_far = bs + 2.0 * (p0 - bs)
        ris = (
            scene.ris[0],
            RisSpec(Position3D.from_array(p_far), UpaLayout("xz", 4, 4)),
            scene.ris[2],
        )
        bad = replace(scene, ris=ris)
        with pytest.raises(RankDeficientGeometryError, match="RIS 0 and RIS 1"):
            build_bs_response_matrix(bad)


class TestZfWeights:
    def test_single_column(self, scene):
        truth = derive_truth(scene)
        a = steering_upa(truth[0].bs_aoa, scene.bs_layout)[:, None]
        W = zf_weights(a)
        np.testing.assert_allclose(W, a / 100, rtol=1e-12)
        assert np.linalg.norm(W[:, 0]) == pytest.approx(0.1)

    def test_orthogonal_columns(self):
        N = 8
        A = np.fft.fft(np.eye(N))[:, :3]  # orthogonal, norm sqrt(N)
        W = zf_weights(A)
        np.testing.assert_allclose(W, A / N, atol=1e-12)

    def test_reference_scene_residual(self, scene):
        A = build_bs_response_matrix(scene)
        W = zf_weights(A)
        assert np.max(np.abs(A.conj().T @ W - np.eye(3))) < 1e-10


class TestSeparate:
    def test_noiseless_matches_single_path_model(self, scene):
        sc = replace(scene, radio=replace(scene.radio, noise_var=0.0))
        sched = default_schedule(sc)
        rec = simulate_sounding(sc, sched, seed=0)
        W = zf_weights(build_bs_response_matrix(sc))
        seps = separate(rec, W, 0.0)
        pilot = np.sqrt(sc.radio.tx_power)
        for m, (sep, tr, r) in enumerate(zip(seps, rec.truth, sc.ris)):
            combined = steering_upa(tr.ris_aod, r.layout) * steering_upa(tr.ris_aoa, r.layout)
            model = tr.gain.complex_gain * (sched[m].T @ combined) * pilot
            assert np.max(np.abs(sep.z - model)) < 1e-10 * np.max(np.abs(model))

    def test_cross_leakage_nulled(self, scene):
        sc = replace(scene, radio=replace(scene.radio, noise_var=0.0))
        sched = default_schedule(sc)
        truth = derive_truth(sc)
        # only RIS 1 active
        from risloc.sounding import SoundingRecord, noiseless_observations

        partial = tuple(
            replace(t, gain=replace(t.gain, magnitude=t.gain.magnitude if i == 1 else 0.0))
            for i, t in enumerate(truth)
        )
        Y = noiseless_observations(sc, sched, partial)
        rec = SoundingRecord(Y=Y, schedule=sched, truth=partial, rng_seed=None)
        W = zf_weights(build_bs_response_matrix(sc))
        seps = separate(rec, W, 0.0)
        scale = np.max(np.abs(seps[1].z))
        assert np.max(np.abs(seps[0].z)) < 1e-10 * scale
        assert np.max(np.abs(seps[2].z)) < 1e-10 * scale

    def test_noise_only_variance(self, scene, rng):
        sc = replace(scene, T=10_000)
        W = zf_weights(build_bs_response_matrix(sc))
        rho = 2.5
        from risloc.sounding import SoundingRecord

        noise = np.sqrt(rho / 2) * (
            rng.standard_normal((100, sc.T)) + 1j * rng.standard_normal((100, sc.T))
        )
        rec = SoundingRecord(Y=noise, schedule=(), truth=(), rng_seed=None)
        for sep in separate(rec, W, rho):
            var = np.mean(np.abs(sep.z) ** 2)
            assert var == pytest.approx(sep.noise_scale, rel=0.03)

    def test_slot_noise_uncorrelated(self, scene, rng):
        # per-slot combining keeps slots independent: off-diagonal autocorr small
        sc = replace(scene, T=20_000)
        W = zf_weights(build_bs_response_matrix(sc))
        from risloc.sounding import SoundingRecord

        noise = (rng.standard_normal((100, sc.T)) + 1j * rng.standard_normal((100, sc.T))) / np.sqrt(2)
        rec = SoundingRecord(Y=noise, schedule=(), truth=(), rng_seed=None)
        sep = separate(rec, W, 1.0)[0]
        z = sep.z
        lag1 = np.abs(np.mean(z[1:] * np.conj(z[:-1]))) / np.mean(np.abs(z) ** 2)
        assert lag1 < 0.05


class TestBalanceReport:
    def test_orthogonal_ratio_one(self):
        A = np.fft.fft(np.eye(8))[:, :3]
        _, ratio = balance_report(zf_weights(A))
        assert ratio == pytest.approx(1.0)

    def test_reference_scene_ratio(self, scene):
        norms, ratio = balance_report(zf_weights(build_bs_response_matrix(scene)))
        assert np.isfinite(ratio) and ratio > 1.0

    def test_near_collinear_ratio_grows(self, scene):
        bs = scene.bs_position.as_array()
        p0 = scene.ris[0].position.as_array()
        ratios = []
        for eps in (0.3, 0.1, 0.03):
            p = p0 + eps * np.array([0.0, -1.0, 0.0])
            ris = (scene.ris[0], RisSpec(Position3D.from_array(p), UpaLayout("xz", 4, 4)), scene.ris[2])
            A = build_bs_response_matrix(replace(scene, ris=ris))
            _, ratio = balance_report(zf_weights(A))
            ratios.append(ratio)
        assert ratios[0] < ratios[1] < ratios[2]
