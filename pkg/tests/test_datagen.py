"""Synthetic scenes: spectral coherence control, simplex fields, noise."""

import numpy as np
import pytest

from ultra_unmix import (ParameterError, SceneSpec, add_noise,
                         gen_abundances, gen_endmembers, gen_scene,
                         max_pairwise_cosine, spatial_autocorr_lag1)

PATTERNS = ("gauss-fields", "blocks", "bumps")


def base_spec(**kw):
    args = dict(rows=20, cols=18, n_endmembers=3, n_bands=30, seed=5)
    args.update(kw)
    return SceneSpec(**args)


def test_spec_validation():
    base_spec().validate()
    for bad in (dict(rows=0), dict(n_bands=2, n_endmembers=3),
                dict(pattern="stripes"), dict(smoothness=0.0),
                dict(endmember_coherence=1.0),
                dict(endmember_coherence=-0.1), dict(snr_db=float("nan")),
                dict(snr_db=-np.inf)):
        with pytest.raises(ParameterError):
            base_spec(**bad).validate()


def test_spec_to_dict():
    d = base_spec(snr_db=15.0).to_dict()
    assert d["rows"] == 20
    assert d["pattern"] == "gauss-fields"
    assert d["snr_db"] == 15.0


@pytest.mark.parametrize("L,R,target", [(50, 4, 0.8), (30, 3, 0.5),
                                        (80, 6, 0.9), (40, 3, 0.1),
                                        (20, 2, 0.3)])
def test_coherence_target_is_met(L, R, target):
    M = gen_endmembers(L, R, target, seed=3)
    assert M.shape == (L, R)
    assert abs(max_pairwise_cosine(M) - target) <= 0.05


def test_endmembers_are_reflectance_like():
    M = gen_endmembers(60, 5, 0.7, seed=1)
    assert (M >= 0).all()
    peaks = M.max(axis=0)
    assert (peaks >= 0.55 - 1e-12).all()
    assert (peaks <= 0.95 + 1e-12).all()


def test_endmembers_single_column():
    M = gen_endmembers(25, 1, 0.0, seed=2)
    assert M.shape == (25, 1)
    assert (M > 0).all()
    assert max_pairwise_cosine(M) == 0.0


def test_endmembers_determinism_and_seed_sensitivity():
    a = gen_endmembers(40, 4, 0.6, seed=9)
    b = gen_endmembers(40, 4, 0.6, seed=9)
    c = gen_endmembers(40, 4, 0.6, seed=10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_endmembers_input_validation():
    with pytest.raises(ParameterError):
        gen_endmembers(3, 4, 0.5)
    with pytest.raises(ParameterError):
        gen_endmembers(10, 2, 1.0)
    with pytest.raises(ParameterError):
        gen_endmembers(10, 0, 0.5)


def test_extreme_coherence_targets():
    # both ends of the legal range: nearly orthogonal and nearly collinear
    lo = gen_endmembers(2, 2, 0.0, seed=0)
    assert max_pairwise_cosine(lo) <= 0.05
    hi = gen_endmembers(30, 3, 0.99, seed=0)
    assert abs(max_pairwise_cosine(hi) - 0.99) <= 0.05


def test_max_pairwise_cosine_basics():
    assert max_pairwise_cosine(np.eye(3)) == pytest.approx(0.0)
    M = np.array([[1.0, 1.0], [0.0, 1e-8]])
    assert max_pairwise_cosine(M) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ParameterError):
        max_pairwise_cosine(np.zeros((3, 2)))
    with pytest.raises(ParameterError):
        max_pairwise_cosine(np.ones(3))


@pytest.mark.parametrize("pattern", PATTERNS)
def test_abundances_live_on_the_simplex(pattern):
    A = gen_abundances(base_spec(pattern=pattern, rows=25, cols=25))
    assert A.shape == (25, 25, 3)
    assert (A >= 0).all()
    assert np.abs(A.sum(axis=2) - 1.0).max() < 1e-12


def test_gauss_fields_smoothness_controls_autocorrelation():
    rough = gen_abundances(base_spec(rows=40, cols=40, smoothness=1.0))
    smooth = gen_abundances(base_spec(rows=40, cols=40, smoothness=10.0))
    mid = gen_abundances(base_spec(rows=40, cols=40, smoothness=3.0))
    r_rough = spatial_autocorr_lag1(rough[:, :, 0])
    r_mid = spatial_autocorr_lag1(mid[:, :, 0])
    r_smooth = spatial_autocorr_lag1(smooth[:, :, 0])
    assert r_mid > 0.5
    assert r_smooth > 0.9
    assert r_smooth > r_rough


def test_blocks_pattern_has_near_pure_interiors():
    A = gen_abundances(base_spec(pattern="blocks", rows=32, cols=32,
                                 n_endmembers=2, smoothness=2.0))
    pure = (A.max(axis=2) > 0.99).mean()
    assert pure > 0.5, f"only {pure:.2%} near-pure pixels"


def test_bumps_pattern_is_strictly_positive():
    A = gen_abundances(base_spec(pattern="bumps", rows=24, cols=24))
    assert A.min() > 0.0


def test_single_pixel_scene():
    for pattern in PATTERNS:
        truth = gen_scene(base_spec(rows=1, cols=1, pattern=pattern))
        assert truth.noisy_cube.shape == (1, 1, 30)
        assert truth.abundances.sum() == pytest.approx(1.0, abs=1e-12)


def test_add_noise_hits_requested_level():
    rng = np.random.default_rng(40)
    clean = rng.uniform(0.1, 1.0, size=(20, 20, 30))
    noisy, realized = add_noise(clean, 25.0, seed=7)
    assert abs(realized - 25.0) < 0.5
    resid = noisy - clean
    power = 10.0 * np.log10((clean ** 2).sum() / (resid ** 2).sum())
    assert power == pytest.approx(realized, abs=1e-9)


def test_add_noise_infinite_snr_returns_clean_copy():
    clean = np.full((3, 3, 4), 0.25)
    noisy, realized = add_noise(clean, np.inf, seed=0)
    assert realized == np.inf
    assert np.array_equal(noisy, clean)
    noisy[0, 0, 0] = 9.0
    assert clean[0, 0, 0] == 0.25, "must return a copy"


def test_add_noise_error_paths():
    with pytest.raises(ParameterError):
        add_noise(np.zeros((2, 2, 2)), 20.0)
    with pytest.raises(ParameterError):
        add_noise(np.ones((2, 2, 2)), float("nan"))
    with pytest.raises(ParameterError):
        add_noise(np.ones((2, 2, 2)), -np.inf)


def test_scene_clean_cube_is_the_forward_model():
    truth = gen_scene(base_spec(rows=6, cols=5))
    M, A = truth.endmembers, truth.abundances
    for i in range(6):
        for j in range(5):
            assert np.allclose(truth.clean_cube[i, j], M @ A[i, j],
                               atol=1e-12)


def test_scene_noise_stream_is_independent():
    a = gen_scene(base_spec(snr_db=25.0))
    b = gen_scene(base_spec(snr_db=5.0))
    assert np.array_equal(a.endmembers, b.endmembers)
    assert np.array_equal(a.abundances, b.abundances)
    assert not np.array_equal(a.noisy_cube, b.noisy_cube)


def test_scene_determinism():
    a = gen_scene(base_spec())
    b = gen_scene(base_spec())
    assert np.array_equal(a.noisy_cube, b.noisy_cube)
    assert a.realized_snr_db == b.realized_snr_db


def test_autocorr_edge_cases():
    assert spatial_autocorr_lag1(np.full((4, 4), 2.5)) == 1.0
    checker = np.indices((10, 10)).sum(axis=0) % 2
    assert spatial_autocorr_lag1(checker.astype(float)) < -0.9
    with pytest.raises(ParameterError):
        spatial_autocorr_lag1(np.ones(5))
    with pytest.raises(ParameterError):
        spatial_autocorr_lag1(np.ones((1, 5)))
