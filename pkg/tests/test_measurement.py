import numpy as np
import pytest

from so3filter import measurement as ms
from so3filter import so3
from so3filter.errors import CollinearPair, DegenerateVector, RankDeficient
from so3filter.sim import paper_scenario

from .conftest import random_rotations


def paper_refs(clean=True):
    refs = paper_scenario().refs
    if clean:
        return ms.ReferenceVectorSet(refs.v_inertial, weights=refs.weights)
    return refs


def clean_frame(refs, r_true):
    raw = ms.body_readings(r_true[None], refs, np.zeros((1, refs.n, 3)))[0]
    return ms.augment_cross(ms.normalize_frame(raw, refs))


def well_conditioned_refs(rng, k):
    while True:
        v = rng.standard_normal((k, 3))
        refs = ms.ReferenceVectorSet(v, weights=rng.uniform(0.3, 2.0, k))
        frame = clean_frame(refs, np.eye(3))
        if np.linalg.cond(ms.inertial_matrix(frame).m) < 50:
            return refs


# ---------------------------------------------------------------- reference sets

def test_reference_set_defaults():
    refs = ms.ReferenceVectorSet([[1, 0, 0], [0, 1, 0]])
    assert refs.n == 2
    np.testing.assert_array_equal(refs.bias_body, np.zeros((2, 3)))
    np.testing.assert_array_equal(refs.noise_std, np.zeros(2))
    np.testing.assert_array_equal(refs.weights, np.ones(2))


@pytest.mark.parametrize("vectors, exc", [
    ([[1, 0, 0], [2, 0, 0]], CollinearPair),
    ([[1, 0, 0], [-1, 0, 0]], CollinearPair),
    ([[0, 0, 0], [0, 1, 0], [1, 0, 0]], DegenerateVector),
    ([[1, 0, 0]], ValueError),
])
def test_reference_set_rejects(vectors, exc):
    with pytest.raises(exc):
        ms.ReferenceVectorSet(vectors)


def test_reference_set_rejects_bad_weights():
    with pytest.raises(ValueError):
        ms.ReferenceVectorSet([[1, 0, 0], [0, 1, 0]], weights=[1.0, 0.0])


# ---------------------------------------------------------------- synthesis

def test_synthesize_noise_free_identity():
    refs = ms.ReferenceVectorSet([[1, 0, 0], [0.6, 0.8, 0]])
    out = ms.synthesize_body(np.eye(3), refs, np.random.default_rng(0))
    np.testing.assert_allclose(out, refs.v_inertial, atol=1e-15)


def test_synthesize_noise_free_preserves_norm(rng):
    refs = ms.ReferenceVectorSet([[2, 0, 0], [0.6, 0.8, 1.0]])
    r = random_rotations(rng, 1)[0]
    out = ms.synthesize_body(r, refs, rng)
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), np.linalg.norm(refs.v_inertial, axis=1), rtol=1e-14)


def test_synthesize_noise_statistics(rng):
    refs = paper_refs(clean=False)
    r = random_rotations(rng, 1)[0]
    n = 100_000
    raw = ms.body_readings(np.broadcast_to(r, (n, 3, 3)), refs, rng.standard_normal((n, refs.n, 3)))
    err = raw - refs.v_inertial @ r
    se = 0.2 / np.sqrt(n)
    assert np.all(np.abs(err.mean(axis=0) - refs.bias_body) <= 3 * se)
    np.testing.assert_allclose(err.std(axis=0), 0.2, rtol=0.02)


# ---------------------------------------------------------------- normalization / augmentation

def test_normalize_frame():
    refs = ms.ReferenceVectorSet([[3, 0, 0], [0, 1, 0]])
    frame = ms.normalize_frame([[3.0, 0, 0], [0, 1.0, 0]], refs)
    np.testing.assert_array_equal(frame.ups_body[0], [1, 0, 0])
    np.testing.assert_array_equal(frame.ups_inertial[0], [1, 0, 0])
    np.testing.assert_array_equal(frame.s, [1.5, 1.5])


def test_normalize_frame_rejects_zero_reading():
    refs = ms.ReferenceVectorSet([[1, 0, 0], [0, 1, 0]])
    with pytest.raises(DegenerateVector):
        ms.normalize_frame([[0.0, 0, 0], [0, 1.0, 0]], refs)


@pytest.mark.parametrize("weights, expected", [
    ([1, 1], [1, 1, 1]),
    ([1, 3], [0.5, 1.5, 1.0]),
])
def test_augment_cross_basis(weights, expected):
    refs = ms.ReferenceVectorSet(np.eye(3)[:2], weights=weights)
    frame = ms.augment_cross(ms.normalize_frame(np.eye(3)[:2], refs))
    assert frame.n == 3
    np.testing.assert_allclose(frame.ups_inertial[2], [0, 0, 1])
    np.testing.assert_allclose(frame.s, expected)
    assert frame.s.sum() == pytest.approx(3.0, abs=1e-12)


def test_augment_cross_paper_pair_has_rank_three():
    refs = paper_refs()
    frame = clean_frame(refs, np.eye(3))
    assert np.linalg.norm(frame.ups_inertial[2]) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.matrix_rank(ms.inertial_matrix(frame).m) == 3


def test_augment_cross_three_vectors_unchanged():
    frame = ms.MeasurementFrame(np.eye(3), np.eye(3), np.ones(3))
    assert ms.augment_cross(frame) is frame


def test_augment_cross_rejects_collinear_body():
    frame = ms.MeasurementFrame(np.eye(3)[:2], [[1, 0, 0], [1, 0, 0]], [1.5, 1.5])
    with pytest.raises(CollinearPair):
        ms.augment_cross(frame)


def test_augment_body_stack_matches_frame(rng):
    refs = paper_refs(clean=False)
    r = random_rotations(rng, 5)
    raw = ms.body_readings(r, refs, rng.standard_normal((5, 2, 3)))
    ups = raw / np.linalg.norm(raw, axis=-1, keepdims=True)
    stack = ms.augment_body_stack(ups)
    for k in range(5):
        np.testing.assert_allclose(stack[k], ms.augment_cross(ms.normalize_frame(raw[k], refs)).ups_body,
                                   atol=1e-15)


# ---------------------------------------------------------------- inertial matrix

def test_inertial_matrix_orthonormal_basis():
    mats = ms.inertial_matrix(ms.MeasurementFrame(np.eye(3), np.eye(3), np.ones(3)))
    np.testing.assert_allclose(mats.m, np.eye(3))
    np.testing.assert_allclose(mats.m_bar, 2 * np.eye(3))
    assert mats.lambda_min == pytest.approx(2.0)


def test_inertial_matrix_paper_invariants():
    mats = ms.inertial_matrix(clean_frame(paper_refs(), np.eye(3)))
    assert np.trace(mats.m) == pytest.approx(3.0, abs=1e-9)
    np.testing.assert_allclose(mats.m, mats.m.T, atol=0)
    lm = np.linalg.eigvalsh(mats.m)
    pair = np.sort([lm[1] + lm[2], lm[0] + lm[2], lm[0] + lm[1]])
    np.testing.assert_allclose(np.linalg.eigvalsh(mats.m_bar), pair, atol=1e-9)
    assert mats.lambda_min == pytest.approx(pair[0])
    np.testing.assert_allclose(mats.m_inv @ mats.m, np.eye(3), atol=1e-12)


def test_inertial_matrix_rank_deficient():
    frame = ms.MeasurementFrame(np.eye(3)[:2], np.eye(3)[:2], [1.5, 1.5])
    with pytest.raises(RankDeficient):
        ms.inertial_matrix(frame)


def test_body_matrix_is_rotated_inertial(rng):
    refs = well_conditioned_refs(rng, 4)
    for r in random_rotations(rng, 20):
        frame = clean_frame(refs, r)
        m = ms.inertial_matrix(frame).m
        np.testing.assert_allclose(ms.body_matrix(frame), r.T @ m @ r, atol=1e-10)


# ---------------------------------------------------------------- vector reconstructions

@pytest.mark.parametrize("k", [2, 3, 5])
def test_reconstructions_match_matrix_space(k, rng):
    refs = well_conditioned_refs(rng, k)
    rots = random_rotations(rng, 400).reshape(200, 2, 3, 3)
    for r, r_hat in rots:
        frame = clean_frame(refs, r)
        mats = ms.inertial_matrix(frame)
        rt = r @ r_hat.T
        np.testing.assert_allclose(ms.phi_from_vectors(frame, r_hat), so3.phi(mats.m @ rt), atol=1e-10)
        assert ms.dist_from_vectors(frame, r_hat) == pytest.approx(so3.weighted_dist(mats.m, rt), abs=1e-10)
        ups = ms.upsilon_from_vectors(frame, r_hat, mats)
        assert ups == pytest.approx(np.trace(rt), abs=1e-10)
        assert ups > -1
        if np.trace(rt) > -1 + 1e-3:
            rho = so3.to_rodriguez(rt)
            assert 1 + rho @ rho == pytest.approx(4 / (1 + ups), rel=1e-9)
        phi_k, dist_k, ups_k = ms.innovation(frame, r_hat, mats)
        np.testing.assert_allclose(phi_k, ms.phi_from_vectors(frame, r_hat), atol=1e-14)
        assert dist_k == pytest.approx(ms.dist_from_vectors(frame, r_hat), abs=1e-14)
        assert ups_k == pytest.approx(ups, abs=1e-12)


def test_perfect_estimate(rng):
    refs = well_conditioned_refs(rng, 3)
    r = random_rotations(rng, 1)[0]
    frame = clean_frame(refs, r)
    np.testing.assert_allclose(ms.phi_from_vectors(frame, r), np.zeros(3), atol=1e-15)
    assert ms.dist_from_vectors(frame, r) == pytest.approx(0.0, abs=1e-15)
    assert ms.upsilon_from_vectors(frame, r) == pytest.approx(3.0, abs=1e-12)


def test_phi_lemma_form_from_vectors(rng):
    refs = well_conditioned_refs(rng, 3)
    rho = np.array([0.4, -0.9, 0.25])
    frame = clean_frame(refs, so3.from_rodriguez(rho))
    m_bar = ms.inertial_matrix(frame).m_bar
    expected = (np.eye(3) + so3.skew(rho)).T @ m_bar @ rho / (1 + rho @ rho)
    np.testing.assert_allclose(ms.phi_from_vectors(frame, np.eye(3)), expected, atol=1e-12)


def test_half_turn_about_eigenvector_has_positive_distance():
    frame = clean_frame(paper_refs(), np.eye(3))
    mats = ms.inertial_matrix(frame)
    _, vecs = np.linalg.eigh(mats.m)
    for u in vecs.T:
        r_hat = so3.from_angle_axis(np.pi, u).T
        assert ms.dist_from_vectors(frame, r_hat) > 0
        assert ms.upsilon_from_vectors(frame, r_hat, mats) == pytest.approx(-1.0, abs=1e-12)
