import numpy as np
import pytest

import oracles
from ghostmask import (AcquisitionModel, DegenerateInputError, DimensionError, GridSpec, MaskKind, PairingError,
                       ParameterError, PatternSet, SizeError, SolverConfig, complement, extract_pattern_set,
                       gen_master, gen_mura, measure, reconstruct, recon_adjoint, recon_dgi, recon_differential,
                       recon_kaczmarz, recon_landweber, recon_pinv, unique_pattern_set)
from ghostmask import _seed
from ghostmask.recon import kaczmarz, landweber, spectral_norm


def delta_set(n):
    pats = np.zeros((n * n, n, n))
    for j in range(n * n):
        pats[j].flat[j] = 1.0
    return PatternSet(pats)


def test_pinhole_adjoint_recovers_object(rng):
    pset = delta_set(6)
    t = rng.random((6, 6))
    b = measure(pset, t).buckets
    img = recon_adjoint(pset, b).values
    # for delta patterns A~^T b~ reduces to the mean-removed object
    np.testing.assert_allclose(img, t - t.mean(), atol=1e-12)
    assert np.argmax(img) == np.argmax(t)


def test_adjoint_3x3_hand_expansion():
    pset = delta_set(3)
    t = np.eye(3)
    b = pset.matrix() @ t.ravel()
    expect = oracles.adjoint_sum(list(pset.patterns), list(b))
    np.testing.assert_allclose(recon_adjoint(pset, b).values, expect, atol=1e-15)
    # buckets are the diagonal indicator with mean 1/3 and the centred delta
    # patterns sum to zero, so each pixel is t - 1/3
    np.testing.assert_allclose(expect, t - 1 / 3, atol=1e-15)


def test_adjoint_raw_equals_mean_corrected(rng):
    u = unique_pattern_set("gaussian", 8, 8, 50, seed=1)
    b = rng.random(50)
    np.testing.assert_allclose(recon_adjoint(u, b, "raw").values, recon_adjoint(u, b).values, atol=1e-12)
    np.testing.assert_allclose(recon_adjoint(u, b).values,
                               oracles.adjoint_sum(list(u.patterns), list(b)), atol=1e-12)
    with pytest.raises(ParameterError):
        recon_adjoint(u, b, "other")


def test_adjoint_invariant_to_bucket_offset(rng):
    u = unique_pattern_set("binary", 8, 8, 40, seed=2)
    b = rng.random(40)
    a = recon_adjoint(u, b).values
    np.testing.assert_allclose(recon_adjoint(u, b + 17.5).values, a, atol=1e-12)


def test_adjoint_length_mismatch():
    u = unique_pattern_set("binary", 4, 4, 5, seed=0)
    with pytest.raises(DimensionError):
        recon_adjoint(u, np.ones(4))


def test_adjoint_shift_equivariance(rng):
    p = 11
    pset = extract_pattern_set(gen_mura(p), GridSpec.square(p))
    t = rng.random((p, p))
    img = recon_adjoint(pset, pset.matrix() @ t.ravel()).values
    shifted = np.roll(t, (2, 3), axis=(0, 1))
    # rolling the object by (2, 3) is the same as relabelling the cyclic shifts
    img2 = recon_adjoint(pset, pset.matrix() @ shifted.ravel()).values
    np.testing.assert_allclose(img2, np.roll(img, (2, 3), axis=(0, 1)), atol=1e-10)


def test_dgi_constant_object():
    u = unique_pattern_set("uniform", 6, 6, 30, seed=3)
    mu0 = 0.37
    b = mu0 * u.matrix().sum(axis=1)
    np.testing.assert_allclose(recon_dgi(u, b).values, mu0, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_dgi_is_one_landweber_step(seed):
    gen = np.random.default_rng(seed)
    A = gen.random((40, 64))
    pset = PatternSet(A.reshape(40, 8, 8))
    b = gen.random(40) * 10
    mu = b.sum() / A.sum()
    x = np.full(64, mu)
    x = x + 1.0 * A.T @ (b - A @ x)
    np.testing.assert_allclose(recon_dgi(pset, b).values.ravel(), x, rtol=1e-10, atol=1e-10)


def test_dgi_zero_patterns():
    with pytest.raises(DegenerateInputError):
        recon_dgi(PatternSet(np.zeros((3, 2, 2))), np.zeros(3))


def test_dgi_beats_adjoint_on_bright_object():
    from ghostmask import PhantomSpec, make_phantom
    from ghostmask.analysis import nmse

    m = gen_master(MaskKind.binary(), 70, 70, seed=0)
    pset = extract_pattern_set(m, GridSpec.square(24, count=576, columns=24))
    t = make_phantom(PhantomSpec("siemens_star", 24, 24, lo=0.75, hi=1.0, radius=10))
    rec = measure(pset, t, AcquisitionModel(flux=1000), seed=1)
    b = rec.normalized_buckets
    assert nmse(recon_dgi(pset, b).values, t) < nmse(recon_adjoint(pset, b).values, t)


def test_kaczmarz_zero_rhs_is_fixed_point():
    u = unique_pattern_set("gaussian", 5, 5, 20, seed=0)
    b = np.full(20, 3.0)  # constant buckets give b~ = 0
    img = recon_kaczmarz(u, b, sweeps=7).values
    np.testing.assert_array_equal(img, 0.0)


@pytest.mark.parametrize("relaxation,block", [(1.0, 1), (0.5, 7), (0.3, None)])
def test_block_kaczmarz_matches_row_loop(relaxation, block):
    gen = np.random.default_rng(4)
    A = gen.standard_normal((50, 16))
    A[7] = 0.0
    b = gen.standard_normal(50)
    sweeps, seed = 3, 11
    x, skipped = kaczmarz(A, b, sweeps, relaxation, seed, block=block)
    assert skipped == 1
    live = np.flatnonzero(np.einsum("ij,ij->i", A, A) > 0)
    g = _seed.rng(seed, "kaczmarz")
    orders = [live[g.permutation(len(live))] for _ in range(sweeps)]
    np.testing.assert_allclose(x, oracles.kaczmarz_rows(A, b, sweeps, relaxation, orders), atol=1e-12)


def test_kaczmarz_converges_to_pinv():
    u = unique_pattern_set("gaussian", 6, 6, 60, seed=5)
    t = np.random.default_rng(0).random((6, 6))
    b = u.matrix() @ t.ravel()
    k = recon_kaczmarz(u, b, sweeps=500, relaxation=1.0).values
    p = recon_pinv(u, b).values
    assert np.sqrt(np.mean((k - p) ** 2)) <= 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_kaczmarz_monotone(seed):
    u = unique_pattern_set("gaussian", 6, 6, 30, seed=seed)
    A = u.centered()
    b = A @ np.random.default_rng(1).random(36)
    xstar = np.linalg.pinv(A) @ b
    # unit relaxation: distance to the minimum-norm solution never grows
    err = []
    kaczmarz(A, b, sweeps=15, relaxation=1.0, callback=lambda s, x: err.append(np.linalg.norm(x - xstar)))
    assert all(e1 <= e0 * (1 + 1e-12) for e0, e1 in zip(err, err[1:]))
    # small relaxation: the residual norm falls every sweep as well
    res = []
    kaczmarz(A, b, sweeps=40, relaxation=0.05, callback=lambda s, x: res.append(np.linalg.norm(b - A @ x)))
    assert all(r1 <= r0 for r0, r1 in zip(res, res[1:]))


def test_orthonormal_single_sweep_equals_adjoint():
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((16, 16)))
    A = q[:10]
    b = np.random.default_rng(1).standard_normal(10)
    x, _ = kaczmarz(A, b, sweeps=1, relaxation=1.0)
    np.testing.assert_allclose(x, A.T @ b, atol=1e-12)


def test_relaxation_validated():
    with pytest.raises(ParameterError):
        SolverConfig(relaxation=0)
    with pytest.raises(ParameterError):
        SolverConfig(relaxation=1.5)
    with pytest.raises(ParameterError):
        SolverConfig(method="magic")
    with pytest.raises(ParameterError):
        SolverConfig(sweeps=-1)


def test_pinv_identity_returns_centered_buckets():
    pset = delta_set(3)
    b = np.arange(9.0)
    # mean-corrected identity has a one-dimensional null space along ones;
    # the minimum-norm solution is b~ itself
    np.testing.assert_allclose(recon_pinv(pset, b).values.ravel(), b - b.mean(), atol=1e-12)


def test_pinv_overdetermined_consistent():
    gen = np.random.default_rng(2)
    A = gen.standard_normal((20, 12))
    t = gen.standard_normal(12)
    pset = PatternSet(A.reshape(20, 3, 4))
    b = A @ t
    x = recon_pinv(pset, b).values.ravel()
    Ac = pset.centered()
    assert np.linalg.norm(Ac @ x - (b - b.mean())) <= 1e-10


@pytest.mark.parametrize("p", [11, 47])
def test_pinv_matches_adjoint_scale_for_mura(p):
    pset = extract_pattern_set(gen_mura(p), GridSpec.square(p))
    t = np.random.default_rng(3).random((p, p))
    b = pset.matrix() @ t.ravel()
    a = recon_adjoint(pset, b).values
    x = recon_pinv(pset, b).values
    c = np.sum(a * x) / np.sum(x * x)
    # The mean-corrected MURA matrix has two nonzero singular levels, so the
    # best-scale mismatch is bounded by their spread.
    s = np.linalg.svd(pset.centered(), compute_uv=False)
    hi, lo = s[0] ** 2, s[s > 1e-9 * s[0]][-1] ** 2
    assert len(np.unique(np.round(s[s > 1e-9 * s[0]], 9))) == 2
    assert np.linalg.norm(a - c * x) / np.linalg.norm(a) <= (hi - lo) / (hi + lo) + 1e-12


def test_pinv_size_cap():
    u = unique_pattern_set("binary", 5, 5, 10, seed=0)
    with pytest.raises(SizeError):
        recon_pinv(u, np.ones(10), cap=100)


def test_landweber_matches_loop(rng):
    A = rng.standard_normal((15, 9))
    b = rng.standard_normal(15)
    x = np.zeros(9)
    step = 0.01
    for _ in range(5):
        x = x + step * A.T @ (b - A @ x)
    np.testing.assert_allclose(landweber(A, b, 5, step), x, atol=1e-13)
    s1 = np.linalg.svd(A, compute_uv=False)[0]
    assert spectral_norm(A, iters=200) == pytest.approx(s1, rel=1e-8)


def test_landweber_reduces_residual():
    u = unique_pattern_set("gaussian", 6, 6, 50, seed=7)
    t = np.random.default_rng(2).random((6, 6))
    b = u.matrix() @ t.ravel()
    r5 = recon_landweber(u, b, iters=5).values.ravel()
    r50 = recon_landweber(u, b, iters=50).values.ravel()
    A, bc = u.centered(), b - b.mean()
    assert np.linalg.norm(A @ r50 - bc) < np.linalg.norm(A @ r5 - bc)


def test_restore_mean():
    u = unique_pattern_set("uniform", 6, 6, 80, seed=8)
    t = np.full((6, 6), 0.4)
    t[2:4, 2:4] = 0.9
    b = u.matrix() @ t.ravel()
    img = recon_pinv(u, b, restore_mean=True).values
    assert img.mean() == pytest.approx(b.sum() / u.patterns.sum(), rel=1e-12)


def test_batched_buckets_match_single(rng):
    u = unique_pattern_set("gaussian", 5, 5, 30, seed=9)
    B = rng.random((30, 3))
    for cfg in (SolverConfig("adjoint_mean_corrected"), SolverConfig("dgi"), SolverConfig("kaczmarz"),
                SolverConfig("landweber", step=1e-3), SolverConfig("pinv")):
        batch = reconstruct(u, B, cfg).values
        for c in range(3):
            np.testing.assert_allclose(batch[c], reconstruct(u, B[:, c], cfg).values, atol=1e-10)


def test_differential_equals_inner_on_difference_set(rng):
    u = unique_pattern_set("binary", 6, 6, 40, seed=10)
    neg = complement(u)
    t = rng.random((6, 6))
    bp, bn = u.matrix() @ t.ravel(), neg.matrix() @ t.ravel()
    cfg = SolverConfig("pinv")
    out = recon_differential(u, neg, bp, bn, cfg).values
    diff = PatternSet(2 * u.patterns - 1)
    np.testing.assert_allclose(out, reconstruct(diff, bp - bn, cfg).values, atol=1e-12)


def test_differential_pairing_errors():
    u = unique_pattern_set("binary", 4, 4, 6, seed=0)
    with pytest.raises(PairingError):
        recon_differential(u, u, np.ones(6), np.ones(6))
    with pytest.raises(PairingError):
        recon_differential(u, complement(u).subset(slice(0, 5)), np.ones(6), np.ones(5))
