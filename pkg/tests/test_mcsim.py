from pathlib import Path

import numpy as np
import pytest

from blockrmt.density import density_curve
from blockrmt.model import CovarianceTensor, DimensionProfile, ModelSpec, load_spec
from blockrmt.mcsim import (Histogram, SimConfig, Unsupported, compare, empirical_spectrum,
                            entry_covariance, histogram_from_curve, read_histogram,
                            realization_eigenvalues, sample_matrix, trace_moments,
                            write_histogram)
from blockrmt.presets import STANDARD_PRESETS, get_preset

from conftest import random_model

SPECS = Path(__file__).resolve().parents[1] / "specs"


def test_one_by_one_is_real_normal(semicircle):
    cfg = SimConfig(N=1, reps=2000, seed=3)
    xs = np.array([sample_matrix(semicircle, cfg, r)[0, 0] for r in range(cfg.reps)])
    assert np.all(xs.imag == 0)
    assert np.var(xs.real) == pytest.approx(1.0, abs=0.1)


@pytest.mark.parametrize("name", ["toeplitz3", "semicircle"])
def test_samples_are_hermitian(name):
    X = sample_matrix(get_preset(name).spec, SimConfig(N=7), 0)
    np.testing.assert_array_equal(X, X.conj().T)


def test_second_moment(toeplitz3):
    t = trace_moments(toeplitz3, SimConfig(N=6, reps=2000, seed=5), orders=(2,))[:, 0]
    # E tr X^2 equals the limiting value exactly at every size
    assert abs(t.mean() - 1.0) <= 3 * t.std(ddof=1) / np.sqrt(len(t))


def test_explicit_sigma_cannot_be_sampled():
    spec = ModelSpec(CovarianceTensor(np.zeros((1, 1, 1, 1), complex)), DimensionProfile.square(1))
    with pytest.raises(Unsupported):
        sample_matrix(spec, SimConfig(N=3), 0)


def test_runs_are_deterministic(toeplitz3):
    cfg = SimConfig(N=5, reps=3, seed=11)
    a = [realization_eigenvalues(toeplitz3, cfg, r) for r in range(3)]
    b = [realization_eigenvalues(toeplitz3, cfg, r) for r in range(3)]
    np.testing.assert_array_equal(np.array(a), np.array(b))
    c = realization_eigenvalues(toeplitz3, SimConfig(N=5, reps=3, seed=12), 0)
    assert not np.allclose(a[0], c)


def test_threads_do_not_change_results(toeplitz3):
    one = empirical_spectrum(toeplitz3, SimConfig(N=10, reps=8, seed=2))
    many = empirical_spectrum(toeplitz3, SimConfig(N=10, reps=8, seed=2, threads=4))
    np.testing.assert_array_equal(one.masses, many.masses)
    assert one.moments == many.moments


def _sigma_from_covariance(C, lay, d):
    """Average block covariance ``n E[x_ab x_cd]`` over matching block positions."""
    ro = np.concatenate([[0], np.cumsum(lay.row_sizes)])
    co = np.concatenate([[0], np.cumsum(lay.col_sizes)])
    s = np.zeros((d, d, d, d), complex)
    for i in range(d):
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    blk = C[ro[i]:ro[i + 1], co[j]:co[j + 1], ro[k]:ro[k + 1], co[l]:co[l + 1]]
                    # E[a_rp b_qs] is carried by r = s, p = q
                    acc = [blk[r, p, p, r] for r in range(blk.shape[0]) for p in range(blk.shape[1])
                           if p < blk.shape[2] and r < blk.shape[3]]
                    s[i, j, k, l] = lay.n * np.mean(acc) if acc else 0.0
    return s


@pytest.mark.parametrize("spec", [
    get_preset("toeplitz3").spec,
    get_preset("semicircle").spec,
    load_spec(SPECS / "correlated_diagonal.json"),
    random_model(4, 3),
    random_model(9, 2),
])
def test_sampler_covariance_matches_sigma(spec):
    C, lay = entry_covariance(spec, 2)
    got = _sigma_from_covariance(C, lay, spec.d)
    np.testing.assert_allclose(got, spec.cov.sigma, atol=1e-12)


def test_gram_sampler_covariance():
    from blockrmt.wishart import embedded
    w = get_preset("mimo:2,2,1").spec
    C, lay = entry_covariance(w, 2)
    # circular entries: E[h h] vanishes identically
    diag = np.einsum("abab->ab", C)
    assert np.all(np.abs(diag) < 1e-14)
    assert np.max(np.abs(C)) < 1e-14
    assert embedded(w)[1].d == w.r + w.s
    H = sample_matrix(w, SimConfig(N=40, reps=1, seed=0), 0)
    assert H.shape == (sum(lay.row_sizes) * 20, sum(lay.col_sizes) * 20)
    assert np.mean(np.abs(H[:40, :40]) ** 2) * lay.n * 20 == pytest.approx(1.0, abs=0.1)


def test_compare_identical_curve(toeplitz3):
    c = density_curve(toeplitz3, 800, 1e-6).curve
    h = histogram_from_curve(c, np.linspace(-2.5, 2.5, 51))
    out = compare(c, h)
    assert out["l1"] <= 1e-12 and out["sup_bin"] <= 1e-12


def test_semicircle_histogram_agrees(semicircle):
    c = density_curve(semicircle, 1200, 1e-6).curve
    h = empirical_spectrum(semicircle, SimConfig(N=200, reps=50, seed=0))
    assert h.masses.sum() == pytest.approx(1.0)
    out = compare(c, h)
    assert out["l1"] <= 0.04
    assert max(out["moment_gaps"][:4]) < 0.05


def test_wrong_law_is_far(semicircle):
    c = density_curve(get_preset("mp:1").spec, 1200, 1e-6).curve
    h = empirical_spectrum(semicircle, SimConfig(N=100, reps=10, seed=0),
                           edges=np.linspace(-2.5, 4.5, 51))
    assert compare(c, h)["l1"] >= 0.3


def test_histogram_files(tmp_path, toeplitz3):
    h = empirical_spectrum(toeplitz3, SimConfig(N=8, reps=4, seed=1, bins=20))
    p = tmp_path / "h.csv"
    write_histogram(h, p, {"seed": 1})
    back = read_histogram(p)
    np.testing.assert_array_equal(back.bin_edges, h.bin_edges)
    np.testing.assert_array_equal(back.masses, h.masses)
    assert back.moments == pytest.approx(h.moments)
    assert back.n_samples == h.n_samples == 8 * 3 * 4


def test_bad_config():
    with pytest.raises(ValueError):
        SimConfig(N=0)


def test_histogram_centers():
    h = Histogram(np.array([0.0, 1.0, 3.0]), np.array([0.5, 0.5]), 2)
    np.testing.assert_allclose(h.centers, [0.5, 2.0])


@pytest.mark.slow
@pytest.mark.parametrize("name", STANDARD_PRESETS)
def test_every_preset_round_trip(name):
    spec = get_preset(name).spec
    c = density_curve(spec, 1200, 1e-6).curve
    h = empirical_spectrum(spec, SimConfig(N=100, reps=100, seed=7))
    assert compare(c, h)["l1"] <= 0.05
