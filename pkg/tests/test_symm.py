import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hesscap.errors import DomainError
from hesscap.symm import Spectrum, esym, esym_all, esym_batch, esym_gradient, is_k_admissible


def brute_esym(values, k):
    return sum(math.prod(c) for c in itertools.combinations(values, k))


spectra = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=8)


def test_spectrum_sorted_and_validated():
    s = Spectrum([1.0, 3.0, 2.0])
    assert s.values == (3.0, 2.0, 1.0)
    assert s.dim == len(s) == 3
    with pytest.raises(DomainError):
        Spectrum([1.0, float("nan")])
    with pytest.raises(DomainError):
        Spectrum([])


@pytest.mark.parametrize(
    "values,k,expected",
    [
        ((1, 1, 1), 2, 3.0),
        ((1, 2, 3), 3, 6.0),
        # brute-force over all 3-subsets: 2*-1*4 + 2*-1*.5 + 2*4*.5 + -1*4*.5
        ((2, -1, 4, 0.5), 3, -7.0),
        ((5, -3), 0, 1.0),
    ],
)
def test_esym_examples(values, k, expected):
    assert esym(Spectrum(values), k) == pytest.approx(expected, rel=1e-14)


def test_esym_range():
    with pytest.raises(DomainError):
        esym(Spectrum([1, 2]), 3)
    with pytest.raises(DomainError):
        esym(Spectrum([1, 2]), -1)


def test_esym_all_examples():
    assert esym_all(Spectrum([1, 1])) == [1.0, 2.0, 1.0]
    assert esym_all(Spectrum([0, 0, 0])) == [1.0, 0.0, 0.0, 0.0]
    # (1 + 3t)(1 - 2t) = 1 + t - 6t^2
    assert esym_all(Spectrum([3, -2])) == pytest.approx([1.0, 1.0, -6.0])


def test_esym_gradient_examples():
    assert esym_gradient(Spectrum([1, 1, 1]), 1) == [1.0, 1.0, 1.0]
    assert esym_gradient(Spectrum([1, 2, 3]), 3) == pytest.approx([2.0, 3.0, 6.0])  # sorted (3, 2, 1)
    # entries follow the sorted spectrum (4, 2, -1): dS_2 = (2-1, 4-1, 4+2)
    assert esym_gradient(Spectrum([2, -1, 4]), 2) == pytest.approx([1.0, 3.0, 6.0])
    with pytest.raises(DomainError):
        esym_gradient(Spectrum([1, 2]), 0)


def test_admissibility_examples():
    for k in range(1, 5):
        assert is_k_admissible(Spectrum([1.0] * 4), k)
    assert is_k_admissible(Spectrum([1, -2, 1]), 1)
    assert not is_k_admissible(Spectrum([-1, -1]), 1)
    assert not is_k_admissible(Spectrum([1, -2, 1]), 2)
    assert is_k_admissible(Spectrum([1, -1.0 - 1e-9]), 1, tol=1e-6)


@given(spectra, st.data())
def test_esym_matches_enumeration(values, data):
    k = data.draw(st.integers(0, len(values)))
    got = esym(Spectrum(values), k)
    ref = brute_esym(values, k)
    scale = brute_esym([abs(v) for v in values], k)
    assert abs(got - ref) <= 1e-12 * max(scale, 1e-300)


@given(spectra)
def test_newton_endpoints(values):
    s = Spectrum(values)
    n = len(values)
    assert esym(s, 1) == pytest.approx(sum(values), rel=1e-12, abs=1e-12 * sum(map(abs, values)))
    assert esym(s, n) == pytest.approx(math.prod(values), rel=1e-12, abs=1e-300)


@given(spectra, st.randoms(use_true_random=False))
def test_permutation_invariance(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert esym_all(Spectrum(values)) == esym_all(Spectrum(shuffled))


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=6), st.data())
def test_gradient_matches_central_differences(values, data):
    s = Spectrum(values)
    k = data.draw(st.integers(1, len(values)))
    grad = esym_gradient(s, k)
    h = 1e-6
    for i in range(len(values)):
        up = list(s.values)
        dn = list(s.values)
        up[i] += h
        dn[i] -= h
        fd = (brute_esym(up, k) - brute_esym(dn, k)) / (2 * h)
        assert grad[i] == pytest.approx(fd, abs=1e-6 * max(1.0, abs(fd)))


def test_batch_matches_scalar(rng):
    lam = rng.normal(size=(20, 5)) * 3
    batch = esym_batch(lam, 5)
    for row, out in zip(lam, batch):
        assert out == pytest.approx(esym_all(Spectrum(row)), rel=1e-12, abs=1e-10)
