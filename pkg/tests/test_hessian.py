import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hesscap.errors import AdmissibilityError, ConvergenceError, DomainError
from hesscap.hessian import (
    ScalarField,
    SymMatrix,
    divergence_identity_check,
    fd_hessian,
    field_energy,
    fk_matrix_gradient,
    fk_value,
    jacobi_eigh,
    newton_tensor,
    quadratic_field,
    sample_radial,
    sym_eigenvalues,
)
from hesscap.radial import RadialProfile, hessian_energy, radial_spectrum, sphere_area


def random_sym(rng, n):
    a = rng.normal(size=(n, n))
    return SymMatrix(a + a.T)


sym_arrays = arrays(np.float64, (4, 4), elements=st.floats(-5, 5))


def test_symmatrix_validation():
    with pytest.raises(DomainError):
        SymMatrix([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(DomainError):
        SymMatrix([[1.0, np.inf], [np.inf, 1.0]])
    with pytest.raises(DomainError):
        SymMatrix(np.ones((2, 3)))


def test_eigenvalue_examples(rng):
    assert sym_eigenvalues(SymMatrix(np.diag([3.0, 1.0, 2.0]))).values == (3.0, 2.0, 1.0)
    assert sym_eigenvalues(SymMatrix([[2.0, 1.0], [1.0, 2.0]])).values == pytest.approx((3.0, 1.0))
    m = random_sym(rng, 5)
    s = sym_eigenvalues(m)
    assert sum(s.values) == pytest.approx(np.trace(m.entries), rel=1e-9)
    assert math.prod(s.values) == pytest.approx(np.linalg.det(m.entries), rel=1e-9)


def test_jacobi_reconstruction_and_cap(rng):
    m = random_sym(rng, 6)
    tol = 1e-12
    vals, q = jacobi_eigh(m, tol)
    resid = np.linalg.norm(q @ np.diag(vals) @ q.T - m.entries)
    assert resid <= 10 * tol * np.linalg.norm(m.entries)
    with pytest.raises(ConvergenceError):
        jacobi_eigh(m, 1e-14, max_sweeps=1)
    with pytest.raises(DomainError):
        jacobi_eigh(m, 0.0)


def test_fk_examples():
    assert fk_value(SymMatrix(np.eye(3)), 2) == pytest.approx(3.0)
    assert fk_value(SymMatrix(np.diag([1.0, 2.0, 3.0])), 3) == pytest.approx(6.0)
    for n in range(1, 6):
        for k in range(1, n + 1):
            assert fk_value(SymMatrix(np.eye(n)), k) == pytest.approx(math.comb(n, k))
    with pytest.raises(DomainError):
        fk_value(SymMatrix(np.eye(2)), 3)


def test_fk_gradient_examples(rng):
    m = random_sym(rng, 4)
    assert fk_matrix_gradient(m, 1).entries == pytest.approx(np.eye(4), abs=1e-12)
    g = fk_matrix_gradient(SymMatrix(np.diag([1.0, 2.0, 3.0])), 3)
    assert g.entries == pytest.approx(np.diag([6.0, 3.0, 2.0]), abs=1e-12)
    # adjugate for k = n
    adj = np.linalg.det(m.entries) * np.linalg.inv(m.entries)
    assert fk_matrix_gradient(m, 4).entries == pytest.approx(adj, rel=1e-8, abs=1e-8)


def test_fk_gradient_finite_differences(rng):
    m = random_sym(rng, 4)
    g = fk_matrix_gradient(m, 2).entries
    h = 1e-6
    for i in range(4):
        for j in range(4):
            e = np.zeros((4, 4))
            e[i, j] += h
            e[j, i] += h
            fd = (fk_value(SymMatrix(m.entries + e), 2) - fk_value(SymMatrix(m.entries - e), 2)) / (2 * h)
            # the symmetric perturbation moves a_ij and a_ji (or a_ii twice)
            expected = 2 * g[i, j]
            assert fd == pytest.approx(expected, abs=1e-5)


def test_fk_gradient_repeated_eigenvalues():
    # a rotated diag(2, 2, 5): the eigenbasis of the double eigenvalue is arbitrary
    q, _ = np.linalg.qr(np.arange(9.0).reshape(3, 3) + np.eye(3))
    m = SymMatrix(q @ np.diag([2.0, 2.0, 5.0]) @ q.T)
    expected = q @ np.diag([7.0, 7.0, 4.0]) @ q.T
    assert fk_matrix_gradient(m, 2).entries == pytest.approx(expected, abs=1e-10)


@given(sym_arrays, st.integers(1, 4))
def test_trace_det_and_euler(a, k):
    m = SymMatrix(a + a.T)
    scale = max(np.linalg.norm(m.entries), 1.0)
    assert fk_value(m, 1) == pytest.approx(np.trace(m.entries), abs=1e-9 * scale)
    assert fk_value(m, 4) == pytest.approx(np.linalg.det(m.entries), rel=1e-9, abs=1e-9 * scale ** 4)
    g = fk_matrix_gradient(m, k).entries
    assert np.sum(g * m.entries) == pytest.approx(k * fk_value(m, k), rel=1e-9, abs=1e-9 * scale ** k)


@given(sym_arrays, st.integers(1, 4))
def test_newton_tensor_matches_eigenbasis(a, k):
    m = SymMatrix(a + a.T)
    scale = max(np.linalg.norm(m.entries), 1.0)
    assert newton_tensor(m.entries, k) == pytest.approx(fk_matrix_gradient(m, k).entries, abs=1e-9 * scale ** (k - 1))


def test_fd_hessian_quadratics():
    f = quadratic_field(np.eye(2), (-1.0, -1.0), (9, 9), 0.25)
    for idx in [(1, 1), (4, 4), (7, 2)]:
        assert fd_hessian(f, idx).entries == pytest.approx(np.eye(2), abs=1e-10)
    g = ScalarField.from_function(lambda x, y: x * y, (-1.0, -1.0), (9, 9), 0.25)
    assert fd_hessian(g, (3, 5)).entries == pytest.approx(np.array([[0.0, 1.0], [1.0, 0.0]]), abs=1e-10)
    with pytest.raises(DomainError):
        fd_hessian(f, (0, 4))


@given(arrays(np.float64, (3, 3), elements=st.floats(-3, 3)))
def test_fd_hessian_exact_on_any_quadratic(a):
    a = a + a.T
    f = quadratic_field(a, (-1.0, -1.0, -1.0), (6, 6, 6), 0.4, shift=0.7)
    assert fd_hessian(f, (2, 3, 2)).entries == pytest.approx(a, abs=1e-10)


def test_fd_hessian_matches_radial_spectrum():
    # (1+s^2)^((2k-n)/(2k)) with n=5, k=2 at |x| = 1, compared at two spacings
    n, k = 5, 2
    p = -(n - 2 * k) / (2 * k)
    errs = []
    for h in (0.1, 0.05):
        counts = (5,) * n
        lower = (1.0 - 2 * h,) + (-2 * h,) * (n - 1)
        f = ScalarField.from_function(lambda *x: (1 + sum(t * t for t in x)) ** p, lower, counts, h)
        ev = sym_eigenvalues(fd_hessian(f, (2,) * n)).values
        du = 2 * p * (2.0) ** (p - 1)
        d2u = 2 * p * 2.0 ** (p - 1) + 4 * p * (p - 1) * 2.0 ** (p - 2)
        ref = radial_spectrum(du, d2u, 1.0, n).values
        errs.append(max(abs(a - b) for a, b in zip(ev, ref)))
    assert errs[1] < errs[0] / 3.5


def test_scalar_field_validation_and_csv(tmp_path):
    with pytest.raises(DomainError):
        ScalarField(np.zeros((4, 6)), 0.1)
    with pytest.raises(DomainError):
        ScalarField(np.zeros((6, 6)), 0.0)
    f = ScalarField.from_function(lambda x, y: x - 2 * y, (0.0, 0.0), (5, 6), 0.5)
    path = tmp_path / "field.csv"
    f.to_csv(path)
    assert path.read_text().splitlines()[0] == "2,5,6,0.5"
    g = ScalarField.from_csv(path)
    assert np.array_equal(g.values, f.values) and g.h == f.h


def test_field_energy_zero_and_quadratic():
    f = ScalarField(np.zeros((7, 7)), 0.1)
    assert field_energy(f, 1) == 0.0
    # u = (|x|^2 - 1)/2 on B_1 in R^2, k=1: 2 pi int (1/2 - s^2/2) * 2 * s ds = pi/2
    s = np.linspace(0.0, 1.0, 2001)
    prof = RadialProfile(2, s, 0.5 * (s * s - 1.0), s, np.ones_like(s))
    oracle = sphere_area(2) * np.trapezoid((0.5 - 0.5 * s * s) * 2.0 * s, s)
    assert oracle == pytest.approx(math.pi / 2, rel=1e-6)
    assert field_energy(sample_radial(prof, 1 / 64), 1) == pytest.approx(oracle, rel=0.02)


def test_field_energy_homogeneity():
    s = np.linspace(0.0, 1.0, 2001)
    prof = RadialProfile(3, s, (s ** 4 - 1) / 4, s ** 3, 3 * s * s)
    f = sample_radial(prof, 1 / 16)
    e1 = field_energy(f, 2)
    f2 = ScalarField(2.5 * f.values, f.h, f.origin, f.mask, f.mirror)
    assert field_energy(f2, 2) == pytest.approx(2.5 ** 3 * e1, rel=1e-10)


def test_field_energy_rejects_nonadmissible():
    s = np.linspace(0.0, 1.0, 2001)
    prof = RadialProfile(2, s, -(1 - s * s) ** 3)
    with pytest.raises(AdmissibilityError) as info:
        field_energy(sample_radial(prof, 1 / 32), 1)
    assert 0 < len(info.value.worst) <= 10
    pos = ScalarField(np.ones((6, 6)), 0.1)
    with pytest.raises(DomainError):
        field_energy(pos, 1)


def test_mirror_sampling_matches_full_lattice():
    s = np.linspace(0.0, 1.0, 2001)
    prof = RadialProfile(2, s, (s ** 4 - 1) / 4 + (s * s - 1) / 2, s ** 3 + s, 3 * s * s + 1)
    full = field_energy(sample_radial(prof, 1 / 32, mirror=False), 2)
    half = field_energy(sample_radial(prof, 1 / 32, mirror=True), 2)
    assert half == pytest.approx(full, rel=1e-12)


@pytest.mark.parametrize("n,k", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_field_energy_matches_radial(n, k):
    s = np.linspace(0.0, 1.0, 4001)
    prof = RadialProfile(n, s, (s ** 4 - 1) / 4 + (s * s - 1) / 2, s ** 3 + s, 3 * s * s + 1)
    assert field_energy(sample_radial(prof, 1 / 64), k) == pytest.approx(hessian_energy(prof, k), rel=0.02)


def test_divergence_identity_laplacian():
    # u = -(1 - |x|^2) in B_1, n = 2: int (-u) Lap u = int |Du|^2 = 2 pi
    s = np.linspace(0.0, 1.0, 2001)
    prof = RadialProfile(2, s, -(1 - s * s), 2 * s, 2 * np.ones_like(s))
    lhs, rhs = divergence_identity_check(sample_radial(prof, 1 / 64), 1)
    oracle = sphere_area(2) * np.trapezoid((2 * s) ** 2 * s, s)
    assert oracle == pytest.approx(2 * math.pi, rel=1e-6)
    assert lhs == pytest.approx(oracle, rel=0.02)
    assert rhs == pytest.approx(oracle, rel=0.02)


def test_divergence_identity_zero_and_boundary():
    assert divergence_identity_check(ScalarField(np.zeros((6, 6)), 0.1), 2) == (0.0, 0.0)
    f = ScalarField.from_function(lambda x, y: x + y - 10.0, (0.0, 0.0), (6, 6), 0.1)
    with pytest.raises(DomainError):
        divergence_identity_check(f, 1)


def test_divergence_identity_refinement_3d():
    s = np.linspace(0.0, 1.0, 4001)
    prof = RadialProfile(3, s, -(1 - s * s) ** 4)
    gaps = []
    for d in (12, 24):
        lhs, rhs = divergence_identity_check(sample_radial(prof, 1 / d), 2)
        gaps.append(abs(lhs - rhs) / abs(rhs))
    assert gaps[1] < gaps[0] / 2
