"""Matrix-level k-Hessian evaluation and Cartesian finite-difference fields.

This is the non-radial path: it never assumes symmetry of the sampled
function, so it serves as an independent check on :mod:`hesscap.radial`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import AdmissibilityError, ConvergenceError, DomainError
from .symm import Spectrum, _coefficients, esym, esym_batch

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class SymMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError("SymMatrix needs a square 2-d array")
        if not np.all(np.isfinite(a)):
            raise DomainError("SymMatrix entries must be finite")
        if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL:
            raise DomainError("matrix is not symmetric")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def jacobi_eigh(m: SymMatrix, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic Jacobi rotations.

    Returns ``(eigenvalues, Q)`` with ``m = Q diag(eigenvalues) Q^T``, in the
    order the rotations leave them (unsorted). Iteration stops once the
    off-diagonal Frobenius mass drops below ``tol * ||m||_F``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    a = np.array(m.entries, dtype=float)
    n = a.shape[0]
    q = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0 or n == 1:
        return np.diag(a).copy(), q

    def off(x):
        return float(np.linalg.norm(x - np.diag(np.diag(x))))

    for _ in range(max_sweeps):
        if off(a) < tol * scale:
            return np.diag(a).copy(), q
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p, r]
                if apr == 0.0:
                    continue
                diff = a[r, r] - a[p, p]
                if abs(apr) < 1e-300 * max(abs(diff), 1.0):
                    a[p, r] = a[r, p] = 0.0
                    continue
                theta = diff / (2.0 * apr)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[r, r] = c
                rot[p, r] = s
                rot[r, p] = -s
                a = rot.T @ a @ rot
                a[p, r] = a[r, p] = 0.0
                q = q @ rot
    if off(a) < tol * scale:
        return np.diag(a).copy(), q
    raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def sym_eigenvalues(m: SymMatrix, tol: float = 1e-14, max_sweeps: int = 100) -> Spectrum:
    vals, _ = jacobi_eigh(m, tol, max_sweeps)
    return Spectrum(vals)


def fk_value(m: SymMatrix, k: int) -> float:
    """F_k[m] = S_k(lambda(m))."""
    if not 1 <= k <= m.dim:
        raise DomainError(f"order k={k} outside [1, {m.dim}]")
    return esym(sym_eigenvalues(m), k)


def fk_matrix_gradient(m: SymMatrix, k: int) -> SymMatrix:
    """The matrix dF_k/da_ij, assembled in the eigenbasis of ``m``.

    A spectral function's gradient is Q diag(dS_k/dlam) Q^T for any
    orthonormal eigenbasis Q; equal eigenvalues get equal partials, so the
    result does not depend on the choice of basis inside an eigenspace.
    """
    n = m.dim
    if not 1 <= k <= n:
        raise DomainError(f"order k={k} outside [1, {n}]")
    vals, q = jacobi_eigh(m)
    g = np.array([_coefficients(tuple(np.delete(vals, i)), k - 1)[k - 1] for i in range(n)])
    grad = (q * g) @ q.T
    return SymMatrix(0.5 * (grad + grad.T))


def newton_tensor(a, k: int, esyms=None):
    """Batched dF_k/da_ij via sum_i (-1)^i S_{k-1-i}(A) A^i.

    ``a`` has shape (..., n, n). ``esyms`` may carry precomputed S_0..S_{k-1}
    with shape (..., >=k).
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    if not 1 <= k <= n:
        raise DomainError(f"order k={k} outside [1, {n}]")
    if esyms is None:
        esyms = esym_batch(np.linalg.eigvalsh(a), k - 1)
    eye = np.broadcast_to(np.eye(n), a.shape)
    out = np.zeros_like(a)
    power = eye.copy()
    for i in range(k):
        coeff = (-1) ** i * esyms[..., k - 1 - i]
        out += coeff[..., None, None] * power
        power = power @ a
    return out


@dataclass
class ScalarField:
    """Node values of u on a uniform Cartesian lattice.

    With ``mirror=True`` the array holds only the orthant x_i >= 0 of a field
    that is even in every coordinate; stencils then reflect across the
    coordinate planes and quadratures count each node with its multiplicity
    in the full lattice. ``mask`` marks nodes inside the domain.
    """

    values: np.ndarray
    h: float
    origin: tuple = None
    mask: np.ndarray = None
    mirror: bool = False
    _pad: int = field(default=0, init=False, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.h <= 0:
            raise DomainError("spacing h must be positive")
        if any(c < 5 for c in self.values.shape):
            raise DomainError("need at least 5 nodes per axis")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("field values must be finite")
        if self.origin is None:
            self.origin = (0.0,) * self.dim
        self.origin = tuple(float(o) for o in self.origin)
        if len(self.origin) != self.dim:
            raise DomainError("origin length must equal dimension")
        if self.mirror and any(o != 0.0 for o in self.origin):
            raise DomainError("mirrored fields must start at the coordinate planes")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.values.shape:
                raise DomainError("mask shape differs from values shape")

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def coords(self, axis: int):
        return self.origin[axis] + self.h * np.arange(self.shape[axis])

    @classmethod
    def from_function(cls, func, lower, counts, h, **kwargs):
        """Sample ``func(*coordinate_arrays)`` on the lattice starting at ``lower``."""
        axes = [lo + h * np.arange(c) for lo, c in zip(lower, counts)]
        grids = np.meshgrid(*axes, indexing="ij")
        return cls(np.asarray(func(*grids), dtype=float), h, origin=tuple(lower), **kwargs)

    def to_csv(self, path):
        header = ",".join([str(self.dim)] + [str(c) for c in self.shape] + [repr(float(self.h))])
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for v in self.values.ravel(order="C"):
                fh.write(f"{float(v)!r}\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            head = fh.readline().strip().split(",")
            dim = int(head[0])
            counts = tuple(int(c) for c in head[1:1 + dim])
            h = float(head[1 + dim])
            vals = np.loadtxt(fh, dtype=float, ndmin=1)
        if vals.size != math.prod(counts):
            raise DomainError("CSV value count does not match header")
        return cls(vals.reshape(counts), h)

    # -- stencil plumbing -------------------------------------------------

    def _padded(self, arr=None):
        arr = self.values if arr is None else arr
        if self.mirror:
            return np.pad(arr, [(1, 0)] * self.dim, mode="reflect")
        return arr

    def _offset(self) -> int:
        return 1 if self.mirror else 0

    def stencil_ok(self):
        """Nodes whose full 3^n stencil lies inside the array."""
        ok = np.zeros(self.shape, dtype=bool)
        sl = tuple(slice(0 if self.mirror else 1, c - 1) for c in self.shape)
        ok[sl] = True
        return ok

    def interior(self):
        """Stencil-complete nodes whose stencil also stays inside ``mask``."""
        ok = self.stencil_ok()
        if self.mask is None:
            return ok
        padded = self._padded(self.mask)
        eroded = ndimage.binary_erosion(
            padded, structure=np.ones((3,) * self.dim, dtype=bool), border_value=0
        )
        if self.mirror:
            eroded = eroded[(slice(1, None),) * self.dim]
        return ok & eroded

    def weights(self, idx):
        """Lattice multiplicity of nodes ``idx`` (tuple of index arrays)."""
        if not self.mirror:
            return np.ones(len(idx[0]))
        nonzero = sum((np.asarray(i) > 0).astype(int) for i in idx)
        return 2.0 ** nonzero


def fd_hessian(f: ScalarField, idx) -> SymMatrix:
    """Second-order central-difference Hessian at one node."""
    idx = tuple(int(i) for i in idx)
    if len(idx) != f.dim:
        raise DomainError("index length must equal field dimension")
    for ax, (i, c) in enumerate(zip(idx, f.shape)):
        lo = 0 if f.mirror else 1
        if i < lo or i > c - 2:
            raise DomainError(f"index {idx} too close to the boundary on axis {ax}")
    p = f._padded()
    off = f._offset()
    centre = tuple(i + off for i in idx)
    h2 = f.h * f.h
    d = f.dim
    out = np.zeros((d, d))

    def at(shift):
        return p[tuple(c + s for c, s in zip(centre, shift))]

    u0 = p[centre]
    for i in range(d):
        e = [0] * d
        e[i] = 1
        out[i, i] = (at(e) - 2.0 * u0 + at([-x for x in e])) / h2
        for j in range(i + 1, d):
            pp = [0] * d
            pp[i], pp[j] = 1, 1
            pm = [0] * d
            pm[i], pm[j] = 1, -1
            val = (at(pp) - at(pm) - at([-x for x in pm]) + at([-x for x in pp])) / (4.0 * h2)
            out[i, j] = out[j, i] = val
    return SymMatrix(out)


def _derivatives(p, centres, h, d, want_grad=False):
    """Central-difference Hessians (and gradients) at padded-index ``centres``."""
    n_nodes = len(centres[0])
    hess = np.empty((n_nodes, d, d))
    u0 = p[centres]

    def shifted(shift):
        return p[tuple(c + s for c, s in zip(centres, shift))]

    h2 = h * h
    grad = np.empty((n_nodes, d)) if want_grad else None
    for i in range(d):
        e = [0] * d
        e[i] = 1
        up, dn = shifted(e), shifted([-x for x in e])
        hess[:, i, i] = (up - 2.0 * u0 + dn) / h2
        if want_grad:
            grad[:, i] = (up - dn) / (2.0 * h)
        for j in range(i + 1, d):
            pp = [0] * d
            pp[i], pp[j] = 1, 1
            pm = [0] * d
            pm[i], pm[j] = 1, -1
            val = (shifted(pp) - shifted(pm) - shifted([-x for x in pm]) + shifted([-x for x in pp])) / (4.0 * h2)
            hess[:, i, j] = val
            hess[:, j, i] = val
    return hess, grad


def _slabs(f: ScalarField, region, slab_nodes=400_000):
    """Yield (index tuple, padded centres) for ``region`` in fixed axis-0 slabs."""
    plane = max(1, math.prod(f.shape[1:]))
    step = max(1, slab_nodes // plane)
    off = f._offset()
    for start in range(0, f.shape[0], step):
        sub = region[start:start + step]
        idx = np.nonzero(sub)
        if len(idx[0]) == 0:
            continue
        idx = (idx[0] + start,) + idx[1:]
        centres = tuple(i + off for i in idx)
        yield idx, centres


def field_energy(f: ScalarField, k: int, tol_adm: float = 1e-6, max_fail_fraction: float = 0.01) -> float:
    """Midpoint-rule value of int (-u) F_k[D^2 u] over interior nodes.

    A node is admissible when S_j(lambda) >= -tol_adm * S_j(|lambda|) for all
    j <= k; the slack is relative because finite-difference Hessians are only
    accurate to O(h^2).
    """
    d = f.dim
    if not 1 <= k <= d:
        raise DomainError(f"order k={k} outside [1, {d}]")
    vmax = float(np.max(np.abs(f.values)))
    if np.max(f.values) > 1e-12 * max(vmax, 1e-300):
        raise DomainError("field must satisfy u <= 0")
    region = f.interior()
    p = f._padded()
    total = 0.0
    n_checked = 0
    failures = []
    for idx, centres in _slabs(f, region):
        hess, _ = _derivatives(p, centres, f.h, d)
        lam = np.linalg.eigvalsh(hess)
        s = esym_batch(lam, k)
        s_abs = esym_batch(np.abs(lam), k)
        bad = np.any(s[..., 1:] < -tol_adm * s_abs[..., 1:], axis=-1)
        n_checked += len(bad)
        if np.any(bad):
            worst_j = np.argmin(s[..., 1:] + tol_adm * s_abs[..., 1:], axis=-1)
            for b in np.nonzero(bad)[0]:
                j = int(worst_j[b])
                failures.append((tuple(int(i[b]) for i in idx), float(s[b, j + 1]), j + 1))
        u = p[centres]
        total += float(np.sum((-u) * s[:, k] * f.weights(idx)))
    if n_checked and len(failures) > max_fail_fraction * n_checked:
        failures.sort(key=lambda t: t[1])
        raise AdmissibilityError(
            f"{len(failures)} of {n_checked} interior nodes fail {k}-admissibility", failures[:10]
        )
    return total * f.h ** d


def divergence_identity_check(f: ScalarField, k: int):
    """Both sides of int (-u) F_k[u] = k^{-1} int u_i u_j F_k^{ij}[D^2 u].

    Requires u = 0 on the outer faces of the lattice. Returns (lhs, rhs).
    """
    d = f.dim
    if not 1 <= k <= d:
        raise DomainError(f"order k={k} outside [1, {d}]")
    scale = max(float(np.max(np.abs(f.values))), 1e-300)
    for ax in range(d):
        faces = [-1] if f.mirror else [0, -1]
        for face in faces:
            if np.max(np.abs(np.take(f.values, face, axis=ax))) > 1e-12 * scale:
                raise DomainError("u must vanish on the lattice boundary")
    region = f.stencil_ok()
    p = f._padded()
    lhs = 0.0
    rhs = 0.0
    for idx, centres in _slabs(f, region, slab_nodes=200_000):
        hess, grad = _derivatives(p, centres, f.h, d, want_grad=True)
        lam = np.linalg.eigvalsh(hess)
        s = esym_batch(lam, k)
        t = newton_tensor(hess, k, esyms=s)
        w = f.weights(idx)
        u = p[centres]
        lhs += float(np.sum((-u) * s[:, k] * w))
        quad = np.einsum("ni,nij,nj->n", grad, t, grad)
        rhs += float(np.sum(quad * w)) / k
    vol = f.h ** d
    return lhs * vol, rhs * vol


def sample_radial(profile, h: float, mirror: bool = True, margin: int = 2) -> ScalarField:
    """Cartesian sampling of a radial profile on B_R, zero outside.

    The lattice reaches ``margin`` cells past R so its outer faces vanish.
    """
    n = profile.n
    big_r = profile.R
    count = int(math.ceil(big_r / h)) + margin + 1
    if mirror:
        axes = [h * np.arange(count)] * n
        origin = (0.0,) * n
    else:
        axes = [h * np.arange(-(count - 1), count)] * n
        origin = (-(count - 1) * h,) * n
    shape = tuple(len(a) for a in axes)
    values = np.zeros(shape)
    mask = np.zeros(shape, dtype=bool)
    sq_tail = None
    if n > 1:
        tail = np.meshgrid(*axes[1:], indexing="ij")
        sq_tail = sum(t * t for t in tail)
    for i, x0 in enumerate(axes[0]):
        rad = np.sqrt(x0 * x0 + (sq_tail if sq_tail is not None else 0.0))
        inside = rad < big_r
        slab = np.zeros(rad.shape)
        slab[inside] = profile.evaluate(rad[inside])
        values[i] = slab
        mask[i] = inside
    return ScalarField(values, h, origin=origin, mask=mask, mirror=mirror)


def quadratic_field(matrix, lower, counts, h, shift=0.0) -> ScalarField:
    """u(x) = x^T A x / 2 + shift, handy for exactness checks."""
    a = np.asarray(matrix, dtype=float)

    def func(*xs):
        out = np.full(xs[0].shape, float(shift))
        for i, j in itertools.product(range(len(xs)), repeat=2):
            out += 0.5 * a[i, j] * xs[i] * xs[j]
        return out

    return ScalarField.from_function(func, lower, counts, h)
