"""Radial reduction of F_k, energies, condenser extremals and capacities.

For a radial u(s) the Hessian has eigenvalues u'' (once) and u'/s (n-1
times), so

    F_k[u] = C(n-1,k) (u'/s)^k + C(n-1,k-1) u'' (u'/s)^(k-1)
           = C(n-1,k-1)/(k s^(n-1)) * d/ds( s^(n-k) (u')^k ).

Integrating (-u) F_k against the sphere measure by parts gives the flux form
of the energy, omega_n C(n-1,k-1)/k * int (u')^(k+1) s^(n-k) ds, which is the
quantity every capacity computation below is built on.

Profiles may carry corners (the condenser extremal has one at the inner
plate). A corner is marked by repeating its radius: the first copy holds the
left derivatives, the second copy the right ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import AdmissibilityError, ConvergenceError, DomainError, IntegrationError, UnsupportedError
from .symm import Spectrum

LOG_BRANCH_NOTE = (
    "k = n/2 log branch: capacity is (omega_n C(n-1,k-1)/k) * log(R/r)^(-k), exponent -n/2. "
    "A +n/2 exponent, as sometimes displayed for this formula, would make the capacity grow "
    "with R/r; the extremal's energy decreases with R/r, so the negative sign is used."
)


def sphere_area(n: int) -> float:
    """|S^{n-1}|, so omega_3 = 4 pi and omega_4 = 2 pi^2."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int, r):
    return sphere_area(n) * np.asarray(r, dtype=float) ** n / n


def _trapz(y, x):
    return float(np.trapezoid(y, x))


class RadialProfile:
    """Sampled radial function u(s) <= 0 on [0, R] with u(R) = 0."""

    def __init__(self, n, r, u, du=None, d2u=None, k=None):
        r = np.array(r, dtype=float)
        u = np.array(u, dtype=float)
        if n < 1:
            raise DomainError("dimension must be positive")
        if r.ndim != 1 or r.shape != u.shape or len(r) < 3:
            raise DomainError("need matching 1-d node and value arrays with >= 3 nodes")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(u))):
            raise DomainError("nodes and values must be finite")
        if r[0] != 0.0:
            raise DomainError("first node must be s = 0")
        steps = np.diff(r)
        if np.any(steps < 0):
            raise DomainError("nodes must be nondecreasing")
        dup = np.nonzero(steps == 0)[0]
        if len(dup) and (np.any(np.diff(dup) == 1) or dup[0] == 0 or dup[-1] == len(r) - 2):
            raise DomainError("corner markers must be isolated interior node pairs")
        scale = max(float(np.max(np.abs(u))), 1.0)
        if abs(u[-1]) > 1e-12 * scale:
            raise DomainError("profile must vanish at s = R")
        if np.max(u) > 1e-12 * scale:
            raise DomainError("profile must satisfy u <= 0")
        u[-1] = 0.0
        self.n = int(n)
        self.k = k
        self.r = r
        self.u = u
        bounds = [0] + [int(i) + 1 for i in dup] + [len(r)]
        self.segments = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        self.du = self._derivative(u) if du is None else np.array(du, dtype=float)
        self.du[0] = 0.0
        self.d2u = self._derivative(self.du) if d2u is None else np.array(d2u, dtype=float)
        for arr in (self.r, self.u, self.du, self.d2u):
            if arr.shape != r.shape:
                raise DomainError("derivative arrays must match the nodes")
            arr.setflags(write=False)
        self._splines = None

    def _derivative(self, y):
        out = np.empty_like(y)
        for seg in self.segments:
            rs, ys = self.r[seg], y[seg]
            out[seg] = np.gradient(ys, rs, edge_order=2 if len(rs) > 2 else 1)
        return out

    @property
    def R(self) -> float:
        return float(self.r[-1])

    @property
    def m(self) -> int:
        return len(self.r) - 1

    @property
    def kinks(self) -> list:
        """Node indices (left copy) of corner markers."""
        return [seg.stop - 1 for seg in self.segments[:-1]]

    def evaluate(self, s):
        """Piecewise cubic Hermite interpolant; corners take the right piece."""
        if self._splines is None:
            self._splines = [
                CubicHermiteSpline(self.r[seg], self.u[seg], self.du[seg]) for seg in self.segments
            ]
        s = np.asarray(s, dtype=float)
        starts = np.array([self.r[seg.start] for seg in self.segments])
        which = np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(starts) - 1)
        out = np.empty(s.shape)
        for i, spline in enumerate(self._splines):
            sel = which == i
            if np.any(sel):
                out[sel] = spline(s[sel])
        out[s >= self.R] = 0.0
        return np.minimum(out, 0.0)

    def scaled(self, c: float) -> "RadialProfile":
        if c < 0:
            raise DomainError("scale factor must be nonnegative")
        return RadialProfile(self.n, self.r, c * self.u, c * self.du, c * self.d2u, self.k)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(f"{self.n},{'' if self.k is None else self.k},{self.R!r},{self.m}\n")
            for s, v in zip(self.r, self.u):
                fh.write(f"{float(s)!r},{float(v)!r}\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            n, k, _, m = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if len(data) != int(m) + 1:
            raise DomainError("row count does not match header")
        return cls(int(n), data[:, 0], data[:, 1], k=int(k) if k else None)


@dataclass(frozen=True)
class Condenser:
    """The ball pair (B_r, B_R) in R^n with Hessian order k."""

    n: int
    k: int
    r: float
    R: float

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("condenser needs n >= 2")
        if not 1 <= self.k <= self.n:
            raise DomainError(f"order k={self.k} outside [1, {self.n}]")
        if not (0.0 < self.r < self.R):
            raise DomainError("need 0 < r < R")

    @property
    def log_branch(self) -> bool:
        return 2 * self.k == self.n

    @property
    def exponent(self) -> float:
        return 2.0 - self.n / self.k


def _require_closed(c: Condenser):
    if 2 * c.k > c.n:
        raise UnsupportedError("unsupported: k exceeds n/2")


def _flux_constant(n, k):
    return sphere_area(n) * comb(n - 1, k - 1) / k


@dataclass(frozen=True)
class MTParams:
    """Exponential-integrability parameters for the borderline order k = n/2."""

    n: int
    alpha: float
    beta: float

    def __post_init__(self):
        if self.n % 2:
            raise DomainError("k = n/2 needs even n")
        if self.alpha <= 0:
            raise DomainError("alpha must be positive")
        if not 1.0 <= self.beta <= self.beta0 + 1e-12:
            raise DomainError(f"beta must lie in [1, {self.beta0}]")

    @property
    def k(self) -> int:
        return self.n // 2

    @property
    def alpha0(self) -> float:
        return mt_alpha0(self.n)

    @property
    def beta0(self) -> float:
        return 1.0 + 2.0 / self.n


def mt_alpha0(n: int) -> float:
    """n * (omega_n/k * C(n-1, k-1))^(2/n) with k = n/2."""
    if n % 2 or n < 2:
        raise DomainError("alpha_0 is defined for even n only")
    k = n // 2
    return n * (sphere_area(n) / k * comb(n - 1, k - 1)) ** (2.0 / n)


def radial_spectrum(du: float, d2u: float, r: float, n: int) -> Spectrum:
    if r <= 0:
        raise DomainError("radius must be positive; use the u'/r -> u'' limit at the origin")
    return Spectrum([d2u] + [du / r] * (n - 1))


def _ratio(p: RadialProfile):
    """u'/s per node, with the limit u'' at s = 0."""
    rho = np.empty_like(p.du)
    pos = p.r > 0
    rho[pos] = p.du[pos] / p.r[pos]
    rho[~pos] = p.d2u[~pos]
    return rho


def radial_esyms(p: RadialProfile, k: int, absolute: bool = False):
    """S_0..S_k of the radial spectrum at every node, shape (m+1, k+1)."""
    n = p.n
    if not 1 <= k <= n:
        raise DomainError(f"order k={k} outside [1, {n}]")
    rho = _ratio(p)
    d2 = p.d2u
    if absolute:
        rho, d2 = np.abs(rho), np.abs(d2)
    out = np.empty((len(rho), k + 1))
    out[:, 0] = 1.0
    for j in range(1, k + 1):
        out[:, j] = comb(n - 1, j) * rho ** j + comb(n - 1, j - 1) * d2 * rho ** (j - 1)
    return out


def radial_fk(p: RadialProfile, k: int):
    """F_k at every node."""
    return radial_esyms(p, k)[:, k]


def check_admissible(p: RadialProfile, k: int, tol_adm: float = 1e-8):
    """Raise unless S_j >= -tol_adm * S_j(|lambda|) at every node for j <= k."""
    s = radial_esyms(p, k)[:, 1:]
    s_abs = radial_esyms(p, k, absolute=True)[:, 1:]
    slack = s + tol_adm * s_abs
    bad = np.nonzero(np.any(slack < 0, axis=1))[0]
    if len(bad):
        order = bad[np.argsort(np.min(slack[bad], axis=1))]
        worst = [(float(p.r[i]), float(np.min(s[i])), int(np.argmin(slack[i])) + 1) for i in order[:10]]
        raise AdmissibilityError(f"{len(bad)} nodes fail {k}-admissibility", worst)


def is_profile_admissible(p: RadialProfile, k: int, tol_adm: float = 1e-8) -> bool:
    try:
        check_admissible(p, k, tol_adm)
    except AdmissibilityError:
        return False
    return True


def _kink_jumps(p: RadialProfile, k: int):
    """(index, radius, jump of s^(n-k) (u')^k) at each corner."""
    out = []
    for i in p.kinks:
        s = p.r[i]
        jump = s ** (p.n - k) * (p.du[i + 1] ** k - p.du[i] ** k)
        out.append((i, s, jump))
    return out


@dataclass(frozen=True)
class EnergyDiagnostics:
    value: float
    flux: float
    direct: float
    rel_gap: float

    def __float__(self):
        return self.value


def flux_energy(p: RadialProfile, k: int) -> float:
    """omega_n C(n-1,k-1)/k * int (u')^(k+1) s^(n-k) ds, by trapezoid."""
    return _flux_constant(p.n, k) * _trapz(p.du ** (k + 1) * p.r ** (p.n - k), p.r)


def direct_energy(p: RadialProfile, k: int) -> float:
    """omega_n int (-u) F_k s^(n-1) ds, plus the surface measure at corners."""
    fk = radial_fk(p, k)
    val = sphere_area(p.n) * _trapz(-p.u * fk * p.r ** (p.n - 1), p.r)
    cst = _flux_constant(p.n, k)
    for i, _, jump in _kink_jumps(p, k):
        val += cst * (-p.u[i]) * jump
    return val


def hessian_energy(p: RadialProfile, k: int, tol: float = 1e-3, tol_adm: float = 1e-8, full: bool = False):
    """int_{B_R} (-u) F_k[u], i.e. ||u||^(k+1) in the Hessian energy norm.

    The flux form is returned; the direct form is computed alongside and the
    two must agree to ``tol`` (relative), else an
    :class:`~hesscap.errors.IntegrationError` is raised at 10x ``tol``.
    """
    if not 1 <= k <= p.n:
        raise DomainError(f"order k={k} outside [1, {p.n}]")
    check_admissible(p, k, tol_adm)
    flux = flux_energy(p, k)
    direct = direct_energy(p, k)
    denom = max(abs(flux), abs(direct))
    gap = abs(flux - direct) / denom if denom > 0 else 0.0
    if gap > 10 * tol:
        raise IntegrationError(f"flux and direct energies disagree (relative gap {gap:.3g})")
    diag = EnergyDiagnostics(flux, flux, direct, float(gap))
    return diag if full else flux


def measure_on_ball(p: RadialProfile, k: int, radius: float, weighted: bool = False) -> float:
    """F_k[u] as a measure, evaluated on the closed ball B_radius.

    Corners inside the ball contribute their surface flux jump. With
    ``weighted`` the density is multiplied by (-u).
    """
    sel = p.r <= radius
    fk = radial_fk(p, k)
    w = -p.u if weighted else np.ones_like(p.u)
    val = sphere_area(p.n) * _trapz((w * fk * p.r ** (p.n - 1))[sel], p.r[sel])
    cst = _flux_constant(p.n, k)
    for i, s, jump in _kink_jumps(p, k):
        if s <= radius:
            val += cst * w[i] * jump
    return float(val)


def _extremal_values(c: Condenser, s):
    s = np.asarray(s, dtype=float)
    if c.log_branch:
        big_l = math.log(c.R / c.r)
        return -np.log(c.R / s) / big_l, 1.0 / (s * big_l), -1.0 / (s * s * big_l)
    a = c.exponent
    denom = c.r ** a - c.R ** a
    return (
        -(s ** a - c.R ** a) / denom,
        -a * s ** (a - 1) / denom,
        -a * (a - 1) * s ** (a - 2) / denom,
    )


def condenser_extremal(c: Condenser, m: int = 4096, nodes=None, inner: int = 16) -> RadialProfile:
    """Relative extremal of (B_r, B_R): -1 on B_r, F_k = 0 on the annulus.

    Default annulus nodes are geometric, r (R/r)^(i/m), which clusters them at
    the inner plate; ``nodes`` overrides the grid (r is inserted twice if
    absent, to mark the corner).
    """
    _require_closed(c)
    if not math.isfinite(c.R):
        raise DomainError("extremal profile needs a finite outer radius")
    if nodes is None:
        ann = c.r * (c.R / c.r) ** np.linspace(0.0, 1.0, m + 1)
        ann[0], ann[-1] = c.r, c.R
        left = np.linspace(0.0, c.r, inner + 1)
    else:
        nodes = np.sort(np.asarray(nodes, dtype=float))
        if nodes[0] != 0.0 or nodes[-1] != c.R:
            raise DomainError("nodes must span [0, R]")
        left = np.concatenate([nodes[nodes < c.r], [c.r]])
        ann = np.concatenate([[c.r], nodes[nodes > c.r]])
    u_in = np.full(len(left), -1.0)
    z = np.zeros(len(left))
    u_out, du_out, d2_out = _extremal_values(c, ann)
    u_out[0] = -1.0
    u_out[-1] = 0.0
    return RadialProfile(
        c.n,
        np.concatenate([left, ann]),
        np.concatenate([u_in, u_out]),
        np.concatenate([z, du_out]),
        np.concatenate([z, d2_out]),
        k=c.k,
    )


def capacity_closed_form(c: Condenser) -> float:
    """cap_k(B_r, B_R) for k <= n/2.

    k < n/2:  omega_n C(n-1,k-1) (n/k - 2)^k / k * (r^(2-n/k) - R^(2-n/k))^(-k)
    k = n/2:  omega_n C(n-1,k-1) / k * log(R/r)^(-k)
    """
    _require_closed(c)
    cst = _flux_constant(c.n, c.k)
    if c.log_branch:
        return cst * math.log(c.R / c.r) ** (-c.k)
    a = c.exponent
    return cst * (-a) ** c.k * (c.r ** a - c.R ** a) ** (-c.k)


def capacity_flux(c: Condenser) -> float:
    """Flux jump of the extremal at the inner plate: the F_k-measure of B_r."""
    _require_closed(c)
    _, du, _ = _extremal_values(c, c.r)
    return _flux_constant(c.n, c.k) * c.r ** (c.n - c.k) * float(du) ** c.k


@dataclass(frozen=True)
class VariationalResult:
    energy: float
    total_measure: float
    profile: RadialProfile
    iterations: int
    multiplier: float


def solve_variational(c: Condenser, m: int = 4096, max_iter: int = 200, rtol: float = 1e-15) -> VariationalResult:
    """Minimise the discrete flux-form energy over monotone profiles.

    Unknowns are cell slopes d_i >= 0 on a geometric annulus grid, with
    sum d_i * width_i = 1 (u = -1 on B_r, u(R) = 0). Stationarity makes
    s_i^(n-k) d_i^k constant; that constant (through the Lagrange multiplier)
    is found by bisection on the boundary-data constraint.
    """
    if m < 64:
        raise DomainError("variational solve needs m >= 64")
    if not math.isfinite(c.R):
        raise DomainError("variational solve needs a finite outer radius")
    n, k = c.n, c.k
    nodes = c.r * (c.R / c.r) ** np.linspace(0.0, 1.0, m + 1)
    nodes[0], nodes[-1] = c.r, c.R
    width = np.diff(nodes)
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    weight = _flux_constant(n, k) * width * mid ** (n - k)

    def slopes(lam):
        return (lam / ((k + 1) * weight / width)) ** (1.0 / k)

    def excess(lam):
        return float(np.sum(width * slopes(lam))) - 1.0

    lo, hi = 1.0, 1.0
    for _ in range(2000):
        if excess(lo) < 0:
            break
        lo *= 0.5
    for _ in range(2000):
        if excess(hi) > 0:
            break
        hi *= 2.0
    if not (excess(lo) < 0 < excess(hi)):
        raise ConvergenceError("could not bracket the Lagrange multiplier")
    it = 0
    while hi / lo - 1.0 > rtol:
        it += 1
        if it > max_iter:
            raise ConvergenceError(f"bisection did not converge in {max_iter} iterations")
        midpoint = math.sqrt(lo * hi)
        if midpoint in (lo, hi):
            break
        if excess(midpoint) < 0:
            lo = midpoint
        else:
            hi = midpoint
    lam = math.sqrt(lo * hi)
    d = slopes(lam)
    d /= float(np.sum(width * d))
    energy = float(np.sum(weight * d ** (k + 1)))

    u_ann = -1.0 + np.concatenate([[0.0], np.cumsum(width * d)])
    u_ann[-1] = 0.0
    inner = np.linspace(0.0, c.r, 17)
    prof = RadialProfile(n, np.concatenate([inner, nodes]), np.concatenate([np.full(17, -1.0), u_ann]), k=k)
    total = measure_on_ball(prof, k, c.R)
    return VariationalResult(energy, total, prof, it, lam)


def capacity_variational(c: Condenser, m: int = 4096, **kwargs) -> float:
    return solve_variational(c, m, **kwargs).energy


def lq_norm(p: RadialProfile, q: float, density=None) -> float:
    """||u||_{L^q(B_R, mu)}; ``density`` is the radial density of mu (Lebesgue if None)."""
    if q < 1:
        raise DomainError("q must be >= 1")
    top = float(np.max(np.abs(p.u)))
    rho = np.ones_like(p.r) if density is None else np.asarray(density(p.r), dtype=float)
    if math.isinf(q):
        return top if np.any(rho[np.abs(p.u) == top] > 0) or density is None else float(np.max(np.abs(p.u)[rho > 0], initial=0.0))
    if top == 0.0:
        return 0.0
    integral = sphere_area(p.n) * _trapz((np.abs(p.u) / top) ** q * rho * p.r ** (p.n - 1), p.r)
    return top * integral ** (1.0 / q)


def sobolev_quotient(p: RadialProfile, q: float, k: int, **energy_kwargs) -> float:
    """||u||_{L^q} / ||u||_{Phi}, with ||u||_{Phi} = energy^(1/(k+1)); q may be inf."""
    if not (q >= 1):
        raise DomainError("q must be >= 1")
    energy = hessian_energy(p, k, **energy_kwargs)
    if energy <= 0:
        raise DomainError("profile has zero Hessian energy")
    return lq_norm(p, q) / energy ** (1.0 / (k + 1))


@dataclass(frozen=True)
class MTDiagnostics:
    value: float
    norm: float
    overflow: bool

    def __float__(self):
        return self.value


EXP_CAP = 700.0


def moser_trudinger_functional(p: RadialProfile, mt: MTParams, k: int, density=None, full: bool = False):
    """int exp(alpha (|u| / ||u||_Phi)^beta) d mu over B_R, for k = n/2.

    Exponents are capped at 700; ``overflow`` in the diagnostics reports
    whether the cap was hit.
    """
    if p.n != mt.n or 2 * k != p.n:
        raise DomainError("the exponential functional needs k = n/2 and matching dimension")
    energy = hessian_energy(p, k)
    if energy <= 0:
        raise DomainError("profile has zero Hessian energy")
    norm = energy ** (1.0 / (k + 1))
    expo = mt.alpha * (np.abs(p.u) / norm) ** mt.beta
    overflow = bool(np.any(expo > EXP_CAP))
    rho = np.ones_like(p.r) if density is None else np.asarray(density(p.r), dtype=float)
    val = sphere_area(p.n) * _trapz(np.exp(np.minimum(expo, EXP_CAP)) * rho * p.r ** (p.n - 1), p.r)
    return MTDiagnostics(val, norm, overflow) if full else val


def sobolev_extremal(n: int, k: int, R: float, m: int = 8000, s_min: float = 1e-4) -> RadialProfile:
    """-(1+s^2)^((2k-n)/(2k)) cut off at R and shifted so that u(R) = 0."""
    if not 2 * k < n:
        raise DomainError("the Sobolev extremal needs k < n/2")
    p = (n - 2 * k) / (2.0 * k)
    s = np.concatenate([[0.0], np.geomspace(s_min, R, m)])
    s[-1] = R
    base = (1.0 + s * s) ** (-p)
    u = -(base - base[-1])
    du = 2.0 * p * s * (1.0 + s * s) ** (-p - 1.0)
    d2u = 2.0 * p * (1.0 + s * s) ** (-p - 2.0) * (1.0 - (2.0 * p + 1.0) * s * s)
    return RadialProfile(n, s, u, du, d2u, k=k)


def truncated_log_profile(n: int, R: float, a: float, m: int = 4096) -> RadialProfile:
    """-min(a, log(R/s)): a times the k = n/2 extremal of (B_{R e^-a}, B_R)."""
    if a <= 0:
        raise DomainError("truncation level must be positive")
    return condenser_extremal(Condenser(n, n // 2, R * math.exp(-a), R), m).scaled(a)
