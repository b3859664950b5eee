"""Capacity-based checks: level sets, weak/strong type estimates,
isocapacitary inequalities, agreement of capacity definitions, the Wiener
cross-check and capacitary trace constants.

Every check returns a :class:`~hesscap.report.VerificationReport`.
Compact sets are restricted to concentric balls, so the capacitary
minimizing function tau is an upper bound on the true infimum; the
constants C1 and C3 derived from it are lower bounds, which keeps the
verified directions C1 <= C2^(k+1) and C3 <= C4 valid one-sided checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, UnsupportedError
from .families import perturb_profile, random_family
from .radial import (
    LOG_BRANCH_NOTE,
    Condenser,
    MTParams,
    RadialProfile,
    ball_volume,
    capacity_closed_form,
    capacity_flux,
    condenser_extremal,
    hessian_energy,
    lq_norm,
    measure_on_ball,
    moser_trudinger_functional,
    mt_alpha0,
    solve_variational,
    sobolev_extremal,
    sobolev_quotient,
    sphere_area,
    truncated_log_profile,
)
from .report import VerificationReport

BALL_FAMILY_NOTE = (
    "tau is minimised over concentric balls only: an upper bound on the infimum, "
    "so the reported C1/C3 are lower bounds and the checked directions stay valid."
)
REMARK_TYPO_NOTE = (
    "level-a bound: only cap_k(M_a) <= (k+1) ln a (a-1)^-(k+1) ||u||^(k+1) is checked; "
    "the trailing '>= a^-(k+1) ||u||^(k+1)' sometimes chained onto it is treated as a typo."
)
CONSTANT_LABEL_NOTE = "empirical constant labelled c(n, k=n/2)."


def _check_order(n, k):
    if not 1 <= k <= n:
        raise DomainError(f"order k={k} outside [1, {n}]")


def _log_grid(top: float, decades: float = 4.0, points: int = 64):
    return top * np.logspace(-decades, 0.0, points)


@dataclass(frozen=True)
class LevelSet:
    radius: float
    empty: bool


def level_set_radius(p: RadialProfile, t: float) -> LevelSet:
    """Radius of M_t = {|u| >= t}, a closed ball for monotone radial u."""
    a = np.abs(p.u)
    top = float(a.max())
    if np.any(np.diff(a) > 1e-12 * max(top, 1.0)):
        raise DomainError("|u| must be nonincreasing in s")
    if not t > 0:
        raise DomainError("level must be positive")
    if t > top:
        return LevelSet(0.0, True)
    i = int(np.nonzero(a >= t)[0][-1])
    if i == len(a) - 1:
        return LevelSet(p.R, False)
    drop = a[i] - a[i + 1]
    frac = 0.0 if drop <= 0 else (a[i] - t) / drop
    return LevelSet(float(p.r[i] + frac * (p.r[i + 1] - p.r[i])), False)


def ball_capacity(n: int, k: int, rho, R: float):
    """cap_k(B_rho, B_R), vectorised; 0 at rho = 0 and inf at rho >= R."""
    if 2 * k > n:
        raise UnsupportedError("unsupported: k exceeds n/2")
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    out = np.empty_like(rho)
    cst = sphere_area(n) * comb(n - 1, k - 1) / k
    zero = rho <= 0
    full = rho >= R
    mid = ~(zero | full)
    out[zero] = 0.0
    out[full] = math.inf
    if 2 * k == n:
        out[mid] = cst * np.log(R / rho[mid]) ** (-k)
    else:
        a = 2.0 - n / k
        out[mid] = cst * (-a) ** k * (rho[mid] ** a - R ** a) ** (-k)
    return out


def weak_type_report(p: RadialProfile, k: int, t_grid=None, slack: float = 1e-3, label: str = "") -> VerificationReport:
    """cap_k(M_t) t^(k+1) / ||u||^(k+1) <= 1 for every level t."""
    energy = hessian_energy(p, k)
    top = float(np.max(np.abs(p.u)))
    t_grid = _log_grid(top) if t_grid is None else np.asarray(t_grid, dtype=float)
    grid, ratios = [], []
    for t in t_grid:
        ls = level_set_radius(p, float(t))
        cap = 0.0 if ls.empty else float(ball_capacity(p.n, k, ls.radius, p.R)[0])
        grid.append({"t": float(t), "radius": ls.radius})
        ratios.append(cap * t ** (k + 1) / energy)
    return VerificationReport(
        "weak-type",
        {"n": p.n, "k": k, "R": p.R, "profile": label},
        grid,
        ratios,
        constant=max(ratios),
        slack=slack,
        values={"energy": energy},
    )


def strong_type_bound(a: float, k: int) -> float:
    return (a / (a - 1.0)) ** (k + 1) * math.log(a)


def level_bound(a: float, k: int) -> float:
    return (k + 1) * math.log(a) * (a - 1.0) ** (-(k + 1))


def strong_type_lhs(p: RadialProfile, k: int) -> float:
    """int_0^inf t^k cap_k(M_t) dt, substituting t = |u(s)| on the nodes."""
    a = np.abs(p.u)
    cap = ball_capacity(p.n, k, p.r, p.R)
    g = np.zeros_like(a)
    inner = p.r < p.R
    g[inner] = a[inner] ** k * cap[inner] * np.abs(p.du[inner])
    # the integrand has a finite limit at s = R; extrapolate it linearly
    g[-1] = 2.0 * g[-2] - g[-3] if p.r[-2] != p.r[-3] else g[-2]
    g[-1] = max(g[-1], 0.0)
    return float(np.trapezoid(g, p.r))


def strong_type_report(p: RadialProfile, k: int, a_values=None, level_a=(2.0, 4.0, 8.0), slack: float = 0.0,
                       label: str = "") -> VerificationReport:
    """int t^k cap_k(M_t) dt <= (a/(a-1))^(k+1) ln a ||u||^(k+1), plus the
    single-level bound at t = a on the profile rescaled to amplitude 2a."""
    a_values = (2.0, float(p.n), 10.0) if a_values is None else a_values
    if any(a <= 1 for a in list(a_values) + list(level_a)):
        raise DomainError("a must exceed 1")
    energy = hessian_energy(p, k)
    lhs = strong_type_lhs(p, k)
    grid, ratios = [], []
    for a in a_values:
        grid.append({"kind": "integrated", "a": float(a)})
        ratios.append(lhs / (strong_type_bound(a, k) * energy))
    top = float(np.max(np.abs(p.u)))
    for a in level_a:
        q = p.scaled(2.0 * a / top)
        e_q = energy * (2.0 * a / top) ** (k + 1)
        ls = level_set_radius(q, a)
        cap = 0.0 if ls.empty else float(ball_capacity(p.n, k, ls.radius, p.R)[0])
        grid.append({"kind": "level", "a": float(a)})
        ratios.append(cap / (level_bound(a, k) * e_q))
    xs = sorted(float(a) for a in a_values)
    b = [strong_type_bound(a, k) for a in xs]
    lx = [math.log(a) for a in xs]
    convex = True
    if len(xs) >= 3:
        for i in range(1, len(xs) - 1):
            w = (lx[i] - lx[i - 1]) / (lx[i + 1] - lx[i - 1])
            convex &= b[i] <= (1 - w) * b[i - 1] + w * b[i + 1] + 1e-12
    return VerificationReport(
        "strong-type",
        {"n": p.n, "k": k, "R": p.R, "profile": label},
        grid,
        ratios,
        constant=lhs / energy,
        slack=slack,
        values={"energy": energy, "lhs": lhs},
        checks={"bound_convex_in_log_a": bool(convex)},
        notes=[REMARK_TYPO_NOTE],
    )


def critical_exponent(n: int, k: int) -> float:
    if not 2 * k < n:
        raise DomainError("critical exponent needs k < n/2")
    return n * (k + 1) / (n - 2 * k)


def isocap_ratio(n, k, q, r, R):
    """|B_r|^((k+1)/q) / cap_k(B_r, B_R)."""
    return ball_volume(n, r) ** ((k + 1) / q) / ball_capacity(n, k, r, R)


def isocap_report(n: int, k: int, q: float | None = None, R: float = 1.0, fractions=None,
                  far_radii=(1e5, 1e6, 1e7), slack: float = 0.02) -> VerificationReport:
    """Empirical constant sup |B_r|^((k+1)/q) / cap_k(B_r, B_R) over r.

    Stability: the sup over the full sweep may exceed the sup without its
    smallest decade of r/R by at most ``slack``. At the critical exponent the
    r -> 0 limit with r = 1 is also compared across ``far_radii``.
    """
    if not (1 <= k and 2 * k < n):
        raise DomainError("isocapacitary power form needs 1 <= k < n/2")
    qc = critical_exponent(n, k)
    q = qc if q is None else float(q)
    if not 1 <= q <= qc * (1 + 1e-12):
        raise DomainError(f"q must lie in [1, {qc}]")
    fr = np.geomspace(1e-6, 0.99, 121) if fractions is None else np.sort(np.asarray(fractions, dtype=float))
    ratios_raw = isocap_ratio(n, k, q, fr * R, R)
    sup_all = float(np.max(ratios_raw))
    cut = fr >= fr[0] * 10.0
    sup_rest = float(np.max(ratios_raw[cut])) if np.any(cut) else sup_all
    growth = sup_all / sup_rest
    grid = [{"r_over_R": float(f), "value": float(v)} for f, v in zip(fr, ratios_raw)]
    checks = {"finite": bool(np.isfinite(sup_all))}
    values = {"q": q, "critical_q": qc, "sup": sup_all, "sup_without_last_decade": sup_rest}
    worst = growth
    critical = abs(q - qc) <= 1e-12 * qc
    if critical:
        far = [float(isocap_ratio(n, k, q, 1.0, big)[0]) for big in far_radii]
        spread = max(far) / min(far)
        values["far_field_values"] = far
        values["far_field_spread"] = spread
        worst = max(worst, spread)
    return VerificationReport(
        "isocap",
        {"n": n, "k": k, "q": q, "R": R},
        grid,
        [float(v) / sup_all for v in ratios_raw],
        constant=sup_all,
        slack=slack,
        values=values,
        checks=checks,
        worst=worst,
    )


def isocap_scaling_report(n: int, k: int, aspect: float = 1e3, radii=None, slack: float = 0.02) -> VerificationReport:
    """At the critical exponent, the isocapacitary ratio at fixed R/r does not depend on r."""
    if not 2 * k < n:
        raise DomainError("needs k < n/2")
    q = critical_exponent(n, k)
    radii = np.geomspace(1e-3, 1e3, 13) if radii is None else np.asarray(radii, dtype=float)
    vals = [float(isocap_ratio(n, k, q, r, aspect * r)[0]) for r in radii]
    lo = min(vals)
    return VerificationReport(
        "isocap-scaling",
        {"n": n, "k": k, "q": q, "R_over_r": aspect},
        [{"r": float(r), "value": v} for r, v in zip(radii, vals)],
        [v / lo for v in vals],
        constant=max(vals),
        slack=slack,
    )


def isocap_exponential_report(n: int, mt: MTParams, R: float = 1.0, fractions=None,
                              slack: float = 0.02) -> VerificationReport:
    """sup over r of (|B_r|/|B_R|) exp(alpha / cap_k(B_r,B_R)^(beta/(k+1))), k = n/2.

    Computed in log space. Stability compares the sup over the smallest
    decade of r/R with the sup over the rest of the sweep.
    """
    if n % 2 or mt.n != n:
        raise DomainError("exponential isocapacitary form needs k = n/2")
    k = n // 2
    fr = np.geomspace(1e-4, 0.9, 121) if fractions is None else np.sort(np.asarray(fractions, dtype=float))
    cap = ball_capacity(n, k, fr * R, R)
    logv = n * np.log(fr) + mt.alpha * cap ** (-mt.beta / (k + 1))
    last = fr < fr[0] * 10.0
    rest_max = float(np.max(logv[~last])) if np.any(~last) else float(np.max(logv))
    growth_log = float(np.max(logv[last])) - rest_max
    top = float(np.max(logv))
    constant = math.exp(top) if top < 700 else math.inf
    notes = [CONSTANT_LABEL_NOTE]
    if mt.alpha > mt.alpha0 * (1 + 1e-12):
        notes.append("alpha exceeds alpha_0: growth as r/R -> 0 is the expected outcome")
    return VerificationReport(
        "isocap-exp",
        {"n": n, "k": k, "alpha": mt.alpha, "beta": mt.beta, "alpha0": mt.alpha0, "beta0": mt.beta0, "R": R},
        [{"r_over_R": float(f), "log_value": float(v)} for f, v in zip(fr, logv)],
        [math.exp(min(float(v) - top, 0.0)) for v in logv],
        constant=constant,
        slack=slack,
        values={"log_constant": top, "log_growth_last_decade": growth_log},
        checks={"finite": bool(np.isfinite(top))},
        notes=notes,
        worst=math.exp(min(max(growth_log, 0.0), 700.0)),
    )


def cap_values(c: Condenser, m: int = 4096) -> dict:
    """Closed form, analytic flux and the four definitional capacities.

    cap1: F_k-measure of K under the extremal; cap4: int_K (-u) F_k[u] of the
    extremal (equal to cap1 because u = -1 on K); cap2: total F_k-measure of
    the discrete variational minimiser; cap3: its energy.
    """
    ext = condenser_extremal(c, m)
    var = solve_variational(c, m)
    return {
        "closed_form": capacity_closed_form(c),
        "flux": capacity_flux(c),
        "cap1": measure_on_ball(ext, c.k, c.r),
        "cap2": var.total_measure,
        "cap3": var.energy,
        "cap4": measure_on_ball(ext, c.k, c.r, weighted=True),
    }


def cap_defs_report(c: Condenser, m: int = 4096, slack: float = 0.01) -> VerificationReport:
    """All capacity definitions agree; spread = max/min must shrink under node doubling."""
    vals = cap_values(c, m)
    fine = cap_values(c, 2 * m)
    spread = max(vals.values()) / min(vals.values())
    spread_fine = max(fine.values()) / min(fine.values())
    lo = min(vals.values())
    notes = [LOG_BRANCH_NOTE] if c.log_branch else []
    return VerificationReport(
        "cap-defs",
        {"n": c.n, "k": c.k, "r": c.r, "R": c.R, "m": m},
        [{"definition": key, "value": v} for key, v in vals.items()],
        [v / lo for v in vals.values()],
        constant=vals["closed_form"],
        slack=slack,
        values={"spread": spread - 1.0, "spread_doubled": spread_fine - 1.0, "doubled": fine},
        checks={"spread_decreases": bool(spread_fine <= spread)},
        notes=notes,
    )


def harmonic_capacity_oracle(n: int, r: float, R: float) -> float:
    """Dirichlet energy of the radial harmonic potential of (B_r, B_R), by quad."""
    inv = r ** (2 - n) - (0.0 if math.isinf(R) else R ** (2 - n))

    def integrand(s):
        dv = (n - 2) * s ** (1 - n) / inv
        return dv * dv * s ** (n - 1)

    val, _ = quad(integrand, r, R, epsabs=0.0, epsrel=1e-13, limit=200)
    return sphere_area(n) * val


def wiener_crosscheck(n: int, r: float = 1.0, R: float = 2.0, slack: float = 1e-9) -> VerificationReport:
    """cap_1 against the classical Newtonian condenser capacity."""
    if n < 3:
        raise DomainError("needs n >= 3")
    vals = {
        "closed_form": capacity_closed_form(Condenser(n, 1, r, R)),
        "dirichlet_energy": harmonic_capacity_oracle(n, r, R),
        "newtonian_formula": (n - 2) * sphere_area(n) / (r ** (2 - n) - (0.0 if math.isinf(R) else R ** (2 - n))),
    }
    lo = min(vals.values())
    return VerificationReport(
        "wiener",
        {"n": n, "r": r, "R": R},
        [{"method": key, "value": v} for key, v in vals.items()],
        [v / lo for v in vals.values()],
        constant=vals["closed_form"],
        slack=slack,
    )


@dataclass
class TraceProblem:
    """A radial measure mu on B_R (density rho(s)) plus trace exponents.

    ``breaks`` lists radii where rho is discontinuous, to guide quadrature.
    """

    n: int
    k: int
    R: float
    density: Callable
    q: float
    alpha: float | None = None
    beta: float | None = None
    breaks: tuple = ()
    label: str = ""
    _total: float | None = field(default=None, repr=False)

    def __post_init__(self):
        _check_order(self.n, self.k)
        if not (self.R > 0 and math.isfinite(self.R)):
            raise DomainError("outer radius must be finite and positive")
        if not self.q > 1:
            raise DomainError("q must exceed 1")

    @classmethod
    def lebesgue(cls, n, k, q, R=1.0, **kw):
        return cls(n, k, R, lambda s: np.ones_like(np.asarray(s, dtype=float)), q, label="lebesgue", **kw)

    @classmethod
    def zero(cls, n, k, q, R=1.0, **kw):
        return cls(n, k, R, lambda s: np.zeros_like(np.asarray(s, dtype=float)), q, label="zero", **kw)

    @classmethod
    def smeared_point(cls, n, k, q, eps, R=1.0, **kw):
        """Unit mass spread uniformly over B_eps."""
        level = 1.0 / float(ball_volume(n, eps))
        return cls(n, k, R, lambda s: np.where(np.asarray(s) <= eps, level, 0.0), q, breaks=(eps,),
                   label="smeared-point", **kw)

    def mass(self, t: float) -> float:
        """mu(B_t)."""
        t = min(max(float(t), 0.0), self.R)
        if t == 0.0:
            return 0.0
        pts = [b for b in self.breaks if 0 < b < t]
        val, _ = quad(lambda s: float(self.density(s)) * s ** (self.n - 1), 0.0, t,
                      points=pts or None, epsabs=0.0, epsrel=1e-12, limit=200)
        return sphere_area(self.n) * val

    @property
    def total(self) -> float:
        if self._total is None:
            self._total = self.mass(self.R)
        return self._total


def tau_minimizing(tp: TraceProblem, t: float) -> float:
    """Least ball capacity cap_k(B_rho, B_R) with mu(B_rho) >= t."""
    total = tp.total
    if not 0 < t <= total * (1 + 1e-12):
        raise DomainError("need 0 < t <= mu(Omega)")
    lo, hi = 0.0, tp.R
    if tp.mass(tp.R * (1 - 1e-14)) < t:
        return math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if tp.mass(mid) >= t:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * tp.R:
            break
    return float(ball_capacity(tp.n, tp.k, hi, tp.R)[0])


def tau_curve(tp: TraceProblem, t_grid):
    return np.array([tau_minimizing(tp, float(t)) for t in t_grid])


def trace_c1(tp: TraceProblem, t_grid=None, points: int = 64) -> float:
    if tp.total == 0:
        return 0.0
    t_grid = _log_grid(tp.total, points=points) if t_grid is None else t_grid
    tau = tau_curve(tp, t_grid)
    return float(np.max(np.asarray(t_grid) ** ((tp.k + 1) / tp.q) / tau))


def trace_constants(tp: TraceProblem, family, slack: float = 1e-2, points: int = 64) -> VerificationReport:
    """C1 = sup_t t^((k+1)/q)/tau(t) against C2 = max ||u||_{L^q(mu)}/||u||_Phi."""
    if tp.q < tp.k + 1:
        raise DomainError("q < k+1: use dini_integral")
    if not family:
        raise DomainError("family must be nonempty")
    notes = [BALL_FAMILY_NOTE]
    if tp.total == 0:
        return VerificationReport("trace", _tp_params(tp), [], [], 0.0, slack,
                                  values={"C1": 0.0, "C2": 0.0}, notes=notes, worst=0.0)
    t_grid = _log_grid(tp.total, points=points)
    tau = tau_curve(tp, t_grid)
    c1_pts = t_grid ** ((tp.k + 1) / tp.q) / tau
    c1 = float(np.max(c1_pts))
    c1_fine = trace_c1(tp, points=2 * points - 1)
    quotients = [lq_norm(p, tp.q, tp.density) / hessian_energy(p, tp.k) ** (1.0 / (tp.k + 1)) for p in family]
    c2 = max(quotients)
    grid = [{"t": float(t), "tau": float(v), "c1_term": float(c)} for t, v, c in zip(t_grid, tau, c1_pts)]
    ratios = list(c1_pts / c2 ** (tp.k + 1))
    return VerificationReport(
        "trace",
        _tp_params(tp),
        grid,
        ratios,
        constant=c1,
        slack=slack,
        values={"C1": c1, "C2": c2, "C1_refined": c1_fine, "family_quotients": quotients},
        checks={"c1_grid_stable": bool(abs(c1_fine - c1) <= 0.01 * c1)},
        notes=notes,
    )


def _tp_params(tp: TraceProblem) -> dict:
    return {"n": tp.n, "k": tp.k, "R": tp.R, "q": tp.q, "alpha": tp.alpha, "beta": tp.beta, "measure": tp.label}


@dataclass(frozen=True)
class DiniResult:
    value: float
    exponent: float
    converged: bool
    near_boundary: bool


def dini_integral(tp: TraceProblem, points: int = 129, decades: float = 6.0, full: bool = False):
    """int (t^((k+1)/q)/tau)^(q/(k+1-q)) dt/t over [mu(Omega) 1e-6, mu(Omega)].

    Trapezoid in log t. ``converged`` reports that the integrand at the lower
    end is below 1e-3 of its peak.
    """
    k, q = tp.k, tp.q
    if not 1 < q < k + 1:
        raise DomainError("needs 1 < q < k+1")
    e = q / (k + 1 - q)
    if tp.total == 0:
        res = DiniResult(0.0, e, True, e > 50)
        return res if full else 0.0
    t = tp.total * np.logspace(-decades, 0.0, points)
    tau = tau_curve(tp, t)
    with np.errstate(divide="ignore"):
        logg = e * ((k + 1) / q * np.log(t) - np.log(tau))
    g = np.exp(np.minimum(logg, 700.0))
    val = float(np.trapezoid(g, np.log(t)))
    peak = float(np.max(g))
    res = DiniResult(val, e, bool(g[0] <= 1e-3 * peak), e > 50)
    return res if full else val


def exp_trace_constants(tp: TraceProblem, family, slack: float = 1e-2, points: int = 64) -> VerificationReport:
    """C3 = sup_t t exp(alpha / tau^(beta/(k+1))) against
    C4 = max over the family of int exp(alpha (|u|/||u||_Phi)^beta) dmu."""
    if 2 * tp.k != tp.n:
        raise DomainError("exponential trace needs k = n/2")
    if tp.alpha is None or tp.beta is None:
        raise DomainError("alpha and beta are required")
    a0 = mt_alpha0(tp.n)
    if tp.alpha >= a0:
        raise DomainError("alpha must be strictly below alpha_0")
    mt = MTParams(tp.n, tp.alpha, tp.beta)
    notes = [BALL_FAMILY_NOTE]
    if tp.total == 0:
        return VerificationReport("trace-exp", _tp_params(tp), [], [], 0.0, slack,
                                  values={"C3": 0.0, "C4": 0.0}, notes=notes, worst=0.0)
    t_grid = _log_grid(tp.total, points=points)
    tau = tau_curve(tp, t_grid)
    with np.errstate(divide="ignore"):
        c3_pts = t_grid * np.exp(np.minimum(tp.alpha * tau ** (-tp.beta / (tp.k + 1)), 700.0))
    c3 = float(np.max(c3_pts))
    fine = _log_grid(tp.total, points=2 * points - 1)
    tau_f = tau_curve(tp, fine)
    c3_fine = float(np.max(fine * np.exp(np.minimum(tp.alpha * tau_f ** (-tp.beta / (tp.k + 1)), 700.0))))
    vals = [moser_trudinger_functional(p, mt, tp.k, tp.density) for p in family]
    c4 = max(vals)
    grid = [{"t": float(t), "tau": float(v), "c3_term": float(c)} for t, v, c in zip(t_grid, tau, c3_pts)]
    return VerificationReport(
        "trace-exp",
        _tp_params(tp),
        grid,
        list(c3_pts / c4),
        constant=c3,
        slack=slack,
        values={"C3": c3, "C4": c4, "C3_refined": c3_fine, "alpha0": a0},
        checks={"c3_grid_stable": bool(abs(c3_fine - c3) <= 0.01 * c3)},
        notes=notes,
    )


def _smooth_abs(x, dx, d2x, eps):
    if eps == 0:
        sg = np.sign(x)
        return np.abs(x), sg * dx, sg * d2x
    root = np.sqrt(x * x + eps * eps)
    return root - eps, x / root * dx, eps * eps / root ** 3 * dx * dx + x / root * d2x


def admissible_max(p1: RadialProfile, p2: RadialProfile, eps: float = 0.0) -> RadialProfile:
    """(u1 + u2 + |u1 - u2|)/2, with |x| smoothed to sqrt(x^2+eps^2) - eps."""
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    if p1.n != p2.n or p1.r.shape != p2.r.shape or not np.array_equal(p1.r, p2.r):
        raise DomainError("profiles must share dimension and node grid")
    if p1.k is not None and p2.k is not None and p1.k != p2.k:
        raise DomainError("profiles carry different orders k")
    d, dd, d2d = p1.u - p2.u, p1.du - p2.du, p1.d2u - p2.d2u
    a, da, d2a = _smooth_abs(d, dd, d2d, eps)
    u = 0.5 * (p1.u + p2.u + a)
    du = 0.5 * (p1.du + p2.du + da)
    d2u = 0.5 * (p1.d2u + p2.d2u + d2a)
    return RadialProfile(p1.n, p1.r, np.minimum(u, 0.0), du, d2u, k=p1.k if p1.k is not None else p2.k)


def morrey_bound(n: int, k: int, R: float) -> float:
    """Sharp radial bound for sup|u| / ||u||_Phi when k > n/2 (Hoelder on the flux form)."""
    if not 2 * k > n:
        raise DomainError("needs k > n/2")
    cst = sphere_area(n) * comb(n - 1, k - 1) / k
    return cst ** (-1.0 / (k + 1)) * (k * R ** ((2 * k - n) / k) / (2 * k - n)) ** (k / (k + 1))


def morrey_report(n: int = 3, k: int = 2, R: float = 1.0, count: int = 50, seed: int = 0,
                  slack: float = 1e-3) -> VerificationReport:
    """sup|u| <= c ||u||_Phi for k > n/2, normalised by the radial Hoelder constant."""
    bound = morrey_bound(n, k, R)
    fam = random_family(n, k, count, R, seed)
    quot = [sobolev_quotient(p, math.inf, k) for p in fam]
    return VerificationReport(
        "morrey",
        {"n": n, "k": k, "R": R, "profiles": count, "seed": seed},
        [{"profile": i, "quotient": v} for i, v in enumerate(quot)],
        [v / bound for v in quot],
        constant=max(quot),
        slack=slack,
        values={"radial_bound": bound},
        checks={"finite": bool(all(math.isfinite(v) for v in quot))},
    )


def sobolev_report(n: int = 5, k: int = 2, q: float | None = None, radii=(1e2, 1e3), big_R: float = 1e6,
                   count: int = 100, seed: int = 0, slack: float = 1e-3, stability: float = 0.01,
                   m: int = 8000) -> VerificationReport:
    """Best-constant check for the critical Sobolev quotient.

    The truncated, shifted extremal must beat ``count`` random
    density perturbations of itself (at outer radius ``big_R``), and its
    quotient must vary by less than ``stability`` across ``radii``.
    """
    if not 2 * k < n:
        raise DomainError("Sobolev form needs k < n/2")
    q = critical_exponent(n, k) if q is None else float(q)
    rng = np.random.default_rng(seed)
    base = sobolev_extremal(n, k, big_R, m)
    q0 = sobolev_quotient(base, q, k)
    pert = [sobolev_quotient(perturb_profile(base, k, rng), q, k) for _ in range(count)]
    by_r = [sobolev_quotient(sobolev_extremal(n, k, R, m), q, k) for R in radii]
    spread = max(by_r) / min(by_r) - 1.0
    return VerificationReport(
        "sobolev",
        {"n": n, "k": k, "q": q, "R": big_R, "profiles": count, "seed": seed},
        [{"profile": i, "quotient": v} for i, v in enumerate(pert)],
        [v / q0 for v in pert],
        constant=q0,
        slack=slack,
        values={"quotients_by_R": dict(zip([str(r) for r in radii], by_r)), "R_spread": spread},
        checks={"R_stable": bool(spread < stability)},
    )


def mt_family_values(n: int, alpha: float, beta: float | None = None, R: float = 1.0, a_values=None, m: int = 4096):
    """MT functional over the truncated-log family -min(a, log(R/s))."""
    mt = MTParams(n, alpha, (1.0 + 2.0 / n) if beta is None else beta)
    a_values = np.linspace(0.5, 8.0, 31) if a_values is None else np.asarray(a_values, dtype=float)
    out = [moser_trudinger_functional(truncated_log_profile(n, R, float(a), m), mt, n // 2, full=True) for a in a_values]
    return a_values, out


def moser_trudinger_report(n: int = 4, alpha_factor: float = 0.9, beta: float | None = None, R: float = 1.0,
                           a_values=None, slack: float = 0.02) -> VerificationReport:
    """Bounded sup of the exponential functional over the truncated-log family.

    ``worst`` is the ratio of the family's largest value over the last
    quarter of the parameter range to the largest value before it: growth at
    the end of the family signals an unbounded sup.
    """
    a0 = mt_alpha0(n)
    alpha = alpha_factor * a0
    a_values, out = mt_family_values(n, alpha, beta, R, a_values)
    vals = np.array([d.value for d in out])
    split = max(1, (3 * len(vals)) // 4)
    growth = float(np.max(vals[split:]) / np.max(vals[:split]))
    increasing = bool(np.all(np.diff(vals) > 0))
    notes = []
    if alpha_factor > 1:
        notes.append("alpha above alpha_0: negative control, growth expected")
    return VerificationReport(
        "moser-trudinger",
        {"n": n, "k": n // 2, "alpha": alpha, "alpha_factor": alpha_factor,
         "beta": (1.0 + 2.0 / n) if beta is None else beta, "R": R},
        [{"a": float(a), "value": float(v)} for a, v in zip(a_values, vals)],
        list(vals / np.max(vals)),
        constant=float(np.max(vals)),
        slack=slack,
        values={"alpha0": a0, "beta0": 1.0 + 2.0 / n, "strictly_increasing": increasing,
                "overflow": any(d.overflow for d in out)},
        checks={"no_overflow": not any(d.overflow for d in out)},
        notes=notes,
        worst=growth,
    )


def dini_report(tp: TraceProblem, points: int = 129, stability: float = 0.02) -> VerificationReport:
    """I_{k,q} finite and stable when the log t-grid is refined 2x."""
    coarse = dini_integral(tp, points, full=True)
    fine = dini_integral(tp, 2 * points - 1, full=True)
    change = abs(fine.value - coarse.value) / fine.value if fine.value > 0 else 0.0
    notes = [BALL_FAMILY_NOTE]
    if coarse.near_boundary:
        notes.append(f"q close to k+1: integrand exponent {coarse.exponent:.3g}")
    return VerificationReport(
        "trace",
        _tp_params(tp),
        [{"points": points, "value": coarse.value}, {"points": 2 * points - 1, "value": fine.value}],
        [change / stability, change / stability],
        constant=fine.value,
        slack=0.0,
        values={"exponent": coarse.exponent, "relative_change": change},
        checks={"finite": bool(math.isfinite(fine.value)), "converged": coarse.converged},
        notes=notes,
    )


def family_report(reports, report_id: str | None = None, params: dict | None = None) -> VerificationReport:
    """Concatenate per-profile reports of one inequality into a single report."""
    if not reports:
        raise DomainError("no reports to combine")
    grid, ratios, checks = [], [], {}
    for i, rep in enumerate(reports):
        grid.extend(dict(profile=i, **g) for g in rep.grid)
        ratios.extend(rep.ratios)
        for key, ok in rep.checks.items():
            checks[key] = checks.get(key, True) and ok
    notes = []
    for rep in reports:
        for note in rep.notes:
            if note not in notes:
                notes.append(note)
    return VerificationReport(
        report_id or reports[0].id,
        params or dict(reports[0].params, profiles=len(reports)),
        grid,
        ratios,
        constant=max(rep.constant for rep in reports),
        slack=max(rep.slack for rep in reports),
        notes=notes,
        checks=checks,
        worst=max(rep.worst for rep in reports),
    )
