"""Seeded families of k-admissible radial test profiles.

A radial profile is k-admissible exactly when u' >= 0 and s^(n-k) (u')^k is
nondecreasing, i.e. when its F_k-measure has a nonnegative density. The
generators below therefore draw a positive density f, integrate
(k/C(n-1,k-1)) f s^(n-1) to get s^(n-k) (u')^k, and integrate u' back from
u(R) = 0. The finished profile is still run through the node-level
admissibility scan and rejected if it fails.
"""
from __future__ import annotations

import math
from math import comb

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConvergenceError, DomainError
from .radial import Condenser, RadialProfile, condenser_extremal, is_profile_admissible, radial_fk


def profile_from_density(n: int, k: int, nodes, density, scale: float = 1.0) -> RadialProfile:
    """Radial profile whose F_k equals ``density`` (sampled at ``nodes``)."""
    s = np.asarray(nodes, dtype=float)
    f = np.asarray(density, dtype=float)
    if s.shape != f.shape or s[0] != 0.0 or np.any(np.diff(s) <= 0):
        raise DomainError("need strictly increasing nodes from 0 with matching density samples")
    if np.any(f < 0):
        raise DomainError("density must be nonnegative")
    flux = k / comb(n - 1, k - 1) * cumulative_trapezoid(f * s ** (n - 1), s, initial=0.0)
    du = np.zeros_like(s)
    du[1:] = (flux[1:] / s[1:] ** (n - k)) ** (1.0 / k)
    # u'' from d/ds (s^(n-k) u'^k) = (k/C) f s^(n-1), so that F_k = f to roundoff
    d2u = np.empty_like(s)
    d2u[0] = (f[0] / comb(n, k)) ** (1.0 / k)
    t, g = s[1:], du[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        d2u[1:] = (f[1:] * t ** (k - 1) / comb(n - 1, k - 1) - (n - k) / k * g ** k / t) / g ** (k - 1)
    d2u[1:][g == 0] = 0.0
    tail = cumulative_trapezoid(du[::-1], s[::-1], initial=0.0)[::-1]
    u = scale * tail
    u[-1] = 0.0
    return RadialProfile(n, s, u, scale * du, scale * d2u, k=k)


def _bumps(rng, x, lo, hi, count, width, amp):
    g = np.zeros_like(x)
    for _ in range(count):
        c = rng.uniform(lo, hi)
        w = rng.uniform(*width)
        g += amp(rng) * np.exp(-0.5 * ((x - c) / w) ** 2)
    return g


def random_density(rng, s, R: float):
    """Positive floor plus 1-4 Gaussian bumps on [0, R]."""
    base = rng.uniform(0.05, 1.0)
    count = int(rng.integers(1, 5))
    return base + _bumps(rng, s, 0.0, R, count, (0.05 * R, 0.5 * R), lambda g: g.uniform(0.0, 5.0))


def random_admissible_profile(n: int, k: int, R: float = 1.0, rng=None, m: int = 2048, max_tries: int = 100):
    """One random k-admissible profile on B_R, rejection-sampled."""
    rng = np.random.default_rng(rng)
    s = np.linspace(0.0, R, m + 1)
    for _ in range(max_tries):
        f = random_density(rng, s, R)
        amp = math.exp(rng.normal(0.0, 1.0))
        p = profile_from_density(n, k, s, f, scale=amp)
        if is_profile_admissible(p, k):
            return p
    raise ConvergenceError(f"no admissible profile after {max_tries} draws")


def random_family(n: int, k: int, count: int = 50, R: float = 1.0, seed: int = 0, m: int = 2048):
    rng = np.random.default_rng(seed)
    return [random_admissible_profile(n, k, R, rng, m) for _ in range(count)]


def perturb_profile(p: RadialProfile, k: int, rng=None, bumps: int = 6, amplitude: float = 0.5,
                    window=(1e-2, 1e2)) -> RadialProfile:
    """Multiply the F_k density of a smooth profile by exp(g), g a sum of
    Gaussian bumps in log s centred inside ``window``."""
    if p.kinks:
        raise DomainError("perturbation needs a profile without corners")
    rng = np.random.default_rng(rng)
    f = np.maximum(radial_fk(p, k), 0.0)
    x = np.log(np.maximum(p.r, p.r[1]))
    lo, hi = math.log(window[0]), math.log(window[1])
    g = _bumps(rng, x, lo, hi, bumps, (0.3, 1.5), lambda gen: gen.normal(0.0, amplitude))
    return profile_from_density(p.n, k, p.r, f * np.exp(g))


def extremal_family(n: int, k: int, R: float = 1.0, radii=None, m: int = 2048):
    """Condenser extremals of (B_r, B_R) for a log-spaced range of r."""
    if radii is None:
        radii = R * np.geomspace(1e-3, 0.9, 30)
    return [condenser_extremal(Condenser(n, k, float(r), R), m) for r in radii]


def trace_family(n: int, k: int, R: float = 1.0, count: int = 50, seed: int = 0, m: int = 2048):
    """Condenser extremals (about 30) topped up with random profiles to ``count``."""
    ext = extremal_family(n, k, R, R * np.geomspace(1e-3, 0.9, min(30, count)), m)
    return ext + random_family(n, k, count - len(ext), R, seed, m)


def shared_nodes(R: float, corners, m: int = 2048, s_min: float = 1e-3):
    """Geometric grid on [0, R] with each radius in ``corners`` doubled, so
    extremals with different inner radii can share one grid."""
    base = np.concatenate([[0.0], R * np.geomspace(s_min, 1.0, m)])
    base[-1] = R
    corners = [float(c) for c in corners]
    keep = base[~np.isin(base, corners)]
    return np.sort(np.concatenate([keep] + [[c, c] for c in corners]))
