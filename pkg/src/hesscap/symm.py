"""Elementary symmetric polynomials of spectra.

``S_k(lam)`` is read off as the t^k coefficient of prod(1 + lam_i t), built up
one factor at a time. That is O(n k) and avoids the exponential subset sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues, stored sorted in descending order."""

    values: tuple

    def __init__(self, values):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise DomainError("spectrum must have at least one entry")
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("spectrum entries must be finite")
        object.__setattr__(self, "values", tuple(sorted(vals, reverse=True)))

    @property
    def dim(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def without(self, i: int) -> tuple:
        return self.values[:i] + self.values[i + 1:]


def _coefficients(values, k):
    e = [1.0] + [0.0] * k
    for i, lam in enumerate(values):
        for j in range(min(i + 1, k), 0, -1):
            e[j] += lam * e[j - 1]
    return e


def _check_order(n, k, lo=0):
    if not (lo <= k <= n):
        raise DomainError(f"order k={k} outside [{lo}, {n}]")


def esym(s: Spectrum, k: int) -> float:
    """S_k of the spectrum, with S_0 = 1."""
    _check_order(s.dim, k)
    return _coefficients(s.values, k)[k]


def esym_all(s: Spectrum) -> list:
    """[S_0, S_1, ..., S_n]."""
    return _coefficients(s.values, s.dim)


def esym_gradient(s: Spectrum, k: int) -> list:
    """dS_k/dlam_i = S_{k-1} of the spectrum with entry i removed."""
    _check_order(s.dim, k, lo=1)
    return [_coefficients(s.without(i), k - 1)[k - 1] for i in range(s.dim)]


def is_k_admissible(s: Spectrum, k: int, tol: float = 0.0) -> bool:
    """True iff S_j >= -tol for j = 1..k."""
    _check_order(s.dim, k, lo=1)
    if tol < 0:
        raise DomainError("tol must be nonnegative")
    e = _coefficients(s.values, k)
    return all(e[j] >= -tol for j in range(1, k + 1))


def esym_batch(lam, k: int):
    """S_0..S_k for a stack of spectra.

    ``lam`` has shape (..., n); the result has shape (..., k + 1). Entries are
    sorted descending along the last axis first so that every spectrum is
    accumulated in the same canonical order as :func:`esym`.
    """
    lam = -np.sort(-np.asarray(lam, dtype=float), axis=-1)
    n = lam.shape[-1]
    _check_order(n, k)
    out = np.zeros(lam.shape[:-1] + (k + 1,))
    out[..., 0] = 1.0
    for i in range(n):
        for j in range(min(i + 1, k), 0, -1):
            out[..., j] += lam[..., i] * out[..., j - 1]
    return out
