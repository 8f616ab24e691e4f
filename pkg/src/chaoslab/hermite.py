"""Probabilists' Hermite polynomials in two normalizations.

Conventions used across the package:

* ``monic``:  He_0 = 1, He_1 = x, He_{q+1}(x) = x·He_q(x) − q·He_{q−1}(x).
  Orthogonality: E[He_p(Z) He_q(Z)] = q!·1{p=q} for Z ~ N(0,1).
* ``scaled``: He_q(x)/q!, so the leading coefficient is 1/q!.

Evaluation is delegated to :mod:`numpy.polynomial.hermite_e`, which uses the
same monic ("HermiteE") convention.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import hermite_e

NORMALIZATIONS = ("monic", "scaled")


def _check_normalization(normalization: str) -> None:
    if normalization not in NORMALIZATIONS:
        raise ValueError(
            f"unknown normalization {normalization!r}; expected one of {NORMALIZATIONS}"
        )


def hermite_eval(q: int, x, normalization: str = "monic"):
    """Evaluate the q-th Hermite polynomial at ``x`` (scalar or array).

    Returns He_q(x) (monic) or He_q(x)/q! (scaled).
    """
    if q < 0:
        raise ValueError(f"Hermite order must be >= 0, got {q}")
    _check_normalization(normalization)
    basis = np.zeros(q + 1)
    basis[q] = 1.0
    out = hermite_e.hermeval(np.asarray(x, dtype=float), basis)
    if normalization == "scaled":
        out = out / math.factorial(q)
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(out)
    return out


def hermite_monomial_coeffs(q: int) -> np.ndarray:
    """Monomial coefficients (ascending) of the monic He_q."""
    if q < 0:
        raise ValueError(f"Hermite order must be >= 0, got {q}")
    basis = np.zeros(q + 1)
    basis[q] = 1.0
    return hermite_e.herme2poly(basis)


def monomial_hermite_coeffs(m: int) -> np.ndarray:
    """Coefficients of x^m in the monic Hermite basis (ascending order)."""
    if m < 0:
        raise ValueError(f"monomial degree must be >= 0, got {m}")
    mono = np.zeros(m + 1)
    mono[m] = 1.0
    return hermite_e.poly2herme(mono)


def hermite_ladder(qmax: int, x: np.ndarray) -> np.ndarray:
    """All monic He_q(x) for q = 0..qmax, stacked on a new leading axis.

    Uses the three-term recurrence; cheaper than repeated hermeval when a
    whole ladder of orders is needed on the same points.
    """
    if qmax < 0:
        raise ValueError(f"Hermite order must be >= 0, got {qmax}")
    x = np.asarray(x, dtype=float)
    out = np.empty((qmax + 1,) + x.shape, dtype=float)
    out[0] = 1.0
    if qmax >= 1:
        out[1] = x
    for q in range(1, qmax):
        out[q + 1] = x * out[q] - q * out[q - 1]
    return out
