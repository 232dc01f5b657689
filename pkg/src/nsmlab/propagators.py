"""Exponential-integrator coefficients.

For a linear operator ``L`` and step ``h`` the second-order exponential
scheme needs ``e^{hL}``, ``h phi1(hL)`` and ``h phi2(hL)`` with
``phi1(z) = (e^z - 1)/z`` and ``phi2(z) = (e^z - 1 - z)/z^2``.
Scalar (diagonal) operators use closed forms with a Taylor branch near
zero; small matrix blocks use the augmented-matrix exponential.
"""
from __future__ import annotations

from math import factorial

import numpy as np
from scipy.linalg import expm

_TAYLOR = 1e-2
_N_TERMS = 10


def phi_scalar(z):
    """Return ``(e^z, phi1(z), phi2(z))`` elementwise for real ``z``."""
    z0 = np.asarray(z, dtype=np.float64)
    z = np.atleast_1d(z0)
    small = np.abs(z) < _TAYLOR
    zs = np.where(small, 1.0, z)
    em1 = np.expm1(z)
    p1 = em1 / zs
    p2 = (em1 - z) / (zs * zs)
    if np.any(small):
        zz = z[small]
        p1[small] = sum(zz ** j / factorial(j + 1) for j in range(_N_TERMS))
        p2[small] = sum(zz ** j / factorial(j + 2) for j in range(_N_TERMS))
    return tuple(a.reshape(z0.shape) for a in (np.exp(z), p1, p2))


def scalar_etd(rate, h: float):
    """Coefficients for ``w' = -rate w + f``: ``(e, h phi1, h phi2)``."""
    e, p1, p2 = phi_scalar(-np.asarray(rate, dtype=np.float64) * h)
    return e, h * p1, h * p2


def block_etd(mats: np.ndarray, h: float):
    """Matrix coefficients for ``z' = A z + f`` over a batch of small blocks.

    Parameters
    ----------
    mats : ndarray, shape (m, n, n)
        Batch of real generator matrices ``A``.
    h : float
        Step size.

    Returns
    -------
    e, p1, p2 : ndarray, shape (m, n, n)
        ``e^{hA}``, ``h phi1(hA)``, ``h phi2(hA)``.
    """
    m, n, _ = mats.shape
    aug = np.zeros((m, 3 * n, 3 * n))
    eye = np.eye(n)
    aug[:, :n, :n] = h * mats
    aug[:, :n, n:2 * n] = eye
    aug[:, n:2 * n, 2 * n:] = eye
    big = expm(aug)
    return big[:, :n, :n], h * big[:, :n, n:2 * n], h * big[:, :n, 2 * n:]


def dense_coefficients_scalar(rate, h: float, s: float):
    """Coefficients evaluating the second-order stage at time ``s`` inside a step.

    The stage polynomial is ``z(s) = e^{sL} z + s phi1(sL) N0 + (s^2/h) phi2(sL) (N1 - N0)``.
    """
    e, p1, p2 = phi_scalar(-np.asarray(rate, dtype=np.float64) * s)
    return e, s * p1, (s * s / h) * p2


def dense_coefficients_block(mats: np.ndarray, h: float, s: float):
    e, p1, p2 = block_etd(mats, s)
    return e, p1, p2 * (s / h)
