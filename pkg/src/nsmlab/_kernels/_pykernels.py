"""Pure-numpy reference implementations of the hot kernels."""
import numpy as np

_MASK = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D
_TWO_M53 = 1.0 / 9007199254740992.0


def xorshift_uniform(state, out):
    """Fill ``out`` with uniforms in [0, 1); return the advanced state."""
    x = int(state)
    for i in range(out.shape[0]):
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        out[i] = (((x * _MULT) & _MASK) >> 11) * _TWO_M53
    return x


def maximal_scan(g, h, rhos):
    g = np.abs(np.asarray(g, dtype=np.float64))
    n = g.size
    x = np.asarray(rhos, dtype=np.float64) * h
    ex = np.exp(-x)
    a = -np.expm1(-x)
    small = x < 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(small,
                     x * (0.5 - x * (1.0 / 3.0 - x * (0.125 - x / 30.0))),
                     (a - x * ex) / np.where(small, 1.0, x))
    out = np.zeros(n)
    acc = np.zeros_like(x)
    for i in range(n - 2, -1, -1):
        acc = g[i] * a + (g[i + 1] - g[i]) * b + ex * acc
        out[i] = max(out[i], acc.max())
    return out


def cross3(a, b):
    out = np.empty_like(a)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


def etd_combine(e, p1, p2, z, n0, n1):
    """Return ``e*z + p1*n0 + p2*(n1 - n0)`` per mode (``n1`` may be None)."""
    out = e * z + p1 * n0
    if n1 is not None:
        out += p2 * (n1 - n0)
    return out
