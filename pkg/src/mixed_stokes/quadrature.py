"""Reference-element quadrature rules."""
import numpy as np

from .errors import InvalidArgumentError

# Dunavant degree-4 rule, barycentric coordinates; weights sum to 1.
_A1, _W1 = 0.44594849091596488632, 0.22338158967801146570
_A2, _W2 = 0.09157621350977074346, 0.10995174365532186764

TRI_BARY = np.array([
    [_A1, _A1, 1 - 2 * _A1],
    [_A1, 1 - 2 * _A1, _A1],
    [1 - 2 * _A1, _A1, _A1],
    [_A2, _A2, 1 - 2 * _A2],
    [_A2, 1 - 2 * _A2, _A2],
    [1 - 2 * _A2, _A2, _A2],
])
TRI_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])


def gauss_legendre(order):
    """Gauss-Legendre points on [0, 1] with weights summing to 1."""
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= 5:
        raise InvalidArgumentError(f"quadrature order must be in 1..5, got {order!r}")
    x, w = np.polynomial.legendre.leggauss(int(order))
    return 0.5 * (x + 1.0), 0.5 * w
