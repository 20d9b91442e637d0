"""Central finite differences for scalar fields on R^n.

``f`` maps an array of points with shape (..., n) to values of shape (...).
With ``richardson=True`` the second-order stencils are combined at h and
h/2 to cancel the leading error term.
"""

import numpy as np


def _stencil_points(y, h):
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    eye = np.eye(n) * h
    plus = y[..., None, :] + eye
    minus = y[..., None, :] - eye
    return plus, minus


def _gradient(f, y, h):
    plus, minus = _stencil_points(y, h)
    return (f(plus) - f(minus)) / (2.0 * h)


def _second_diagonal(f, y, h):
    plus, minus = _stencil_points(y, h)
    centre = np.asarray(f(np.asarray(y, dtype=float)))[..., None]
    return (f(plus) - 2.0 * centre + f(minus)) / (h * h)


def gradient(f, y, h, richardson=False):
    """Central-difference gradient, shape (..., n)."""
    if not richardson:
        return _gradient(f, y, h)
    return (4.0 * _gradient(f, y, h / 2.0) - _gradient(f, y, h)) / 3.0


def second_diagonal(f, y, h, richardson=False):
    """Pure second derivatives d^2 f / dy_i^2, shape (..., n)."""
    if not richardson:
        return _second_diagonal(f, y, h)
    return (4.0 * _second_diagonal(f, y, h / 2.0) - _second_diagonal(f, y, h)) / 3.0


def laplacian(f, y, h, richardson=False):
    """Flat Laplacian by the (2n+1)-point stencil."""
    return np.sum(second_diagonal(f, y, h, richardson), axis=-1)
