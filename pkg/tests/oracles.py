"""Independent oracles the tests check the library against.

Nothing here goes through the package's own group-law or chart machinery:
the Heisenberg oracle multiplies unitriangular matrices and takes an exact
logarithm, the truncated-series oracles are the classical low-degree
closed forms, and the scalar chart oracle solves the quadratic directly.
"""

import math

import numpy as np


def heisenberg_matrix_product(g, h):
    """Heisenberg product via the 3x3 unitriangular representation.

    exp maps (a, b, c) to [[1, a, c + ab/2], [0, 1, b], [0, 0, 1]]; the
    product of two such matrices is logged back to coordinates.
    """

    def embed(p):
        a, b, c = p
        return np.array([[1.0, a, c + a * b / 2.0],
                         [0.0, 1.0, b],
                         [0.0, 0.0, 1.0]])

    m = embed(g) @ embed(h)
    a, b, q = m[0, 1], m[1, 2], m[0, 2]
    return (a, b, q - a * b / 2.0)


def bch_closed_form_deg3(bracket, x, y):
    """Classical truncated series through bracket degree three."""
    xy = bracket(x, y)
    xxy = bracket(x, xy)
    yyx = bracket(y, bracket(y, x))
    return tuple(
        xi + yi + v / 2.0 + w / 12.0 + z / 12.0
        for xi, yi, v, w, z in zip(x, y, xy, xxy, yyx)
    )


def bch_closed_form_deg4(bracket, x, y):
    """Classical truncated series through bracket degree four."""
    base = bch_closed_form_deg3(bracket, x, y)
    yxxy = bracket(y, bracket(x, bracket(x, y)))
    return tuple(b - v / 24.0 for b, v in zip(base, yxxy))


def scalar_quadratic_chart_inverse(eta, w):
    """Solve h + eta * h**2 = w for the root continuous in w at 0."""
    disc = 1.0 + 4.0 * eta * w
    return (-1.0 + math.sqrt(disc)) / (2.0 * eta)


def affine_shift_composite(x, mu, u, eps, v):
    """Direct expansion of the conjugated affine dilation.

    Composes the three homotheties of the shifted dilation by hand:
    contract v and u at x with ratio mu, dilate with ratio eps at the
    contracted u, then expand back at x.
    """
    x, u, v = (np.asarray(p, dtype=float) for p in (x, u, v))
    xu = x + mu * (u - x)
    xv = x + mu * (v - x)
    inner = xu + eps * (xv - xu)
    return x + (inner - x) / mu
