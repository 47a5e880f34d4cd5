"""Quadrature rules on the reference interval [0, 1] and unit triangle."""

import math

import numpy as np

from ..errors import InvalidArgumentError

MAX_DEGREE = {1: 9, 2: 5}


def _triangle_rule(degree):
    if degree <= 1:
        pts = [(1 / 3, 1 / 3)]
        w = [1.0]
    elif degree == 2:
        # edge midpoints
        pts = [(0.5, 0.0), (0.5, 0.5), (0.0, 0.5)]
        w = [1 / 3] * 3
    elif degree <= 4:
        # Dunavant, 6 points
        a, wa = 0.445948490915965, 0.223381589678011
        b, wb = 0.091576213509771, 0.109951743655322
        pts = [(a, a), (1 - 2 * a, a), (a, 1 - 2 * a), (b, b), (1 - 2 * b, b), (b, 1 - 2 * b)]
        w = [wa] * 3 + [wb] * 3
    else:
        # Radon's 7-point rule in closed form
        s = math.sqrt(15.0)
        a, wa = (6 - s) / 21, (155 - s) / 1200
        b, wb = (6 + s) / 21, (155 + s) / 1200
        pts = [(1 / 3, 1 / 3),
               (a, a), (1 - 2 * a, a), (a, 1 - 2 * a),
               (b, b), (1 - 2 * b, b), (b, 1 - 2 * b)]
        w = [9 / 40] + [wa] * 3 + [wb] * 3
    return np.array(pts), 0.5 * np.array(w)


def gauss_legendre(n, a=0.0, b=1.0):
    """n-point Gauss rule mapped to [a, b]."""
    t, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (t + 1), half * w


def quadrature_rule(dim, degree):
    """Points (nq, dim) and weights (nq,) exact for total degree <= ``degree``."""
    if dim not in MAX_DEGREE:
        raise InvalidArgumentError(f"no quadrature for dimension {dim}")
    if degree < 0 or degree > MAX_DEGREE[dim]:
        raise InvalidArgumentError(f"degree {degree} unsupported in {dim}D (max {MAX_DEGREE[dim]})")
    if dim == 1:
        x, w = gauss_legendre(degree // 2 + 1)
        return x[:, None], w
    return _triangle_rule(degree)
