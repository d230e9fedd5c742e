"""Euclidean instances: the affine structure and a chart-perturbed control.

The affine structure is the model case: dilations are homotheties and every
identity holds in closed form. The chart-perturbed structure conjugates
scalar scaling through a base-point-dependent quadratic chart; it keeps the
composition axioms exactly but is genuinely nonlinear, which makes it the
negative control for every linearity test in the suite.
"""

from __future__ import annotations

import math

import numpy as np

from .core import DilatationStructure
from .errors import NoInvert

_DEFAULT_ETA = 0.05
_DEFAULT_RHO = 4.0


class AffineStructure(DilatationStructure):
    """R^n with Euclidean distance and homothety dilations."""

    def __init__(self, dimension: int, domain_radius: float = 2.0,
                 codomain_radius: float = 1.5):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self._dim = int(dimension)
        self.domain_radius = float(domain_radius)
        self.codomain_radius = float(codomain_radius)

    @property
    def dimension(self) -> int:
        return self._dim

    def distance(self, u, v) -> float:
        return float(np.linalg.norm(self.point(u) - self.point(v)))

    def _dilate(self, x, t, y):
        return x + t * (y - x)

    @property
    def has_tangent_data(self) -> bool:
        return True

    def tangent_distance(self, x, u, v) -> float:
        return self.distance(u, v)

    def tangent_sum(self, x, u, v):
        return self.point(u) - self.point(x) + self.point(v)

    def tangent_diff(self, x, u, v):
        return self.point(x) - self.point(u) + self.point(v)

    def tangent_inverse(self, x, u):
        return 2.0 * self.point(x) - self.point(u)

    def __repr__(self):
        return f"AffineStructure(dimension={self._dim})"


def affine_closed_forms(x, u, v):
    """Closed-form tangent operations of the affine structure.

    Returns the dict {"sum": u - x + v, "diff": x - u + v, "inv": x - u + x}
    on arrays broadcast to a common shape.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return {
        "sum": u - x + v,
        "diff": x - u + v,
        "inv": x - u + x,
    }


def default_scalar_field(x) -> float:
    """Smooth bounded field modulating the default chart coefficients."""
    x = np.asarray(x, dtype=float)
    return float(np.sin(x[0]) + np.cos(2.0 * x[1]))


def _default_coeffs() -> np.ndarray:
    # Fixed small rationals, symmetric in the last two slots.
    c = np.array([
        [[1 / 4, 1 / 8],
         [1 / 8, -1 / 6]],
        [[-1 / 5, 1 / 7],
         [1 / 7, 1 / 3]],
    ])
    return c


def _random_coeffs(dimension: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    c = rng.uniform(-0.5, 0.5, size=(dimension, dimension, dimension))
    return 0.5 * (c + np.transpose(c, (0, 2, 1)))


class ChartPerturbedStructure(DilatationStructure):
    """Scalar scaling conjugated through base-point-dependent quadratic charts.

    The chart at x is psi_x(y) = (y - x) + Q(x)[y - x, y - x] with
    Q(x)[h, h] = eta * s(x) * C[h, h]; the dilation of ratio t is
    psi_x^{-1}(t * psi_x(y)). Composition of dilations at a fixed base is
    exact because only the scalar factor composes, so the structure passes
    every composition axiom while the x-dependence of the chart breaks
    linearity whenever s is non-constant.

    Invertibility of the chart on the working ball needs
    2 * eta * sup|s| * |C| * rho < 1; the defaults satisfy it with margin.
    """

    def __init__(self, dimension: int, eta: float = _DEFAULT_ETA,
                 rho: float = _DEFAULT_RHO, coeffs=None, scalar_field=None,
                 seed: int = 0, domain_radius: float = 2.0,
                 codomain_radius: float = 1.5):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self._dim = int(dimension)
        self.eta = float(eta)
        self.rho = float(rho)
        self.seed = int(seed)
        if coeffs is not None:
            c = np.asarray(coeffs, dtype=float)
            if c.shape != (dimension,) * 3:
                raise ValueError("coefficient tensor must have shape (n, n, n)")
            c = 0.5 * (c + np.transpose(c, (0, 2, 1)))
        elif dimension == 2 and seed == 0:
            c = _default_coeffs()
        else:
            c = _random_coeffs(dimension, seed)
        self._coeffs = self.eta * c
        if scalar_field is not None:
            self._field = scalar_field
        elif dimension >= 2:
            self._field = default_scalar_field
        else:
            self._field = lambda x: 1.0
        self.domain_radius = float(domain_radius)
        self.codomain_radius = float(codomain_radius)
        if self.domain_radius > self.rho:
            raise ValueError("working radius exceeds the chart radius rho")

    @property
    def dimension(self) -> int:
        return self._dim

    def distance(self, u, v) -> float:
        d = self.point(u) - self.point(v)
        return math.sqrt(float(d @ d))

    # -- charts ------------------------------------------------------------

    def _quad(self, x):
        """Quadratic form tensor at x, shape (n, n, n)."""
        return self._field(x) * self._coeffs

    def chart_forward(self, x, y):
        """psi_x(y) = (y - x) + Q(x)[y - x, y - x]."""
        x = self.point(x)
        h = self.point(y) - x
        q = self._quad(x)
        return h + (q @ h) @ h

    def chart_inverse(self, x, w):
        """Solve psi_x(x + h) = w for h by a damped Newton iteration.

        Iterates until the residual stops improving (machine precision in
        the working regime); raises NoInvert when 100 steps leave the
        residual above 1e-13 relative.
        """
        x = self.point(x)
        w = np.asarray(w, dtype=float)
        q = self._quad(x)
        h = w.copy()
        eye = np.eye(self._dim)
        two_dim = self._dim == 2
        scale = max(1.0, math.sqrt(float(w @ w)))
        best = None
        best_res = math.inf
        for _ in range(100):
            qh = q @ h
            val = h + qh @ h
            r = val - w
            res = math.sqrt(float(r @ r))
            if res < best_res:
                best, best_res = h.copy(), res
            if res <= 1e-16 * scale:
                break
            if two_dim:
                j00, j01 = 1.0 + 2.0 * qh[0, 0], 2.0 * qh[0, 1]
                j10, j11 = 2.0 * qh[1, 0], 1.0 + 2.0 * qh[1, 1]
                det = j00 * j11 - j01 * j10
                if det == 0.0:
                    raise NoInvert("chart Jacobian is singular")
                step = np.array([(j11 * r[0] - j01 * r[1]) / det,
                                 (j00 * r[1] - j10 * r[0]) / det])
            else:
                try:
                    step = np.linalg.solve(eye + 2.0 * qh, r)
                except np.linalg.LinAlgError as exc:
                    raise NoInvert("chart Jacobian is singular") from exc
            damp = 1.0
            for _ in range(30):
                trial = h - damp * step
                tr = trial + (q @ trial) @ trial - w
                if math.sqrt(float(tr @ tr)) < res:
                    h = trial
                    break
                damp *= 0.5
            else:
                break  # no further progress possible
        if best_res > 1e-13 * scale:
            raise NoInvert(
                f"chart inversion stalled at residual {best_res:.3g}"
            )
        if math.sqrt(float(best @ best)) > self.rho:
            raise NoInvert("solution lies outside the guaranteed chart radius")
        return x + best

    def _dilate(self, x, t, y):
        return self.chart_inverse(x, t * self.chart_forward(x, y))

    # -- tangent data --------------------------------------------------------

    @property
    def has_tangent_data(self) -> bool:
        return True

    def tangent_distance(self, x, u, v) -> float:
        return float(np.linalg.norm(self.chart_forward(x, u) - self.chart_forward(x, v)))

    def tangent_sum(self, x, u, v):
        return self.chart_inverse(x, self.chart_forward(x, u) + self.chart_forward(x, v))

    def tangent_diff(self, x, u, v):
        return self.chart_inverse(x, self.chart_forward(x, v) - self.chart_forward(x, u))

    def tangent_inverse(self, x, u):
        return self.chart_inverse(x, -self.chart_forward(x, u))

    def __repr__(self):
        return (f"ChartPerturbedStructure(dimension={self._dim}, eta={self.eta}, "
                f"seed={self.seed})")


def chart_forward(structure: ChartPerturbedStructure, x, y):
    """Module-level alias for the forward chart."""
    return structure.chart_forward(x, y)


def chart_inverse(structure: ChartPerturbedStructure, x, w):
    """Module-level alias for the chart inversion."""
    return structure.chart_inverse(x, w)
