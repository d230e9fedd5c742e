"""Dilatation-structure contract and the operations it induces.

A dilatation structure bundles a distance with a family of base-pointed
contractions ``dilate(x, eps, y)``. Composing dilations at shifted base
points yields approximate sum / difference / inverse operations whose
small-scale limits recover the tangent group at each base point; this
module implements those composites, the pointwise defect functionals used
by the verification engine, and the scale-limit estimators.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, OutOfDomain
from .fitting import NOISE_FLOOR, try_fit_order
from .scales import CONTINUOUS, Scale, ScaleGroup, as_scale

#: Relative slack on domain-radius checks, forgiving float roundoff only.
_DOMAIN_SLACK = 1.0 + 1e-9

#: Tangent estimates below this multiple of d(u, v) are flagged degenerate.
DEGENERACY_RTOL = 1e-9


class DilatationStructure(abc.ABC):
    """A metric space with base-pointed dilations.

    Subclasses provide the distance, the raw dilation map, and (when closed
    forms are known) the tangent reference data. Instances are immutable
    after construction and all operations are pure, so concurrent
    evaluation is safe; reductions over samples are the caller's job and
    must run in a fixed order for reproducible reports.
    """

    #: Working-ball radius: dilations accept points with d(x, y) <= domain_radius.
    domain_radius: float = 2.0
    #: Image-ball radius for expanding dilations (descriptive; see dilate()).
    codomain_radius: float = 1.5

    scale_group: ScaleGroup = CONTINUOUS

    @property
    @abc.abstractmethod
    def dimension(self) -> int:
        ...

    @abc.abstractmethod
    def distance(self, u, v) -> float:
        ...

    def defect_distance(self, u, v) -> float:
        """Residual measure for identities that assert two points coincide.

        Defaults to the structure's distance. Homogeneous gauges respond to
        roundoff-sized center perturbations like the square root of the
        ulp, which would drown exact identities in sqrt-noise; such
        structures override this with the coordinate distance so float
        residuals stay at coordinate roundoff scale. Quantities that are
        genuinely metric (rescaled distances, tangent distances, length
        bounds) always use ``distance``.
        """
        return self.distance(u, v)

    @abc.abstractmethod
    def _dilate(self, x, t: float, y):
        """Raw dilation with valuation t > 0; no domain checks."""

    # -- tangent reference data (closed forms), optional ------------------

    @property
    def has_tangent_data(self) -> bool:
        return False

    def tangent_distance(self, x, u, v) -> float:
        raise NotImplementedError

    def tangent_sum(self, x, u, v):
        raise NotImplementedError

    def tangent_diff(self, x, u, v):
        raise NotImplementedError

    def tangent_inverse(self, x, u):
        raise NotImplementedError

    # -- shared helpers ----------------------------------------------------

    def point(self, coords):
        p = np.asarray(coords, dtype=float)
        if p.shape != (self.dimension,):
            raise ValueError(
                f"expected a point of dimension {self.dimension}, got shape {p.shape}"
            )
        return p

    def scale(self, eps) -> Scale:
        return as_scale(eps, self.scale_group)

    def sample_box_halfwidths(self, radius: float) -> np.ndarray:
        """Per-coordinate half-widths of a box containing the d-ball."""
        return np.full(self.dimension, radius)

    def dilate(self, x, eps, y):
        """Base-pointed dilation with domain checks.

        The working domain is the closed d-ball of radius ``domain_radius``
        about the base point, for contracting and expanding valuations
        alike: expanding dilations are only ever used as inverses of
        contracting ones, and every composite built here keeps its
        intermediate points inside that ball.
        """
        eps = self.scale(eps)
        x = self.point(x)
        y = self.point(y)
        if self.distance(x, y) > self.domain_radius * _DOMAIN_SLACK:
            raise OutOfDomain(
                f"d(x, y) = {self.distance(x, y):.6g} exceeds the working radius "
                f"{self.domain_radius:g}"
            )
        if eps.value == 1.0:
            return y
        return self._dilate(x, eps.value, y)


# ---------------------------------------------------------------------------
# Induced operations
# ---------------------------------------------------------------------------


def dilate(structure: DilatationStructure, x, eps, y):
    """delta^x_eps y."""
    return structure.dilate(x, eps, y)


def diff_op(structure: DilatationStructure, x, eps, u, v):
    """Approximate difference: dilate back from the shifted base delta^x_eps u."""
    eps = structure.scale(eps)
    b = structure.dilate(x, eps, u)
    return structure.dilate(b, eps.inverse(), structure.dilate(x, eps, v))


def sum_op(structure: DilatationStructure, x, eps, u, v):
    """Approximate sum, inverse to diff_op in its second argument."""
    eps = structure.scale(eps)
    b = structure.dilate(x, eps, u)
    return structure.dilate(x, eps.inverse(), structure.dilate(b, eps, v))


def inv_op(structure: DilatationStructure, x, eps, u):
    """Approximate inverse of u relative to the base point x."""
    eps = structure.scale(eps)
    b = structure.dilate(x, eps, u)
    return structure.dilate(b, eps.inverse(), x)


def relative_dist(structure: DilatationStructure, x, mu, u, v) -> float:
    """Distance rescaled through a base-pointed contraction of ratio mu."""
    mu = structure.scale(mu)
    if not mu.contracting:
        raise OutOfDomain("relative distances are defined for contracting scales")
    du = structure.dilate(x, mu, u)
    dv = structure.dilate(x, mu, v)
    return structure.distance(du, dv) / mu.value


def linearity_defect(structure: DilatationStructure, x, y, z, eps, mu) -> float:
    """Distance between the two sides of the dilation-commutation identity.

    Zero at all arguments exactly when dilations based at different points
    commute, i.e. when the structure is linear.
    """
    eps = structure.scale(eps)
    mu = structure.scale(mu)
    left = structure.dilate(x, eps, structure.dilate(y, mu, z))
    right = structure.dilate(structure.dilate(x, eps, y), mu, structure.dilate(x, eps, z))
    return structure.defect_distance(left, right)


# Established name for the quantity, kept as an alias.
lin_defect = linearity_defect


def linear_map_defect(source: DilatationStructure, target: DilatationStructure,
                      a_map, x, eps, y) -> float:
    """How far a_map is from intertwining the two dilation families at (x, eps, y)."""
    eps_val = source.scale(eps).value
    lhs = target.point(a_map(source.dilate(x, eps, y)))
    rhs = target.dilate(a_map(source.point(x)), target.scale(eps_val), a_map(source.point(y)))
    return target.defect_distance(lhs, rhs)


def sum_diff_swap_defect(structure: DilatationStructure, x, u, v, eps) -> float:
    """d(sum_op(x; u, v), diff_op(u; x, v)); zero on linear structures."""
    return structure.defect_distance(
        sum_op(structure, x, eps, u, v),
        diff_op(structure, u, eps, x, v),
    )


# ---------------------------------------------------------------------------
# Shifted structures
# ---------------------------------------------------------------------------


class ShiftedStructure(DilatationStructure):
    """The structure seen through a base-pointed contraction.

    Distance is the rescaled one; the dilation at u conjugates the original
    dilation at dilate(x, mu, u) through the contraction at x. The result
    satisfies the same axioms as the base structure and is used to probe
    them at small scales without losing float precision.
    """

    def __init__(self, base: DilatationStructure, x, mu):
        self.base = base
        self.x = base.point(x)
        self.mu = base.scale(mu)
        if not self.mu.contracting:
            raise OutOfDomain("shifted structures need a contracting scale")
        self.scale_group = base.scale_group
        self.domain_radius = base.domain_radius
        self.codomain_radius = base.codomain_radius

    @property
    def dimension(self) -> int:
        return self.base.dimension

    def distance(self, u, v) -> float:
        if self.mu.value == 1.0:
            return self.base.distance(u, v)
        return relative_dist(self.base, self.x, self.mu, u, v)

    def defect_distance(self, u, v) -> float:
        return self.base.defect_distance(u, v)

    def sample_box_halfwidths(self, radius: float) -> np.ndarray:
        return self.base.sample_box_halfwidths(radius)

    def _dilate(self, u, t, v):
        inner = self.base.dilate(self.x, self.mu, v)
        moved = self.base.dilate(self.base.dilate(self.x, self.mu, u),
                                 self.base.scale(t), inner)
        return self.base.dilate(self.x, self.mu.inverse(), moved)


def shifted_structure(structure: DilatationStructure, x, mu) -> ShiftedStructure:
    """Conjugate the structure through the contraction of ratio mu at x."""
    return ShiftedStructure(structure, x, mu)


# ---------------------------------------------------------------------------
# Scale-limit estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitEstimate:
    """A small-scale limit estimate with convergence diagnostics.

    ``order`` is None (noise-flagged) when the per-scale defects all sit at
    floating-point noise, in which case the limit is exact to within
    roundoff. ``degenerate`` marks tangent distances that collapsed for
    distinct points; this is legal and reported rather than raised.
    """

    value: object
    scales: tuple[float, ...]
    defects: tuple[float, ...]
    order: float | None
    residual: float | None
    degenerate: bool = False
    skipped: int = 0
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def noise_flagged(self) -> bool:
        return self.order is None


def _check_grid(structure: DilatationStructure, grid):
    scales = [structure.scale(g) for g in grid]
    vals = [s.value for s in scales]
    if len(vals) < 2:
        raise ValueError("grids need at least two scales")
    if any(not (0.0 < v < 1.0) for v in vals):
        raise ValueError("grid valuations must lie in (0, 1)")
    if any(b >= a for a, b in zip(vals, vals[1:])):
        raise ValueError("grid must be strictly decreasing")
    return scales


def tangent_dist(structure: DilatationStructure, x, u, v, grid) -> LimitEstimate:
    """Estimate the tangent distance at x from rescaled distances.

    The value is the rescaled distance at the smallest grid scale; the
    fitted order tracks how fast the coarser scales approach it.
    """
    scales = _check_grid(structure, grid)
    values = [relative_dist(structure, x, s, u, v) for s in scales]
    estimate = values[-1]
    defects = [abs(val - estimate) for val in values[:-1]]
    fit = try_fit_order(zip([s.value for s in scales[:-1]], defects))
    # A collapsing tangent distance can only be resolved down to the grid
    # floor, so the degeneracy threshold scales with the smallest scale.
    separation = structure.distance(structure.point(u), structure.point(v))
    threshold = max(DEGENERACY_RTOL, 10.0 * scales[-1].value) * separation
    degenerate = bool(separation > 0.0 and estimate < threshold)
    return LimitEstimate(
        value=float(estimate),
        scales=tuple(s.value for s in scales),
        defects=tuple(defects) + (0.0,),
        order=None if fit is None else fit.order,
        residual=None if fit is None else fit.residual,
        degenerate=degenerate,
        flags=("degenerate_tangent",) if degenerate else (),
    )


def _tangent_point_limit(structure, evaluate, grid) -> LimitEstimate:
    """Shared Cauchy-difference machinery for the point-valued tangent ops."""
    scales = _check_grid(structure, grid)
    values = [evaluate(s) for s in scales]
    cauchy = [structure.distance(a, b) for a, b in zip(values, values[1:])]
    live = [d for d in cauchy if d > NOISE_FLOOR]
    tail = cauchy[len(cauchy) // 2:]
    tail_live = [d for d in tail if d > NOISE_FLOOR]
    if tail_live and len(tail_live) == len(tail):
        if any(b >= a for a, b in zip(tail, tail[1:])):
            raise NoConvergence(
                "Cauchy differences fail to decrease over the grid tail: "
                f"{tail}"
            )
    fit = try_fit_order(zip([s.value for s in scales[:-1]], cauchy)) if live else None
    return LimitEstimate(
        value=values[-1],
        scales=tuple(s.value for s in scales),
        defects=tuple(cauchy) + (0.0,),
        order=None if fit is None else fit.order,
        residual=None if fit is None else fit.residual,
    )


def tangent_sum(structure: DilatationStructure, x, u, v, grid) -> LimitEstimate:
    """Small-scale limit of the approximate sum."""
    return _tangent_point_limit(structure, lambda s: sum_op(structure, x, s, u, v), grid)


def tangent_diff(structure: DilatationStructure, x, u, v, grid) -> LimitEstimate:
    """Small-scale limit of the approximate difference."""
    return _tangent_point_limit(structure, lambda s: diff_op(structure, x, s, u, v), grid)


def tangent_inv(structure: DilatationStructure, x, u, grid) -> LimitEstimate:
    """Small-scale limit of the approximate inverse."""
    return _tangent_point_limit(structure, lambda s: inv_op(structure, x, s, u), grid)
