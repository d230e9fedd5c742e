"""Dilatation structures built from normed groups with dilatations.

A group with dilatations carries a one-parameter family delta_eps
contracting to the identity; left-translating it to every base point and
measuring with the norm distance d(x, y) = |x^-1 y| yields a dilatation
structure. When the delta_eps are automorphisms and the norm is
1-homogeneous the structure is linear and all tangent operations have
closed forms. The module also hosts the contraction-group bridge (a single
contracting automorphism generates dyadic dilations) and estimators for
the defining limits of a group with dilatations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DilatationStructure, LimitEstimate, _check_grid
from .errors import NoConvergence
from .fitting import NOISE_FLOOR, try_fit_order
from .nilpotent import CarnotGroup, builtin
from .scales import CONTINUOUS, DYADIC, ScaleGroup


class NormedGroupWithDilatations:
    """A group law, an identity-based dilation family, and a norm.

    ``automorphic`` records whether the dilations are group morphisms; it
    gates the closed-form tangent data of the induced structure.
    """

    def __init__(self, *, name: str, dimension: int, op, inverse, identity,
                 dilation, norm, automorphic: bool,
                 scale_group: ScaleGroup = CONTINUOUS,
                 norm_variant: str = "", box_halfwidths=None,
                 homogenized_norm=None):
        self.name = name
        self.dimension = int(dimension)
        self.op = op
        self.inverse = inverse
        self.identity = tuple(identity)
        self.dilation = dilation
        self.norm = norm
        self.automorphic = bool(automorphic)
        self.scale_group = scale_group
        self.norm_variant = norm_variant
        self._box_halfwidths = box_halfwidths
        # The small-scale limit of |dilation(g, t)| / t when it differs from
        # the norm itself (non-homogeneous norms); may be a seminorm.
        self.homogenized_norm = homogenized_norm if homogenized_norm is not None else norm

    def point(self, coords):
        coords = tuple(float(c) for c in coords)
        if len(coords) != self.dimension:
            raise ValueError(f"expected {self.dimension} coordinates")
        return coords


def left_dilatation(group: NormedGroupWithDilatations, x, eps, u):
    """Dilation based at x: left-translate the identity-based family."""
    x = group.point(x)
    u = group.point(u)
    t = eps.value if hasattr(eps, "value") else float(eps)
    return group.op(x, group.dilation(group.op(group.inverse(x), u), t))


def norm_distance(group: NormedGroupWithDilatations, x, y) -> float:
    """Left-invariant distance induced by the norm."""
    return float(group.norm(group.op(group.inverse(group.point(x)), group.point(y))))


class GroupDilatationStructure(DilatationStructure):
    """The dilatation structure of a normed group with dilatations."""

    def __init__(self, group: NormedGroupWithDilatations,
                 domain_radius: float = 2.0, codomain_radius: float = 1.5,
                 tangent_ops=None, use_closed_tangent: bool = True):
        self.group = group
        self.scale_group = group.scale_group
        self.domain_radius = float(domain_radius)
        self.codomain_radius = float(codomain_radius)
        # Closed-form tangent group: (sum, diff, inv, dist) callables on
        # coordinate tuples. Automorphic instances get the group's own law.
        if tangent_ops is None and group.automorphic and use_closed_tangent:
            tangent_ops = _conical_tangent_ops(group)
        self._tangent_ops = tangent_ops

    @property
    def dimension(self) -> int:
        return self.group.dimension

    def distance(self, u, v) -> float:
        return norm_distance(self.group, self._tuple(u), self._tuple(v))

    def defect_distance(self, u, v) -> float:
        # Coordinate residual: homogeneous gauges turn roundoff-size center
        # gaps into sqrt(ulp)-size distances, which is not a usable
        # equality test in floats.
        return float(np.linalg.norm(np.asarray(u, dtype=float)
                                    - np.asarray(v, dtype=float)))

    def _tuple(self, p):
        return tuple(float(c) for c in np.asarray(p, dtype=float))

    def _dilate(self, x, t, y):
        out = left_dilatation(self.group, self._tuple(x), t, self._tuple(y))
        return np.asarray(out, dtype=float)

    def sample_box_halfwidths(self, radius: float) -> np.ndarray:
        if self.group._box_halfwidths is not None:
            return np.asarray(self.group._box_halfwidths(radius), dtype=float)
        return np.full(self.dimension, radius)

    def sample_ball_point(self, center, radius, rng):
        """Draw at the identity and left-translate, keeping the box aligned
        with the homogeneous geometry."""
        hw = self.sample_box_halfwidths(radius)
        c = self._tuple(center)
        for _ in range(10_000):
            w = tuple(rng.uniform(-hw, hw))
            if self.group.norm(w) <= radius:
                return np.asarray(self.group.op(c, w), dtype=float)
        raise RuntimeError("ball sampling rejection loop failed to land a point")

    @property
    def has_tangent_data(self) -> bool:
        return self._tangent_ops is not None

    def tangent_distance(self, x, u, v) -> float:
        return float(self._tangent_ops["dist"](self._tuple(x), self._tuple(u),
                                               self._tuple(v)))

    def tangent_sum(self, x, u, v):
        out = self._tangent_ops["sum"](self._tuple(x), self._tuple(u), self._tuple(v))
        return np.asarray(out, dtype=float)

    def tangent_diff(self, x, u, v):
        out = self._tangent_ops["diff"](self._tuple(x), self._tuple(u), self._tuple(v))
        return np.asarray(out, dtype=float)

    def tangent_inverse(self, x, u):
        out = self._tangent_ops["inv"](self._tuple(x), self._tuple(u))
        return np.asarray(out, dtype=float)

    def __repr__(self):
        return f"GroupDilatationStructure({self.group.name!r})"


def _conical_tangent_ops(group: NormedGroupWithDilatations) -> dict:
    """Tangent closed forms when the dilations are group morphisms.

    The tangent distance is the homogenized norm of the group difference,
    which coincides with the norm itself exactly when the norm is
    1-homogeneous and degenerates otherwise.
    """
    op, inv = group.op, group.inverse

    return {
        "sum": lambda x, u, v: op(u, op(inv(x), v)),
        "diff": lambda x, u, v: op(x, op(inv(u), v)),
        "inv": lambda x, u: op(x, op(inv(u), x)),
        "dist": lambda x, u, v: group.homogenized_norm(op(inv(u), v)),
    }


def as_dilatation_structure(group: NormedGroupWithDilatations,
                            domain_radius: float = 2.0,
                            codomain_radius: float = 1.5,
                            tangent_ops=None,
                            use_closed_tangent: bool = True) -> GroupDilatationStructure:
    """Promote a normed group with dilatations to a dilatation structure."""
    return GroupDilatationStructure(group, domain_radius, codomain_radius,
                                    tangent_ops, use_closed_tangent)


# ---------------------------------------------------------------------------
# Limit estimators for the defining axioms of a group with dilatations
# ---------------------------------------------------------------------------


def _limit_estimate(group: NormedGroupWithDilatations, evaluate, grid,
                    distance=None) -> LimitEstimate:
    struct_like = _GridShim(group)
    scales = _check_grid(struct_like, grid)
    values = [evaluate(s.value) for s in scales]
    if distance is None:
        def distance(a, b):
            return float(np.linalg.norm(np.asarray(a, float) - np.asarray(b, float)))
    cauchy = [distance(a, b) for a, b in zip(values, values[1:])]
    live = [d for d in cauchy if d > NOISE_FLOOR]
    tail = cauchy[len(cauchy) // 2:]
    if live and all(d > NOISE_FLOOR for d in tail):
        if any(b >= a for a, b in zip(tail, tail[1:])):
            raise NoConvergence(f"limit differences fail to settle: {tail}")
    fit = try_fit_order(zip([s.value for s in scales[:-1]], cauchy)) if live else None
    return LimitEstimate(
        value=values[-1],
        scales=tuple(s.value for s in scales),
        defects=tuple(cauchy) + (0.0,),
        order=None if fit is None else fit.order,
        residual=None if fit is None else fit.residual,
    )


class _GridShim:
    """Adapts a group to the grid validation helper."""

    def __init__(self, group):
        self.scale_group = group.scale_group

    def scale(self, eps):
        from .scales import as_scale
        return as_scale(eps, self.scale_group)


def beta_limit(group: NormedGroupWithDilatations, x, y, grid) -> LimitEstimate:
    """Estimate beta(x, y) = lim delta_eps^-1((delta_eps x)(delta_eps y)).

    For automorphic dilations the value equals the group law at every
    scale and the differences sit at the noise floor.
    """
    x = group.point(x)
    y = group.point(y)

    def evaluate(t):
        prod = group.op(group.dilation(x, t), group.dilation(y, t))
        return group.dilation(prod, 1.0 / t)

    return _limit_estimate(group, evaluate, grid)


def inverse_limit(group: NormedGroupWithDilatations, x, grid) -> LimitEstimate:
    """Estimate lim delta_eps^-1((delta_eps x)^-1); the group inverse."""
    x = group.point(x)

    def evaluate(t):
        return group.dilation(group.inverse(group.dilation(x, t)), 1.0 / t)

    return _limit_estimate(group, evaluate, grid)


def norm_limit(group: NormedGroupWithDilatations, x, grid) -> LimitEstimate:
    """Estimate the homogenized norm lim |delta_eps x| / eps.

    Flags the estimate degenerate when it collapses for x != e, which is
    how a norm incompatible with the dilations announces itself.
    """
    x = group.point(x)

    def evaluate(t):
        return group.norm(group.dilation(x, t)) / t

    est = _limit_estimate(group, evaluate, grid,
                          distance=lambda a, b: abs(float(a) - float(b)))
    not_identity = any(abs(c) > 0.0 for c in x)
    # An estimate that is still shrinking with the grid resolution is a
    # collapsing limit (the value at the final scale decays like the scale).
    threshold = 100.0 * est.scales[-1]
    degenerate = bool(not_identity and float(est.value) < threshold)
    if degenerate:
        est = LimitEstimate(
            value=float(est.value), scales=est.scales, defects=est.defects,
            order=est.order, residual=est.residual, degenerate=True,
            flags=("degenerate_norm_limit",),
        )
    return est


# ---------------------------------------------------------------------------
# Contraction groups and the dyadic bridge
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContractionGroup:
    """A group together with a contracting automorphism and its inverse."""

    name: str
    dimension: int
    op: object
    inverse: object
    identity: tuple
    alpha: object
    alpha_inverse: object


def matrix_contraction(matrix) -> ContractionGroup:
    """The abelian group R^n contracted by an invertible matrix.

    The spectral radius must be below one so that iterates of the
    automorphism send every point to the origin.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("contraction matrix must be square")
    radius = float(np.max(np.abs(np.linalg.eigvals(m))))
    if radius >= 1.0:
        raise ValueError(f"spectral radius {radius:.6g} is not below one")
    m_inv = np.linalg.inv(m)
    n = m.shape[0]

    def op(a, b):
        return tuple(float(s) for s in (np.asarray(a) + np.asarray(b)))

    def inverse(a):
        return tuple(-float(s) for s in a)

    def alpha(a):
        return tuple(float(s) for s in m @ np.asarray(a, dtype=float))

    def alpha_inverse(a):
        return tuple(float(s) for s in m_inv @ np.asarray(a, dtype=float))

    return ContractionGroup(
        name=f"contraction(matrix {n}x{n})", dimension=n, op=op,
        inverse=inverse, identity=(0.0,) * n, alpha=alpha,
        alpha_inverse=alpha_inverse,
    )


def from_contraction(contraction: ContractionGroup) -> NormedGroupWithDilatations:
    """Dyadic dilations generated by powers of the contracting automorphism.

    delta at valuation 2**-n applies alpha n times (alpha inverse for
    expanding valuations), so the composition law holds exactly on dyadic
    scales by the power law of iterates.
    """

    def dilation(g, t):
        mantissa, exponent = math.frexp(float(t))
        if mantissa != 0.5:
            raise ValueError(f"{t!r} is not a dyadic valuation")
        n = 1 - exponent  # t == 2 ** -n
        step = contraction.alpha if n >= 0 else contraction.alpha_inverse
        out = tuple(g)
        for _ in range(abs(n)):
            out = step(out)
        return out

    def norm(g):
        return float(np.linalg.norm(np.asarray(g, dtype=float)))

    return NormedGroupWithDilatations(
        name=contraction.name, dimension=contraction.dimension,
        op=contraction.op, inverse=contraction.inverse,
        identity=contraction.identity, dilation=dilation, norm=norm,
        automorphic=True, scale_group=DYADIC, norm_variant="euclidean",
    )


# ---------------------------------------------------------------------------
# Tangent reconstruction
# ---------------------------------------------------------------------------


def tangent_reconstruction_defect(structure: DilatationStructure, x, u, v, mu) -> float:
    """Residual of rebuilding the dilation at u from tangent data at x.

    Compares dilate(u, mu, v) against tangent_sum(x, u, dilate(x, mu,
    tangent_diff(x, u, v))); identically zero on linear strong structures,
    positive on the chart-perturbed control.
    """
    if not structure.has_tangent_data:
        raise ValueError("tangent closed forms are required for reconstruction")
    mu = structure.scale(mu)
    direct = structure.dilate(u, mu, v)
    rebuilt = structure.tangent_sum(
        x, u, structure.dilate(x, mu, structure.tangent_diff(x, u, v))
    )
    return structure.defect_distance(direct, rebuilt)


# ---------------------------------------------------------------------------
# Shipped group instances
# ---------------------------------------------------------------------------


def _carnot_gwd(group: CarnotGroup, norm_variant: str,
                isotropic: bool = False) -> NormedGroupWithDilatations:
    weights = group.weights

    if isotropic:
        def dilation(g, t):
            return tuple(a * t for a in g)
    else:
        def dilation(g, t):
            return group.dilation(g, t)

    homogenized = None
    if norm_variant == "euclidean":
        def norm(g):
            return float(np.linalg.norm(np.asarray(g, dtype=float)))

        if not isotropic and group.step > 1:
            ix1 = list(group.algebra.basis_indices(1))

            def homogenized(g):
                part = np.asarray(g, dtype=float)[ix1]
                return float(np.linalg.norm(part))
    else:
        def norm(g):
            return group.homogeneous_norm(g, norm_variant)

    if isotropic or norm_variant == "euclidean":
        def box(radius):
            return np.full(len(weights), radius)
    else:
        def box(radius):
            return np.array([radius ** w for w in weights])

    label = "isotropic" if isotropic else norm_variant
    return NormedGroupWithDilatations(
        name=f"{group.name}:{label}", dimension=group.dimension,
        op=group.bch, inverse=group.inverse, identity=group.identity(),
        dilation=dilation, norm=norm,
        automorphic=not isotropic, norm_variant=norm_variant,
        box_halfwidths=box, homogenized_norm=homogenized,
    )


def heisenberg_koranyi_group() -> NormedGroupWithDilatations:
    """Heisenberg with graded dilations and the koranyi gauge (automorphic)."""
    return _carnot_gwd(builtin("heisenberg:1"), "koranyi")


def heisenberg_isotropic_group() -> NormedGroupWithDilatations:
    """Heisenberg with isotropic scaling on all coordinates.

    The scalings are not group morphisms; the defining limits exist but
    the limit operation is coordinate addition, not the group law, which
    makes this the canonical non-automorphic example.
    """
    return _carnot_gwd(builtin("heisenberg:1"), "euclidean", isotropic=True)


def heisenberg_graded_euclidean_group() -> NormedGroupWithDilatations:
    """Heisenberg with graded dilations but the plain Euclidean norm.

    The homogenized norm limit collapses in the center direction, so this
    instance exercises the degeneracy flags.
    """
    return _carnot_gwd(builtin("heisenberg:1"), "euclidean")


def abelian_group(dimension: int) -> NormedGroupWithDilatations:
    """R^n with addition, scalar dilations, and the Euclidean norm."""
    return _carnot_gwd(builtin(f"abelian:{dimension}"), "euclidean")


def isotropic_tangent_ops(group: NormedGroupWithDilatations) -> dict:
    """Tangent closed forms for isotropic scalings on a coordinate group.

    The tangent group is coordinate addition transported to each base
    point by the group translation.
    """
    op, inv = group.op, group.inverse

    def coords(x, p):
        return np.asarray(op(inv(x), p), dtype=float)

    return {
        "sum": lambda x, u, v: op(x, tuple(coords(x, u) + coords(x, v))),
        "diff": lambda x, u, v: op(x, tuple(coords(x, v) - coords(x, u))),
        "inv": lambda x, u: op(x, tuple(-coords(x, u))),
        "dist": lambda x, u, v: float(np.linalg.norm(coords(x, u) - coords(x, v))),
    }
