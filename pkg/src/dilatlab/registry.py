"""Structure and group registry for the command line and the test harness.

Ids are explicit strings; an unknown id raises, never falls back to a
default. Structure ids build dilatation structures; group ids build Carnot
groups for the path-distance commands.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .conical import (
    abelian_group,
    as_dilatation_structure,
    from_contraction,
    heisenberg_graded_euclidean_group,
    heisenberg_isotropic_group,
    heisenberg_koranyi_group,
    isotropic_tangent_ops,
    matrix_contraction,
)
from .errors import UnknownName, UnsupportedVariant
from .euclidean import AffineStructure, ChartPerturbedStructure
from .nilpotent import CarnotGroup, builtin, load_algebra_json

STRUCTURE_IDS = (
    "euclidean:<n>",
    "chart:<n>[:<eta>[:<seed>]]",
    "conical:heisenberg:koranyi",
    "conical:abelian:<n>",
    "gwd:heisenberg-isotropic",
    "gwd:heisenberg-graded-euclidean",
    "contraction:matrix:<file>",
)

GROUP_IDS = ("heisenberg:1", "abelian:<n>", "engel")


def _int_field(raw: str, name: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise UnknownName(f"bad {name} in structure id: {raw!r}") from None
    if value < 1:
        raise UnknownName(f"{name} must be positive, got {value}")
    return value


def resolve_structure(structure_id: str):
    """Build the dilatation structure registered under the id."""
    parts = structure_id.split(":")
    head = parts[0]
    if head == "euclidean" and len(parts) == 2:
        return AffineStructure(_int_field(parts[1], "dimension"))
    if head == "chart" and 2 <= len(parts) <= 4:
        n = _int_field(parts[1], "dimension")
        eta = float(parts[2]) if len(parts) >= 3 else 0.05
        seed = int(parts[3]) if len(parts) == 4 else 0
        return ChartPerturbedStructure(n, eta=eta, seed=seed)
    if structure_id == "conical:heisenberg:koranyi":
        return as_dilatation_structure(heisenberg_koranyi_group())
    if head == "conical" and len(parts) == 3 and parts[1] == "abelian":
        return as_dilatation_structure(abelian_group(_int_field(parts[2], "dimension")))
    if structure_id == "gwd:heisenberg-isotropic":
        group = heisenberg_isotropic_group()
        return as_dilatation_structure(group, tangent_ops=isotropic_tangent_ops(group))
    if structure_id == "gwd:heisenberg-graded-euclidean":
        return as_dilatation_structure(heisenberg_graded_euclidean_group())
    if head == "contraction" and len(parts) >= 3 and parts[1] == "matrix":
        path = Path(":".join(parts[2:]))
        matrix = json.loads(path.read_text())
        # No closed homogenized norm in general: verification falls back to
        # smallest-scale reference estimates.
        return as_dilatation_structure(from_contraction(matrix_contraction(matrix)),
                                       use_closed_tangent=False)
    raise UnknownName(f"unknown structure id {structure_id!r}")


def resolve_group(group_id: str, mode: str = "float") -> CarnotGroup:
    """Build a Carnot group from a built-in id or an algebra JSON file."""
    try:
        return builtin(group_id, mode=mode)
    except UnknownName:
        path = Path(group_id)
        if path.suffix == ".json" and path.exists():
            algebra = load_algebra_json(json.loads(path.read_text()), mode=mode)
            algebra.validate()
            return CarnotGroup(algebra, name=path.stem)
        raise


def known_structures() -> list[str]:
    return list(STRUCTURE_IDS)


def known_groups() -> list[str]:
    return list(GROUP_IDS)


def demo_diff_map(structure_id: str):
    """Bundled differentiability demo (f, derivative candidate q) for an id.

    euclidean ids pair the componentwise map u + u**2 with its affine part
    at the origin (the identity), so the sweep decays at first order;
    conical:heisenberg:koranyi pairs a graded rotation automorphism with
    itself, so the sweep vanishes.
    """
    if structure_id.startswith("euclidean:"):
        def f(u):
            u = np.asarray(u, dtype=float)
            return u + u * u

        def q(u):
            return np.asarray(u, dtype=float)

        return f, q
    if structure_id == "conical:heisenberg:koranyi":
        def rotate(u):
            a, b, c = np.asarray(u, dtype=float)
            return np.array([b, -a, c])

        return rotate, rotate
    raise UnsupportedVariant(
        f"no bundled differentiability demo for {structure_id!r}"
    )
