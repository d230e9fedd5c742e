"""Graded nilpotent Lie algebras and Carnot groups in exponential coordinates.

Points are coordinate tuples in exponential coordinates of the first kind;
the group law is the Baker-Campbell-Hausdorff series evaluated by Dynkin's
explicit formula, truncated at the nilpotency step, where it is exact.
Arithmetic follows the input types: Fraction coordinates stay exact,
floats take the fast path.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import InvalidAlgebra, UnknownName, UnsupportedVariant

_MAX_STEP = 5


# ---------------------------------------------------------------------------
# Dynkin terms
# ---------------------------------------------------------------------------


def _compositions(total_max: int, blocks: int):
    """All sequences of `blocks` pairs (r, s) with r + s >= 1, total <= total_max."""
    if blocks == 0:
        yield ()
        return
    for r in range(total_max + 1):
        for s in range(total_max - r + 1):
            if r + s == 0 or r + s > total_max - (blocks - 1):
                continue
            for rest in _compositions(total_max - r - s, blocks - 1):
                yield ((r, s),) + rest


@lru_cache(maxsize=None)
def dynkin_terms(step: int) -> tuple[tuple[Fraction, tuple[int, ...]], ...]:
    """Dynkin's BCH terms up to total bracket degree `step`.

    Each term is (coefficient, word) where the word is a 0/1 tuple (0 for
    the left argument, 1 for the right) and stands for its right-nested
    bracketing. Words whose two innermost letters coincide vanish and are
    dropped; coefficients for equal words are merged.
    """
    if not (1 <= step <= _MAX_STEP):
        raise ValueError(f"supported steps are 1..{_MAX_STEP}")
    acc: dict[tuple[int, ...], Fraction] = {}
    for n in range(1, step + 1):
        sign = Fraction((-1) ** (n - 1), n)
        for comp in _compositions(step, n):
            word = []
            denom = 1
            for r, s in comp:
                word.extend([0] * r)
                word.extend([1] * s)
                denom *= math.factorial(r) * math.factorial(s)
            word_t = tuple(word)
            coeff = sign / (denom * len(word_t))
            acc[word_t] = acc.get(word_t, Fraction(0)) + coeff
    terms = []
    for word, coeff in sorted(acc.items()):
        if coeff == 0:
            continue
        if len(word) >= 2 and word[-1] == word[-2]:
            continue  # innermost bracket [a, a] = 0
        terms.append((coeff, word))
    return tuple(terms)


# ---------------------------------------------------------------------------
# Graded Lie algebra
# ---------------------------------------------------------------------------


class GradedLieAlgebra:
    """Structure constants with layer weights.

    ``brackets`` lists entries (i, j, k, coefficient) with 1-based indices,
    read as [e_i, e_j] having the given coefficient on e_k. Missing entries
    are zero and the antisymmetric completion is applied for pairs given in
    one order only. ``mode`` selects the arithmetic used by default-group
    operations ("rational" or "float"); the structure constants themselves
    are always exact rationals.
    """

    def __init__(self, dimension: int, weights, brackets, mode: str = "float"):
        if mode not in ("rational", "float"):
            raise ValueError("mode must be 'rational' or 'float'")
        self.dimension = int(dimension)
        self.weights = tuple(int(w) for w in weights)
        self.mode = mode
        if len(self.weights) != self.dimension:
            raise InvalidAlgebra("one weight per basis vector is required")
        if any(w < 1 for w in self.weights):
            raise InvalidAlgebra("weights must be positive")
        self.step = max(self.weights)
        if self.step > _MAX_STEP:
            raise InvalidAlgebra(f"steps above {_MAX_STEP} are not supported")
        if set(self.weights) != set(range(1, self.step + 1)):
            raise InvalidAlgebra("every layer 1..step must be non-empty")
        self.raw_brackets = tuple(
            (int(i), int(j), int(k), Fraction(c)) for (i, j, k, c) in brackets
        )
        self._table = self._complete(self.raw_brackets)
        self._entries = tuple(
            (i, j, k, c)
            for (i, j), comps in sorted(self._table.items())
            for k, c in sorted(comps.items())
        )
        # Dense float tensor for vectorized consumers.
        tensor = np.zeros((self.dimension,) * 3)
        for i, j, k, c in self._entries:
            tensor[i, j, k] = float(c)
        self.tensor = tensor

    def _complete(self, raw):
        table: dict[tuple[int, int], dict[int, Fraction]] = {}
        for i, j, k, c in raw:
            for idx in (i, j, k):
                if not (1 <= idx <= self.dimension):
                    raise InvalidAlgebra(f"bracket index {idx} out of range")
            if c == 0:
                continue
            table.setdefault((i - 1, j - 1), {}).setdefault(k - 1, Fraction(0))
            table[(i - 1, j - 1)][k - 1] += c
        completed = {pair: dict(comps) for pair, comps in table.items()}
        for (i, j), comps in table.items():
            for k, c in comps.items():
                if (j, i) not in table or k not in table[(j, i)]:
                    completed.setdefault((j, i), {}).setdefault(k, Fraction(0))
                    completed[(j, i)][k] += -c
        return {pair: {k: c for k, c in comps.items() if c != 0}
                for pair, comps in completed.items()}

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return tuple(sum(1 for w in self.weights if w == layer)
                     for layer in range(1, self.step + 1))

    @property
    def homogeneous_dimension(self) -> int:
        return sum(i * d for i, d in enumerate(self.layer_dims, start=1))

    def basis_indices(self, layer: int) -> tuple[int, ...]:
        return tuple(i for i, w in enumerate(self.weights) if w == layer)

    def bracket(self, x, y):
        """[x, y] through the structure constants; exact on exact inputs."""
        out = [0] * self.dimension
        for i, j, k, c in self._entries:
            out[k] += c * x[i] * y[j]
        return tuple(out)

    def zero(self):
        return (0,) * self.dimension

    # -- validation ----------------------------------------------------------

    def validate(self) -> dict:
        """Check antisymmetry, Jacobi, grading, and layer generation exactly.

        Raises InvalidAlgebra naming the first violated identity and its
        indices; returns a summary dict on success.
        """
        given = {}
        for i, j, k, c in self.raw_brackets:
            given[(i, j, k)] = given.get((i, j, k), Fraction(0)) + c
        for (i, j, k), c in given.items():
            if i == j and c != 0:
                raise InvalidAlgebra(f"antisymmetry violated at ({i}, {j}, {k})")
            mirror = given.get((j, i, k))
            if mirror is not None and mirror != -c:
                raise InvalidAlgebra(f"antisymmetry violated at ({i}, {j}, {k})")
        for (i, j), comps in self._table.items():
            for k in comps:
                if self.weights[k] != self.weights[i] + self.weights[j]:
                    raise InvalidAlgebra(
                        f"grading violated at ({i + 1}, {j + 1}, {k + 1})"
                    )
        basis = [tuple(Fraction(int(i == t)) for i in range(self.dimension))
                 for t in range(self.dimension)]
        for i in range(self.dimension):
            for j in range(i + 1, self.dimension):
                for k in range(j + 1, self.dimension):
                    lhs = self.bracket(basis[i], self.bracket(basis[j], basis[k]))
                    mid = self.bracket(basis[j], self.bracket(basis[k], basis[i]))
                    rhs = self.bracket(basis[k], self.bracket(basis[i], basis[j]))
                    total = tuple(a + b + c for a, b, c in zip(lhs, mid, rhs))
                    if any(t != 0 for t in total):
                        raise InvalidAlgebra(
                            f"Jacobi identity violated at ({i + 1}, {j + 1}, {k + 1})"
                        )
        for layer in range(1, self.step):
            generated = []
            for i in self.basis_indices(1):
                for j in self.basis_indices(layer):
                    vec = self.bracket(basis[i], basis[j])
                    generated.append([vec[k] for k in self.basis_indices(layer + 1)])
            target_dim = len(self.basis_indices(layer + 1))
            if _exact_rank(generated) != target_dim:
                raise InvalidAlgebra(
                    f"layer {layer + 1} is not generated by brackets with layer 1"
                )
        return {
            "dimension": self.dimension,
            "step": self.step,
            "layer_dims": self.layer_dims,
            "homogeneous_dimension": self.homogeneous_dimension,
        }


def _exact_rank(rows) -> int:
    """Rank of a matrix of Fractions by exact Gaussian elimination."""
    mat = [list(r) for r in rows if any(x != 0 for x in r)]
    rank = 0
    cols = len(mat[0]) if mat else 0
    for col in range(cols):
        pivot = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        lead = mat[rank][col]
        for r in range(len(mat)):
            if r != rank and mat[r][col] != 0:
                factor = mat[r][col] / lead
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
        if rank == len(mat):
            break
    return rank


# ---------------------------------------------------------------------------
# Carnot group
# ---------------------------------------------------------------------------


class CarnotGroup:
    """A graded algebra promoted to a group via truncated BCH multiplication."""

    def __init__(self, algebra: GradedLieAlgebra, name: str = ""):
        self.algebra = algebra
        self.name = name or f"carnot(dim={algebra.dimension}, step={algebra.step})"
        self._terms = dynkin_terms(algebra.step)

    @property
    def dimension(self) -> int:
        return self.algebra.dimension

    @property
    def step(self) -> int:
        return self.algebra.step

    @property
    def weights(self) -> tuple[int, ...]:
        return self.algebra.weights

    @property
    def homogeneous_dimension(self) -> int:
        return self.algebra.homogeneous_dimension

    def identity(self):
        return self.algebra.zero()

    def point(self, coords):
        coords = tuple(coords)
        if len(coords) != self.dimension:
            raise ValueError(f"expected {self.dimension} coordinates")
        return coords

    def bracket(self, x, y):
        return self.algebra.bracket(x, y)

    def bch(self, g, h):
        """Group product of g and h (exact for exact inputs)."""
        out = list(g[:])
        for t, (gi, hi) in enumerate(zip(g, h)):
            out[t] = gi + hi
        vecs = (g, h)
        bracket = self.algebra.bracket
        for coeff, word in self._terms:
            if len(word) == 1:
                continue  # degree-1 terms already added
            acc = vecs[word[-1]]
            for letter in reversed(word[:-1]):
                acc = bracket(vecs[letter], acc)
            for t, a in enumerate(acc):
                if a != 0:
                    out[t] = out[t] + coeff * a
        return tuple(out)

    def inverse(self, g):
        return tuple(-a for a in g)

    def dilation(self, g, eps):
        """Graded dilation: layer-i coordinates scale by eps**i."""
        return tuple(a * eps**w for a, w in zip(g, self.weights))

    def layer_part(self, g, layer: int):
        return tuple(g[i] for i in self.algebra.basis_indices(layer))

    def homogeneous_norm(self, g, variant: str = "layer-quasi") -> float:
        """A 1-homogeneous norm on the group.

        layer-quasi: sum over layers of |layer part|_2 ** (1/layer);
        koranyi: the closed-form gauge, dim-3 Heisenberg only;
        cc: the horizontal-path upper bound (optimization based).
        """
        if variant == "layer-quasi":
            total = 0.0
            for layer in range(1, self.step + 1):
                part = np.asarray(self.layer_part(g, layer), dtype=float)
                norm = float(np.linalg.norm(part))
                total += norm ** (1.0 / layer)
            return total
        if variant == "koranyi":
            if self.weights != (1, 1, 2):
                raise UnsupportedVariant(
                    "the koranyi gauge is defined for dim-3 Heisenberg only"
                )
            a, b, c = (float(t) for t in g)
            return ((a * a + b * b) ** 2 + 16.0 * c * c) ** 0.25
        if variant == "cc":
            from .ccdist import cc_upper
            result = cc_upper(self, self.identity(), tuple(float(t) for t in g))
            return result["upper"]
        raise UnsupportedVariant(f"unknown norm variant {variant!r}")


# ---------------------------------------------------------------------------
# Built-ins
# ---------------------------------------------------------------------------


def subadditivity_constant(group: CarnotGroup, variant: str = "layer-quasi",
                           samples: int = 200, seed: int = 0,
                           radius: float = 0.8) -> float:
    """Measured best constant C in |gh| <= C(|g| + |h|) over seeded samples.

    Aligned one-parameter pairs, where a subadditive norm attains equality,
    are always included, so a genuinely subadditive variant reports 1.0.
    The constant is reported, not asserted: some variants only satisfy a
    quasi-triangle inequality.
    """
    rng = np.random.default_rng(seed)
    hw = np.array([radius**w for w in group.weights])

    def ratio(g, h):
        denom = (group.homogeneous_norm(g, variant)
                 + group.homogeneous_norm(h, variant))
        if denom == 0.0:
            return 0.0
        return group.homogeneous_norm(group.bch(g, h), variant) / denom

    best = 0.0
    for i in group.algebra.basis_indices(1):
        g = [0.0] * group.dimension
        h = [0.0] * group.dimension
        g[i], h[i] = radius, 0.5 * radius
        best = max(best, ratio(tuple(g), tuple(h)))
    for _ in range(samples):
        g = tuple(rng.uniform(-hw, hw))
        h = tuple(rng.uniform(-hw, hw))
        best = max(best, ratio(g, h))
    return float(best)


def heisenberg_algebra(mode: str = "float") -> GradedLieAlgebra:
    return GradedLieAlgebra(3, (1, 1, 2), [(1, 2, 3, 1)], mode=mode)


def abelian_algebra(dimension: int, mode: str = "float") -> GradedLieAlgebra:
    return GradedLieAlgebra(dimension, (1,) * dimension, [], mode=mode)


def _load_bundled_algebra(name: str, mode: str) -> GradedLieAlgebra:
    path = resources.files("dilatlab.data").joinpath(f"{name}.json")
    return load_algebra_json(json.loads(path.read_text()), mode=mode)


def load_algebra_json(payload: dict, mode: str = "float") -> GradedLieAlgebra:
    """Build an algebra from the JSON interchange format.

    Schema: {"dim": n, "weights": [...], "brackets": [[i, j, k, num, den], ...]}
    with 1-based indices; omitted entries are zero and the antisymmetric
    completion is applied on load.
    """
    brackets = [
        (i, j, k, Fraction(int(num), int(den)))
        for i, j, k, num, den in payload.get("brackets", [])
    ]
    return GradedLieAlgebra(payload["dim"], payload["weights"], brackets, mode=mode)


def builtin(name: str, mode: str = "float") -> CarnotGroup:
    """Look up a validated built-in group by id."""
    if name == "heisenberg:1":
        algebra = heisenberg_algebra(mode)
    elif name == "engel":
        algebra = _load_bundled_algebra("engel", mode)
    elif name.startswith("abelian:"):
        try:
            dimension = int(name.split(":", 1)[1])
        except ValueError:
            raise UnknownName(f"unknown group {name!r}") from None
        if dimension < 1:
            raise UnknownName(f"unknown group {name!r}")
        algebra = abelian_algebra(dimension, mode)
    else:
        raise UnknownName(f"unknown group {name!r}")
    algebra.validate()
    return CarnotGroup(algebra, name=name)
