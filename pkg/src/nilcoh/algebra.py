"""Nilpotent Lie algebras with exact rational structure constants.

A ``LieAlgebra`` stores the bracket table ``[e_i, e_j] = sum_k c[i,j,k] e_k``
for ``i < j`` (antisymmetry is implicit) and is validated on construction:
the Jacobi identity is checked exactly and the lower central series must
reach zero.  Indices are 0-based internally; the file format is 1-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from . import exactlinalg as xl


class AlgebraError(ValueError):
    """Invalid Lie algebra input."""


class JacobiViolation(AlgebraError):
    def __init__(self, triple: tuple[int, int, int], residual: list[Fraction]):
        self.triple = triple
        self.residual = residual
        pretty = ", ".join(str(x) for x in residual)
        super().__init__(
            f"Jacobi identity fails on basis triple {tuple(i + 1 for i in triple)}: "
            f"residual ({pretty})"
        )


class NotNilpotent(AlgebraError):
    def __init__(self, stable_dim: int):
        self.stable_dim = stable_dim
        super().__init__(
            f"lower central series stabilizes at dimension {stable_dim} > 0"
        )


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise AlgebraError(f"structure constant {x!r} is not an exact rational")


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """A validated nilpotent Lie algebra over the rationals.

    Instances compare and hash by identity, so per-algebra derived data
    (group law, cohomology ring) can be memoized in ordinary dicts.

    ``structure`` maps ``(i, j)`` with ``i < j`` to a dict ``{k: c_ijk}``;
    missing pairs bracket to zero.  ``lcs`` lists the dimensions of the
    lower central series ``g = g^1 >= g^2 >= ...`` down to 0, and
    ``weights[i]`` is the filtration depth of basis direction i (used for
    homogeneous dilations and quasi-norm balls).
    """

    dim: int
    basis_names: tuple[str, ...]
    structure: dict[tuple[int, int], dict[int, Fraction]]
    lcs: tuple[int, ...] = field(default=())
    weights: tuple[int, ...] = field(default=())

    def bracket_basis(self, i: int, j: int) -> dict[int, Fraction]:
        """Coefficients of [e_i, e_j] in the basis, for any i, j."""
        if i == j:
            return {}
        if i < j:
            return self.structure.get((i, j), {})
        return {k: -c for k, c in self.structure.get((j, i), {}).items()}

    def bracket(self, u: list[Fraction], v: list[Fraction]) -> list[Fraction]:
        """Bracket of two coefficient vectors, exactly."""
        out = [Fraction(0)] * self.dim
        for (i, j), comps in self.structure.items():
            w = u[i] * v[j] - u[j] * v[i]
            if w:
                for k, c in comps.items():
                    out[k] += c * w
        return out

    @property
    def nilpotency_class(self) -> int:
        return len(self.lcs) - 1

    @property
    def homogeneous_dimension(self) -> int:
        return sum(self.weights)

    @property
    def is_abelian(self) -> bool:
        return not self.structure

    def __repr__(self):
        return f"LieAlgebra(dim={self.dim}, class={self.nilpotency_class})"


def validate_algebra(
    structure: dict[tuple[int, int], dict[int, Fraction]],
    dim: int,
    basis_names: tuple[str, ...] | None = None,
) -> LieAlgebra:
    """Build a LieAlgebra, verifying Jacobi and nilpotency exactly.

    Raises JacobiViolation or NotNilpotent, and AlgebraError on malformed
    input (bad indices, dim < 1, non-rational coefficients).
    """
    if dim < 1:
        raise AlgebraError("dimension must be >= 1")
    if basis_names is None:
        basis_names = tuple(f"e{i + 1}" for i in range(dim))
    if len(basis_names) != dim:
        raise AlgebraError("basis_names length does not match dim")

    clean: dict[tuple[int, int], dict[int, Fraction]] = {}
    for (i, j), comps in structure.items():
        if not (0 <= i < j < dim):
            raise AlgebraError(f"bracket pair ({i + 1}, {j + 1}) out of range or not i < j")
        entry = {}
        for k, c in comps.items():
            if not 0 <= k < dim:
                raise AlgebraError(f"bracket target index {k + 1} out of range")
            cf = _as_fraction(c)
            if cf:
                entry[k] = cf
        if entry:
            clean[(i, j)] = entry

    alg = LieAlgebra(dim=dim, basis_names=basis_names, structure=clean)

    for i in range(dim):
        for j in range(i + 1, dim):
            for k in range(j + 1, dim):
                ei = _unit(dim, i)
                ej = _unit(dim, j)
                ek = _unit(dim, k)
                res = _vec_add(
                    alg.bracket(alg.bracket(ei, ej), ek),
                    alg.bracket(alg.bracket(ej, ek), ei),
                    alg.bracket(alg.bracket(ek, ei), ej),
                )
                if any(res):
                    raise JacobiViolation((i, j, k), res)

    lcs, weights = _lower_central_series(alg)
    if lcs[-1] != 0:
        raise NotNilpotent(lcs[-1])

    object.__setattr__(alg, "lcs", tuple(lcs))
    object.__setattr__(alg, "weights", tuple(weights))
    return alg


def _unit(dim: int, i: int) -> list[Fraction]:
    v = [Fraction(0)] * dim
    v[i] = Fraction(1)
    return v


def _vec_add(*vs):
    return [sum(col, Fraction(0)) for col in zip(*vs)]


def _lower_central_series(alg: LieAlgebra) -> tuple[list[int], list[int]]:
    """Dimensions of g^1 >= g^2 >= ... >= 0 and basis-direction weights.

    The series must strictly decrease until it hits zero; otherwise the
    algebra is not nilpotent and the caller raises.  weights[i] is the
    largest m with e_i in g^m (1 for every direction of a graded basis's
    first layer, etc.).
    """
    dim = alg.dim
    layer = [_unit(dim, i) for i in range(dim)]
    dims = [dim]
    weights = [1] * dim
    depth = 1
    while True:
        nxt = []
        for i in range(dim):
            for v in layer:
                w = alg.bracket(_unit(dim, i), v)
                if any(w):
                    nxt.append(w)
        basis = _independent_subset(nxt)
        d = len(basis)
        dims.append(d)
        if d == 0:
            break
        if d >= dims[-2]:
            # bracketing stopped shrinking the series: not nilpotent
            break
        depth += 1
        for i in range(dim):
            if xl.in_span(basis, _unit(dim, i)):
                weights[i] = depth
        layer = basis
        if depth > dim:
            break
    return dims, weights


def _independent_subset(vectors: list[list[Fraction]]) -> list[list[Fraction]]:
    basis: list[list[Fraction]] = []
    for v in vectors:
        if not xl.in_span(basis, v):
            basis.append(v)
    return basis


# -- file format -------------------------------------------------------------
#
# JSON record: {"dim": n, "basis": [...names...],
#               "brackets": [[i, j, [[k, "p/q"], ...]], ...]}
# with 1-based indices, i < j, and rationals given as strings.


def algebra_from_dict(data: dict) -> LieAlgebra:
    if not isinstance(data, dict):
        raise AlgebraError("algebra record must be a mapping")
    try:
        dim = int(data["dim"])
    except (KeyError, TypeError, ValueError):
        raise AlgebraError("algebra record needs an integer 'dim' field") from None
    names = data.get("basis")
    if names is not None:
        names = tuple(str(x) for x in names)
    structure: dict[tuple[int, int], dict[int, Fraction]] = {}
    seen = set()
    for entry in data.get("brackets", []):
        try:
            i, j, comps = entry
        except (TypeError, ValueError):
            raise AlgebraError(f"malformed bracket entry {entry!r}") from None
        if (i, j) in seen:
            raise AlgebraError(f"duplicate bracket entry for pair ({i}, {j})")
        seen.add((i, j))
        if not (isinstance(i, int) and isinstance(j, int)) or not (1 <= i < j <= dim):
            raise AlgebraError(f"bracket pair ({i}, {j}) out of range or not i < j")
        target = {}
        for k, c in comps:
            if not isinstance(k, int) or not 1 <= k <= dim:
                raise AlgebraError(f"bracket target index {k} out of range in pair ({i}, {j})")
            target[k - 1] = _as_fraction(c)
        structure[(i - 1, j - 1)] = target
    return validate_algebra(structure, dim, names)


def algebra_to_dict(alg: LieAlgebra) -> dict:
    brackets = []
    for (i, j) in sorted(alg.structure):
        comps = [[k + 1, str(c)] for k, c in sorted(alg.structure[(i, j)].items())]
        brackets.append([i + 1, j + 1, comps])
    return {"dim": alg.dim, "basis": list(alg.basis_names), "brackets": brackets}


def load_algebra(path: str) -> LieAlgebra:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise AlgebraError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    try:
        return algebra_from_dict(data)
    except AlgebraError as e:
        raise AlgebraError(f"{path}: {e}") from None


def save_algebra(alg: LieAlgebra, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(algebra_to_dict(alg), fh, indent=2)
        fh.write("\n")


# -- standard examples -------------------------------------------------------


def abelian(dim: int) -> LieAlgebra:
    """R^n with the zero bracket."""
    return validate_algebra({}, dim)


def heisenberg3() -> LieAlgebra:
    """The 3-dimensional Heisenberg algebra: [e1, e2] = e3."""
    return validate_algebra({(0, 1): {2: Fraction(1)}}, 3)


def heisenberg5() -> LieAlgebra:
    """The 5-dimensional Heisenberg algebra: [e1, e2] = [e3, e4] = e5."""
    return validate_algebra({(0, 1): {4: Fraction(1)}, (2, 3): {4: Fraction(1)}}, 5)


def filiform(dim: int) -> LieAlgebra:
    """Filiform algebra of maximal class: [e1, e_k] = e_{k+1} for 2 <= k < dim."""
    structure = {(0, k): {k + 1: Fraction(1)} for k in range(1, dim - 1)}
    return validate_algebra(structure, dim)


def free_nilpotent_two_step(generators: int = 3) -> LieAlgebra:
    """Free 2-step algebra on the given generators; brackets of generators are
    independent central directions (dim = g + C(g, 2))."""
    g = generators
    structure = {}
    extra = g
    for i in range(g):
        for j in range(i + 1, g):
            structure[(i, j)] = {extra: Fraction(1)}
            extra += 1
    return validate_algebra(structure, extra)


NAMED_ALGEBRAS = {
    "abelian1": lambda: abelian(1),
    "abelian2": lambda: abelian(2),
    "abelian3": lambda: abelian(3),
    "abelian4": lambda: abelian(4),
    "abelian5": lambda: abelian(5),
    "heisenberg3": heisenberg3,
    "heisenberg5": heisenberg5,
    "filiform4": lambda: filiform(4),
    "free2step3": free_nilpotent_two_step,
}
