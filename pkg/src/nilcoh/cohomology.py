"""Cohomology of the Chevalley-Eilenberg complex, with cup products.

Everything is exact rational linear algebra.  Representatives are chosen
deterministically: the nullspace of d_k is computed from the reduced row
echelon form over the lexicographic wedge basis, and vectors are added to
the representative set in that order whenever they are independent modulo
coboundaries.  The per-degree projector is the rational matrix sending any
closed form to its coordinates in the representative basis (a least-squares
projector, so it also applies meaningfully to nearly-closed float forms).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import exactlinalg as xl
from .algebra import LieAlgebra
from .forms import KForm, basis_tuples, basis_form, ce_differential, form_from_vector, wedge


class DegreeOverflow(ValueError):
    """Cup product requested beyond the top degree."""


@dataclass(frozen=True)
class CohomologySpace:
    """Degree-k cohomology data: Betti number, representative forms, and the
    projector matrix (betti x C(n,k), rational) onto class coordinates."""

    degree: int
    betti: int
    representatives: tuple[KForm, ...]
    projector: list[list[Fraction]]
    closed_basis: list[list[Fraction]]  # columns spanning ker d_k: reps then coboundaries

    def project(self, form: KForm) -> list:
        """Class coordinates of a closed form (exact for rational input)."""
        vec = form.vector()
        return xl.mat_vec(self.projector, vec)

    def project_float(self, vec) -> list[float]:
        """Projector applied numerically to a dense float coefficient vector."""
        return [sum(float(p) * v for p, v in zip(row, vec)) for row in self.projector]


@dataclass(frozen=True)
class CohomologyRing:
    algebra: LieAlgebra
    spaces: tuple[CohomologySpace, ...]
    cup: dict[tuple[int, int, int, int], list[Fraction]]

    @property
    def betti(self) -> tuple[int, ...]:
        return tuple(s.betti for s in self.spaces)

    def space(self, k: int) -> CohomologySpace:
        return self.spaces[k]


_RING_CACHE: dict[LieAlgebra, CohomologyRing] = {}


def differential_matrix(alg: LieAlgebra, k: int) -> xl.Matrix:
    """Matrix of d_k from degree k to k+1 over the lexicographic bases."""
    dom = basis_tuples(alg.dim, k)
    cod = basis_tuples(alg.dim, k + 1)
    cols = []
    for t in dom:
        df = ce_differential(basis_form(alg, t))
        cols.append([df.coeffs.get(s, Fraction(0)) for s in cod])
    if not cod:
        return [[] for _ in range(0)]
    return xl.transpose(cols) if cols else [[] for _ in cod]


def cohomology(alg: LieAlgebra) -> CohomologyRing:
    """Betti numbers, representatives, projectors, and the cup table."""
    if alg in _RING_CACHE:
        return _RING_CACHE[alg]

    n = alg.dim
    d_mats = [differential_matrix(alg, k) for k in range(n + 1)]

    spaces = []
    for k in range(n + 1):
        dim_k = len(basis_tuples(n, k))
        if k < n:
            cocycles = xl.nullspace(d_mats[k])
        else:
            cocycles = [list(col) for col in xl.identity(dim_k)]
        if k == 0:
            coboundaries: list[xl.Vector] = []
        else:
            dm = d_mats[k - 1]
            pivot_cols = xl.column_space_pivots(dm)
            coboundaries = [[row[c] for row in dm] for c in pivot_cols]

        reps: list[xl.Vector] = []
        span = list(coboundaries)
        for z in cocycles:
            if not xl.in_span(span, z):
                reps.append(z)
                span.append(z)
        betti = len(reps)

        closed_cols = reps + coboundaries
        projector = _class_projector(closed_cols, betti, dim_k)
        rep_forms = tuple(form_from_vector(alg, k, v) for v in reps)
        spaces.append(
            CohomologySpace(
                degree=k,
                betti=betti,
                representatives=rep_forms,
                projector=projector,
                closed_basis=closed_cols,
            )
        )

    cup: dict[tuple[int, int, int, int], list[Fraction]] = {}
    for k in range(n + 1):
        for l in range(n + 1 - k):
            for i, a in enumerate(spaces[k].representatives):
                for j, b in enumerate(spaces[l].representatives):
                    cup[(k, l, i, j)] = spaces[k + l].project(wedge(a, b))

    ring = CohomologyRing(algebra=alg, spaces=tuple(spaces), cup=cup)
    _RING_CACHE[alg] = ring
    return ring


def _class_projector(closed_cols: list[xl.Vector], betti: int, dim_k: int) -> xl.Matrix:
    """First `betti` rows of (A^T A)^{-1} A^T for A = [reps | coboundaries].

    For closed vectors this returns exact class coordinates; for arbitrary
    vectors it is the least-squares projection onto the closed subspace, so
    Monte Carlo noise orthogonal to ker d is discarded rather than amplified.
    """
    if betti == 0:
        return []
    if not closed_cols:
        return []
    a = xl.transpose(closed_cols)  # dim_k x (betti + rank)
    at = closed_cols  # transpose(a)
    gram = xl.mat_mul(at, a)
    pinv = xl.mat_mul(xl.invert(gram), at)
    return pinv[:betti]


def cup_class(ring: CohomologyRing, k: int, i: int, l: int, j: int) -> list[Fraction]:
    """Coordinates of [rep_i^k ^ rep_j^l] in degree k+l."""
    n = ring.algebra.dim
    if k + l > n:
        raise DegreeOverflow(f"degree {k}+{l} exceeds top degree {n}")
    if not (0 <= i < ring.spaces[k].betti and 0 <= j < ring.spaces[l].betti):
        raise IndexError("representative index out of range")
    return ring.cup[(k, l, i, j)]


def cup_pairing_rank(ring: CohomologyRing, k: int, l: int) -> int:
    """Rank of the bilinear cup pairing H^k x H^l -> H^{k+l}."""
    n = ring.algebra.dim
    if k + l > n:
        return 0
    bk, bl = ring.spaces[k].betti, ring.spaces[l].betti
    target = ring.spaces[k + l].betti
    if bk == 0 or bl == 0 or target == 0:
        return 0
    rows = [ring.cup[(k, l, i, j)] for i in range(bk) for j in range(bl)]
    return xl.rank(rows)


def ring_invariants(ring: CohomologyRing) -> dict:
    """Basis-independent signature: Betti vector plus cup pairing ranks."""
    n = ring.algebra.dim
    pair_ranks = {}
    for k in range(n + 1):
        for l in range(k, n + 1 - k):
            if ring.spaces[k].betti and ring.spaces[l].betti:
                pair_ranks[(k, l)] = cup_pairing_rank(ring, k, l)
    return {"betti": ring.betti, "cup_ranks": pair_ranks}


def compare_rings(ring_a: CohomologyRing, ring_b: CohomologyRing) -> dict:
    """Verdict 'distinguished' or 'indistinguishable-by-these-invariants',
    with the first differing invariant when distinguished."""
    sig_a = ring_invariants(ring_a)
    sig_b = ring_invariants(ring_b)
    if sig_a["betti"] != sig_b["betti"]:
        return {
            "verdict": "distinguished",
            "reason": "betti",
            "a": sig_a,
            "b": sig_b,
        }
    if sig_a["cup_ranks"] != sig_b["cup_ranks"]:
        keys = sorted(
            set(sig_a["cup_ranks"]) | set(sig_b["cup_ranks"]),
        )
        diff = next(
            k for k in keys if sig_a["cup_ranks"].get(k) != sig_b["cup_ranks"].get(k)
        )
        return {
            "verdict": "distinguished",
            "reason": f"cup_rank{diff}",
            "a": sig_a,
            "b": sig_b,
        }
    return {
        "verdict": "indistinguishable-by-these-invariants",
        "a": sig_a,
        "b": sig_b,
    }
