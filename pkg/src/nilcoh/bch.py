"""Group multiplication in exponential coordinates of the first kind.

For a nilpotent algebra the Baker-Campbell-Hausdorff series truncates at
the nilpotency class, so the product ``log(exp x . exp y)`` is a polynomial
in the coordinates with rational coefficients.  We compute it once per
algebra via the Dynkin expansion

    z = sum_{m>=1} (-1)^{m-1}/m  sum  [x^{r_1} y^{s_1} ... x^{r_m} y^{s_m}]
                                      / ((sum_i r_i + s_i) prod_i r_i! s_i!)

with left-nested commutators of the word ``x..xy..y...``; words whose last
two letters agree vanish and are skipped.  From the product polynomial we
derive, also exactly: the translation Jacobian d(a.y)/dy, the left-invariant
frame (its value at y = 0), and the inverse frame (a terminating Neumann
series, since the frame is unipotent in the filtration grading).

Evaluation is generic: exact on Fractions, vectorized on numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

from .algebra import LieAlgebra

ExpKey = tuple[int, ...]


class Poly:
    """Sparse multivariate polynomial with Fraction coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict[ExpKey, Fraction] | None = None):
        self.nvars = nvars
        self.terms = {k: v for k, v in (terms or {}).items() if v}

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Poly":
        key = tuple(1 if i == index else 0 for i in range(nvars))
        return cls(nvars, {key: Fraction(1)})

    @classmethod
    def constant(cls, nvars: int, c) -> "Poly":
        c = Fraction(c)
        return cls(nvars, {(0,) * nvars: c} if c else {})

    def __add__(self, other: "Poly") -> "Poly":
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, Fraction(0)) + v
        return Poly(self.nvars, terms)

    def __sub__(self, other: "Poly") -> "Poly":
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, Fraction(0)) - v
        return Poly(self.nvars, terms)

    def __mul__(self, other: "Poly") -> "Poly":
        terms: dict[ExpKey, Fraction] = {}
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                key = tuple(a + b for a, b in zip(ka, kb))
                terms[key] = terms.get(key, Fraction(0)) + va * vb
        return Poly(self.nvars, terms)

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if not c:
            return Poly(self.nvars)
        return Poly(self.nvars, {k: c * v for k, v in self.terms.items()})

    def diff(self, index: int) -> "Poly":
        terms = {}
        for k, v in self.terms.items():
            e = k[index]
            if e:
                key = k[:index] + (e - 1,) + k[index + 1 :]
                terms[key] = terms.get(key, Fraction(0)) + v * e
        return Poly(self.nvars, terms)

    def subs_zero(self, indices: set[int]) -> "Poly":
        """Set the given variables to zero."""
        terms = {k: v for k, v in self.terms.items() if all(k[i] == 0 for i in indices)}
        return Poly(self.nvars, terms)

    def drop_vars(self, keep: list[int]) -> "Poly":
        """Reindex onto the kept variables (all dropped exponents must be 0)."""
        terms = {}
        for k, v in self.terms.items():
            terms[tuple(k[i] for i in keep)] = v
        return Poly(len(keep), terms)

    def is_zero(self) -> bool:
        return not self.terms

    def eval_exact(self, vals):
        """Exact evaluation; vals may be Fractions or ints."""
        total = Fraction(0)
        for k, c in self.terms.items():
            term = c
            for i, e in enumerate(k):
                if e:
                    term *= Fraction(vals[i]) ** e
            total += term
        return total

    def eval_float(self, vals):
        """Evaluation on floats, numpy arrays, or jets (anything with ring ops)."""
        total = 0.0
        for k, c in self.terms.items():
            term = float(c)
            for i, e in enumerate(k):
                if e:
                    term = term * vals[i] ** e
            total = total + term
        return total

    def __repr__(self):
        return f"Poly({self.nvars}, {self.terms!r})"


def _as_batch(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def _poly_vec_bracket(alg: LieAlgebra, u: list[Poly], v: list[Poly]) -> list[Poly]:
    nvars = u[0].nvars
    out = [Poly(nvars) for _ in range(alg.dim)]
    for (i, j), comps in alg.structure.items():
        w = u[i] * v[j] - u[j] * v[i]
        if w.is_zero():
            continue
        for k, c in comps.items():
            out[k] = out[k] + w.scale(c)
    return out


def _dynkin_words(max_weight: int):
    """Yield (coefficient, word) pairs; word entries are 0 for x, 1 for y.

    Words ending in a repeated letter are skipped (their nested bracket is 0).
    """

    def blocks(remaining: int):
        # all (r, s) with r + s >= 1, r + s <= remaining
        for w in range(1, remaining + 1):
            for r in range(w + 1):
                yield r, w - r

    def rec(seq: list[tuple[int, int]], weight: int):
        if seq:
            yield list(seq), weight
        for r, s in blocks(max_weight - weight):
            seq.append((r, s))
            yield from rec(seq, weight + r + s)
            seq.pop()

    for seq, weight in rec([], 0):
        m = len(seq)
        word: list[int] = []
        denom = weight
        for r, s in seq:
            word.extend([0] * r + [1] * s)
            denom *= factorial(r) * factorial(s)
        if len(word) >= 2 and word[-1] == word[-2]:
            continue
        coeff = Fraction((-1) ** (m - 1), m) / denom
        yield coeff, tuple(word)


def bch_product_polys(alg: LieAlgebra) -> list[Poly]:
    """Coordinates of x·y as polynomials in (x_1..x_n, y_1..y_n)."""
    n = alg.dim
    nvars = 2 * n
    x = [[Poly.variable(nvars, i) for i in range(n)],
         [Poly.variable(nvars, n + i) for i in range(n)]]

    bracket_cache: dict[tuple[int, ...], list[Poly]] = {}

    def nested(word: tuple[int, ...]) -> list[Poly]:
        if word in bracket_cache:
            return bracket_cache[word]
        if len(word) == 1:
            vec = x[word[0]]
        else:
            vec = _poly_vec_bracket(alg, x[word[0]], nested(word[1:]))
        bracket_cache[word] = vec
        return vec

    out = [Poly(nvars) for _ in range(n)]
    for coeff, word in _dynkin_words(alg.nilpotency_class):
        vec = nested(word)
        for i in range(n):
            if not vec[i].is_zero():
                out[i] = out[i] + vec[i].scale(coeff)
    return out


def _poly_mat_mul(a: list[list[Poly]], b: list[list[Poly]]) -> list[list[Poly]]:
    n = len(a)
    nvars = a[0][0].nvars
    out = [[Poly(nvars) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = Poly(nvars)
            for k in range(n):
                if not a[i][k].is_zero() and not b[k][j].is_zero():
                    acc = acc + a[i][k] * b[k][j]
            out[i][j] = acc
    return out


@dataclass(frozen=True, eq=False)
class GroupLaw:
    """Cached polynomial data for one algebra's simply connected group."""

    algebra: LieAlgebra
    product: list[Poly]              # 2n vars: coordinates of x·y
    trans_jac: list[list[Poly]]      # 2n vars: d(x·y)_i / d y_j
    frame: list[list[Poly]]          # n vars:  trans_jac at y = 0
    inv_frame: list[list[Poly]]      # n vars:  exact inverse of frame

    @property
    def dim(self) -> int:
        return self.algebra.dim

    # -- exact paths --------------------------------------------------------

    def multiply(self, a, b):
        """Product of two coordinate sequences; exact on rationals."""
        vals = list(a) + list(b)
        if all(isinstance(v, (int, Fraction)) for v in vals):
            return [p.eval_exact(vals) for p in self.product]
        return [p.eval_float(vals) for p in self.product]

    def inverse(self, a):
        return [-v for v in a]

    def frame_at(self, a):
        """Left-invariant frame matrix at a point (columns = frame fields)."""
        vals = list(a)
        exact = all(isinstance(v, (int, Fraction)) for v in vals)
        ev = (lambda p: p.eval_exact(vals)) if exact else (lambda p: p.eval_float(vals))
        return [[ev(p) for p in row] for row in self.frame]

    def translation_jacobian(self, a, b):
        """d(a·y)/dy at y = b, exact on rationals."""
        vals = list(a) + list(b)
        exact = all(isinstance(v, (int, Fraction)) for v in vals)
        ev = (lambda p: p.eval_exact(vals)) if exact else (lambda p: p.eval_float(vals))
        return [[ev(p) for p in row] for row in self.trans_jac]

    # -- vectorized paths -----------------------------------------------------

    def multiply_batch(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Product of coordinate batches shaped (n, N); (n,) inputs broadcast."""
        a = _as_batch(a)
        b = _as_batch(b)
        a, b = np.broadcast_arrays(a, b)
        vals = list(a) + list(b)
        out = np.empty(a.shape, dtype=float)
        for i, p in enumerate(self.product):
            out[i] = p.eval_float(vals)
        return out

    def _eval_poly_matrix(self, polys, vals, count: int) -> np.ndarray:
        n = self.dim
        out = np.empty((count, n, n), dtype=float)
        for i in range(n):
            for j in range(n):
                out[:, i, j] = polys[i][j].eval_float(vals)
        return out

    def frame_batch(self, coords: np.ndarray) -> np.ndarray:
        """Frames at a coordinate batch (n, N) -> (N, n, n)."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        return self._eval_poly_matrix(self.frame, list(coords), coords.shape[1])

    def inv_frame_batch(self, coords: np.ndarray) -> np.ndarray:
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        return self._eval_poly_matrix(self.inv_frame, list(coords), coords.shape[1])

    def translation_jacobian_batch(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a, b = np.broadcast_arrays(_as_batch(a), _as_batch(b))
        vals = list(a) + list(b)
        return self._eval_poly_matrix(self.trans_jac, vals, a.shape[1])

    def dilate(self, r, coords):
        """Homogeneous dilation: coordinate i scales by r**weight_i."""
        w = self.algebra.weights
        return [c * r ** w[i] for i, c in enumerate(coords)]


_LAW_CACHE: dict[LieAlgebra, GroupLaw] = {}


def group_law(alg: LieAlgebra) -> GroupLaw:
    if alg in _LAW_CACHE:
        return _LAW_CACHE[alg]
    n = alg.dim
    product = bch_product_polys(alg)
    trans = [[product[i].diff(n + j) for j in range(n)] for i in range(n)]
    y_vars = set(range(n, 2 * n))
    keep = list(range(n))
    frame = [[trans[i][j].subs_zero(y_vars).drop_vars(keep) for j in range(n)] for i in range(n)]

    # frame = I + N with N nilpotent (entries only flow low weight -> high),
    # so the inverse is the finite alternating Neumann series.
    ident = [[Poly.constant(n, 1 if i == j else 0) for j in range(n)] for i in range(n)]
    nil = [[frame[i][j] - ident[i][j] for j in range(n)] for i in range(n)]
    inv = [row[:] for row in ident]
    power = [row[:] for row in ident]
    sign = -1
    for _ in range(n):
        power = _poly_mat_mul(power, nil)
        if all(p.is_zero() for row in power for p in row):
            break
        for i in range(n):
            for j in range(n):
                inv[i][j] = inv[i][j] + power[i][j].scale(sign)
        sign = -sign

    law = GroupLaw(algebra=alg, product=product, trans_jac=trans, frame=frame, inv_frame=inv)
    _LAW_CACHE[alg] = law
    return law
