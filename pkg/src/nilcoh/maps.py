"""Smooth maps between groups, given componentwise in exponential coordinates.

A map is a tuple of expressions, optionally left-translated by a constant
``shift`` in the codomain (used to send the origin to the origin) and
optionally precomposed/postcomposed by the right action: ``action = g``
stores the translated map ``x -> F(g)^-1 . F(g . x)`` lazily, so orbit
points cost one extra group multiplication per evaluation instead of a
symbolic rewrite.

``differential`` returns the matrix of the derivative in the left-invariant
frames of both sides: column b holds the coefficients of the image of the
b-th domain frame field in the codomain frame.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

import numpy as np

from . import dsl
from .algebra import LieAlgebra, algebra_from_dict, load_algebra
from .bch import group_law
from .group import GroupPoint
from .jets import Jet


@dataclass(frozen=True)
class SmoothMap:
    domain: LieAlgebra
    codomain: LieAlgebra
    components: tuple
    shift: tuple | None = None
    action: tuple | None = None

    def __post_init__(self):
        if len(self.components) != self.codomain.dim:
            raise ValueError(
                f"map has {len(self.components)} components, codomain needs {self.codomain.dim}"
            )
        for comp in self.components:
            bad = [i for i in dsl.coordinate_indices(comp) if i >= self.domain.dim]
            if bad:
                raise ValueError(
                    f"component uses coordinate x{max(bad) + 1} beyond domain dimension {self.domain.dim}"
                )
        if self.shift is not None and len(self.shift) != self.codomain.dim:
            raise ValueError("shift length does not match codomain dimension")
        if self.action is not None and len(self.action) != self.domain.dim:
            raise ValueError("action point length does not match domain dimension")


def map_from_texts(domain: LieAlgebra, codomain: LieAlgebra, texts) -> SmoothMap:
    return SmoothMap(domain, codomain, tuple(dsl.parse(t) for t in texts))


def _raw_batch(m: SmoothMap, coords: np.ndarray, warn=None) -> np.ndarray:
    """Components + shift on a (n, N) batch, before any action translation."""
    count = coords.shape[1]
    env = list(coords)
    vals = np.empty((m.codomain.dim, count))
    for a, comp in enumerate(m.components):
        vals[a] = np.broadcast_to(dsl.evaluate(comp, env, warn), (count,))
    if m.shift is not None:
        vals = group_law(m.codomain).multiply_batch(np.array(m.shift), vals)
    return vals


def _raw_jet_batch(m: SmoothMap, coords: np.ndarray, warn=None):
    """Values and coordinate Jacobian of components + shift at a batch.

    Returns (values (m, N), jacobian (N, m, n)); derivatives are taken with
    respect to the given coordinates (for action maps: the translated point).
    """
    n = m.domain.dim
    count = coords.shape[1]
    env = [Jet.seed(coords[i], i, n) for i in range(n)]
    values = np.empty((m.codomain.dim, count))
    jac = np.empty((count, m.codomain.dim, n))
    for a, comp in enumerate(m.components):
        out = dsl.evaluate(comp, env, warn)
        if isinstance(out, Jet):
            values[a] = np.broadcast_to(out.value, (count,))
            jac[:, a, :] = np.broadcast_to(out.partials, (n, count)).T
        else:
            values[a] = np.broadcast_to(out, (count,))
            jac[:, a, :] = 0.0
    if m.shift is not None:
        law = group_law(m.codomain)
        shifted = law.multiply_batch(np.array(m.shift), values)
        t = law.translation_jacobian_batch(np.array(m.shift), values)
        jac = t @ jac
        values = shifted
    return values, jac


def evaluate_batch(m: SmoothMap, coords: np.ndarray, warn=None) -> np.ndarray:
    """Map values on a (n, N) coordinate batch; returns (m, N)."""
    coords = np.asarray(coords, dtype=float)
    if m.action is None:
        return _raw_batch(m, coords, warn)
    law = group_law(m.domain)
    base = np.array(m.action)
    moved = law.multiply_batch(base, coords)
    at_action = _raw_batch(m, base[:, None], warn)[:, 0]
    vals = _raw_batch(m, moved, warn)
    return group_law(m.codomain).multiply_batch(-at_action, vals)


def evaluate(m: SmoothMap, g, warn=None) -> GroupPoint:
    """Map value at a single point (GroupPoint or coordinate sequence)."""
    coords = np.array(_coords_of(g), dtype=float)[:, None]
    try:
        out = evaluate_batch(m, coords, warn)
    except dsl.DomainError as e:
        raise dsl.DomainError(e.base_message, coords=_coords_of(g)) from None
    return GroupPoint(m.codomain, tuple(float(v) for v in out[:, 0]))


class IllConditionedFrame(ValueError):
    """A sampled frame determinant collapsed; valid nilpotent group data has
    unipotent frames (det = 1), so this indicates corrupt algebra input."""


def differential_batch(m: SmoothMap, coords: np.ndarray, warn=None):
    """Frame-to-frame differential on a batch: (values (m, N), matrices (N, m, n))."""
    coords = np.asarray(coords, dtype=float)
    dom_law = group_law(m.domain)
    cod_law = group_law(m.codomain)
    if m.action is None:
        values, jac = _raw_jet_batch(m, coords, warn)
    else:
        base = np.array(m.action)
        moved = dom_law.multiply_batch(base, coords)
        at_action = _raw_batch(m, base[:, None], warn)[:, 0]
        inner_vals, inner_jac = _raw_jet_batch(m, moved, warn)
        values = cod_law.multiply_batch(-at_action, inner_vals)
        t_out = cod_law.translation_jacobian_batch(-at_action, inner_vals)
        t_in = dom_law.translation_jacobian_batch(base, coords)
        jac = t_out @ inner_jac @ t_in
    frames = dom_law.frame_batch(coords)
    dets = np.abs(np.linalg.det(frames))
    if np.any(dets < 1e-12):
        bad = int(np.argmax(dets < 1e-12))
        raise IllConditionedFrame(
            f"frame determinant {dets[bad]:.3e} at sample {bad}; "
            "nilpotent frames are unipotent, so the algebra data is corrupt"
        )
    inv_frames = cod_law.inv_frame_batch(values)
    return values, inv_frames @ jac @ frames


def differential(m: SmoothMap, g, warn=None) -> list[list[float]]:
    coords = np.array(_coords_of(g), dtype=float)[:, None]
    try:
        _, mats = differential_batch(m, coords, warn)
    except dsl.DomainError as e:
        raise dsl.DomainError(e.base_message, coords=_coords_of(g)) from None
    return [[float(x) for x in row] for row in mats[0]]


def normalize_to_y0(m: SmoothMap) -> SmoothMap:
    """Left-translate so the origin maps to the origin (idempotent)."""
    if m.action is not None:
        return m
    bare = replace(m, shift=None)
    at_origin = _raw_batch(bare, np.zeros((m.domain.dim, 1)))[:, 0]
    if not np.any(at_origin):
        return bare
    return replace(m, shift=tuple(-v for v in at_origin))


def act(m: SmoothMap, g) -> SmoothMap:
    """Right action by a group element: the translated map x -> F(g)^-1 F(g x).

    Repeated actions collapse through the group law, so
    act(act(m, g1), g2) == act(m, g1 * g2) by construction.
    """
    coords = [float(c) for c in _coords_of(g)]
    if m.action is None:
        new_action = tuple(coords)
    else:
        new_action = tuple(
            float(v) for v in group_law(m.domain).multiply(list(m.action), coords)
        )
    return SmoothMap(m.domain, m.codomain, m.components, shift=None, action=new_action)


def is_group_homomorphism(m: SmoothMap, seed: int = 0, trials: int = 8, tol: float = 1e-9) -> bool:
    """Probe phi(g h) = phi(g) phi(h) on random pairs near the identity box."""
    from . import rng

    gen = rng.stream(seed, "homcheck")
    dom_law = group_law(m.domain)
    cod_law = group_law(m.codomain)
    mm = normalize_to_y0(m)
    for _ in range(trials):
        a = gen.uniform(-2.0, 2.0, size=m.domain.dim)
        b = gen.uniform(-2.0, 2.0, size=m.domain.dim)
        ab = np.array(dom_law.multiply(list(a), list(b)), dtype=float)
        lhs = evaluate_batch(mm, ab[:, None])[:, 0]
        fa = evaluate_batch(mm, a[:, None])[:, 0]
        fb = evaluate_batch(mm, b[:, None])[:, 0]
        rhs = np.array(cod_law.multiply(list(fa), list(fb)), dtype=float)
        if np.max(np.abs(lhs - rhs)) > tol:
            return False
    return True


def _coords_of(g):
    if isinstance(g, GroupPoint):
        return g.coords
    return tuple(g)


# -- map files ----------------------------------------------------------------
#
# JSON record: {"domain": <algebra file path or inline record>,
#               "codomain": ..., "components": ["x1", "sin(x1)", ...]}


def load_map(path: str) -> SmoothMap:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    base = os.path.dirname(os.path.abspath(path))

    def resolve(spec, field):
        if isinstance(spec, str):
            ref = spec if os.path.isabs(spec) else os.path.join(base, spec)
            return load_algebra(ref)
        if isinstance(spec, dict):
            return algebra_from_dict(spec)
        raise ValueError(f"{path}: field {field!r} must be a file path or algebra record")

    try:
        domain = resolve(data["domain"], "domain")
        codomain = resolve(data["codomain"], "codomain")
        texts = data["components"]
    except KeyError as e:
        raise ValueError(f"{path}: missing field {e.args[0]!r}") from None
    if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
        raise ValueError(f"{path}: 'components' must be a list of expression strings")
    return map_from_texts(domain, codomain, texts)


def save_map(m: SmoothMap, path: str, domain_ref: str | None = None, codomain_ref: str | None = None):
    from .algebra import algebra_to_dict

    record = {
        "domain": domain_ref if domain_ref else algebra_to_dict(m.domain),
        "codomain": codomain_ref if codomain_ref else algebra_to_dict(m.codomain),
        "components": [dsl.pretty(c) for c in m.components],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")
