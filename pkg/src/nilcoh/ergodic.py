"""Orbit statistics for the right action of the domain group on maps.

The empirical measure at radius R integrates an observable A over the orbit
slice {map . g : g in B_R}.  Observables are either frame-derivative entries
at the identity (for the translated map these equal the entry of the base
map's differential at g, so whole clouds evaluate in one vectorized pass),
map coordinates at a probe point, or expressions over derivative entries.

Ergodicity is never asserted: probes compare orbit averages started from
several basepoints and report either 'consistent-with-ergodic' or
'non-ergodic-evidence' against explicit thresholds.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import dsl, rng
from .bch import group_law
from .group import BallSpec, sample_ball_coords
from .maps import SmoothMap, act, differential_batch, evaluate_batch, normalize_to_y0

DEFAULT_TOL = 1e-2


class _ChunkContext:
    """Shares the differential computation among observables on one chunk."""

    def __init__(self, m: SmoothMap, coords: np.ndarray, warn=None):
        self.map = m
        self.coords = coords
        self.warn = warn
        self._mats = None

    def differentials(self) -> np.ndarray:
        if self._mats is None:
            _, self._mats = differential_batch(self.map, self.coords, self.warn)
        return self._mats


@dataclass(frozen=True)
class Observable:
    """A continuous function of the translated map, evaluated orbit-wise.

    kind 'derivative': entry (i, j) of the differential at the identity,
    i indexing the domain frame and j the codomain frame (1-based); kind
    'coordinate': codomain coordinate j of the value at a probe point; kind
    'expression': any DSL expression over the symbols d11 .. d<n><m>.
    """

    name: str
    kind: str
    i: int = 0
    j: int = 0
    power: int = 1
    probe: tuple = ()
    expr: object = None

    def evaluate_chunk(self, ctx: _ChunkContext) -> np.ndarray:
        if self.kind == "derivative":
            vals = ctx.differentials()[:, self.j - 1, self.i - 1]
            return vals ** self.power if self.power != 1 else vals
        if self.kind == "coordinate":
            m = ctx.map
            law = group_law(m.domain)
            probe = np.array(self.probe, dtype=float)
            moved = law.multiply_batch(ctx.coords, probe)
            at_g = evaluate_batch(m, ctx.coords, ctx.warn)
            at_moved = evaluate_batch(m, moved, ctx.warn)
            translated = group_law(m.codomain).multiply_batch(-at_g, at_moved)
            return translated[self.j - 1]
        mats = ctx.differentials()
        n_dom = ctx.map.domain.dim
        env = [
            mats[:, j, i]
            for i in range(n_dom)
            for j in range(ctx.map.codomain.dim)
        ]
        return np.broadcast_to(dsl.evaluate(self.expr, env, ctx.warn), (ctx.coords.shape[1],))

    def evaluate_batch(self, m: SmoothMap, coords: np.ndarray, warn=None) -> np.ndarray:
        return self.evaluate_chunk(_ChunkContext(m, coords, warn))


def derivative_entry(i: int, j: int, squared: bool = False) -> Observable:
    name = f"d{i}{j}sq" if squared else f"d{i}{j}"
    return Observable(name=name, kind="derivative", i=i, j=j, power=2 if squared else 1)


def parse_observable(text: str, domain_dim: int, codomain_dim: int) -> Observable:
    """Parse CLI observable syntax: dIJ, dIJsq, coordJ@p1:p2:..., or an
    expression over the dIJ symbols."""
    text = text.strip()
    m = re.fullmatch(r"d([1-9])([1-9])(sq)?", text)
    if m:
        i, j = int(m.group(1)), int(m.group(2))
        if i > domain_dim or j > codomain_dim:
            raise ValueError(f"observable {text!r}: index out of range")
        return derivative_entry(i, j, squared=bool(m.group(3)))
    m = re.fullmatch(r"coord([1-9][0-9]*)@(.+)", text)
    if m:
        j = int(m.group(1))
        probe = tuple(float(x) for x in m.group(2).split(":"))
        if j > codomain_dim or len(probe) != domain_dim:
            raise ValueError(f"observable {text!r}: index or probe dimension out of range")
        return Observable(name=text, kind="coordinate", j=j, probe=probe)
    names = {
        f"d{i}{j}": (i - 1) * codomain_dim + (j - 1)
        for i in range(1, domain_dim + 1)
        for j in range(1, codomain_dim + 1)
    }
    expr = dsl.parse(text, names=names)
    return Observable(name=text, kind="expression", expr=expr)


def empirical_measure(
    m: SmoothMap,
    observables: list[Observable],
    radius: float,
    samples: int,
    seed: int,
    shape: str = "box",
    threads: int = 1,
    warnings: list[str] | None = None,
) -> list[dict]:
    """Monte Carlo estimate of each observable against the empirical measure
    mu_R of the orbit; returns {'name', 'mean', 'stderr'} per observable."""
    m = normalize_to_y0(m)
    sink = warnings if warnings is not None else []

    def warn(msg):
        if msg not in sink:
            sink.append(msg)

    cloud = sample_ball_coords(m.domain, BallSpec(radius, shape), samples, seed, tags=("orbit",))

    def evaluate(start: int, stop: int):
        ctx = _ChunkContext(m, cloud[:, start:stop], warn)
        vals = np.stack([obs.evaluate_chunk(ctx) for obs in observables])
        return [vals, vals * vals]

    total, total_sq = rng.chunked_sums(evaluate, samples, threads=threads)
    mean, stderr = rng.mean_and_stderr(total, total_sq, samples)
    return [
        {"name": obs.name, "mean": float(mean[k]), "stderr": float(stderr[k])}
        for k, obs in enumerate(observables)
    ]


@dataclass
class OrbitTrace:
    observable: str
    radii: list[float]
    means: list[float]
    stderrs: list[float]
    increments: list[float]
    verdict: str            # 'stable' | 'undecided'
    limit: float


@dataclass
class ConvergenceReport:
    traces: list[OrbitTrace]
    tol: float
    warnings: list[str] = field(default_factory=list)

    def limits(self) -> dict[str, float]:
        return {t.observable: t.limit for t in self.traces}


def convergence_report(
    m: SmoothMap,
    observables: list[Observable],
    radii,
    samples: int,
    seed: int,
    shape: str = "box",
    threads: int = 1,
    tol: float = DEFAULT_TOL,
) -> ConvergenceReport:
    """Per-observable running means over the schedule with a stability verdict:
    'stable' when the last two increments sit below max(3 stderr, tol)."""
    radii = [float(r) for r in radii]
    warnings: list[str] = []
    rows = [
        empirical_measure(m, observables, r, samples, seed, shape, threads, warnings)
        for r in radii
    ]
    traces = []
    for k, obs in enumerate(observables):
        means = [row[k]["mean"] for row in rows]
        ses = [row[k]["stderr"] for row in rows]
        incs = [abs(b - a) for a, b in zip(means, means[1:])]
        gate = max(3.0 * ses[-1], tol)
        tail = incs[-2:]
        verdict = "stable" if tail and all(i <= gate for i in tail) else "undecided"
        traces.append(
            OrbitTrace(
                observable=obs.name,
                radii=radii,
                means=means,
                stderrs=ses,
                increments=incs,
                verdict=verdict,
                limit=means[-1],
            )
        )
    return ConvergenceReport(traces=traces, tol=tol, warnings=warnings)


@dataclass
class ErgodicityProbe:
    basepoints: list[tuple]
    reports: list[ConvergenceReport]
    spreads: dict[str, float]
    tolerances: dict[str, float]
    verdict: str            # 'consistent-with-ergodic' | 'non-ergodic-evidence'
    warnings: list[str] = field(default_factory=list)


def ergodicity_probe(
    m: SmoothMap,
    observables: list[Observable],
    basepoints,
    radii,
    samples: int,
    seed: int,
    shape: str = "box",
    threads: int = 1,
    tol: float = DEFAULT_TOL,
) -> ErgodicityProbe:
    """Compare orbit averages started from several basepoints.

    For an ergodic limit measure the averages agree for almost every start;
    a spread beyond max(3 sqrt(2) stderr, tol) is reported as evidence
    against ergodicity (never as a proof either way).
    """
    m = normalize_to_y0(m)
    pts = [tuple(float(c) for c in _as_coords(p, m.domain.dim)) for p in basepoints]
    reports = [
        convergence_report(act(m, p), observables, radii, samples, seed, shape, threads, tol)
        for p in pts
    ]
    spreads: dict[str, float] = {}
    tolerances: dict[str, float] = {}
    verdict = "consistent-with-ergodic"
    for k, obs in enumerate(observables):
        limits = [rep.traces[k].limit for rep in reports]
        worst_se = max(rep.traces[k].stderrs[-1] for rep in reports)
        spreads[obs.name] = max(limits) - min(limits)
        tolerances[obs.name] = max(3.0 * np.sqrt(2.0) * worst_se, tol)
        if spreads[obs.name] > tolerances[obs.name]:
            verdict = "non-ergodic-evidence"
    warnings = [w for rep in reports for w in rep.warnings]
    return ErgodicityProbe(
        basepoints=pts,
        reports=reports,
        spreads=spreads,
        tolerances=tolerances,
        verdict=verdict,
        warnings=list(dict.fromkeys(warnings)),
    )


def _as_coords(p, dim: int):
    if isinstance(p, (int, float)):
        if dim != 1:
            raise ValueError("scalar basepoint only valid for 1-dimensional groups")
        return (float(p),)
    coords = tuple(float(c) for c in (p.coords if hasattr(p, "coords") else p))
    if len(coords) != dim:
        raise ValueError("basepoint dimension mismatch")
    return coords
