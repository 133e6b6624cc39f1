"""Numeric simulation under piecewise-constant inputs and empirical response comparison."""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import RK45

from .poly import Polynomial
from .ratfunc import RationalFunction
from .sysmodel import RationalSystem, validate_system

DENOMINATOR_FLOOR = 1e-10


@dataclass(frozen=True)
class PiecewiseConstantInput:
    """Consecutive segments ``(duration, value)`` starting at ``t = 0``."""

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("an input needs at least one segment")
        for d, v in self.segments:
            if not (d > 0 and math.isfinite(d)):
                raise ValueError(f"segment durations must be positive, got {d}")
            if not math.isfinite(v):
                raise ValueError(f"input values must be finite, got {v}")
        object.__setattr__(self, "segments", tuple((float(d), float(v)) for d, v in self.segments))

    @classmethod
    def constant(cls, value: float, duration: float) -> "PiecewiseConstantInput":
        return cls(((duration, value),))

    @classmethod
    def parse(cls, text: str) -> "PiecewiseConstantInput":
        """Parse ``"v1:d1,v2:d2,..."`` (value, then duration)."""
        segments = []
        for part in text.split(","):
            try:
                v, d = part.split(":")
                segments.append((float(d), float(v)))
            except ValueError:
                raise ValueError(f"bad input segment {part!r}, expected value:duration") from None
        return cls(tuple(segments))

    @property
    def duration(self) -> float:
        return sum(d for d, _ in self.segments)

    def breakpoints(self) -> list[float]:
        out, t = [0.0], 0.0
        for d, _ in self.segments:
            t += d
            out.append(t)
        return out

    def to_dict(self) -> dict:
        return {"segments": [{"duration": d, "value": v} for d, v in self.segments]}


@dataclass(frozen=True)
class Status:
    """``kind`` is ``completed``, ``blowup``, ``denominator_zero`` or ``left_tolerance``."""

    kind: str
    t: float | None = None

    @property
    def completed(self) -> bool:
        return self.kind == "completed"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t": self.t}

    def __str__(self) -> str:
        return self.kind if self.t is None else f"{self.kind}_at({self.t:.6g})"


@dataclass(frozen=True)
class Sample:
    t: float
    x: tuple[float, ...]
    y: float


@dataclass
class Trajectory:
    samples: list[Sample]
    status: Status
    names: tuple[str, ...] = ()

    @property
    def end_time(self) -> float:
        return self.samples[-1].t

    def final_state(self) -> tuple[float, ...]:
        return self.samples[-1].x

    def to_dict(self) -> dict:
        return {
            "status": self.status.to_dict(),
            "end_time": self.end_time,
            "final_state": list(self.final_state()),
            "final_output": self.samples[-1].y,
            "samples": len(self.samples),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = self.names or tuple(f"x{i + 1}" for i in range(len(self.samples[0].x)))
        writer.writerow(["t", *names, "y"])
        for s in self.samples:
            writer.writerow([repr(s.t), *(repr(v) for v in s.x), repr(s.y)])
        return buf.getvalue()


# ---- compilation to float evaluators -------------------------------------------


def _poly_source(p: Polynomial) -> str:
    if p.is_zero():
        return "0.0"
    terms = []
    for e, c in p.terms.items():
        factors = [repr(float(c))]
        for i, k in enumerate(e):
            if k == 1:
                factors.append(f"x[{i}]")
            elif k:
                factors.append(f"x[{i}]**{k}")
        terms.append("*".join(factors))
    return " + ".join(terms)


class _DenominatorZero(Exception):
    pass


@dataclass
class _Compiled:
    rhs: Callable[[float, np.ndarray, float], np.ndarray]
    output: Callable[[np.ndarray], float]
    denominators: Callable[[np.ndarray], list[float]]
    variety: list[tuple[Callable[[np.ndarray], float], int]]


def _compile(s: RationalSystem) -> _Compiled:
    """Build float evaluators for the vector fields, output, denominators and variety."""
    dens: list[Polynomial] = []
    index: dict[Polynomial, int] = {}

    def den_ref(r: RationalFunction) -> str:
        if r.den.is_constant():
            return repr(float(r.den.constant_term()))
        if r.den not in index:
            index[r.den] = len(dens)
            dens.append(r.den)
        return f"d[{index[r.den]}]"

    def frac(r: RationalFunction) -> str:
        return f"({_poly_source(r.num)}) / {den_ref(r)}"

    drift = [frac(r) for r in s.f0]
    gain = [frac(r) for r in s.f1]
    out = frac(s.h)
    dsrc = "[" + ", ".join(_poly_source(p) for p in dens) + "]"
    rows = ", ".join(f"{a} + u * ({b})" for a, b in zip(drift, gain))
    code = (
        "def dens(x):\n"
        f"    return {dsrc}\n"
        "def rhs(t, x, u):\n"
        "    d = dens(x)\n"
        "    for v in d:\n"
        "        if abs(v) < FLOOR:\n"
        "            raise DZ(t)\n"
        f"    return array([{rows}])\n"
        "def output(x):\n"
        "    d = dens(x)\n"
        f"    return {out}\n"
    )
    env = {"array": np.array, "FLOOR": DENOMINATOR_FLOOR, "DZ": _DenominatorZero}
    exec(compile(code, f"<system {s.name or ''}>", "exec"), env)
    variety = []
    for p in s.X.defining:
        pcode = f"def p(x):\n    return {_poly_source(p)}\n"
        penv: dict = {}
        exec(compile(pcode, "<variety>", "exec"), penv)
        variety.append((penv["p"], p.total_degree()))
    return _Compiled(env["rhs"], env["output"], env["dens"], variety)


# ---- integration ---------------------------------------------------------------


def _sample(t: float, xs: np.ndarray, comp: _Compiled) -> Sample:
    return Sample(float(t), tuple(float(v) for v in xs), float(comp.output(xs)))


def simulate(
    s: RationalSystem,
    u: PiecewiseConstantInput,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    variety_tol: float = 1e-7,
    blowup: float = 1e12,
    sample_times: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate ``dx/dt = f0(x) + f1(x) u(t)`` with an adaptive RK4(5) pair.

    Each input segment is integrated separately so that input jumps fall on
    step boundaries. Samples are taken at every accepted step, or at
    ``sample_times`` (dense output) when given. Integration stops at the
    first failure: a state component beyond ``blowup``, a denominator below
    the floor or changing sign, or a variety polynomial exceeding
    ``variety_tol`` scaled by the state magnitude.
    """
    problems = validate_system(s)
    if problems:
        raise ValueError("invalid system: " + "; ".join(v.message for v in problems))
    comp = _compile(s)
    x = np.array([float(c) for c in s.x0])
    t = 0.0
    samples = [_sample(0.0, x, comp)]
    wanted = sorted(set(float(v) for v in sample_times)) if sample_times is not None else None
    cursor = 0
    if wanted is not None:
        while cursor < len(wanted) and wanted[cursor] <= 0.0:
            cursor += 1
    signs = np.sign(comp.denominators(x))

    def failure(xs: np.ndarray) -> str | None:
        if not np.all(np.isfinite(xs)) or np.max(np.abs(xs), initial=0.0) > blowup:
            return "blowup"
        d = comp.denominators(xs)
        if d and (min(abs(v) for v in d) < DENOMINATOR_FLOOR or np.any(np.sign(d) != signs)):
            return "denominator_zero"
        if comp.variety:
            scale = max(1.0, float(np.max(np.abs(xs), initial=0.0)))
            for p, deg in comp.variety:
                if abs(p(xs)) > variety_tol * scale ** max(deg, 1):
                    return "left_tolerance"
        return None

    status = Status("completed")
    for duration, value in u.segments:
        t_end = t + duration
        solver = RK45(lambda tt, xx, _v=value: comp.rhs(tt, xx, _v), t, x, t_end, rtol=rtol, atol=atol)
        while solver.status == "running":
            try:
                solver.step()
            except _DenominatorZero as exc:
                status = Status("denominator_zero", float(exc.args[0]))
                break
            if solver.status == "failed":
                kind = "denominator_zero" if comp.denominators(solver.y) and min(
                    abs(v) for v in comp.denominators(solver.y)
                ) < 1e-6 else "blowup"
                status = Status(kind, float(solver.t))
                break
            bad = failure(solver.y)
            if bad:
                status = Status(bad, float(solver.t))
                break
            if wanted is None:
                samples.append(_sample(solver.t, solver.y, comp))
            else:
                interp = None
                while cursor < len(wanted) and wanted[cursor] <= solver.t:
                    interp = interp or solver.dense_output()
                    xs = interp(wanted[cursor])
                    samples.append(_sample(wanted[cursor], xs, comp))
                    cursor += 1
        if not status.completed:
            break
        t, x = t_end, solver.y
    return Trajectory(samples, status, s.variables)


# ---- response comparison ---------------------------------------------------------


@dataclass
class TrialResult:
    input: PiecewiseConstantInput
    status1: Status
    status2: Status
    span: float
    deviation: float

    def to_dict(self) -> dict:
        return {
            "input": self.input.to_dict(),
            "status1": self.status1.to_dict(),
            "status2": self.status2.to_dict(),
            "span": self.span,
            "deviation": self.deviation,
        }


@dataclass
class ProbeReport:
    max_deviation: float
    trials: list[TrialResult]
    seed: int
    horizon: float
    grid_points: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "seed": self.seed,
            "horizon": self.horizon,
            "grid_points": self.grid_points,
            "trials": [t.to_dict() for t in self.trials],
            **self.extra,
        }


def random_input(rng: random.Random, values: Sequence[float], horizon: float) -> PiecewiseConstantInput:
    """1 to 5 segments, durations in ``(0, horizon/segments]``, values drawn from ``values``."""
    k = rng.randint(1, 5)
    segs = []
    for _ in range(k):
        d = (1.0 - rng.random()) * horizon / k
        segs.append((d, float(rng.choice(list(values)))))
    return PiecewiseConstantInput(tuple(segs))


def response_equiv_probe(
    s1: RationalSystem,
    s2: RationalSystem,
    trials: int = 20,
    horizon: float = 2.0,
    seed: int = 0,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    grid_points: int = 201,
) -> ProbeReport:
    """Compare outputs of two systems under the same random piecewise-constant inputs.

    The deviation of a trial is ``max |y1(t) - y2(t)|`` over a common grid
    (uniform points plus segment boundaries) restricted to the time span
    both simulations completed.
    """
    if set(s1.input_values) != set(s2.input_values):
        raise ValueError("systems have different input value sets")
    values = sorted(float(v) for v in s1.input_values)
    rng = random.Random(seed)
    results = []
    worst = 0.0
    for _ in range(trials):
        u = random_input(rng, values, horizon)
        total = u.duration
        grid = sorted(set(np.linspace(0.0, total, grid_points).tolist()) | set(u.breakpoints()))
        tr1 = simulate(s1, u, rtol=rtol, atol=atol, sample_times=grid)
        tr2 = simulate(s2, u, rtol=rtol, atol=atol, sample_times=grid)
        y2 = {smp.t: smp.y for smp in tr2.samples}
        span = min(tr1.end_time, tr2.end_time)
        dev = 0.0
        for smp in tr1.samples:
            if smp.t <= span and smp.t in y2:
                dev = max(dev, abs(smp.y - y2[smp.t]))
        worst = max(worst, dev)
        results.append(TrialResult(u, tr1.status, tr2.status, span, dev))
    return ProbeReport(worst, results, seed, horizon, grid_points)
