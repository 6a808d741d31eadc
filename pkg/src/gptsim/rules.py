"""Probability rules mapping geometric overlap to predicted outcome rates.

A rule is a function on [0, 1] applied to the transition probability before
it is reported as an outcome probability. Built-in families: ``identity``
(the linear rule), ``power`` (p**alpha, deliberately violating the
normalization constraint for signaling demos), ``piecewise-quadratic``
(2p^2 below 1/2 mirrored above, normalized but curved), and ``tabulated``
(monotone piecewise-linear interpolation of user samples).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import models as gm
from . import transition as tr
from .errors import EmptyEnsembleError, NotPureError, RuleDomainError

FAMILIES = ("identity", "power", "piecewise-quadratic", "tabulated")

_AUDIT_GRID = 10_000  # constructor-time range audit resolution


class _ClampCounter:
    """Mutable clamp-event tally attached to tabulated rules."""

    def __init__(self):
        self.count = 0


@dataclass(frozen=True, eq=False)
class ProbabilityRule:
    """Function [0, 1] -> [0, 1] with family metadata.

    The evaluator is vectorized; construction audits its range on a dense
    grid. Rules are immutable and safe to share across parallel scans.
    """

    family: str
    params: dict
    _fn: Callable[[np.ndarray], np.ndarray]
    clamp_counter: _ClampCounter = field(default_factory=_ClampCounter)

    def __call__(self, p):
        return eval_rule(self, p)

    def label(self) -> str:
        if self.family == "power":
            return f"power({self.params['alpha']:g})"
        if self.family == "tabulated":
            return f"tabulated({len(self.params['samples'])} samples)"
        return self.family

    def to_dict(self) -> dict:
        data = {"family": self.family}
        data.update(self.params)
        return data


def _audit_range(family: str, fn) -> None:
    grid = np.linspace(0.0, 1.0, _AUDIT_GRID)
    values = np.asarray(fn(grid), dtype=float)
    if values.min() < 0.0 or values.max() > 1.0:
        raise ValueError(
            f"{family} evaluator escapes [0, 1]: range "
            f"[{values.min()}, {values.max()}].")


def identity_rule() -> ProbabilityRule:
    """The linear rule: predicted probability equals the overlap."""
    fn = lambda p: p
    _audit_range("identity", fn)
    return ProbabilityRule("identity", {}, fn)


def power_rule(alpha: float) -> ProbabilityRule:
    """p**alpha. Satisfies the boundary conditions but not normalization;
    provided because the signaling demos need constraint-violating rules."""
    if alpha <= 0:
        raise ValueError("alpha must be positive.")
    fn = lambda p, a=float(alpha): np.power(p, a)
    _audit_range("power", fn)
    return ProbabilityRule("power", {"alpha": float(alpha)}, fn)


def piecewise_quadratic_rule() -> ProbabilityRule:
    """2p^2 on [0, 1/2], 1 - 2(1-p)^2 on [1/2, 1].

    Normalized and monotone, strictly convex below the midpoint and
    strictly concave above it.
    """
    def fn(p):
        p = np.asarray(p, dtype=float)
        return np.where(p <= 0.5, 2.0 * p * p, 1.0 - 2.0 * (1.0 - p) ** 2)
    _audit_range("piecewise-quadratic", fn)
    return ProbabilityRule("piecewise-quadratic", {}, fn)


def tabulated_rule(samples) -> ProbabilityRule:
    """Monotone piecewise-linear interpolation through (p, value) samples.

    Outputs are clamped to [0, 1]; clamp events are tallied on the rule's
    ``clamp_counter``. Monotone samples yield a monotone interpolant (no
    spline overshoot).
    """
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("samples must be an (n >= 2, 2) array of (p, value).")
    order = np.argsort(pts[:, 0], kind="stable")
    xs, ys = pts[order, 0], pts[order, 1]
    if xs[0] > 0.0 or xs[-1] < 1.0:
        raise ValueError("samples must cover [0, 1].")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("sample abscissae must be strictly increasing.")
    counter = _ClampCounter()

    def fn(p):
        raw = np.interp(p, xs, ys)
        clipped = np.clip(raw, 0.0, 1.0)
        counter.count += int(np.sum(clipped != raw))
        return clipped

    _audit_range("tabulated", fn)
    counter.count = 0  # audit clamps are not user-visible events
    return ProbabilityRule(
        "tabulated",
        {"samples": [[float(a), float(b)] for a, b in zip(xs, ys)]},
        fn, clamp_counter=counter)


def rule_from_dict(data: dict) -> ProbabilityRule:
    """Rule from its JSON form, e.g. {"family": "power", "alpha": 1.5}."""
    family = data.get("family")
    if family == "identity":
        return identity_rule()
    if family == "power":
        return power_rule(float(data["alpha"]))
    if family == "piecewise-quadratic":
        return piecewise_quadratic_rule()
    if family == "tabulated":
        return tabulated_rule(data["samples"])
    raise ValueError(f"Unknown rule family {family!r}; expected one of {FAMILIES}.")


def eval_rule(rule: ProbabilityRule, p):
    """Apply the rule; scalar in, scalar out (arrays pass through).

    Inputs outside [0, 1] by more than 1e-12 raise ``RuleDomainError``;
    closer excursions are snapped to the boundary first.
    """
    arr = np.asarray(p, dtype=float)
    if arr.size and (arr.min() < -1e-12 or arr.max() > 1.0 + 1e-12):
        raise RuleDomainError(
            f"Rule input outside [0, 1]: range [{arr.min()}, {arr.max()}].")
    clipped = np.clip(arr, 0.0, 1.0)
    out = rule._fn(clipped)
    if np.ndim(p) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


# ---------------------------------------------------------------------------
# Constraint audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstraintReport:
    """Grid audit of the boundary, monotonicity, normalization and midpoint
    constraints, plus a convexity classification by second differences."""

    rule_label: str
    grid_size: int
    tolerance: float
    boundary_ok: bool
    boundary_residual: float
    monotonicity_violations: int
    worst_monotonicity_pair: tuple[float, float] | None
    normalization_residual: float
    midpoint_residual: float
    convexity_segments: tuple[tuple[float, float, str], ...]

    @property
    def normalization_ok(self) -> bool:
        return self.normalization_residual <= self.tolerance

    @property
    def midpoint_ok(self) -> bool:
        return self.midpoint_residual <= self.tolerance

    @property
    def monotone(self) -> bool:
        return self.monotonicity_violations == 0

    @property
    def passed(self) -> bool:
        return (self.boundary_ok and self.monotone
                and self.normalization_ok and self.midpoint_ok)

    def to_dict(self) -> dict:
        return {
            "rule": self.rule_label,
            "grid_size": self.grid_size,
            "tolerance": self.tolerance,
            "boundary_ok": self.boundary_ok,
            "boundary_residual": self.boundary_residual,
            "monotonicity_violations": self.monotonicity_violations,
            "worst_monotonicity_pair": (
                list(self.worst_monotonicity_pair)
                if self.worst_monotonicity_pair else None),
            "normalization_residual": self.normalization_residual,
            "midpoint_residual": self.midpoint_residual,
            "convexity_segments": [list(seg) for seg in self.convexity_segments],
            "passed": self.passed,
        }


def check_constraints(rule: ProbabilityRule, grid_n: int = 4097,
                      tol: float = 1e-8) -> ConstraintReport:
    """Audit the rule on a uniform grid.

    Convexity labels come from second differences thresholded at ``tol``;
    measure-zero discontinuities are invisible to the grid by declared
    semantics.
    """
    if grid_n < 3:
        raise ValueError("grid_n must be at least 3.")
    grid = np.linspace(0.0, 1.0, grid_n)
    values = eval_rule(rule, grid)

    boundary_residual = float(max(abs(values[0]), abs(values[-1] - 1.0)))
    boundary_ok = boundary_residual <= tol

    drops = values[:-1] - values[1:]
    violating = drops > tol
    violations = int(np.sum(violating))
    worst_pair = None
    if violations:
        worst = int(np.argmax(drops))
        worst_pair = (float(grid[worst]), float(grid[worst + 1]))

    normalization_residual = float(np.max(np.abs(values + values[::-1] - 1.0)))
    midpoint_residual = float(abs(eval_rule(rule, 0.5) - 0.5))

    second = values[2:] - 2.0 * values[1:-1] + values[:-2]
    labels = np.where(second > tol, 1, np.where(second < -tol, -1, 0))
    segments = _merge_segments(grid, labels)

    return ConstraintReport(
        rule_label=rule.label(),
        grid_size=grid_n,
        tolerance=tol,
        boundary_ok=boundary_ok,
        boundary_residual=boundary_residual,
        monotonicity_violations=violations,
        worst_monotonicity_pair=worst_pair,
        normalization_residual=normalization_residual,
        midpoint_residual=midpoint_residual,
        convexity_segments=segments,
    )


_CONVEXITY_NAMES = {1: "convex", 0: "affine", -1: "concave"}


def _merge_segments(grid, labels) -> tuple[tuple[float, float, str], ...]:
    """Group consecutive interior points with equal curvature sign.

    Runs shorter than three grid points are below the audit's resolution
    (for instance the exactly-cancelling second difference at a junction of
    two curved branches) and are absorbed into their neighbor.
    """
    runs = []  # (start_index, end_index_exclusive, label)
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            runs.append([start, i, int(labels[start])])
            start = i
    changed = True
    while changed and len(runs) > 1:
        changed = False
        for idx, run in enumerate(runs):
            if run[1] - run[0] < 3:
                neighbor = idx - 1 if idx > 0 else idx + 1
                runs[neighbor][0] = min(runs[neighbor][0], run[0])
                runs[neighbor][1] = max(runs[neighbor][1], run[1])
                del runs[idx]
                changed = True
                break
        # re-merge adjacent runs that now share a label
        i = 0
        while i + 1 < len(runs):
            if runs[i][2] == runs[i + 1][2]:
                runs[i][1] = runs[i + 1][1]
                del runs[i + 1]
            else:
                i += 1

    segments = []
    for start, end, label in runs:
        lo = float(grid[start])  # first interior point of the run...
        hi = float(grid[end])    # ...to the right neighbor of the last
        segments.append((lo, hi, _CONVEXITY_NAMES[label]))
    if segments:
        first = segments[0]
        segments[0] = (0.0, first[1], first[2])
        last = segments[-1]
        segments[-1] = (last[0], 1.0, last[2])
    return tuple(segments)


# ---------------------------------------------------------------------------
# Prediction maps
# ---------------------------------------------------------------------------

def predict_pure(rule: ProbabilityRule, psi: gm.State, phi: gm.State) -> float:
    """Predicted probability of passing phi's test given pure psi."""
    return eval_rule(rule, tr.tau(psi, phi))


def predict_ensemble(rule: ProbabilityRule, ens: gm.Ensemble,
                     phi: gm.State) -> float:
    """Prediction when the pure-state decomposition is known: the
    weight-averaged rule values (law of total probability)."""
    if len(ens) == 0:
        raise EmptyEnsembleError("Cannot predict from an empty ensemble.")
    for s in ens.states:
        if not s.pure:
            raise NotPureError(
                "Ensemble-knowledge prediction needs pure members; "
                "use predict_average for an unresolved mixed state.")
    accept = tr.accept_effect(phi)
    taus = np.array([gm.evaluate(accept, s) for s in ens.states])
    return float(ens.weights @ eval_rule(rule, taus))


def predict_average(rule: ProbabilityRule, omega: gm.State,
                    phi: gm.State) -> float:
    """Prediction from the average state alone (no decomposition known):
    the rule applied to the mixed-state overlap."""
    return eval_rule(rule, tr.mixed_tau(omega, phi))
