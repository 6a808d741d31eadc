"""Geometric transition probability between pure states.

The transition probability tau(psi, phi) is the maximal acceptance
probability of psi by a test that accepts phi with certainty and rejects a
state perfectly distinguishable from phi. The optimum is achieved by the
distinguishing measurement, so the closed form evaluates the accepting
effect directly; an LP path over a finite effect-generator polytope provides
an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import models as gm
from .errors import (
    InfeasibleError,
    ModelMismatchError,
    NotPureError,
    UnboundedError,
    UnsupportedModelError,
)
from .models import LINEAR_TOL
from .simplex import solve_nonneg


@dataclass(frozen=True, eq=False)
class DistinguishingPair:
    """Two-outcome test {accept, reject} for a pure state and its complement."""

    accept: gm.Effect
    reject: gm.Effect
    reference: gm.State
    complement: gm.State

    @property
    def measurement(self) -> gm.Measurement:
        return gm.measurement([self.accept, self.reject])


@dataclass(frozen=True)
class TauLpReport:
    """LP cross-check outcome with solver diagnostics."""

    value: float
    iterations: int
    phase1_iterations: int
    generators: int


def _require_pure(state: gm.State, name: str) -> None:
    if not state.pure:
        raise NotPureError(f"{name} must be a pure state.")


def _require_same_model(a: gm.State, b: gm.State) -> None:
    if a.model != b.model:
        raise ModelMismatchError(f"States live on different models: "
                                 f"{a.model} vs {b.model}.")


def orthonormal_completion(ket: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the orthocomplement of ``ket``.

    Returns a (d-1, d) array; rows are obtained by Gram-Schmidt over the
    computational basis, skipping the direction absorbed by ``ket``
    (closed form for qubits).
    """
    d = ket.shape[0]
    if d == 2:
        return np.array([[-ket[1].conjugate(), ket[0].conjugate()]])
    rows = [ket]
    for j in range(d):
        cand = np.zeros(d, dtype=complex)
        cand[j] = 1.0
        for r in rows:
            cand = cand - r * np.vdot(r, cand)
        norm = np.linalg.norm(cand)
        if norm > 0.5 / np.sqrt(d):  # at most one basis vector collapses
            rows.append(cand / norm)
        if len(rows) == d:
            break
    return np.stack(rows[1:], axis=0)


def distinguishing_measurement(model: gm.SystemModel,
                               phi: gm.State) -> DistinguishingPair:
    """Two-outcome test with accept(phi) = 1 and accept(complement) = 0.

    Quantum: the accepting effect is the rank-1 projector onto phi; the
    rejecting effect is its complement (not rank-1 for d > 2). Classical:
    the indicator of phi's deterministic point.
    """
    _require_pure(phi, "phi")
    if model != phi.model:
        raise ModelMismatchError("phi does not belong to the given model.")
    if model.kind == gm.QUANTUM:
        ket = gm.pure_ket(phi)
        accept = gm.projector_effect(phi)
        perp_ket = orthonormal_completion(ket)[0]
        complement = gm.ket_state(model, perp_ket)
        reject = gm.effect_from_matrix(
            model, np.eye(model.size, dtype=complex) - accept.matrix)
        return DistinguishingPair(accept, reject, phi, complement)

    index = int(np.argmax(phi.coeffs))
    accept_vec = np.zeros(model.size)
    accept_vec[index] = 1.0
    accept = gm.effect_from_covector(model, accept_vec)
    reject = gm.effect_from_covector(model, 1.0 - accept_vec)
    complement = gm.point_state(model, (index + 1) % model.size)
    return DistinguishingPair(accept, reject, phi, complement)


def accept_effect(phi: gm.State) -> gm.Effect:
    """The optimal accepting effect of phi's distinguishing test.

    Quantum: the rank-1 projector onto phi (the pure state's own matrix);
    classical: the indicator of phi's deterministic point. Identical to
    ``distinguishing_measurement(...).accept`` without building the pair.
    """
    _require_pure(phi, "phi")
    if phi.model.kind == gm.QUANTUM:
        return gm.projector_effect(phi)
    vec = np.zeros(phi.model.size)
    vec[int(np.argmax(phi.coeffs))] = 1.0
    return gm.effect_from_covector(phi.model, vec)


def tau(psi: gm.State, phi: gm.State) -> float:
    """Transition probability between pure states.

    Quantum: the squared modulus of the Hilbert-space inner product,
    computed as the accepting effect's value on psi. Classical: the
    Kronecker match of the deterministic points.
    """
    _require_same_model(psi, phi)
    _require_pure(psi, "psi")
    return gm.evaluate(accept_effect(phi), psi)


def mixed_tau(omega: gm.State, phi: gm.State) -> float:
    """Transition probability extended to a mixed state: accept(omega)."""
    _require_same_model(omega, phi)
    return gm.evaluate(accept_effect(phi), omega)


def state_with_tau(model: gm.SystemModel, phi: gm.State, p: float,
                   seed) -> gm.State:
    """Pure state psi with tau(psi, phi) = p.

    The residual direction (and phase) is drawn from the seeded generator;
    p = 0 and p = 1 return exact complement/reference states with no
    trigonometric noise. Classical models only admit p in {0, 1}.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}.")
    _require_pure(phi, "phi")
    if model != phi.model:
        raise ModelMismatchError("phi does not belong to the given model.")

    if model.kind == gm.CLASSICAL:
        if p == 1.0:
            return phi
        if p == 0.0:
            index = int(np.argmax(phi.coeffs))
            return gm.point_state(model, (index + 1) % model.size)
        raise UnsupportedModelError(
            "Classical models admit only p in {0, 1}; "
            "intermediate overlaps require a quantum model.")

    ket = gm.pure_ket(phi)
    if p == 1.0:
        return phi
    completion = orthonormal_completion(ket)
    if p == 0.0:
        return gm.ket_state(model, completion[0])

    rng = np.random.default_rng(seed) if not isinstance(
        seed, np.random.Generator) else seed
    weights = rng.normal(size=model.size - 1) + 1j * rng.normal(size=model.size - 1)
    residual = weights @ completion
    residual = residual / np.linalg.norm(residual)
    psi_ket = np.sqrt(p) * ket + np.sqrt(1.0 - p) * residual
    return gm.ket_state(model, psi_ket / np.linalg.norm(psi_ket))


# ----------------------------------------------------------------------------
# LP cross-check path
# ----------------------------------------------------------------------------

def great_circle_states(phi: gm.State, count: int,
                        through: gm.State | None = None) -> list[gm.State]:
    """Qubit cone generators on the Bloch great circle through phi.

    The circle plane is spanned by phi's Bloch vector and, when provided,
    the component of ``through``'s Bloch vector orthogonal to it (with a
    deterministic axis fallback for aligned or missing ``through``). The
    first grid point coincides with phi.
    """
    model = phi.model
    if model.kind != gm.QUANTUM or model.size != 2:
        raise UnsupportedModelError("Great-circle grids are a qubit construction.")
    if count < 3:
        raise ValueError("Need at least 3 grid points.")
    m = gm.bloch_vector(phi)
    m = m / np.linalg.norm(m)
    w = None
    if through is not None:
        t = gm.bloch_vector(through)
        t_perp = t - (t @ m) * m
        if np.linalg.norm(t_perp) > 1e-8:
            w = t_perp / np.linalg.norm(t_perp)
    if w is None:
        w = _deterministic_orthogonal(m)
    thetas = 2.0 * np.pi * np.arange(count) / count
    return [gm.state_from_bloch(model, np.cos(t) * m + np.sin(t) * w)
            for t in thetas]


def _deterministic_orthogonal(m: np.ndarray) -> np.ndarray:
    for axis in np.eye(3):
        cand = axis - (axis @ m) * m
        norm = np.linalg.norm(cand)
        if norm > 0.5:
            return cand / norm
    raise AssertionError("unreachable: some axis is at angle > 30deg from m")


def tau_lp(model: gm.SystemModel, psi: gm.State, phi: gm.State,
           generators=None) -> float:
    """Transition probability by direct optimization over an effect polytope."""
    return tau_lp_report(model, psi, phi, generators).value


def tau_lp_report(model: gm.SystemModel, psi: gm.State, phi: gm.State,
                  generators=None) -> TauLpReport:
    """LP form of tau with solver diagnostics.

    Maximizes e(psi) over covectors e that accept phi with certainty,
    reject each state of phi's distinguishing complement family, and
    satisfy 0 <= e(g) <= 1 on the cone generators (classical: the
    deterministic vertices, always exact; quantum: a caller-supplied finite
    generator set such as a Bloch great-circle grid).

    The perfect-acceptance/rejection equalities are eliminated analytically
    and the remaining box-constrained program is solved through its dual,
    which keeps the simplex tableau small even for dense generator grids.
    """
    _require_same_model(psi, phi)
    _require_pure(psi, "psi")
    _require_pure(phi, "phi")
    if model != phi.model:
        raise ModelMismatchError("States do not belong to the given model.")

    if model.kind == gm.CLASSICAL:
        if generators is None:
            generators = [gm.point_state(model, i) for i in range(model.size)]
        rejected = _classical_rejected(model, phi)
    else:
        if generators is None:
            raise ValueError(
                "Quantum tau_lp needs a finite effect generator set; "
                "see great_circle_states.")
        rejected = _quantum_rejected(model, phi)

    pinned = np.vstack([phi.coeffs[None, :]]
                       + [r.coeffs[None, :] for r in rejected])
    targets = np.concatenate([[1.0], np.zeros(len(rejected))])

    # Particular solution: the distinguishing accept effect, corrected onto
    # the equality manifold; nullspace basis spans the remaining freedom.
    accept = distinguishing_measurement(model, phi).accept.covector
    correction = np.linalg.lstsq(pinned, pinned @ accept - targets, rcond=None)[0]
    e0 = accept - correction
    _, svals, vt = np.linalg.svd(pinned)
    rank = int(np.sum(svals > 1e-10 * svals[0]))
    nullspace = vt[rank:].T  # (ambient, k)

    gen_rows = np.stack([g.coeffs for g in generators])
    base = gen_rows @ e0
    const = float(e0 @ psi.coeffs)

    if nullspace.shape[1] == 0:
        # Equalities pin the effect completely (classical models).
        if base.min() < -LINEAR_TOL or base.max() > 1.0 + LINEAR_TOL:
            raise InfeasibleError(
                "No effect in the generator polytope attains e(phi) = 1.")
        return TauLpReport(min(max(const, 0.0), 1.0), 0, 0, len(generators))

    reduced_obj = nullspace.T @ psi.coeffs
    rows = gen_rows @ nullspace  # (m, k)
    a_ub = np.vstack([rows, -rows])
    b_ub = np.concatenate([1.0 - base, base])

    # Primal: max reduced_obj . z  s.t.  a_ub z <= b_ub, z free.
    # Dual:   min b_ub . y  s.t.  a_ub^T y = reduced_obj, y >= 0.
    result = solve_nonneg(b_ub, a_ub.T, reduced_obj)
    if result.status == "infeasible":
        raise UnboundedError(
            "Generator set does not bound the effect polytope in the "
            "objective direction; the cone is malformed or too sparse.")
    if result.status == "unbounded":
        raise InfeasibleError(
            "No effect in the generator polytope attains e(phi) = 1.")
    value = min(max(result.value + const, 0.0), 1.0)
    return TauLpReport(value, result.iterations, result.phase1_iterations,
                       len(generators))


def _classical_rejected(model, phi):
    index = int(np.argmax(phi.coeffs))
    return [gm.point_state(model, j) for j in range(model.size) if j != index]


def _quantum_rejected(model, phi):
    completion = orthonormal_completion(gm.pure_ket(phi))
    return [gm.ket_state(model, row) for row in completion]
