"""Multivariate perturbation series of the ground state around the on-site
field term, with memoized coefficient recursion and dense-diagonalization
oracles.

The Hamiltonian is  H = -sum_n h_n Z_n + sum_b J_b V_b  with Hermitian Pauli
couplings V_b.  For positive fields the all-zeros basis state is the
unperturbed ground state, and the intermediate-normalized ground state
expands as  sum_k J^k  C~_k  V^{.k} |0>.  Coefficients are real throughout;
phases live entirely in the Pauli bookkeeping of ``pertvqe.pauli``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pauli import (
    MultiIndex,
    PauliString,
    format_bits,
    iter_orders,
    pauli_power,
    unperturbed_energy,
)

DENSE_QUBIT_CAP = 12
_DEGENERACY_TOL = 1e-12


class DegeneracyError(RuntimeError):
    """Raised when the recursion hits a state degenerate with the reference."""

    def __init__(self, bits: int, n_qubits: int):
        self.bits = bits
        self.n_qubits = n_qubits
        super().__init__(
            f"unperturbed state |{format_bits(bits, n_qubits)}> is degenerate "
            "with the reference state"
        )


@dataclass(frozen=True)
class Coupling:
    strength: float
    operator: PauliString


@dataclass(frozen=True)
class HamiltonianModel:
    """On-site fields plus a list of Pauli couplings."""

    fields: tuple[float, ...]
    couplings: tuple[Coupling, ...]

    def __post_init__(self):
        n = len(self.fields)
        for c in self.couplings:
            if c.operator.n_qubits != n:
                raise ValueError("coupling qubit count does not match fields")
            if not c.operator.is_basis_element:
                raise ValueError("couplings must be positive Hermitian strings")
            if c.operator.is_identity:
                raise ValueError("identity coupling is not allowed")

    @property
    def n_qubits(self) -> int:
        return len(self.fields)

    @property
    def n_couplings(self) -> int:
        return len(self.couplings)

    @property
    def operators(self) -> tuple[PauliString, ...]:
        return tuple(c.operator for c in self.couplings)

    @property
    def strengths(self) -> tuple[float, ...]:
        return tuple(c.strength for c in self.couplings)

    def rescaled(self, factor: float) -> "HamiltonianModel":
        return HamiltonianModel(
            self.fields,
            tuple(Coupling(factor * c.strength, c.operator) for c in self.couplings),
        )

    def coupling_monomial(self, k: Sequence[int]) -> float:
        """J^{.k} = prod_b J_b^{k_b}."""
        out = 1.0
        for strength, count in zip(self.strengths, k, strict=True):
            out *= strength**count
        return out


def tfim_chain(n_qubits: int, field: float = 1.0, coupling: float = 0.0) -> HamiltonianModel:
    """Open transverse-field chain: -h sum Z_n + J sum X_n X_(n+1)."""
    if n_qubits < 2:
        raise ValueError("chain needs at least two qubits")
    ops = tuple(
        Coupling(coupling, PauliString.from_ops(n_qubits, {i: "X", i + 1: "X"}))
        for i in range(n_qubits - 1)
    )
    return HamiltonianModel((float(field),) * n_qubits, ops)


class CoefficientTable:
    """Memoized ground-state expansion coefficients for one model.

    ``tilde(k)`` follows the recursion for the intermediate-normalized state
    (unit overlap with the reference); ``normalized(k)`` folds in the
    norm series of (1 + eps)^(-1/2).  Fill is single-writer; reads after
    construction are plain dict lookups.
    """

    def __init__(self, model: HamiltonianModel, max_order: int):
        self.model = model
        self.max_order = max_order
        self._ops = model.operators
        self._e0 = unperturbed_energy(0, model.fields)
        self._tilde: dict[MultiIndex, float] = {}
        self._z: dict[MultiIndex, float] = {}
        self._norm: dict[MultiIndex, float] = {}
        self._c: dict[MultiIndex, float] = {}
        self._power: dict[MultiIndex, PauliString] = {}

    # -- pauli bookkeeping, memoized ----------------------------------------
    def power(self, k: Sequence[int]) -> PauliString:
        k = MultiIndex(k)
        got = self._power.get(k)
        if got is None:
            got = pauli_power(k, self._ops)
            self._power[k] = got
        return got

    def state_phase(self, k: Sequence[int]) -> tuple[int, int]:
        return self.power(k).apply_to_basis(0)

    def relative_sign(self, k: Sequence[int], kp: Sequence[int]) -> int:
        left = self.power(k) * self.power(kp)
        merged = self.power(MultiIndex(k).add(kp))
        diff = (left.phase_exp - merged.phase_exp) % 4
        return 1 if diff == 0 else -1

    # -- intermediate-normalized coefficients --------------------------------
    def tilde(self, k: Sequence[int]) -> float:
        k = MultiIndex(k)
        got = self._tilde.get(k)
        if got is not None:
            return got
        if k.order == 0:
            value = 1.0
        else:
            state, _ = self.state_phase(k)
            if state == 0:
                value = 0.0
            else:
                value = self._tilde_recursion(k, state)
        self._tilde[k] = value
        return value

    def _tilde_recursion(self, k: MultiIndex, state: int) -> float:
        gap = self._e0 - unperturbed_energy(state, self.model.fields)
        if abs(gap) < _DEGENERACY_TOL:
            raise DegeneracyError(state, self.model.n_qubits)
        n_c = len(k)
        total = 0.0
        for beta in range(n_c):
            if k[beta] == 0:
                continue
            delta = MultiIndex.delta(n_c, beta)
            k_minus = k.sub(delta)
            total += self.tilde(k_minus) * self.relative_sign(delta, k_minus)
            for kp in k.sub_indices():
                if kp == k or kp[beta] == 0:
                    continue
                if self.state_phase(kp)[0] != 0:
                    continue
                total -= (
                    self.tilde(kp.sub(delta))
                    * self.tilde(k.sub(kp))
                    * self.relative_sign(delta, kp.sub(delta))
                    * self.relative_sign(k.sub(kp), kp)
                )
        return total / gap

    # -- normalization series -------------------------------------------------
    def vacuum_overlap(self, k: Sequence[int]) -> float:
        """Coefficient of J^k in <E~|E~>: pairs (k', k'') with k'+k'' = k and
        matching reached states; the i-phase difference reduces to 0 or +-1."""
        k = MultiIndex(k)
        got = self._z.get(k)
        if got is not None:
            return got
        total = 0.0
        for kp in k.sub_indices():
            kpp = k.sub(kp)
            s1, g1 = self.state_phase(kp)
            s2, g2 = self.state_phase(kpp)
            if s1 != s2:
                continue
            diff = (g1 - g2) % 4
            if diff == 0:
                total += self.tilde(kp) * self.tilde(kpp)
            elif diff == 2:
                total -= self.tilde(kp) * self.tilde(kpp)
            # odd differences cancel pairwise under kp <-> kpp
        self._z[k] = total
        return total

    def norm_coefficient(self, k: Sequence[int]) -> float:
        """Taylor coefficient of (1 + eps)^(-1/2) at J^k, from N^2 Z = 1."""
        k = MultiIndex(k)
        got = self._norm.get(k)
        if got is not None:
            return got
        if k.order == 0:
            self._norm[k] = 1.0
            return 1.0
        total = 0.0
        for a in k.sub_indices():
            if a == k:
                continue
            rem = k.sub(a)
            for b in rem.sub_indices():
                if b == k:
                    continue
                c = rem.sub(b)
                total += (
                    self.norm_coefficient(a)
                    * self.norm_coefficient(b)
                    * self.vacuum_overlap(c)
                )
        value = -0.5 * total
        self._norm[k] = value
        return value

    def normalized(self, k: Sequence[int]) -> float:
        """Coefficient C_k of the unit-norm ground state along V^{.k}|0>."""
        k = MultiIndex(k)
        got = self._c.get(k)
        if got is not None:
            return got
        _, g_k = self.state_phase(k)
        total = 0.0
        for kpp in k.sub_indices():
            norm = self.norm_coefficient(kpp)
            if norm == 0.0:
                continue
            kp = k.sub(kpp)
            ct = self.tilde(kp)
            if ct == 0.0:
                continue
            _, g_p = self.state_phase(kp)
            diff = (g_p - g_k) % 4
            if diff not in (0, 2):
                raise AssertionError("normalization mixed incompatible phases")
            total += (1.0 if diff == 0 else -1.0) * norm * ct
        self._c[k] = total
        return total

    # -- export ---------------------------------------------------------------
    def fill(self) -> None:
        for k in iter_orders(self.model.n_couplings, self.max_order):
            self.tilde(k)

    def known(self) -> dict[MultiIndex, float]:
        return dict(self._tilde)


def tilde_c(model: HamiltonianModel, k: Sequence[int]) -> float:
    return CoefficientTable(model, MultiIndex(k).order).tilde(k)


def normalized_c(model: HamiltonianModel, k: Sequence[int]) -> float:
    return CoefficientTable(model, MultiIndex(k).order).normalized(k)


def coefficients_to_json(table: CoefficientTable) -> dict:
    """Dump known tilde coefficients keyed by comma-separated multi-index."""
    return {
        "h": list(table.model.fields),
        "couplings": [
            {"j": c.strength, "pauli": c.operator.to_label()}
            for c in table.model.couplings
        ],
        "max_order": table.max_order,
        "tilde": {
            ",".join(str(c) for c in k): v for k, v in sorted(table.known().items())
        },
    }


# -- dense oracles -------------------------------------------------------------


def dense_hamiltonian(model: HamiltonianModel) -> np.ndarray:
    if model.n_qubits > DENSE_QUBIT_CAP:
        raise ValueError(f"dense construction capped at {DENSE_QUBIT_CAP} qubits")
    dim = 1 << model.n_qubits
    h = np.zeros((dim, dim), dtype=complex)
    diag = np.array([unperturbed_energy(s, model.fields) for s in range(dim)])
    h[np.arange(dim), np.arange(dim)] = diag
    for c in model.couplings:
        if c.strength != 0.0:
            h += c.strength * c.operator.to_matrix()
    return h


def exact_ground(model: HamiltonianModel) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of the dense Hamiltonian, phase-fixed so the
    largest-magnitude amplitude is real positive."""
    h = dense_hamiltonian(model)
    vals, vecs = np.linalg.eigh(h)
    vec = vecs[:, 0]
    pivot = int(np.argmax(np.abs(vec)))
    vec = vec * (abs(vec[pivot]) / vec[pivot])
    return float(vals[0]), vec


def perturbative_state(
    model: HamiltonianModel, k_max: int, scale: float = 1.0
) -> np.ndarray:
    """Normalized truncation of the coefficient series at total order k_max,
    with couplings rescaled by ``scale``."""
    table = CoefficientTable(model, k_max)
    dim = 1 << model.n_qubits
    psi = np.zeros(dim, dtype=complex)
    for k in iter_orders(model.n_couplings, k_max):
        coeff = table.tilde(k)
        if coeff == 0.0:
            continue
        state, phase = table.state_phase(k)
        mono = model.coupling_monomial(k) * scale**k.order
        psi[state] += (1j**phase) * coeff * mono
    norm = np.linalg.norm(psi)
    if norm == 0.0:
        raise ValueError("empty perturbative state")
    return psi / norm


def series_residual(model: HamiltonianModel, k_max: int, scale: float) -> float:
    """1 - |overlap| between the truncated series state and the exact ground
    state of the rescaled model.

    Computed through the excited-state overlaps, which stays accurate when
    the residual is far below machine epsilon relative to 1.
    """
    scaled = model.rescaled(scale)
    psi = perturbative_state(model, k_max, scale)
    h = dense_hamiltonian(scaled)
    vals, vecs = np.linalg.eigh(h)
    overlaps = vecs.conj().T @ psi
    ground = abs(overlaps[0])
    tail = float(np.sum(np.abs(overlaps[1:]) ** 2))
    return tail / (1.0 + ground)
