"""Rotation-angle estimation with back-action subtraction, generating and
matched ansatz checks, and priority-list construction.

Each connected leading diagram k ties a target basis state and a phase class
to one slot generator of a generating ansatz.  Processing diagrams in
ascending order fixes, per diagram,

    theta(k) = sign(k) * [ J^k * C~_k  -  sum_f Theta(f) * bracket(f) ]

where f runs over multisets of previously fixed diagrams whose multi-indices
sum to k, Theta(f) is the product of their angles divided by multiplicity
factorials, and bracket(f) in {-1, +1} is the vacuum amplitude of the
coupling power against the slot-generator product, evaluated by exact Pauli
products in parent-ansatz unit order (one factor of -i per unit absorbs the
rotation expansion so the bracket is real).

Sign convention: the reported angles match rotations exp(-i theta T); to
drive the exp(+i theta T) units of the simulator toward the perturbative
ground state, negate them.  The slot phase class is
a(k) = (red parity + 1) mod 2 because each rotation contributes one factor
of i on top of the generator-product phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ansatz import AnsatzUnit, ProductAnsatz
from .diagrams import enumerate_leading
from .pauli import MultiIndex, PauliString, format_bits
from .perturbation import CoefficientTable, HamiltonianModel


@dataclass(frozen=True)
class GeneratorSlot:
    """A generator T with T|0> = i^a |state>, at its parent-circuit position."""

    state: int
    a: int
    generator: PauliString
    parent_position: int


@dataclass(frozen=True)
class GeneratingReport:
    slots: dict
    missing: tuple[tuple[int, int], ...]

    @property
    def complete(self) -> bool:
        return not self.missing


@dataclass(frozen=True)
class ThetaEstimate:
    slot: GeneratorSlot
    leading_ks: tuple[MultiIndex, ...]
    theta_tilde: float
    j_weight: float


def check_generating(ansatz: ProductAnsatz) -> GeneratingReport:
    """Locate, for every basis state except the start, generators reaching it
    with phase classes 0 and 1.  Absences are reported, not raised."""
    if ansatz.start_state != 0:
        raise ValueError("generating check assumes the all-zeros start state")
    slots: dict[tuple[int, int], GeneratorSlot] = {}
    for pos, unit in enumerate(ansatz.units):
        if unit.scale != 1.0:
            continue
        state, phase = unit.generator.apply_to_basis(0)
        if phase in (0, 1) and (state, phase) not in slots:
            slots[(state, phase)] = GeneratorSlot(state, phase, unit.generator, pos)
    missing = []
    for state in range(1, 1 << ansatz.n_qubits):
        for a in (0, 1):
            if (state, a) not in slots:
                missing.append((state, a))
    return GeneratingReport(slots=slots, missing=tuple(missing))


def check_matched(ansatz: ProductAnsatz) -> bool:
    """Sufficient compactness condition: every generator acts non-trivially
    only on qubits it flips (no Z factor outside the X support)."""
    return all(
        (u.generator.z_mask & ~u.generator.x_mask) == 0 for u in ansatz.units
    )


class ThetaEstimator:
    """Fixes per-diagram angles for a generating, matched ansatz and exposes
    the contribution formula for arbitrary multi-indices."""

    def __init__(self, model: HamiltonianModel, ansatz: ProductAnsatz, k_max: int):
        if ansatz.n_qubits != model.n_qubits:
            raise ValueError("ansatz and model qubit counts differ")
        report = check_generating(ansatz)
        if not report.complete:
            raise ValueError(
                f"ansatz is not generating ({len(report.missing)} slots missing)"
            )
        if not check_matched(ansatz):
            raise ValueError(
                "ansatz is not matched; estimates would need disconnected "
                "bookkeeping this construction avoids"
            )
        self.model = model
        self.ansatz = ansatz
        self.k_max = k_max
        self.slots = report.slots
        self.table = CoefficientTable(model, k_max)
        self.leading = enumerate_leading(model, k_max)
        self._fixed: list[tuple[MultiIndex, float, GeneratorSlot]] = []
        self._run()

    # -- slot helpers --------------------------------------------------------
    def slot_for(self, k: Sequence[int]) -> GeneratorSlot:
        state, gamma = self.table.state_phase(k)
        a = (gamma + 1) % 2
        return self.slots[(state, a)]

    @staticmethod
    def _sign(gamma: int) -> float:
        # i^(Gp - a) with Gp = gamma + 1 and a = Gp mod 2 collapses to +-1.
        return 1.0 if (gamma + 1) % 4 in (0, 1) else -1.0

    # -- core ------------------------------------------------------------------
    def _run(self) -> None:
        ks = sorted(
            (k for group in self.leading.values() for k in group),
            key=lambda k: (k.order, tuple(k)),
        )
        for k in ks:
            theta = self._theta_for(k)
            self._fixed.append((k, theta, self.slot_for(k)))

    def _theta_for(self, k: MultiIndex) -> float:
        state, gamma = self.table.state_phase(k)
        if state == 0:
            raise ValueError("no generator target: coupling power is diagonal")
        lead = self.model.coupling_monomial(k) * self.table.tilde(k)
        back = self._back_action(k)
        return self._sign(gamma) * (lead - back)

    def contribution(self, k: Sequence[int]) -> float:
        """The would-be angle for an arbitrary multi-index given the current
        fixed set; vanishes for support-disconnected indices whose parts are
        themselves fixed diagrams."""
        return self._theta_for(MultiIndex(k))

    def _back_action(self, k: MultiIndex) -> float:
        items = [
            (fk, theta, slot)
            for fk, theta, slot in self._fixed
            if theta != 0.0 and k.dominates(fk) and fk != k
        ]
        total = 0.0

        def descend(i: int, remaining: MultiIndex, coeff: float,
                    factors: list, count: int) -> None:
            nonlocal total
            if remaining.order == 0:
                if count >= 2:
                    total += coeff * self._bracket(k, factors, count)
                return
            if i >= len(items):
                return
            fk, theta, slot = items[i]
            descend(i + 1, remaining, coeff, factors, count)
            mult = 0
            factorial = 1.0
            power = 1.0
            rem = remaining
            new_factors = list(factors)
            while rem.dominates(fk):
                rem = rem.sub(fk)
                mult += 1
                factorial *= mult
                power *= theta
                if mult % 2:
                    new_factors = factors + [(slot.parent_position, slot.generator)]
                else:
                    new_factors = list(factors)
                descend(i + 1, rem, coeff * power / factorial,
                        new_factors, count + mult)
        descend(0, k, 1.0, [], 0)
        return total

    def _bracket(self, k: MultiIndex, factors: list, count: int) -> float:
        """(-i)^count * <0| (V^{.k})^dagger T-product |0>, with the generator
        product taken in parent-ansatz unit order (earliest applied first).
        Squared generators drop out, so only odd multiplicities appear in
        ``factors``."""
        acc = PauliString.identity(self.model.n_qubits)
        for _, gen in sorted(factors, key=lambda t: t[0]):
            acc = gen * acc
        full = self.table.power(k).dagger() * acc
        state, phase = full.apply_to_basis(0)
        if state != 0:
            return 0.0
        rel = (phase - count) % 4
        if rel not in (0, 2):
            raise AssertionError("back-action bracket is not real")
        return 1.0 if rel == 0 else -1.0

    # -- results -----------------------------------------------------------------
    def estimates(self) -> list[ThetaEstimate]:
        by_slot: dict[tuple[int, int], list[tuple[MultiIndex, float]]] = {}
        for k, theta, slot in self._fixed:
            by_slot.setdefault((slot.state, slot.a), []).append((k, theta))
        out = []
        for (state, a), entries in by_slot.items():
            slot = self.slots[(state, a)]
            ks = tuple(sorted(k for k, _ in entries))
            theta = sum(theta for _, theta in entries)
            weight = sum(self.model.coupling_monomial(k) for k in ks)
            out.append(ThetaEstimate(slot, ks, theta, weight))
        out.sort(key=lambda e: (e.leading_ks[0].order, e.slot.state, e.slot.a))
        return out


def estimate_thetas(
    model: HamiltonianModel, ansatz: ProductAnsatz, k_max: int
) -> list[ThetaEstimate]:
    return ThetaEstimator(model, ansatz, k_max).estimates()


def j_shortcut_weights(
    model: HamiltonianModel,
    leading: dict[tuple[int, int], list[MultiIndex]],
) -> dict[tuple[int, int], float]:
    """Cheap ordering key: summed coupling monomials of each group's leading
    indices, keyed by (state, slot phase class)."""
    out = {}
    for (state, parity), ks in leading.items():
        out[(state, (parity + 1) % 2)] = sum(model.coupling_monomial(k) for k in ks)
    return out


MODES = ("pert", "rev", "2loc", "loc")
ORDERINGS = ("hierarchy", "parent")


@dataclass(frozen=True)
class PriorityList:
    """Ranked generator list; looping modes recycle their base list with
    fresh parameters on every pass."""

    mode: str
    ordering: str
    n_qubits: int
    entries: tuple[ThetaEstimate, ...]

    @property
    def loops(self) -> bool:
        return self.mode in ("2loc", "loc")

    def selection(self, m: int) -> list[tuple[ThetaEstimate, int]]:
        """First m (estimate, pass index) picks."""
        if not self.entries:
            raise ValueError(f"{self.mode} priority list is empty")
        if m > len(self.entries) and not self.loops:
            raise ValueError(
                f"{self.mode} list holds {len(self.entries)} units, {m} requested"
            )
        return [
            (self.entries[i % len(self.entries)], i // len(self.entries))
            for i in range(m)
        ]

    def build_ansatz(self, m: int) -> ProductAnsatz:
        picks = self.selection(m)
        order = range(len(picks))
        if self.ordering == "parent":
            order = sorted(
                order,
                key=lambda i: (picks[i][0].slot.parent_position, picks[i][1]),
            )
        units = tuple(
            AnsatzUnit(picks[i][0].slot.generator, i) for i in order
        )
        return ProductAnsatz(self.n_qubits, units, 0, m)


def _is_nearest_neighbour_pair(generator: PauliString) -> bool:
    sup = sorted(generator.support())
    return len(sup) == 2 and sup[1] - sup[0] == 1


def build_priority_list(
    model: HamiltonianModel,
    ansatz: ProductAnsatz,
    k_max: int,
    mode: str = "pert",
    ordering: str = "hierarchy",
    tie_seed: int | None = None,
) -> PriorityList:
    """Rank estimated generators by descending angle magnitude.

    pert takes the full ranking (which reproduces ascending diagram order
    whenever couplings are small against the fields); rev reverses it; 2loc
    keeps generators of weight <= 2 and loc keeps nearest-neighbour pairs,
    both looping when more units are requested than survive the filter.
    Exact magnitude ties are broken by (leading order, generator label), or
    shuffled reproducibly when a tie seed is given.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if ordering not in ORDERINGS:
        raise ValueError(f"unknown ordering {ordering!r}")
    estimates = estimate_thetas(model, ansatz, k_max)
    # Ties (symmetry-equivalent generators) fall back to parent-circuit
    # position, which runs up the chain; label order is the last resort.
    ranked = sorted(
        estimates,
        key=lambda e: (
            -abs(e.theta_tilde),
            e.leading_ks[0].order,
            e.slot.parent_position,
            e.slot.generator.to_label(),
        ),
    )
    if tie_seed is not None:
        rng = np.random.default_rng(tie_seed)
        ranked = _shuffle_ties(ranked, rng)
    if mode == "rev":
        ranked = list(reversed(ranked))
    elif mode == "2loc":
        ranked = [e for e in ranked if e.slot.generator.weight <= 2]
    elif mode == "loc":
        ranked = [e for e in ranked if _is_nearest_neighbour_pair(e.slot.generator)]
    if not ranked:
        raise ValueError(f"no generators survive the {mode} filter")
    return PriorityList(mode, ordering, model.n_qubits, tuple(ranked))


def _shuffle_ties(ranked: list[ThetaEstimate], rng) -> list[ThetaEstimate]:
    out: list[ThetaEstimate] = []
    block: list[ThetaEstimate] = []

    def flush():
        out.extend(block[i] for i in rng.permutation(len(block)))
        block.clear()

    for e in ranked:
        if block and not math.isclose(
            abs(block[0].theta_tilde), abs(e.theta_tilde), rel_tol=1e-9, abs_tol=1e-15
        ):
            flush()
        block.append(e)
    flush()
    return out


def hierarchy_to_json(plist: PriorityList, model: HamiltonianModel) -> list[dict]:
    rows = []
    for rank, e in enumerate(plist.entries):
        rows.append(
            {
                "rank": rank,
                "pauli": e.slot.generator.to_label(),
                "s": format_bits(e.slot.state, model.n_qubits),
                "a": e.slot.a,
                "theta_tilde": e.theta_tilde,
                "j_weight": e.j_weight,
                "leading_ks": [list(k) for k in e.leading_ks],
            }
        )
    return rows
