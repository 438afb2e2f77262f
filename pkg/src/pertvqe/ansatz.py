"""Product-ansatz data model, the layered stabilizer-group constructor,
symmetry compression, and variational-manifold geometry helpers.

An ansatz is an ordered list of rotation units exp(i * scale * theta * T)
with Hermitian Pauli generators T, applied to a computational basis start
state (unit 0 acts first).  Several units may share one parameter index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .pauli import PauliString, format_bits, parse_bits


@dataclass(frozen=True)
class AnsatzUnit:
    generator: PauliString
    param_index: int
    scale: float = 1.0

    def __post_init__(self):
        if self.param_index < 0:
            raise ValueError("parameter index must be non-negative")
        if not self.generator.is_basis_element:
            raise ValueError("generator must be a positive Hermitian string")


@dataclass(frozen=True)
class ProductAnsatz:
    n_qubits: int
    units: tuple[AnsatzUnit, ...]
    start_state: int = 0
    num_params: int = 0

    def __post_init__(self):
        for u in self.units:
            if u.generator.n_qubits != self.n_qubits:
                raise ValueError("unit qubit count mismatch")
            if u.param_index >= self.num_params:
                raise ValueError("parameter index out of range")
        if self.start_state >> self.n_qubits:
            raise ValueError("start state outside register")

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def is_ordered(self) -> bool:
        indices = [u.param_index for u in self.units]
        return all(a <= b for a, b in zip(indices, indices[1:]))

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "start_state": format_bits(self.start_state, self.n_qubits),
            "units": [
                {"pauli": u.generator.to_label(), "scale": u.scale, "param": u.param_index}
                for u in self.units
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ProductAnsatz":
        units = tuple(
            AnsatzUnit(PauliString.from_label(u["pauli"]), u["param"], u.get("scale", 1.0))
            for u in data["units"]
        )
        n_params = 1 + max((u.param_index for u in units), default=-1)
        return cls(
            n_qubits=data["n_qubits"],
            units=units,
            start_state=parse_bits(data["start_state"]),
            num_params=n_params,
        )


@dataclass(frozen=True)
class LevelSpec:
    """One layer of a stabilizer ansatz: a commuting independent generator
    set on the earlier qubits, a starting bit for this level's qubit, and an
    orthogonal pair of single-qubit rotation axes that move that start."""

    stabilizers: tuple[PauliString, ...]
    start_bit: int = 0
    rotations: tuple[str, str] = ("X", "Y")


@dataclass(frozen=True)
class StabilizerAnsatzSpec:
    levels: tuple[LevelSpec, ...]

    def __post_init__(self):
        n = len(self.levels)
        for level, spec in enumerate(self.levels):
            if spec.start_bit not in (0, 1):
                raise ValueError("start bit must be 0 or 1")
            r0, r1 = spec.rotations
            # computational starts demand off-diagonal, mutually orthogonal axes
            if r0 not in ("X", "Y") or r1 not in ("X", "Y") or r0 == r1:
                raise ValueError("rotation pair must be two distinct axes in {X, Y}")
            if len(spec.stabilizers) != level:
                raise ValueError(
                    f"level {level} needs {level} stabilizer generators"
                )
            earlier = (1 << level) - 1
            for s in spec.stabilizers:
                if s.n_qubits != n:
                    raise ValueError("stabilizer qubit count mismatch")
                if not s.is_basis_element or s.is_identity:
                    raise ValueError("stabilizers must be nontrivial Hermitian strings")
                if (s.x_mask | s.z_mask) & ~earlier:
                    raise ValueError("stabilizers may only touch earlier qubits")
            for a, b in itertools.combinations(spec.stabilizers, 2):
                if not a.commutes_with(b):
                    raise ValueError("stabilizer generators must commute")
            if not _independent(spec.stabilizers, n):
                raise ValueError("stabilizer generators must be independent")

    @property
    def n_qubits(self) -> int:
        return len(self.levels)

    def build(self) -> ProductAnsatz:
        """Expand level by level: for every element of the stabilizer group
        (generator subsets in binary counting order) emit the two rotations
        R0*S then R1*S on this level's qubit, one fresh parameter each."""
        n = self.n_qubits
        start = 0
        for level, spec in enumerate(self.levels):
            start |= spec.start_bit << level
        units = []
        for level, spec in enumerate(self.levels):
            for subset in range(1 << level):
                element = PauliString.identity(n)
                for i in range(level):
                    if (subset >> i) & 1:
                        element = element * spec.stabilizers[i]
                # group elements are defined up to sign; fold a -1 into the angle
                element = PauliString(
                    n, element.x_mask, element.z_mask,
                    (element.x_mask & element.z_mask).bit_count() % 4,
                )
                for axis in spec.rotations:
                    gen = element * PauliString.from_ops(n, {level: axis})
                    units.append(AnsatzUnit(gen, len(units)))
        return ProductAnsatz(n, tuple(units), start, len(units))


def _independent(stabilizers, n_qubits) -> bool:
    """GF(2) rank check on the symplectic rows: no generator subset may
    multiply to the identity."""
    rows = [s.x_mask | (s.z_mask << n_qubits) for s in stabilizers]
    basis = []
    for row in rows:
        for b in basis:
            row = min(row, row ^ b)
        if row == 0:
            return False
        basis.append(row)
    return True


def build_qca(n_qubits: int) -> ProductAnsatz:
    """Layered ansatz over X-generated stabilizer groups.

    Level n (qubit n) contributes, for every subset S of X operators on the
    earlier qubits, the two units X_n*S and Y_n*S, giving 2^n units per
    level and 2*(2^N - 1) parameters in total.  Subsets are enumerated in
    binary counting order and the X unit precedes the Y unit.
    """
    if n_qubits < 1:
        raise ValueError("register must hold at least one qubit")
    spec = StabilizerAnsatzSpec(
        tuple(
            LevelSpec(
                stabilizers=tuple(
                    PauliString.from_ops(n_qubits, {i: "X"}) for i in range(level)
                ),
            )
            for level in range(n_qubits)
        )
    )
    return spec.build()


def remove_parameter(ansatz: ProductAnsatz, index: int) -> ProductAnsatz:
    """Delete every unit carrying the parameter and compact the indices."""
    if not 0 <= index < ansatz.num_params:
        raise ValueError(f"parameter {index} out of range")
    units = []
    for u in ansatz.units:
        if u.param_index == index:
            continue
        shift = 1 if u.param_index > index else 0
        units.append(replace(u, param_index=u.param_index - shift))
    return ProductAnsatz(ansatz.n_qubits, tuple(units), ansatz.start_state,
                         ansatz.num_params - 1)


def fix_parameter(ansatz: ProductAnsatz, i: int, j: int, c: float) -> ProductAnsatz:
    """Tie parameter i to c * parameter j by rescaling the affected
    generators; the unit count is unchanged and one parameter disappears."""
    if i == j:
        raise ValueError("cannot fix a parameter to itself")
    for idx in (i, j):
        if not 0 <= idx < ansatz.num_params:
            raise ValueError(f"parameter {idx} out of range")
    units = []
    for u in ansatz.units:
        if u.param_index == i:
            target = j if j < i else j - 1
            units.append(replace(u, param_index=target, scale=u.scale * c))
        else:
            shift = 1 if u.param_index > i else 0
            units.append(replace(u, param_index=u.param_index - shift))
    return ProductAnsatz(ansatz.n_qubits, tuple(units), ansatz.start_state,
                         ansatz.num_params - 1)


def respects_conjugation(generator: PauliString) -> bool:
    """Whether exp(i theta T) commutes with complex conjugation for every
    angle, i.e. whether i*T is a real matrix (odd number of Y factors)."""
    return generator.y_count % 2 == 1


def enforce_conjugation(ansatz: ProductAnsatz) -> ProductAnsatz:
    """Remove every parameter whose units break conjugation symmetry."""
    bad = sorted(
        {u.param_index for u in ansatz.units if not respects_conjugation(u.generator)},
        reverse=True,
    )
    for index in bad:
        ansatz = remove_parameter(ansatz, index)
    return ansatz


class SymmetryFixError(ValueError):
    """Fix-mode symmetry enforcement has no usable null vector."""


def enforce_symmetry(
    ansatz: ProductAnsatz, symmetry: PauliString, mode: str = "remove"
) -> ProductAnsatz:
    """Constrain the ansatz to commute with a Pauli symmetry.

    remove-mode deletes every parameter owning a generator that anticommutes
    with the symmetry.  fix-mode instead ties the offending parameters
    together with scale coefficients solving
    sum_m c_m [S, T_m] = 0, moving the tied units adjacent to the first
    offender; the offending generators must commute pairwise.
    """
    if symmetry.n_qubits != ansatz.n_qubits:
        raise ValueError("symmetry qubit count mismatch")
    offending = sorted(
        {
            u.param_index
            for u in ansatz.units
            if not u.generator.commutes_with(symmetry)
        }
    )
    if not offending:
        return ansatz
    if mode == "remove":
        for index in reversed(offending):
            ansatz = remove_parameter(ansatz, index)
        return ansatz
    if mode != "fix":
        raise ValueError(f"unknown mode {mode!r}")

    bad_units = [u for u in ansatz.units if u.param_index in offending]
    for a, b in itertools.combinations(bad_units, 2):
        if not a.generator.commutes_with(b.generator):
            raise SymmetryFixError(
                "offending generators do not commute; cannot fix"
            )
    # Null vector of sum_m c_m (S T_m): columns are parameters, rows index
    # the distinct product strings (complex coefficients split re/im).
    strings: dict[tuple[int, int], int] = {}
    for u in bad_units:
        key = ((symmetry * u.generator).x_mask, (symmetry * u.generator).z_mask)
        strings.setdefault(key, len(strings))
    mat = np.zeros((2 * len(strings), len(offending)), dtype=float)
    col = {p: c for c, p in enumerate(offending)}
    for u in bad_units:
        prod = symmetry * u.generator
        row = strings[(prod.x_mask, prod.z_mask)]
        val = (1j ** prod.phase_exp) * u.scale
        mat[2 * row, col[u.param_index]] += val.real
        mat[2 * row + 1, col[u.param_index]] += val.imag
    _, sing, vt = np.linalg.svd(mat)
    if len(offending) == 1 or (len(sing) >= len(offending) and sing[-1] > 1e-10):
        raise SymmetryFixError("no nontrivial null vector; symmetry cannot be fixed")
    null = vt[-1]
    pivot = next(i for i, v in enumerate(null) if abs(v) > 1e-12)
    coeffs = null / null[pivot]
    base = offending[pivot]
    # Rescale and retie; then regroup tied units next to the first offender.
    scaled = []
    for u in ansatz.units:
        if u.param_index in col and u.param_index != base:
            u = replace(u, scale=u.scale * float(coeffs[col[u.param_index]]),
                        param_index=base)
        scaled.append(u)
    tied = [u for u in scaled if u.param_index == base]
    first = next(i for i, u in enumerate(scaled) if u.param_index == base)
    insert_at = sum(1 for u in scaled[:first] if u.param_index != base)
    rest = [u for u in scaled if u.param_index != base]
    reordered = rest[:insert_at] + tied + rest[insert_at:]
    remap = {}
    for u in reordered:
        remap.setdefault(u.param_index, len(remap))
    units = tuple(replace(u, param_index=remap[u.param_index]) for u in reordered)
    return ProductAnsatz(ansatz.n_qubits, units, ansatz.start_state, len(remap))


# -- manifold geometry ----------------------------------------------------------


def _tangents(ansatz: ProductAnsatz, theta: np.ndarray, step: float) -> np.ndarray:
    from .simulator import prepare

    psi = prepare(ansatz, theta)
    tangents = np.empty((ansatz.num_params, psi.size), dtype=complex)
    for n in range(ansatz.num_params):
        up = theta.copy()
        dn = theta.copy()
        up[n] += step
        dn[n] -= step
        tangents[n] = (prepare(ansatz, up) - prepare(ansatz, dn)) / (2 * step)
    # Project out the global-phase direction i|psi> so the metric lives on rays.
    phase_dir = 1j * psi
    for n in range(ansatz.num_params):
        tangents[n] -= phase_dir * np.real(np.vdot(phase_dir, tangents[n]))
    return tangents


def gram_matrix(
    ansatz: ProductAnsatz, theta: Sequence[float], step: float = 1e-6
) -> np.ndarray:
    """Finite-difference metric J^dag J of the variational map at theta,
    projected orthogonal to the state's phase direction."""
    theta = np.asarray(theta, dtype=float)
    if theta.size != ansatz.num_params:
        raise ValueError("parameter vector length mismatch")
    t = _tangents(ansatz, theta, step)
    gram = np.real(t.conj() @ t.T)
    return 0.5 * (gram + gram.T)


def manifold_area(
    ansatz: ProductAnsatz,
    domain: Sequence[tuple[float, float]],
    cover_multiplicity: int = 1,
    points_per_axis: int | Sequence[int] = 32,
    step: float = 1e-6,
) -> float:
    """Gauss-Legendre estimate of integral sqrt(det J^dag J) over the domain,
    divided by the covering multiplicity supplied by the caller.

    Rank-deficient points contribute zero area (det clipped at 0).
    """
    if len(domain) != ansatz.num_params:
        raise ValueError("domain must give one interval per parameter")
    if isinstance(points_per_axis, int):
        points_per_axis = [points_per_axis] * len(domain)
    axes = []
    for (lo, hi), n_pts in zip(domain, points_per_axis, strict=True):
        nodes, weights = np.polynomial.legendre.leggauss(n_pts)
        axes.append((0.5 * (hi - lo) * nodes + 0.5 * (hi + lo), 0.5 * (hi - lo) * weights))
    total = 0.0
    for combo in itertools.product(*(range(len(a[0])) for a in axes)):
        theta = np.array([axes[d][0][i] for d, i in enumerate(combo)])
        weight = 1.0
        for d, i in enumerate(combo):
            weight *= axes[d][1][i]
        det = float(np.linalg.det(gram_matrix(ansatz, theta, step)))
        total += weight * np.sqrt(max(det, 0.0))
    return total / cover_multiplicity


def manifold_metrics(
    ansatz: ProductAnsatz,
    theta: Sequence[float],
    domain: Sequence[tuple[float, float]] | None = None,
    cover_multiplicity: int = 1,
    points_per_axis: int | Sequence[int] = 32,
) -> tuple[np.ndarray, float | None]:
    """Gram matrix at theta, plus the manifold area when a domain is given."""
    gram = gram_matrix(ansatz, theta)
    area = None
    if domain is not None:
        area = manifold_area(ansatz, domain, cover_multiplicity, points_per_axis)
    return gram, area
