"""Truncated multimode Fock space and linear-optics operators.

Basis states are occupation tuples (n_1, ..., n_M) with a shared cap on the
total photon number, ordered lexicographically.  Mode transforms (M x M
matrices acting on creation operators) are lifted to Fock-space operators
through matrix permanents; the lift preserves total photon number, so loss
shows up as lost norm, never as silently moved population.

All containers are immutable after construction; every operation returns new
objects, so states and operators can be shared freely across threads.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Iterable, Union

import numpy as np

DEFAULT_BASIS_LIMIT = 200_000
BASIS_LIMIT_ENV = "NLA_WEAKSIM_MAX_BASIS"

# probabilities below this are treated as an impossible outcome
ZERO_PROBABILITY = 1e-30

_UNITARY_ATOL = 1e-10


class BasisSizeError(RuntimeError):
    """Requested basis would exceed the configured safety limit."""


class ModeOverlapError(ValueError):
    """Tensor factors share one or more modes."""


class TruncationError(ValueError):
    """State preparation would discard more weight than the allowed bound."""


def basis_size(num_modes: int, photon_cap: int) -> int:
    """Number of occupation vectors with total <= photon_cap."""
    return math.comb(num_modes + photon_cap, photon_cap)


@lru_cache(maxsize=None)
def _basis_table(num_modes: int, photon_cap: int):
    occs = tuple(
        occ
        for occ in product(range(photon_cap + 1), repeat=num_modes)
        if sum(occ) <= photon_cap
    )
    index = {occ: i for i, occ in enumerate(occs)}
    totals = tuple(sum(occ) for occ in occs)
    return occs, index, totals


@dataclass(frozen=True)
class FockBasis:
    """Occupation basis over a fixed set of global mode indices.

    ``modes`` names the global modes covered by this basis (kept sorted);
    occupation tuples align with that order.
    """

    modes: tuple[int, ...]
    photon_cap: int

    def __post_init__(self):
        modes = tuple(self.modes)
        if len(set(modes)) != len(modes):
            raise ValueError(f"duplicate modes in {modes}")
        if tuple(sorted(modes)) != modes:
            raise ValueError(f"basis modes must be sorted: {modes}")
        if self.photon_cap < 0:
            raise ValueError("photon_cap must be >= 0")
        object.__setattr__(self, "modes", modes)

    @property
    def num_modes(self) -> int:
        return len(self.modes)

    @property
    def occupations(self) -> tuple[tuple[int, ...], ...]:
        return _basis_table(self.num_modes, self.photon_cap)[0]

    @property
    def size(self) -> int:
        return len(self.occupations)

    def index_of(self, occ: Iterable[int]) -> int:
        return _basis_table(self.num_modes, self.photon_cap)[1][tuple(occ)]

    def totals(self) -> tuple[int, ...]:
        """Total photon number of each basis state, in basis order."""
        return _basis_table(self.num_modes, self.photon_cap)[2]

    def position(self, mode: int) -> int:
        """Position of a global mode index inside occupation tuples."""
        try:
            return self.modes.index(mode)
        except ValueError:
            raise ValueError(f"mode {mode} not in basis modes {self.modes}") from None


def build_basis(
    num_modes: int,
    photon_cap: int,
    *,
    modes: tuple[int, ...] | None = None,
    limit: int | None = None,
) -> FockBasis:
    """Construct a basis, guarding against accidentally huge spaces.

    The guard can be overridden per call or via the environment variable
    NLA_WEAKSIM_MAX_BASIS.
    """
    if modes is None:
        modes = tuple(range(num_modes))
    else:
        modes = tuple(sorted(modes))
    if len(modes) != num_modes:
        raise ValueError("modes length must equal num_modes")
    if limit is None:
        limit = int(os.environ.get(BASIS_LIMIT_ENV, DEFAULT_BASIS_LIMIT))
    n = basis_size(num_modes, photon_cap)
    if n > limit:
        raise BasisSizeError(
            f"basis with {num_modes} modes, cap {photon_cap} has {n} states "
            f"(limit {limit})"
        )
    return FockBasis(modes, photon_cap)


@dataclass(frozen=True)
class StateVector:
    """Pure state: complex amplitudes over a FockBasis."""

    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.size,):
            raise ValueError(
                f"expected {self.basis.size} amplitudes, got {amps.shape}"
            )
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n <= 0:
            raise ValueError("cannot normalize a zero state")
        return StateVector(self.basis, self.amplitudes / n)

    def amplitude(self, occ: Iterable[int]) -> complex:
        return complex(self.amplitudes[self.basis.index_of(occ)])

    def overlap(self, other: "StateVector") -> complex:
        if other.basis != self.basis:
            raise ValueError("overlap requires a common basis")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> "DensityOperator":
        return DensityOperator(self.basis, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityOperator:
    """Mixed state: Hermitian matrix over a FockBasis."""

    basis: FockBasis
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.basis.size, self.basis.size):
            raise ValueError(f"expected {self.basis.size}^2 matrix, got {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "DensityOperator":
        t = self.trace()
        if t <= 0:
            raise ValueError("cannot normalize a trace-zero operator")
        return DensityOperator(self.basis, self.matrix / t)

    def validate(self, atol: float = 1e-10) -> None:
        """Raise unless Hermitian and positive within atol."""
        if not np.allclose(self.matrix, self.matrix.conj().T, atol=atol):
            raise ValueError("density matrix is not Hermitian")
        eigs = np.linalg.eigvalsh(self.matrix)
        if eigs.min() < -atol:
            raise ValueError(f"density matrix has negative eigenvalue {eigs.min()}")


State = Union[StateVector, DensityOperator]


@dataclass(frozen=True)
class ModeTransform:
    """Linear map on creation operators: a_j^dag -> sum_i matrix[i, j] a_i^dag.

    ``modes`` lists the global modes the rows/columns refer to; all other
    modes are untouched.  kind='unitary' demands matrix unitarity; 'subunitary'
    allows singular values <= 1 and models postselected (lossy) elements.
    """

    matrix: np.ndarray
    modes: tuple[int, ...]
    kind: str = "unitary"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        k = len(self.modes)
        if m.shape != (k, k):
            raise ValueError(f"matrix shape {m.shape} does not match {k} modes")
        if len(set(self.modes)) != k:
            raise ValueError("transform modes must be distinct")
        if self.kind == "unitary":
            if not np.allclose(m.conj().T @ m, np.eye(k), atol=_UNITARY_ATOL):
                raise ValueError("matrix is not unitary")
        elif self.kind == "subunitary":
            smax = np.linalg.svd(m, compute_uv=False).max() if k else 0.0
            if smax > 1.0 + _UNITARY_ATOL:
                raise ValueError(f"subunitary matrix has singular value {smax} > 1")
        else:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "modes", tuple(self.modes))

    def embed(self, target_modes: tuple[int, ...]) -> np.ndarray:
        """Full matrix over target_modes, identity on modes not touched."""
        if not set(self.modes) <= set(target_modes):
            raise ValueError(f"transform modes {self.modes} not within {target_modes}")
        full = np.eye(len(target_modes), dtype=complex)
        pos = [target_modes.index(m) for m in self.modes]
        for a, ga in enumerate(pos):
            for b, gb in enumerate(pos):
                full[ga, gb] = self.matrix[a, b]
        return full


def compose_transforms(transforms: Iterable[ModeTransform]) -> ModeTransform:
    """Single transform equivalent to applying the list in order.

    The lift is a homomorphism, so composing matrices first and lifting once
    equals lifting each element and multiplying the Fock operators.
    """
    transforms = list(transforms)
    if not transforms:
        raise ValueError("nothing to compose")
    modes = tuple(sorted(set().union(*(t.modes for t in transforms))))
    full = np.eye(len(modes), dtype=complex)
    for t in transforms:
        full = t.embed(modes) @ full
    kind = "unitary" if all(t.kind == "unitary" for t in transforms) else "subunitary"
    return ModeTransform(full, modes, kind)


def permanent(a: np.ndarray) -> complex:
    """Permanent by Ryser's inclusion-exclusion formula."""
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n == 1:
        return complex(a[0, 0])
    if n == 2:
        return complex(a[0, 0] * a[1, 1] + a[0, 1] * a[1, 0])
    total = 0.0 + 0.0j
    for s in range(1, 1 << n):
        cols = [j for j in range(n) if (s >> j) & 1]
        total += (-1) ** len(cols) * np.prod(np.sum(a[:, cols], axis=1))
    return complex(total * (-1) ** n)


def _repeat_indices(occ: tuple[int, ...]) -> list[int]:
    out: list[int] = []
    for i, n in enumerate(occ):
        out.extend([i] * n)
    return out


def lift_mode_transform(transform: ModeTransform, basis: FockBasis) -> np.ndarray:
    """Fock-space matrix of a mode transform on the given basis.

    <m|U|n> = per(U[rows(m), cols(n)]) / sqrt(prod m_i! prod n_j!), where rows
    and columns are repeated according to the occupations.  Only same-total
    blocks are filled; photon number is conserved even for subunitary maps.
    """
    u = transform.embed(basis.modes)
    occs = basis.occupations
    totals = basis.totals()
    op = np.zeros((basis.size, basis.size), dtype=complex)
    sectors: dict[int, list[int]] = {}
    for i, t in enumerate(totals):
        sectors.setdefault(t, []).append(i)
    reps = [_repeat_indices(occ) for occ in occs]
    norms = [math.sqrt(math.prod(math.factorial(n) for n in occ)) for occ in occs]
    for idxs in sectors.values():
        for i_out in idxs:
            rows = reps[i_out]
            for i_in in idxs:
                sub = u[np.ix_(rows, reps[i_in])]
                op[i_out, i_in] = permanent(sub) / (norms[i_out] * norms[i_in])
    op.flags.writeable = False
    return op


def apply(op: np.ndarray, state: State) -> State:
    """Evolve a pure state as op|psi> or a mixed state as op rho op^dag."""
    if op.shape != (state.basis.size, state.basis.size):
        raise ValueError(
            f"operator shape {op.shape} does not match basis size {state.basis.size}"
        )
    if isinstance(state, StateVector):
        return StateVector(state.basis, op @ state.amplitudes)
    return DensityOperator(state.basis, op @ state.matrix @ op.conj().T)


def tensor(
    a: State,
    b: State,
    photon_cap: int | None = None,
) -> tuple[State, float]:
    """Join states on disjoint mode sets; returns (state, discarded weight).

    With the default cap (sum of the factor caps) nothing is discarded; a
    tighter cap drops the over-cap components and reports their probability
    weight instead of failing silently.
    """
    ba, bb = a.basis, b.basis
    if set(ba.modes) & set(bb.modes):
        raise ModeOverlapError(f"modes overlap: {ba.modes} vs {bb.modes}")
    cap = ba.photon_cap + bb.photon_cap if photon_cap is None else photon_cap
    modes = tuple(sorted(ba.modes + bb.modes))
    basis = build_basis(len(modes), cap, modes=modes)
    pos_a = [modes.index(m) for m in ba.modes]
    pos_b = [modes.index(m) for m in bb.modes]

    def joined(occ_a, occ_b):
        occ = [0] * len(modes)
        for p, n in zip(pos_a, occ_a):
            occ[p] = n
        for p, n in zip(pos_b, occ_b):
            occ[p] = n
        return tuple(occ)

    if isinstance(a, StateVector) and isinstance(b, StateVector):
        amps = np.zeros(basis.size, dtype=complex)
        discarded = 0.0
        for i, occ_a in enumerate(ba.occupations):
            va = a.amplitudes[i]
            if va == 0:
                continue
            for j, occ_b in enumerate(bb.occupations):
                vb = b.amplitudes[j]
                if vb == 0:
                    continue
                if sum(occ_a) + sum(occ_b) <= cap:
                    amps[basis.index_of(joined(occ_a, occ_b))] = va * vb
                else:
                    discarded += abs(va * vb) ** 2
        return StateVector(basis, amps), discarded

    ra = a.to_density() if isinstance(a, StateVector) else a
    rb = b.to_density() if isinstance(b, StateVector) else b
    keep: list[tuple[int, int, int]] = []
    discarded = 0.0
    for i, occ_a in enumerate(ba.occupations):
        for j, occ_b in enumerate(bb.occupations):
            if sum(occ_a) + sum(occ_b) <= cap:
                keep.append((i, j, basis.index_of(joined(occ_a, occ_b))))
            else:
                discarded += float((ra.matrix[i, i] * rb.matrix[j, j]).real)
    m = np.zeros((basis.size, basis.size), dtype=complex)
    for i1, j1, k1 in keep:
        for i2, j2, k2 in keep:
            m[k1, k2] = ra.matrix[i1, i2] * rb.matrix[j1, j2]
    return DensityOperator(basis, m), discarded


@dataclass(frozen=True)
class ProjectionResult:
    """Outcome of a projective measurement on a subset of modes.

    ``state`` is the renormalized conditional state on the remaining modes,
    or None when the outcome probability is (numerically) zero.
    """

    state: State | None
    probability: float


def _projection_map(state_basis: FockBasis, projector: StateVector):
    """Matrix K with K[rest, joint] = conj(projector amplitude), plus rest basis."""
    pb = projector.basis
    if not set(pb.modes) <= set(state_basis.modes):
        raise ValueError(
            f"projector modes {pb.modes} not within state modes {state_basis.modes}"
        )
    rest_modes = tuple(m for m in state_basis.modes if m not in pb.modes)
    rest = build_basis(len(rest_modes), state_basis.photon_cap, modes=rest_modes)
    ppos = [state_basis.position(m) for m in pb.modes]
    rpos = [state_basis.position(m) for m in rest_modes]
    k = np.zeros((rest.size, state_basis.size), dtype=complex)
    for jidx, occ in enumerate(state_basis.occupations):
        pocc = tuple(occ[p] for p in ppos)
        if sum(pocc) > pb.photon_cap:
            # outside the projector's support: contributes nothing
            continue
        pamp = projector.amplitudes[pb.index_of(pocc)]
        if pamp == 0:
            continue
        rocc = tuple(occ[p] for p in rpos)
        k[rest.index_of(rocc), jidx] = np.conj(pamp)
    return k, rest


def project(state: State, projector: StateVector) -> ProjectionResult:
    """Project a subset of modes onto a pure state.

    Returns the renormalized conditional state on the remaining modes along
    with the outcome probability.  A zero-probability outcome yields a
    flagged empty result rather than an exception.
    """
    k, rest = _projection_map(state.basis, projector)
    if isinstance(state, StateVector):
        c = k @ state.amplitudes
        prob = float(np.vdot(c, c).real)
        if prob <= ZERO_PROBABILITY:
            return ProjectionResult(None, prob)
        return ProjectionResult(StateVector(rest, c / math.sqrt(prob)), prob)
    m = k @ state.matrix @ k.conj().T
    prob = float(np.trace(m).real)
    if prob <= ZERO_PROBABILITY:
        return ProjectionResult(None, prob)
    return ProjectionResult(DensityOperator(rest, m / prob), prob)


def partial_trace(state: State, trace_modes: Iterable[int]) -> DensityOperator:
    """Trace out the given modes; always returns a density operator.

    Tracing every mode leaves the zero-mode basis, i.e. a 1x1 operator whose
    entry is the trace of the input.
    """
    rho = state.to_density() if isinstance(state, StateVector) else state
    trace_modes = tuple(trace_modes)
    sb = rho.basis
    for m in trace_modes:
        sb.position(m)  # raises on unknown modes
    rest_modes = tuple(m for m in sb.modes if m not in trace_modes)
    rest = build_basis(len(rest_modes), sb.photon_cap, modes=rest_modes)
    tpos = [sb.position(m) for m in trace_modes]
    rpos = [sb.position(m) for m in rest_modes]
    groups: dict[tuple[int, ...], list[tuple[int, int]]] = {}
    for jidx, occ in enumerate(sb.occupations):
        tocc = tuple(occ[p] for p in tpos)
        ridx = rest.index_of(tuple(occ[p] for p in rpos))
        groups.setdefault(tocc, []).append((jidx, ridx))
    out = np.zeros((rest.size, rest.size), dtype=complex)
    for pairs in groups.values():
        js = [j for j, _ in pairs]
        rs = [r for _, r in pairs]
        out[np.ix_(rs, rs)] += rho.matrix[np.ix_(js, js)]
    return DensityOperator(rest, out)


def occupancy_probability(state: State, mode: int, n: int) -> float:
    """Probability weight of exactly n photons in one mode (no renormalizing)."""
    pos = state.basis.position(mode)
    if isinstance(state, StateVector):
        weights = np.abs(state.amplitudes) ** 2
    else:
        weights = np.diag(state.matrix).real
    return float(
        sum(w for occ, w in zip(state.basis.occupations, weights) if occ[pos] == n)
    )


def occupancy_distribution(state: State, mode: int) -> np.ndarray:
    """Marginal photon-number distribution of one mode."""
    pos = state.basis.position(mode)
    if isinstance(state, StateVector):
        weights = np.abs(state.amplitudes) ** 2
    else:
        weights = np.diag(state.matrix).real
    out = np.zeros(state.basis.photon_cap + 1)
    for occ, w in zip(state.basis.occupations, weights):
        out[occ[pos]] += w
    return out


def state_to_jsonable(state: State) -> dict:
    """JSON-friendly dump of a state (debugging aid)."""
    base = {
        "modes": list(state.basis.modes),
        "photon_cap": state.basis.photon_cap,
        "occupations": [list(o) for o in state.basis.occupations],
    }
    if isinstance(state, StateVector):
        base["amplitudes"] = [[z.real, z.imag] for z in state.amplitudes]
    else:
        base["matrix"] = [[[z.real, z.imag] for z in row] for row in state.matrix]
    return base


def state_from_jsonable(data: dict) -> State:
    """Inverse of state_to_jsonable."""
    basis = build_basis(
        len(data["modes"]), data["photon_cap"], modes=tuple(data["modes"])
    )
    if "amplitudes" in data:
        amps = np.array([complex(re, im) for re, im in data["amplitudes"]])
        return StateVector(basis, amps)
    m = np.array(
        [[complex(re, im) for re, im in row] for row in data["matrix"]]
    )
    return DensityOperator(basis, m)
