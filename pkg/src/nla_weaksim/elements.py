"""Optical elements as mode transforms: beamsplitters, PPBS, waveplates, loss.

Polarization is encoded as two modes (H, V) per spatial path.  The global
beamsplitter convention is the rotation form

    [[sqrt(T),  sqrt(1-T)],
     [-sqrt(1-T), sqrt(T)]]

so two photons meeting on a T-transmissive splitter leave with coincidence
amplitude T - R (zero at T = 1/2, -1/3 at T = 1/3).  The T - R value is the
load-bearing contract: it supplies the conditional sign flip of the
postselected controlled-Z circuit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import DensityOperator, FockBasis, ModeTransform, State, StateVector


@dataclass(frozen=True)
class ModeLayout:
    """Global mode indices for the two polarization-resolved spatial paths."""

    signal_h: int = 0
    signal_v: int = 1
    meter_h: int = 2
    meter_v: int = 3

    @property
    def signal(self) -> tuple[int, int]:
        return (self.signal_h, self.signal_v)

    @property
    def meter(self) -> tuple[int, int]:
        return (self.meter_h, self.meter_v)

    def modes(self) -> tuple[int, int, int, int]:
        return (self.signal_h, self.signal_v, self.meter_h, self.meter_v)


DEFAULT_LAYOUT = ModeLayout()


@dataclass(frozen=True)
class PPBSSpec:
    """Intensity transmissions per polarization."""

    t_h: float
    t_v: float

    def __post_init__(self):
        for name, t in (("t_h", self.t_h), ("t_v", self.t_v)):
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"{name}={t} outside [0, 1]")


@dataclass(frozen=True)
class LossSpec:
    """Fractional intensity loss in [0, 1]."""

    l: float

    def __post_init__(self):
        if not 0.0 <= self.l <= 1.0:
            raise ValueError(f"loss {self.l} outside [0, 1]")


@dataclass(frozen=True)
class WaveplateSetting:
    kind: str  # "hwp" | "qwp"
    angle: float  # fast-axis angle, radians

    def __post_init__(self):
        if self.kind not in ("hwp", "qwp"):
            raise ValueError(f"unknown waveplate kind {self.kind!r}")


def _bs_matrix(t: float) -> np.ndarray:
    ta = math.sqrt(t)
    ra = math.sqrt(1.0 - t)
    return np.array([[ta, ra], [-ra, ta]], dtype=complex)


def beamsplitter(t: float, modes: tuple[int, int]) -> ModeTransform:
    """Two-mode splitter with intensity transmission t (see module docstring)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmission {t} outside [0, 1]")
    return ModeTransform(_bs_matrix(t), modes)


def ppbs(
    spec: PPBSSpec,
    a: tuple[int, int],
    b: tuple[int, int],
) -> ModeTransform:
    """Partially polarizing splitter between two (H, V) spatial paths.

    Block diagonal: beamsplitter(t_h) on the H pair, beamsplitter(t_v) on the
    V pair.  (1, 1) is the identity.
    """
    modes = (a[0], a[1], b[0], b[1])
    m = np.eye(4, dtype=complex)
    h = _bs_matrix(spec.t_h)
    v = _bs_matrix(spec.t_v)
    for (blk, i, j) in ((h, 0, 2), (v, 1, 3)):
        m[i, i] = blk[0, 0]
        m[i, j] = blk[0, 1]
        m[j, i] = blk[1, 0]
        m[j, j] = blk[1, 1]
    return ModeTransform(m, modes)


def hwp(angle: float, spatial: tuple[int, int]) -> ModeTransform:
    """Half-wave plate at fast-axis angle; hwp(0) leaves |H> unchanged."""
    c = math.cos(2.0 * angle)
    s = math.sin(2.0 * angle)
    return ModeTransform(np.array([[c, s], [s, -c]], dtype=complex), spatial)


def qwp(angle: float, spatial: tuple[int, int]) -> ModeTransform:
    """Quarter-wave plate: rotation-conjugated diag(1, i)."""
    c = math.cos(angle)
    s = math.sin(angle)
    r = np.array([[c, -s], [s, c]], dtype=complex)
    return ModeTransform(r @ np.diag([1.0, 1.0j]) @ r.T, spatial)


def vacuum_restriction(t: ModeTransform, drop: tuple[int, ...]) -> ModeTransform:
    """Postselect unused ports on vacuum by deleting their rows and columns.

    Valid when the dropped input ports carry vacuum and their outputs are
    conditioned empty; the lifted restricted matrix then equals
    <0_drop| U |0_drop> exactly.  The result is flagged subunitary.
    """
    keep = [i for i, m in enumerate(t.modes) if m not in drop]
    if len(keep) == len(t.modes):
        return t
    sub = t.matrix[np.ix_(keep, keep)]
    return ModeTransform(sub, tuple(t.modes[i] for i in keep), kind="subunitary")


@dataclass(frozen=True)
class LossChannel:
    """Trace-preserving photon loss on one mode (splitter to a traced vacuum)."""

    loss: float
    mode: int

    def kraus(self, basis: FockBasis) -> list[np.ndarray]:
        """Kraus set: K_k removes k photons, sum K^dag K = identity."""
        pos = basis.position(self.mode)
        t = 1.0 - self.loss
        ops = []
        for k in range(basis.photon_cap + 1):
            m = np.zeros((basis.size, basis.size))
            filled = False
            for i, occ in enumerate(basis.occupations):
                n = occ[pos]
                if n < k:
                    continue
                coeff = math.comb(n, k) * t ** (n - k) * self.loss**k
                if coeff == 0.0:
                    continue
                out = list(occ)
                out[pos] = n - k
                m[basis.index_of(tuple(out)), i] = math.sqrt(coeff)
                filled = True
            if filled:
                ops.append(m)
        return ops

    def apply(self, state: State) -> DensityOperator:
        rho = state.to_density() if isinstance(state, StateVector) else state
        out = np.zeros_like(rho.matrix)
        for k in self.kraus(rho.basis):
            out = out + k @ rho.matrix @ k.T
        return DensityOperator(rho.basis, out)


def loss_channel(spec: LossSpec, mode: int) -> LossChannel:
    return LossChannel(spec.l, mode)


def meter_waveplate_angles(phi: float) -> tuple[WaveplateSetting, WaveplateSetting]:
    """Waveplate pair preparing (|H> + i e^{i phi} |V>)/sqrt(2) from |H>.

    With the quarter-wave plate fixed at pi/4 the two output components keep
    equal magnitude for any half-wave angle, and the relative phase closes at
    hwp angle pi/4 + phi/4 (solution of the 2x2 composition, verified in the
    tests up to global phase).
    """
    h = (math.pi / 4.0 + phi / 4.0) % math.pi
    return WaveplateSetting("hwp", h), WaveplateSetting("qwp", math.pi / 4.0)
