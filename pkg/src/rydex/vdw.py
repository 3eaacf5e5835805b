"""Second-order van der Waals interactions between two s-state Rydberg atoms.

Two atoms prepared in |n_A s_1/2> and |n_B s_1/2> interact through the
dipole-dipole coupling to intermediate two-atom p-state channels. At
second order this produces an effective 4x4 operator on the product
space of the two electron spin projections (m_A, m_B), with a direct
block V1 (atoms keep their principal quantum numbers) and an exchange
block V2 (atoms trade n_A and n_B). The middle 2x2 block of V1 carries
the spin-exchange physics: its diagonal entry is the C6 shift and its
off-diagonal entry the C6-exchange coefficient, giving symmetric and
antisymmetric Bell combinations with strengths

    V+- = (C6 +- C6ex) / L^6.

Each intermediate channel k = 1..4 is one assignment of p-state fine
structure (j_A, j_B); the angular algebra of that channel enters only
through a rational matrix D_k = M_k^T M_k, where M_k collects the
signed products of Clebsch-Gordan factors of the two dipole flips over
all intermediate Zeeman states. The D_k and M_k are small exact
matrices and are hard-coded below; their values are locked by tests.

Radial physics enters through perturbative channel sums over a window
of principal quantum numbers around (n_A, n_B); see ``channel_c6``.
All coefficients are in GHz um^6, all pair interactions in kHz.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .atoms import (
    CHANNEL_FINE_STRUCTURE,
    QuantumDefectModel,
    RydbergLevel,
    level_energy,
)
from .radial import rrr_coefficient

__all__ = [
    "SingularChannelError",
    "AngularChannel",
    "angular_channel",
    "channel_c6",
    "C6Pair",
    "c6_pair",
    "InteractionMatrix",
    "interaction_matrix",
    "VPlusMinus",
    "v_plus_minus",
    "CriticalRadius",
    "critical_radius",
    "ChannelContribution",
    "interference_decomposition",
    "SPIN_BASIS",
]

logger = logging.getLogger(__name__)

# Two-atom spin basis (m_A, m_B) ordering every 4x4 matrix below uses.
SPIN_BASIS: tuple[tuple[float, float], ...] = (
    (-0.5, -0.5),
    (-0.5, 0.5),
    (0.5, -0.5),
    (0.5, 0.5),
)

# Energy defects smaller than this (in GHz) are treated as accidental
# Foerster resonances: perturbation theory does not apply to them, so
# they are excluded from channel sums with a logged warning.
NEAR_RESONANCE_GHZ = 1e-3


class SingularChannelError(ValueError):
    """An intermediate channel is exactly resonant (zero energy defect)."""


def _d(num: int) -> float:
    return num / 81.0

# Direct-block angular matrices D_k on SPIN_BASIS, exact rationals n/81.
# Diagonal: (corner, middle, middle, corner); the only off-diagonal
# entries couple the two middle (spin-exchange) states.
_D_MATRICES: dict[int, np.ndarray] = {
    1: np.array(
        [
            [_d(22), 0, 0, 0],
            [0, _d(26), _d(8), 0],
            [0, _d(8), _d(26), 0],
            [0, 0, 0, _d(22)],
        ]
    ),
    2: np.array(
        [
            [_d(14), 0, 0, 0],
            [0, _d(10), -_d(8), 0],
            [0, -_d(8), _d(10), 0],
            [0, 0, 0, _d(14)],
        ]
    ),
    3: np.array(
        [
            [_d(14), 0, 0, 0],
            [0, _d(10), -_d(8), 0],
            [0, -_d(8), _d(10), 0],
            [0, 0, 0, _d(14)],
        ]
    ),
    4: np.array(
        [
            [_d(4), 0, 0, 0],
            [0, _d(8), _d(8), 0],
            [0, _d(8), _d(8), 0],
            [0, 0, 0, _d(4)],
        ]
    ),
}

_SQ2 = math.sqrt(2.0) / 9.0
_SQ3 = math.sqrt(3.0) / 9.0
_SQ6 = math.sqrt(6.0) / 9.0
_SQ8 = math.sqrt(8.0) / 9.0


def _m_rows(j_a: float, j_b: float) -> tuple[tuple[float, float], ...]:
    def projections(j: float) -> list[float]:
        return [m - j for m in range(int(2 * j) + 1)]

    return tuple((ma, mb) for ma in projections(j_a) for mb in projections(j_b))


def _build_m(j_a: float, j_b: float, entries: dict) -> np.ndarray:
    rows = _m_rows(j_a, j_b)
    m = np.zeros((len(rows), 4))
    for (row_label, col_label), value in entries.items():
        m[rows.index(row_label), SPIN_BASIS.index(col_label)] = value
    return m

# Transition matrices M_k: row = intermediate p-state Zeeman pair
# (m_A', m_B'), column = initial spin pair (m_A, m_B), entry = product
# of the two single-atom dipole Clebsch-Gordan factors (angular part
# only). Entries are exact surds over 9.
_M_ENTRIES_1 = {
    ((-1.5, 0.5), (-0.5, -0.5)): -_SQ3,
    ((-1.5, 1.5), (-0.5, 0.5)): -1.0 / 3.0,
    ((-0.5, -0.5), (-0.5, -0.5)): -4.0 / 9.0,
    ((-0.5, 0.5), (-0.5, 0.5)): -4.0 / 9.0,
    ((-0.5, 0.5), (0.5, -0.5)): -1.0 / 9.0,
    ((-0.5, 1.5), (0.5, 0.5)): -_SQ3,
    ((0.5, -1.5), (-0.5, -0.5)): -_SQ3,
    ((0.5, -0.5), (-0.5, 0.5)): -1.0 / 9.0,
    ((0.5, -0.5), (0.5, -0.5)): -4.0 / 9.0,
    ((0.5, 0.5), (0.5, 0.5)): -4.0 / 9.0,
    ((1.5, -1.5), (0.5, -0.5)): -1.0 / 3.0,
    ((1.5, -0.5), (0.5, 0.5)): -_SQ3,
}

_M_ENTRIES_2 = {
    ((-1.5, 0.5), (-0.5, -0.5)): -_SQ6,
    ((-0.5, -0.5), (-0.5, -0.5)): -_SQ8,
    ((-0.5, 0.5), (-0.5, 0.5)): _SQ8,
    ((-0.5, 0.5), (0.5, -0.5)): -_SQ2,
    ((0.5, -0.5), (-0.5, 0.5)): _SQ2,
    ((0.5, -0.5), (0.5, -0.5)): -_SQ8,
    ((0.5, 0.5), (0.5, 0.5)): _SQ8,
    ((1.5, -0.5), (0.5, 0.5)): _SQ6,
}

# Channel 3 is channel 2 with the atom roles exchanged: swap the two
# members of every row and column label.
_M_ENTRIES_3 = {
    ((rb, ra), (cb, ca)): v for ((ra, rb), (ca, cb)), v in _M_ENTRIES_2.items()
}

_M_ENTRIES_4 = {
    ((-0.5, -0.5), (-0.5, -0.5)): -2.0 / 9.0,
    ((-0.5, 0.5), (-0.5, 0.5)): 2.0 / 9.0,
    ((-0.5, 0.5), (0.5, -0.5)): 2.0 / 9.0,
    ((0.5, -0.5), (-0.5, 0.5)): 2.0 / 9.0,
    ((0.5, -0.5), (0.5, -0.5)): 2.0 / 9.0,
    ((0.5, 0.5), (0.5, 0.5)): -2.0 / 9.0,
}

_M_MATRICES: dict[int, np.ndarray] = {
    1: _build_m(1.5, 1.5, _M_ENTRIES_1),
    2: _build_m(1.5, 0.5, _M_ENTRIES_2),
    3: _build_m(0.5, 1.5, _M_ENTRIES_3),
    4: _build_m(0.5, 0.5, _M_ENTRIES_4),
}


@dataclass(frozen=True)
class AngularChannel:
    """Angular algebra of one fine-structure channel.

    ``d_matrix`` is the 4x4 second-order angular weight on SPIN_BASIS,
    ``m_matrix`` the underlying transition matrix (one row per
    intermediate Zeeman pair) with ``d_matrix = m_matrix.T @ m_matrix``.
    ``max_coupling`` is the largest |entry| of ``m_matrix``; it sets the
    strongest first-order dipole coupling of the channel and hence the
    blockade radius.
    """

    channel: int
    j_final: tuple[float, float]
    d_matrix: np.ndarray
    m_matrix: np.ndarray
    row_labels: tuple[tuple[float, float], ...]
    col_labels: tuple[tuple[float, float], ...]
    max_coupling: float


def angular_channel(k: int) -> AngularChannel:
    """The exact angular matrices of channel k (1..4)."""
    if k not in _D_MATRICES:
        raise ValueError(f"channel must be 1..4, got {k}")
    j_a, j_b = CHANNEL_FINE_STRUCTURE[k]
    m = _M_MATRICES[k]
    return AngularChannel(
        channel=k,
        j_final=(j_a, j_b),
        d_matrix=_D_MATRICES[k].copy(),
        m_matrix=m.copy(),
        row_labels=_m_rows(j_a, j_b),
        col_labels=SPIN_BASIS,
        max_coupling=float(np.abs(m).max()),
    )


def _channel_terms(
    model: QuantumDefectModel, n_a: int, n_b: int, k: int, dn_cutoff: int
):
    """Yield (ns, nt, defect_ghz, rrr_direct, rrr_cross) over the window.

    The window is a full square: both intermediate principal numbers
    range independently over +- dn_cutoff. ``rrr_direct`` is the
    coupling with each atom keeping its own transition; ``rrr_cross``
    re-emits into the atom-exchanged pair.
    """
    j_a, j_b = CHANNEL_FINE_STRUCTURE[k]
    s_a = RydbergLevel(n_a, 0, 0.5)
    s_b = RydbergLevel(n_b, 0, 0.5)
    for da in range(-dn_cutoff, dn_cutoff + 1):
        for db in range(-dn_cutoff, dn_cutoff + 1):
            ns, nt = n_a + da, n_b + db
            p_a = RydbergLevel(ns, 1, j_a)
            p_b = RydbergLevel(nt, 1, j_b)
            defect = (
                level_energy(model, p_a)
                + level_energy(model, p_b)
                - level_energy(model, s_a)
                - level_energy(model, s_b)
            )
            rr = rrr_coefficient(model, (s_a, s_b), (p_a, p_b))
            rr_cross = rrr_coefficient(model, (s_b, s_a), (p_a, p_b))
            yield ns, nt, defect, rr, rr_cross


def channel_c6(
    model: QuantumDefectModel,
    n_a: int,
    n_b: int,
    k: int,
    dn_cutoff: int = 10,
    exchange: bool = False,
) -> float:
    """Perturbative C6 sum of one channel, in GHz um^6.

    Sums -R_k R_k' / defect over the square window of intermediate
    principal numbers; with ``exchange=False`` both factors are the
    direct coupling, with ``exchange=True`` the second factor re-emits
    into the atom-exchanged pair (the V2 block). Terms with an energy
    defect below NEAR_RESONANCE_GHZ are excluded with a logged warning;
    an exactly resonant term raises SingularChannelError.
    """
    if k not in CHANNEL_FINE_STRUCTURE:
        raise ValueError(f"channel must be 1..4, got {k}")
    if dn_cutoff < 0:
        raise ValueError(f"dn_cutoff must be non-negative, got {dn_cutoff}")
    total = 0.0
    for ns, nt, defect, rr, rr_cross in _channel_terms(model, n_a, n_b, k, dn_cutoff):
        if defect == 0.0:
            raise SingularChannelError(
                f"channel {k} intermediate pair ({ns}p, {nt}p) is exactly "
                f"resonant with ({n_a}s, {n_b}s)"
            )
        if abs(defect) < NEAR_RESONANCE_GHZ:
            logger.warning(
                "excluding near-resonant channel %d term (%dp, %dp): "
                "defect %.3g GHz below %.0e GHz",
                k,
                ns,
                nt,
                defect,
                NEAR_RESONANCE_GHZ,
            )
            continue
        second = rr_cross if exchange else rr
        total += -rr * second / defect
    return total


@dataclass(frozen=True)
class C6Pair:
    """Scalar van der Waals coefficients of one (n_A, n_B) pair.

    ``c6`` multiplies the identity-like (spin-preserving) middle-block
    diagonal and ``c6_exchange`` the spin-exchange off-diagonal; both in
    GHz um^6. ``channel_sums`` records the per-channel direct sums.
    """

    n_a: int
    n_b: int
    dn_cutoff: int
    c6: float
    c6_exchange: float
    channel_sums: tuple[float, float, float, float]


def c6_pair(
    model: QuantumDefectModel, n_a: int, n_b: int, dn_cutoff: int = 10
) -> C6Pair:
    """Spin-preserving and spin-exchange C6 coefficients, in GHz um^6.

    Requires n_a != n_b: the spin-exchange structure treated here lives
    on a pair of distinguishable principal quantum numbers.
    """
    if n_a == n_b:
        raise ValueError("c6_pair requires two distinct principal quantum numbers")
    sums = tuple(channel_c6(model, n_a, n_b, k, dn_cutoff) for k in (1, 2, 3, 4))
    c6 = sum(s * _D_MATRICES[k][1, 1] for k, s in zip((1, 2, 3, 4), sums))
    c6x = sum(s * _D_MATRICES[k][1, 2] for k, s in zip((1, 2, 3, 4), sums))
    return C6Pair(
        n_a=n_a,
        n_b=n_b,
        dn_cutoff=dn_cutoff,
        c6=float(c6),
        c6_exchange=float(c6x),
        channel_sums=tuple(float(s) for s in sums),
    )


def _assemble(sums: dict[int, float]) -> np.ndarray:
    m = np.zeros((4, 4))
    for k, s in sums.items():
        m += s * _D_MATRICES[k]
    return m


@dataclass(frozen=True)
class InteractionMatrix:
    """Second-order interaction blocks of a two-atom pair at spacing L.

    ``v1_khz`` acts within the ordered pair |n_A s, n_B s> and
    ``v2_khz`` couples it to the atom-exchanged pair |n_B s, n_A s>;
    both are 4x4 on SPIN_BASIS, in kHz. The GHz um^6 coefficient
    matrices (spacing-independent) are kept alongside. ``vs_khz`` and
    ``vc_khz`` are the middle-block diagonal and off-diagonal of v1.
    """

    n_a: int
    n_b: int
    spacing_um: float
    dn_cutoff: int
    basis: tuple[tuple[float, float], ...]
    c6_v1_ghz_um6: np.ndarray
    c6_v2_ghz_um6: np.ndarray
    v1_khz: np.ndarray
    v2_khz: np.ndarray
    vs_khz: float
    vc_khz: float


def interaction_matrix(
    model: QuantumDefectModel,
    n_a: int,
    n_b: int,
    spacing_um: float,
    dn_cutoff: int = 10,
) -> InteractionMatrix:
    """Direct and exchange 4x4 interaction matrices at spacing L (um)."""
    if spacing_um <= 0:
        raise ValueError(f"spacing must be positive, got {spacing_um}")
    if n_a == n_b:
        raise ValueError("interaction_matrix requires distinct principal numbers")
    direct = {k: channel_c6(model, n_a, n_b, k, dn_cutoff) for k in (1, 2, 3, 4)}
    cross = {
        k: channel_c6(model, n_a, n_b, k, dn_cutoff, exchange=True)
        for k in (1, 2, 3, 4)
    }
    c6_v1 = _assemble(direct)
    c6_v2 = _assemble(cross)
    lc = critical_radius(model, n_a, n_b).radius_um
    if spacing_um < lc:
        warnings.warn(
            f"spacing {spacing_um} um is inside the critical radius {lc:.2f} um; "
            "the perturbative interaction matrix is unreliable there",
            stacklevel=2,
        )
    scale = 1e6 / spacing_um**6  # GHz um^6 -> kHz at L
    return InteractionMatrix(
        n_a=n_a,
        n_b=n_b,
        spacing_um=spacing_um,
        dn_cutoff=dn_cutoff,
        basis=SPIN_BASIS,
        c6_v1_ghz_um6=c6_v1,
        c6_v2_ghz_um6=c6_v2,
        v1_khz=c6_v1 * scale,
        v2_khz=c6_v2 * scale,
        vs_khz=float(c6_v1[1, 1] * scale),
        vc_khz=float(c6_v1[1, 2] * scale),
    )


@dataclass(frozen=True)
class VPlusMinus:
    """Bell-basis interaction strengths of the spin-exchange block.

    The symmetric and antisymmetric combinations of the two middle
    states diagonalize the 2x2 exchange block:

        |r+-> = (|up dn> +- |dn up>) / sqrt(2),
        V+-  = (C6 +- C6ex) / L^6.

    ``eigenvectors`` gives the coefficients of each Bell state on the
    middle-basis order ((-1/2, +1/2), (+1/2, -1/2)).
    """

    v_plus_khz: float
    v_minus_khz: float
    spacing_um: float
    eigenvectors: dict[str, tuple[float, float]]


def v_plus_minus(pair: C6Pair, spacing_um: float) -> VPlusMinus:
    """Evaluate V+ and V- (kHz) of a coefficient pair at spacing L (um)."""
    if spacing_um <= 0:
        raise ValueError(f"spacing must be positive, got {spacing_um}")
    scale = 1e6 / spacing_um**6
    vs = pair.c6 * scale
    vc = pair.c6_exchange * scale
    inv_sq2 = 1.0 / math.sqrt(2.0)
    return VPlusMinus(
        v_plus_khz=float(vs + vc),
        v_minus_khz=float(vs - vc),
        spacing_um=spacing_um,
        eigenvectors={
            "r+": (inv_sq2, inv_sq2),
            "r-": (-inv_sq2, inv_sq2),
        },
    )


@dataclass(frozen=True)
class CriticalRadius:
    """Blockade-crossover radius and the channel that sets it.

    Below ``radius_um`` the strongest first-order dipole coupling of the
    dominant near-resonant channel exceeds its energy defect and the
    perturbative C6 picture breaks down.
    """

    radius_um: float
    channel: int
    ns: int
    nt: int
    defect_ghz: float
    rrr_ghz_um3: float
    max_coupling: float


def critical_radius(
    model: QuantumDefectModel, n_a: int, n_b: int, dn_cutoff: int = 3
) -> CriticalRadius:
    """Radius where first-order mixing with the dominant channel is order 1.

    The dominant channel is the intermediate pair with the smallest
    |energy defect| among those with appreciable radial coupling (at
    least 1% of the window maximum); ties go to the larger coupling.
    The radius solves max|M_k| * R / L^3 = |defect|.
    """
    rows = []
    for k in (1, 2, 3, 4):
        mmax = float(np.abs(_M_MATRICES[k]).max())
        for ns, nt, defect, rr, _ in _channel_terms(model, n_a, n_b, k, dn_cutoff):
            rows.append((k, ns, nt, defect, rr, mmax))
    rr_floor = 0.01 * max(abs(r[4]) for r in rows)
    candidates = [r for r in rows if abs(r[4]) >= rr_floor]
    candidates.sort(key=lambda r: (abs(r[3]), -abs(r[4])))
    k, ns, nt, defect, rr, mmax = candidates[0]
    if defect == 0.0:
        raise SingularChannelError(
            f"dominant channel ({ns}p, {nt}p) is exactly resonant; "
            "no finite critical radius"
        )
    radius = (mmax * abs(rr) / abs(defect)) ** (1.0 / 3.0)
    return CriticalRadius(
        radius_um=float(radius),
        channel=k,
        ns=ns,
        nt=nt,
        defect_ghz=float(defect),
        rrr_ghz_um3=float(rr),
        max_coupling=mmax,
    )


@dataclass(frozen=True)
class ChannelContribution:
    """One intermediate pair's contribution to V+ and V- (GHz um^6)."""

    channel: int
    ns: int
    nt: int
    defect_ghz: float
    c6_plus: float
    c6_minus: float


def interference_decomposition(
    model: QuantumDefectModel, n_a: int, n_b: int, dn_cutoff: int = 10
) -> tuple[ChannelContribution, ...]:
    """Per-channel, per-intermediate-pair breakdown of C6 +- C6ex.

    Useful for reading off how fine-structure channels interfere: the
    j=1/2 x 3/2 channels (2 and 3) push V+ and V- apart (1:9 weight
    ratio), channel 1 adds with 17:9, and channel 4 feeds only V+.
    Contributions sum exactly to c6 +- c6_exchange of ``c6_pair`` under
    the same window and exclusion rules.
    """
    out = []
    for k in (1, 2, 3, 4):
        d_diag = _D_MATRICES[k][1, 1]
        d_off = _D_MATRICES[k][1, 2]
        for ns, nt, defect, rr, _ in _channel_terms(model, n_a, n_b, k, dn_cutoff):
            if defect == 0.0:
                raise SingularChannelError(
                    f"channel {k} intermediate pair ({ns}p, {nt}p) is exactly resonant"
                )
            if abs(defect) < NEAR_RESONANCE_GHZ:
                logger.warning(
                    "excluding near-resonant channel %d term (%dp, %dp) "
                    "from decomposition",
                    k,
                    ns,
                    nt,
                )
                continue
            term = -rr * rr / defect
            out.append(
                ChannelContribution(
                    channel=k,
                    ns=ns,
                    nt=nt,
                    defect_ghz=float(defect),
                    c6_plus=float(term * (d_diag + d_off)),
                    c6_minus=float(term * (d_diag - d_off)),
                )
            )
    return tuple(out)
