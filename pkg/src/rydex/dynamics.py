"""Pulse Hamiltonians and exact propagation for two driven Rydberg atoms.

Each atom carries four relevant internal states: two ground hyperfine
spins and two Rydberg spins, written per atom as

    d, u  : ground spin down / up,
    D, U  : Rydberg spin down / up,

so a two-atom product label is a two-character string with atom A
first, e.g. "uU" = A in ground-up, B in Rydberg-up. Two two-photon
drive channels exist per atom: "dU" couples d <-> U and "uD" couples
u <-> D. All four channel amplitudes are ordinary frequencies in kHz;
times are microseconds; the single factor of 2 pi sits inside
``propagate``.

The full one-excitation-exchange sector spans eight product states.
Interactions enter through the symmetric and antisymmetric doubly
excited combinations: the pair states |DU> and |UD> carry a diagonal
shift V_s and are coupled by the spin-exchange amplitude V_c, so the
Bell states r+- = (|UD> +- |DU>)/sqrt(2) shift by V+- = V_s +- V_c.

Pulses are piecewise constant, so propagation is by spectral
decomposition of the (Hermitian) pulse matrix; no ODE stepping.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CHANNELS",
    "PRODUCT_BASIS_8",
    "SUPERPOSITION_BASIS_8",
    "PulseSpec",
    "QuantumState",
    "HamiltonianMatrix",
    "build_pulse2",
    "build_pulse3",
    "build_full8",
    "build_swap_2pi",
    "build_blocked2",
    "relabeling_matrix",
    "propagate",
    "propagate_sampled",
    "Pulse2Analytics",
    "pulse2_analytics",
    "tau2_approximate",
]

_SQRT2 = math.sqrt(2.0)

# Drive channels: "<ground symbol><Rydberg symbol>_<atom>".
CHANNELS = ("dU_A", "uD_A", "dU_B", "uD_B")

# Product basis of the spin-exchange sector (one u and one d among the
# ground/Rydberg spin labels), atom A first.
PRODUCT_BASIS_8 = ("du", "ud", "dD", "uU", "Dd", "Uu", "DU", "UD")

# Superposition labels: g(round) Bell pair, singly excited with spin up
# or down shared, and the doubly excited Bell pair. "+" states form the
# driven sector when both atoms are driven symmetrically.
SUPERPOSITION_BASIS_8 = ("g+", "e_up+", "e_dn+", "r+", "g-", "e_up-", "e_dn-", "r-")


@dataclass(frozen=True)
class PulseSpec:
    """One piecewise-constant two-photon pulse on a two-atom pair.

    Amplitudes are ordinary frequencies in kHz: ``omega_dU_A`` drives
    d <-> U on atom A with phase ``phi_dU_A``, and so on. Channels not
    named in ``channel_mask`` are treated as having zero amplitude.
    """

    omega_dU_A: float = 0.0
    omega_uD_A: float = 0.0
    omega_dU_B: float = 0.0
    omega_uD_B: float = 0.0
    phi_dU_A: float = 0.0
    phi_uD_A: float = 0.0
    phi_dU_B: float = 0.0
    phi_uD_B: float = 0.0
    duration_us: float = 0.0
    channel_mask: frozenset = field(default_factory=lambda: frozenset(CHANNELS))

    def __post_init__(self) -> None:
        unknown = set(self.channel_mask) - set(CHANNELS)
        if unknown:
            raise ValueError(f"unknown drive channels {sorted(unknown)}")
        if self.duration_us < 0:
            raise ValueError(f"duration must be >= 0, got {self.duration_us}")

    def amplitude(self, channel: str) -> complex:
        """Masked complex amplitude omega * exp(i phi) of one channel."""
        if channel not in CHANNELS:
            raise ValueError(f"unknown channel {channel!r}")
        if channel not in self.channel_mask:
            return 0.0j
        omega = getattr(self, f"omega_{channel}")
        phi = getattr(self, f"phi_{channel}")
        return omega * complex(math.cos(phi), math.sin(phi))


@dataclass(frozen=True)
class QuantumState:
    """Complex amplitudes over an ordered, labeled basis."""

    basis: tuple[str, ...]
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (len(self.basis),):
            raise ValueError(
                f"amplitude shape {amps.shape} does not match basis size {len(self.basis)}"
            )
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"state norm^2 = {norm} is not 1")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_label(cls, basis: tuple[str, ...], label: str) -> "QuantumState":
        amps = np.zeros(len(basis), dtype=complex)
        amps[basis.index(label)] = 1.0
        return cls(basis=basis, amplitudes=amps)

    def amplitude(self, label: str) -> complex:
        return complex(self.amplitudes[self.basis.index(label)])

    def population(self, label: str) -> float:
        return float(abs(self.amplitude(label)) ** 2)

    def populations(self) -> dict[str, float]:
        return {b: float(abs(a) ** 2) for b, a in zip(self.basis, self.amplitudes)}


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Hermitian pulse matrix (kHz) over an ordered, labeled basis."""

    basis: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        n = len(self.basis)
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match basis size {n}")
        scale = max(1.0, float(np.abs(m).max()))
        if float(np.abs(m - m.conj().T).max()) > 1e-12 * scale:
            raise ValueError("pulse matrix is not Hermitian")
        object.__setattr__(self, "matrix", m)


def build_pulse2(omega_uD_B: float, v_plus: float, v_minus: float) -> HamiltonianMatrix:
    """3x3 pulse-2 matrix on (|Uu>, |r+>, |r->), entries in kHz.

    A single drive on atom B's u <-> D channel couples the singly
    excited state to both doubly excited Bell states with amplitude
    omega / (2 sqrt(2)); the Bell states sit at V+ and V-.
    """
    o1 = omega_uD_B / (2.0 * _SQRT2)
    m = np.array(
        [
            [0.0, o1, o1],
            [o1, v_plus, 0.0],
            [o1, 0.0, v_minus],
        ],
        dtype=complex,
    )
    return HamiltonianMatrix(basis=("Uu", "r+", "r-"), matrix=m)


def build_pulse3(omega: float, v_plus: float) -> HamiltonianMatrix:
    """4x4 pulse-3 matrix on (|r+>, |e_up+>, |e_dn+>, |g+>), in kHz.

    All four channels driven at equal amplitude omega with equal
    phases: the symmetric sector forms a four-level chain that carries
    |r+> down to the Bell ground state |g+>.
    """
    h = omega / 2.0
    m = np.array(
        [
            [v_plus, h, h, 0.0],
            [h, 0.0, 0.0, h],
            [h, 0.0, 0.0, h],
            [0.0, h, h, 0.0],
        ],
        dtype=complex,
    )
    return HamiltonianMatrix(basis=("r+", "e_up+", "e_dn+", "g+"), matrix=m)


def build_full8(pulse: PulseSpec, v_s: float, v_c: float) -> HamiltonianMatrix:
    """Full 8x8 matrix of the spin-exchange sector for one pulse.

    ``v_s`` is the diagonal shift of the doubly excited product states
    and ``v_c`` their spin-exchange coupling, both in kHz.
    """
    a_dU_A = pulse.amplitude("dU_A")
    a_uD_A = pulse.amplitude("uD_A")
    a_dU_B = pulse.amplitude("dU_B")
    a_uD_B = pulse.amplitude("uD_B")

    h = np.zeros((8, 8), dtype=complex)
    # one-photon connections of the sector; see PRODUCT_BASIS_8 order
    h[0, 2] = a_uD_B  # du <-> dD
    h[0, 5] = a_dU_A  # du <-> Uu
    h[1, 3] = a_dU_B  # ud <-> uU
    h[1, 4] = a_uD_A  # ud <-> Dd
    h[2, 7] = a_dU_A  # dD <-> UD
    h[3, 6] = a_uD_A  # uU <-> DU
    h[4, 6] = a_dU_B  # Dd <-> DU
    h[5, 7] = a_uD_B  # Uu <-> UD
    h = h + h.conj().T
    h[6, 6] = h[7, 7] = 2.0 * v_s
    h[6, 7] += 2.0 * v_c
    h[7, 6] += 2.0 * v_c
    return HamiltonianMatrix(basis=PRODUCT_BASIS_8, matrix=h / 2.0)


def build_swap_2pi(
    omega: float, phi: float, v_plus: float, v_minus: float
) -> HamiltonianMatrix:
    """4x4 matrix of the exchange-sector 2 pi pulse on atom A.

    Basis (|uU>, |dD>, |r+>, |r->): the drive connects both singly
    excited states to the Bell pair with amplitude omega/(2 sqrt 2),
    with a sign flip of the |uU> <-> |r-> leg.
    """
    c = omega / (2.0 * _SQRT2) * complex(math.cos(phi), math.sin(phi))
    m = np.zeros((4, 4), dtype=complex)
    m[0, 2] = c
    m[0, 3] = -c
    m[1, 2] = c
    m[1, 3] = c
    m = m + m.conj().T
    m[2, 2] = v_plus
    m[3, 3] = v_minus
    return HamiltonianMatrix(basis=("uU", "dD", "r+", "r-"), matrix=m)


def build_blocked2(omega: float, phi: float, v_blockade: float) -> HamiltonianMatrix:
    """2x2 matrix of a blockaded drive: [[0, O/2 e^{i phi}], [c.c., V]]."""
    c = omega / 2.0 * complex(math.cos(phi), math.sin(phi))
    m = np.array([[0.0, c], [c.conjugate(), v_blockade]], dtype=complex)
    return HamiltonianMatrix(basis=("ground", "blocked"), matrix=m)


def relabeling_matrix(
    phi_dU_A: float = 0.0,
    phi_uD_A: float = 0.0,
    phi_dU_B: float = 0.0,
    phi_uD_B: float = 0.0,
) -> np.ndarray:
    """Unitary taking product amplitudes to superposition amplitudes.

    Row i, column j is <superposition_i | product_j> for the bases
    SUPERPOSITION_BASIS_8 and PRODUCT_BASIS_8. With nonzero drive
    phases the superposition states are dressed so that the symmetric
    sector stays the driven one:

        g+-   = [e^{i(phi_dU_A + phi_uD_B)} |du> +- e^{i(phi_uD_A + phi_dU_B)} |ud>] / sqrt 2
        e_up+- = [e^{i phi_uD_B} |Uu> +- e^{i phi_dU_A} |uU>] / sqrt 2
        e_dn+- = [e^{i phi_dU_B} |Dd> +- e^{i phi_uD_A} |dD>] / sqrt 2
        r+-   = [|UD> +- |DU>] / sqrt 2
    """

    def bra(*pairs: tuple[str, complex]) -> np.ndarray:
        row = np.zeros(8, dtype=complex)
        for label, coeff in pairs:
            row[PRODUCT_BASIS_8.index(label)] = coeff.conjugate() / _SQRT2
        return row

    e = lambda p: complex(math.cos(p), math.sin(p))
    rows = {
        "g+": bra(("du", e(phi_dU_A + phi_uD_B)), ("ud", e(phi_uD_A + phi_dU_B))),
        "g-": bra(("du", e(phi_dU_A + phi_uD_B)), ("ud", -e(phi_uD_A + phi_dU_B))),
        "e_up+": bra(("Uu", e(phi_uD_B)), ("uU", e(phi_dU_A))),
        "e_up-": bra(("Uu", e(phi_uD_B)), ("uU", -e(phi_dU_A))),
        "e_dn+": bra(("Dd", e(phi_dU_B)), ("dD", e(phi_uD_A))),
        "e_dn-": bra(("Dd", e(phi_dU_B)), ("dD", -e(phi_uD_A))),
        "r+": bra(("UD", 1.0 + 0.0j), ("DU", 1.0 + 0.0j)),
        "r-": bra(("UD", 1.0 + 0.0j), ("DU", -(1.0 + 0.0j))),
    }
    return np.array([rows[label] for label in SUPERPOSITION_BASIS_8])


def propagate(state: QuantumState, h: HamiltonianMatrix, t_us: float) -> QuantumState:
    """Evolve a state by exp(-i 2 pi H t) for a constant pulse matrix.

    H entries are ordinary frequencies in kHz and t is in microseconds;
    the 2 pi converting to angular frequency lives here and only here.
    """
    if state.basis != h.basis:
        raise ValueError(
            f"state basis {state.basis} does not match Hamiltonian basis {h.basis}"
        )
    w, v = np.linalg.eigh(h.matrix)
    coef = v.conj().T @ state.amplitudes
    amps = v @ (np.exp(-2j * np.pi * w * t_us * 1e-3) * coef)
    return QuantumState(basis=state.basis, amplitudes=amps)


def propagate_sampled(
    state: QuantumState, h: HamiltonianMatrix, t_us: float, n_samples: int
) -> tuple[np.ndarray, np.ndarray]:
    """Amplitudes on a uniform time grid over one pulse.

    Returns (times, amps) with times of shape (n_samples,) spanning
    [0, t_us] inclusive and amps of shape (n_samples, dim). Used for
    trajectory export and Rydberg-exposure integrals.
    """
    if state.basis != h.basis:
        raise ValueError("state basis does not match Hamiltonian basis")
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    times = np.linspace(0.0, t_us, n_samples)
    w, v = np.linalg.eigh(h.matrix)
    coef = v.conj().T @ state.amplitudes
    phases = np.exp(-2j * np.pi * np.outer(times * 1e-3, w))
    amps = (phases * coef) @ v.T
    return times, amps


@dataclass(frozen=True)
class Pulse2Analytics:
    """Closed-form pulse-2 duration and peak Bell amplitude.

    ``peak_amplitude`` is the closed-form |amplitude| on |r+> at the
    peak; its square is the transferred population. The closed form is
    perturbative in omega1/|V-| and can exceed 1 slightly outside its
    validity range, which is why the amplitude rather than a clipped
    population is stored.
    """

    tau2_us: float
    peak_amplitude: float

    @property
    def peak_population(self) -> float:
        return self.peak_amplitude**2


def pulse2_analytics(
    omega_uD_B: float, v_plus: float, v_minus: float
) -> Pulse2Analytics:
    """Closed-form pulse-2 timing for drive omega (kHz) and shifts V+-.

    tau2 = 1 / (2 sqrt(V+^2 + 4 o1^2 - 4 o1^3 / V-)), o1 = omega/(2 sqrt 2),
    in ordinary-frequency form (result in microseconds). Valid for
    |V-| >> o1; a warning is emitted when |V-| < 10 o1.
    """
    o1 = omega_uD_B / (2.0 * _SQRT2)
    if v_minus == 0:
        raise ValueError("pulse2_analytics requires a nonzero V-")
    if abs(v_minus) < 10.0 * abs(o1):
        warnings.warn(
            f"pulse-2 closed form is marginal: |V-| = {abs(v_minus):.3g} kHz "
            f"is not >> omega1 = {abs(o1):.3g} kHz",
            stacklevel=2,
        )
    rate_sq = v_plus**2 + 4.0 * o1**2 - 4.0 * o1**3 / v_minus
    if rate_sq <= 0:
        raise ValueError("pulse-2 closed form has no real oscillation rate here")
    rate = math.sqrt(rate_sq)  # kHz
    return Pulse2Analytics(
        tau2_us=1e3 / (2.0 * rate),
        peak_amplitude=2.0 * o1 / rate,
    )


def tau2_approximate(omega_uD_B: float, v_plus: float) -> float:
    """Leading-order pulse-2 duration (us): (sqrt2/(2 omega)) (1 - (V+/omega)^2)."""
    if omega_uD_B == 0:
        raise ValueError("tau2_approximate requires a nonzero drive")
    return 1e3 * _SQRT2 / (2.0 * omega_uD_B) * (1.0 - (v_plus / omega_uD_B) ** 2)
