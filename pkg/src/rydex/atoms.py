"""Rydberg level structure from measured quantum defects.

Level energies follow the modified Rydberg-Ritz parametrization

    E(n, l, j) = -Ry / (n - delta(n))**2,
    delta(n)   = delta0 + delta2 / (n - delta0)**2,

with the species-specific Rydberg constant and defect coefficients read
from a small key-value data file (a file for rubidium-87 is bundled).
All energies are in GHz, i.e. E = -Ry_GHz / nu**2 with nu the effective
principal quantum number.

The module also carries the angular-momentum utilities needed elsewhere:
Clebsch-Gordan coefficients, the effective two-photon Rabi frequency of
a far-detuned ladder system, and the ground population of the same
three-level system after adiabatic elimination of the intermediate
state.

Frequency convention: every frequency in this package is an ordinary
frequency (cycles per unit time, nu = omega / 2 pi), in GHz for atomic
structure and kHz for dynamics. Factors of 2 pi appear only inside time
propagation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

__all__ = [
    "DefectDataError",
    "DefectSeries",
    "QuantumDefectModel",
    "RydbergLevel",
    "EnergyDefect",
    "CHANNEL_FINE_STRUCTURE",
    "quantum_defect",
    "level_energy",
    "energy_defects",
    "clebsch_gordan",
    "effective_rabi",
    "three_level_ground_population",
]

_L_LETTERS = "spdfghik"


class DefectDataError(Exception):
    """Raised for malformed defect data files or missing series."""


@dataclass(frozen=True)
class DefectSeries:
    """Rydberg-Ritz coefficients for one (l, j) series."""

    l: int
    j: float
    delta0: float
    delta2: float


@dataclass
class QuantumDefectModel:
    """Quantum defect data for one atomic species.

    Attributes
    ----------
    species : str
        Species tag, e.g. ``"Rb-87"``.
    rydberg_constant_ghz : float
        Reduced-mass-corrected Rydberg constant in GHz.
    series : dict[tuple[int, float], DefectSeries]
        Defect coefficients keyed by (l, j).
    """

    species: str
    rydberg_constant_ghz: float
    series: dict[tuple[int, float], DefectSeries] = field(default_factory=dict)

    def series_for(self, l: int, j: float) -> DefectSeries:
        try:
            return self.series[(int(l), float(j))]
        except KeyError:
            raise DefectDataError(
                f"no quantum defect data for series l={l}, j={j} "
                f"of {self.species}"
            ) from None

    @classmethod
    def from_file(cls, path: str | Path) -> "QuantumDefectModel":
        """Parse a flat key-value defect data file.

        The format is line oriented: ``#`` starts a comment, blank lines
        are skipped, and every other line is whitespace-separated tokens
        ``key value...``. Recognized keys are ``format_version``,
        ``species``, ``rydberg_constant_ghz`` and ``series`` (with fields
        l, j, delta0, delta2). Any malformed line is a fatal error that
        reports the offending line number.
        """
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        return cls._parse(text, source=str(path))

    @classmethod
    def _parse(cls, text: str, source: str = "<string>") -> "QuantumDefectModel":
        species = None
        rydberg = None
        series: dict[tuple[int, float], DefectSeries] = {}

        def fail(lineno: int, msg: str) -> DefectDataError:
            return DefectDataError(f"{source}, line {lineno}: {msg}")

        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            key = tokens[0]
            if key == "format_version":
                if len(tokens) != 2 or tokens[1] != "1":
                    raise fail(lineno, f"unsupported format_version {tokens[1:]}")
            elif key == "species":
                if len(tokens) != 2:
                    raise fail(lineno, "species takes exactly one value")
                species = tokens[1]
            elif key == "rydberg_constant_ghz":
                if len(tokens) != 2:
                    raise fail(lineno, "rydberg_constant_ghz takes exactly one value")
                try:
                    rydberg = float(tokens[1])
                except ValueError:
                    raise fail(lineno, f"bad float {tokens[1]!r}") from None
                if rydberg <= 0:
                    raise fail(lineno, "rydberg_constant_ghz must be positive")
            elif key == "series":
                if len(tokens) != 5:
                    raise fail(lineno, "series takes l, j, delta0, delta2")
                l = _parse_l(tokens[1], lineno, fail)
                try:
                    j, delta0, delta2 = (float(t) for t in tokens[2:5])
                except ValueError:
                    raise fail(lineno, f"bad float in {tokens[2:5]}") from None
                if abs(j - l) != 0.5:
                    raise fail(lineno, f"j={j} is not l +- 1/2 for l={l}")
                if (l, j) in series:
                    raise fail(lineno, f"duplicate series l={l}, j={j}")
                series[(l, j)] = DefectSeries(l=l, j=j, delta0=delta0, delta2=delta2)
            else:
                raise fail(lineno, f"unknown key {key!r}")

        if species is None:
            raise DefectDataError(f"{source}: missing species")
        if rydberg is None:
            raise DefectDataError(f"{source}: missing rydberg_constant_ghz")
        if not series:
            raise DefectDataError(f"{source}: no series records")
        return cls(species=species, rydberg_constant_ghz=rydberg, series=series)

    @classmethod
    def default(cls) -> "QuantumDefectModel":
        """The bundled rubidium-87 model."""
        ref = resources.files("rydex.data").joinpath("rb87_defects.txt")
        return cls._parse(ref.read_text(encoding="utf-8"), source="rb87_defects.txt")


def _parse_l(token: str, lineno: int, fail) -> int:
    if token in _L_LETTERS:
        return _L_LETTERS.index(token)
    try:
        l = int(token)
    except ValueError:
        raise fail(lineno, f"bad orbital quantum number {token!r}") from None
    if l < 0:
        raise fail(lineno, f"negative orbital quantum number {l}")
    return l


@dataclass(frozen=True)
class RydbergLevel:
    """A single |n, l, j> Rydberg level."""

    n: int
    l: int
    j: float

    def __post_init__(self) -> None:
        if self.l < 0 or self.l >= self.n:
            raise ValueError(f"need 0 <= l < n, got n={self.n}, l={self.l}")
        if abs(self.j - self.l) != 0.5 or self.j < 0:
            raise ValueError(f"j={self.j} is not l +- 1/2 for l={self.l}")


def quantum_defect(model: QuantumDefectModel, l: int, j: float, n: int) -> float:
    """Quantum defect delta(n) of the (l, j) series at principal number n.

    Raises
    ------
    DefectDataError
        If the model has no data for the requested series.
    ValueError
        If n does not exceed delta0 (no bound Rydberg state).
    """
    s = model.series_for(l, j)
    if n <= s.delta0:
        raise ValueError(
            f"n={n} must exceed delta0={s.delta0} for series l={l}, j={j}"
        )
    return s.delta0 + s.delta2 / (n - s.delta0) ** 2


def level_energy(model: QuantumDefectModel, level: RydbergLevel) -> float:
    """Binding energy of a Rydberg level in GHz (negative below threshold)."""
    nu = level.n - quantum_defect(model, level.l, level.j, level.n)
    return -model.rydberg_constant_ghz / nu**2


# The four p-state fine-structure channels reachable from a two-atom
# (n_A s, n_B s) pair by a dipole-dipole flip, keyed by channel index:
# atom A goes to j_a, atom B goes to j_b.
CHANNEL_FINE_STRUCTURE: dict[int, tuple[float, float]] = {
    1: (1.5, 1.5),
    2: (1.5, 0.5),
    3: (0.5, 1.5),
    4: (0.5, 0.5),
}


@dataclass(frozen=True)
class EnergyDefect:
    """Foerster energy defect of one pair channel, in GHz.

    ``value = E(ns, p, j_a) + E(nt, p, j_b) - E(n_a, s) - E(n_b, s)``
    for channel ``(n_a s, n_b s) -> (ns p_{j_a}, nt p_{j_b})``.
    """

    channel: int
    ns: int
    nt: int
    value: float


def energy_defects(
    model: QuantumDefectModel, n_a: int, n_b: int, ns: int, nt: int
) -> tuple[EnergyDefect, ...]:
    """Energy defects of all four fine-structure channels, in GHz."""
    e_initial = level_energy(model, RydbergLevel(n_a, 0, 0.5)) + level_energy(
        model, RydbergLevel(n_b, 0, 0.5)
    )
    out = []
    for k, (ja, jb) in CHANNEL_FINE_STRUCTURE.items():
        e_final = level_energy(model, RydbergLevel(ns, 1, ja)) + level_energy(
            model, RydbergLevel(nt, 1, jb)
        )
        out.append(EnergyDefect(channel=k, ns=ns, nt=nt, value=e_final - e_initial))
    return tuple(out)


def _as_twice(x: float, name: str) -> int:
    t = 2.0 * x
    ti = round(t)
    if abs(t - ti) > 1e-9:
        raise ValueError(f"{name}={x} is not integer or half-integer")
    return int(ti)


def clebsch_gordan(
    j1: float, m1: float, j2: float, m2: float, j: float, m: float
) -> float:
    """Clebsch-Gordan coefficient <j1 m1; j2 m2 | j m>.

    Evaluated from Racah's closed-form factorial sum, exact up to float
    rounding. Arguments may be integers or half-integers. Selection-rule
    violations (m != m1 + m2, triangle rule, mismatched parity of the
    couplings) give 0.0; structurally invalid angular momenta (negative
    j, |m| > j, non-half-integer values) raise ValueError.
    """
    tj1, tm1 = _as_twice(j1, "j1"), _as_twice(m1, "m1")
    tj2, tm2 = _as_twice(j2, "j2"), _as_twice(m2, "m2")
    tj, tm = _as_twice(j, "j"), _as_twice(m, "m")
    for tjx, tmx, nm in ((tj1, tm1, "j1"), (tj2, tm2, "j2"), (tj, tm, "j")):
        if tjx < 0:
            raise ValueError(f"{nm} must be non-negative")
        if abs(tmx) > tjx:
            raise ValueError(f"|m| > j for {nm}")
        if (tjx - tmx) % 2 != 0:
            raise ValueError(f"m and j differ by a non-integer for {nm}")

    if tm1 + tm2 != tm:
        return 0.0
    if tj < abs(tj1 - tj2) or tj > tj1 + tj2:
        return 0.0
    if (tj1 + tj2 + tj) % 2 != 0:
        return 0.0

    def f(twice: int) -> int:
        # factorial of an integer given as twice its value
        if twice % 2 != 0:
            raise ValueError("internal: non-integer factorial argument")
        arg = twice // 2
        if arg < 0:
            raise ValueError("internal: negative factorial argument")
        return math.factorial(arg)

    pref = (tj + 1) * f(tj1 + tj2 - tj) * f(tj1 - tj2 + tj) * f(-tj1 + tj2 + tj)
    pref = pref / f(tj1 + tj2 + tj + 2)
    pref *= (
        f(tj1 + tm1) * f(tj1 - tm1) * f(tj2 + tm2) * f(tj2 - tm2) * f(tj + tm) * f(tj - tm)
    )

    total = 0.0
    # summation index k runs over all values keeping factorial args >= 0
    k_min = max(0, (tj2 - tm1 - tj) // 2, (tj1 + tm2 - tj) // 2)
    k_max = min((tj1 + tj2 - tj) // 2, (tj1 - tm1) // 2, (tj2 + tm2) // 2)
    for k in range(k_min, k_max + 1):
        denom = (
            math.factorial(k)
            * f(tj1 + tj2 - tj - 2 * k)
            * f(tj1 - tm1 - 2 * k)
            * f(tj2 + tm2 - 2 * k)
            * f(tj - tj2 + tm1 + 2 * k)
            * f(tj - tj1 - tm2 + 2 * k)
        )
        total += (-1.0) ** k / denom
    return math.sqrt(pref) * total


def effective_rabi(
    omega_down: float,
    omega_up: float,
    detuning: float,
    phi_down: float = 0.0,
    phi_up: float = 0.0,
) -> complex:
    """Two-photon effective Rabi frequency of a far-detuned ladder.

    Ordinary frequencies throughout: for leg frequencies nu_down, nu_up
    and intermediate-state detuning Delta (all in the same unit), the
    composite drive is nu_down * nu_up / (2 Delta) with phase
    phi_down + phi_up. Valid for |nu_leg / Delta| small; a warning is
    emitted above 0.1.

    Raises
    ------
    ValueError
        If the detuning is zero (no adiabatic elimination possible).
    """
    if detuning == 0:
        raise ValueError("effective_rabi requires a nonzero detuning")
    ratio = max(abs(omega_down), abs(omega_up)) / abs(detuning)
    if ratio > 0.1:
        warnings.warn(
            f"adiabatic elimination is marginal: max|omega|/|detuning| = {ratio:.3f}",
            stacklevel=2,
        )
    mag = omega_down * omega_up / (2.0 * detuning)
    return mag * complex(math.cos(phi_down + phi_up), math.sin(phi_down + phi_up))


def three_level_ground_population(
    t: float, omega_down: float, omega_up: float, detuning: float
) -> float:
    """Ground population of the adiabatically eliminated ladder system.

    For leg frequencies nu_d, nu_u (kHz) and detuning Delta (kHz), the
    population oscillates as

        P(t) = 1 - 2 a [1 - cos(2 pi nu_g t)],
        a = nu_d^2 nu_u^2 / (nu_d^2 + nu_u^2)^2,
        nu_g = (nu_d^2 + nu_u^2) / (4 Delta),

    with t in microseconds. Matched legs reach P = 0; unequal legs do
    not fully transfer (e.g. nu_d = 2 nu_u bottoms out at 0.36).
    """
    if detuning == 0:
        raise ValueError("three-level reduction requires a nonzero detuning")
    s = omega_down**2 + omega_up**2
    if s == 0:
        return 1.0
    a = (omega_down**2) * (omega_up**2) / s**2
    nu_g = s / (4.0 * detuning)  # kHz
    theta = 2.0 * math.pi * nu_g * t * 1e-3
    return 1.0 - 2.0 * a * (1.0 - math.cos(theta))
