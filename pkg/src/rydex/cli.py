"""Command-line front end.

Subcommands mirror the library: interaction coefficients, critical
radii, protocol simulations, robustness scans, and table/figure
reproduction. Results print as JSON (default) or CSV; ``--out`` writes
to a file instead of stdout. A ``--config`` file holds flat
``key value`` or ``key = value`` pairs mirroring the long flags;
command-line flags override it.

Exit codes: 0 on success, 2 on usage errors, 1 on computation or data
errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .atoms import DefectDataError, QuantumDefectModel
from .harness import (
    SCHEMA,
    RobustnessConfig,
    dumps_json,
    histogram_payload,
    histogram_rows,
    pair_couplings,
    robustness_scan,
    rows_to_csv,
    run_figure,
    run_table,
    to_jsonable,
)
from .protocols import (
    ChainSpec,
    chain_fidelity_estimate,
    chain_schedule,
    optimize_pairwise,
    pairwise_entangle,
    spectator_blockade,
    swap_gate,
)
from .vdw import c6_pair, critical_radius

__all__ = ["build_parser", "main"]


def _add_pair_options(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--na", type=int, default=None if required else 73,
                   help="principal quantum number of atom A")
    p.add_argument("--nb", type=int, default=None if required else 75,
                   help="principal quantum number of atom B")


def _add_coupling_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spacing", type=float, default=15.0,
                   help="atom separation in um (default 15)")
    p.add_argument("--v-plus", type=float, default=None,
                   help="override the symmetric Bell-state shift in kHz")
    p.add_argument("--v-minus", type=float, default=None,
                   help="override the antisymmetric Bell-state shift in kHz")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    """The CLI parser plus a dest -> coercion map for config files."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--defects", metavar="FILE", default=None,
                        help="quantum-defect data file (default: bundled Rb-87)")
    common.add_argument("--out", metavar="PATH", default=None,
                        help="write the result to this file")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="output format (default json)")
    common.add_argument("--config", metavar="FILE", default=None,
                        help="flat key-value settings file; flags override it")

    parser = argparse.ArgumentParser(
        prog="rydex",
        description="Spin-exchange Rydberg interactions and entanglement protocols.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("coeffs", parents=[common],
                       help="van der Waals coefficients of an (na, nb) pair")
    _add_pair_options(p, required=True)
    p.add_argument("--dn", type=int, default=10,
                   help="intermediate-level window half-width (default 10)")

    p = sub.add_parser("critical-radius", parents=[common],
                       help="crossover radius to the resonant dipole regime")
    _add_pair_options(p, required=True)
    p.add_argument("--dn", type=int, default=3,
                   help="intermediate-level window half-width (default 3)")

    p = sub.add_parser("pair-sim", parents=[common],
                       help="three-pulse Bell-state preparation")
    _add_pair_options(p, required=False)
    _add_coupling_overrides(p)
    p.add_argument("--omega2", type=float, default=None,
                   help="pulse-2 Rabi frequency in kHz (default sqrt|V+ V-|)")
    p.add_argument("--omega3", type=float, default=None,
                   help="pulse-3 Rabi frequency in kHz (default sqrt|V+ V-|)")
    p.add_argument("--tau2", type=float, default=None,
                   help="pulse-2 duration in us (default: closed form)")
    p.add_argument("--tau3", type=float, default=None,
                   help="pulse-3 duration in us (default: half period)")
    p.add_argument("--optimize", action="store_true",
                   help="run the restarted simplex search instead of one shot")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the optimizer restarts (default 0)")

    p = sub.add_parser("swap-sim", parents=[common],
                       help="pi/2pi/pi signed-SWAP gate")
    _add_pair_options(p, required=False)
    _add_coupling_overrides(p)
    p.add_argument("--omega", type=float, default=None,
                   help="2pi-pulse Rabi frequency in kHz (default 1.5 sqrt|V+ V-|)")
    p.add_argument("--t2pi", type=float, default=None,
                   help="2pi window in us (default 1000/omega)")
    p.add_argument("--v-blockade", type=float, default=None,
                   help="parallel-spin blockade shift in kHz (default: computed)")
    p.add_argument("--phi", type=float, default=0.0,
                   help="drive phase in radians (default 0)")

    p = sub.add_parser("chain", parents=[common],
                       help="chain schedule, fidelity estimate, spectator shift")
    p.add_argument("--atoms", type=int, default=4,
                   help="chain length: 4, 6, or a multiple of 4 (default 4)")
    _add_pair_options(p, required=False)
    p.add_argument("--spacing", type=float, default=15.0,
                   help="lattice spacing in um (default 15)")
    p.add_argument("--gamma", type=float, default=1.0 / 0.45,
                   help="Rydberg decay rate in 1/ms (default 1/0.45)")
    p.add_argument("--f1", type=float, default=None,
                   help="pairwise fidelity override (default: simulated)")
    p.add_argument("--fswap", type=float, default=None,
                   help="SWAP fidelity override (default: simulated)")
    p.add_argument("--tau", type=float, default=None,
                   help="per-operation Rydberg exposure in us "
                        "(default: from the simulated protocols)")

    p = sub.add_parser("robustness", parents=[common],
                       help="Monte Carlo fidelity distribution under drive dispersion")
    _add_pair_options(p, required=False)
    _add_coupling_overrides(p)
    p.add_argument("--epsilon", type=float, default=0.1,
                   help="relative dispersion half-width (default 0.1)")
    p.add_argument("--samples", type=int, default=100000,
                   help="Monte Carlo samples (default 100000)")
    p.add_argument("--seed", type=int, default=12345,
                   help="scan seed (default 12345)")
    p.add_argument("--omega", type=float, default=None,
                   help="nominal Rabi frequency in kHz (default sqrt|V+ V-|)")

    p = sub.add_parser("table", parents=[common],
                       help="reproduce a reference table with deviations")
    p.add_argument("table_id", choices=("I", "II", "III", "IV"), metavar="{I,II,III,IV}")

    p = sub.add_parser("figure", parents=[common],
                       help="emit plot data for the trajectory or histogram figure")
    p.add_argument("figure_id", type=int, choices=(3, 4), metavar="{3,4}")
    p.add_argument("--samples", type=int, default=100000,
                   help="Monte Carlo samples for the histogram figure")
    p.add_argument("--seed", type=int, default=12345,
                   help="seed for the histogram figure")

    coercions = _collect_coercions(parser)
    return parser, coercions


def _coercer(action: argparse.Action):
    base = action.type if action.type is not None else str
    if isinstance(action, argparse._StoreTrueAction):
        base = _parse_bool
    if action.choices is None:
        return base
    choices = tuple(action.choices)

    def coerce(text: str):
        value = base(text)
        if value not in choices:
            raise ValueError(f"invalid value {value!r}; choose from {choices}")
        return value

    return coerce


def _collect_coercions(parser: argparse.ArgumentParser) -> dict:
    """Map option dest names to value-coercion callables, CLI-wide."""
    out: dict = {}

    def visit(p: argparse.ArgumentParser) -> None:
        for action in p._actions:
            if isinstance(action, argparse._SubParsersAction):
                for child in action.choices.values():
                    visit(child)
            elif action.option_strings and action.dest != "help":
                out[action.dest] = _coercer(action)

    visit(parser)
    return out


def _suppress_defaults(parser: argparse.ArgumentParser) -> dict[str, dict]:
    """Record per-command defaults, then parse explicit flags only.

    Subparsers apply their own defaults over any pre-seeded namespace,
    so config-file values cannot be injected up front; instead parsing
    reports only what was typed, and defaults merge in afterwards
    (defaults < config file < command line).
    """
    per_command: dict[str, dict] = {}
    originals: dict[int, object] = {}  # parent-parser actions are shared
    sub = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    for name, child in sub.choices.items():
        defaults = {}
        for action in child._actions:
            if action.dest == "help":
                continue
            if id(action) not in originals:
                originals[id(action)] = action.default
                action.default = argparse.SUPPRESS
            defaults[action.dest] = originals[id(action)]
        per_command[name] = defaults
    return per_command


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _load_config(path: str) -> dict[str, str]:
    """Flat key-value settings: ``key value`` or ``key = value`` lines."""
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, _, value = line.partition("=")
            else:
                key, _, value = line.partition(" ")
            key = key.strip().lstrip("-").replace("-", "_")
            value = value.strip()
            if not key or not value:
                raise ValueError(f"{path}:{lineno}: expected 'key value' pairs")
            entries[key] = value
    return entries


def _flatten(data, prefix: str = "") -> list[tuple[str, object]]:
    rows: list[tuple[str, object]] = []
    for key in sorted(data):
        value = data[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(_flatten(value, prefix=f"{name}."))
        elif isinstance(value, (list, tuple)):
            rows.append((name, json.dumps(to_jsonable(value))))
        else:
            rows.append((name, value))
    return rows


def _emit(args, data: dict, csv_spec: tuple[list[str], list] | None = None) -> None:
    if args.format == "csv":
        if csv_spec is None:
            csv_spec = (["key", "value"], [list(r) for r in _flatten(data)])
        text = rows_to_csv(*csv_spec)
    else:
        text = dumps_json(data)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _require_pair(args, parser: argparse.ArgumentParser) -> None:
    if args.na is None or args.nb is None:
        parser.error("--na and --nb are required")


def _couplings(args, model):
    if (args.v_plus is None) != (args.v_minus is None):
        raise ValueError("--v-plus and --v-minus must be given together")
    if args.v_plus is not None:
        return args.v_plus, args.v_minus, None
    coup = pair_couplings(model, args.na, args.nb, args.spacing)
    return coup.v_plus_khz, coup.v_minus_khz, coup


def _cmd_coeffs(args, model, parser):
    _require_pair(args, parser)
    pair = c6_pair(model, args.na, args.nb, dn_cutoff=args.dn)
    data = {
        "schema": SCHEMA,
        "command": "coeffs",
        "n_a": pair.n_a,
        "n_b": pair.n_b,
        "dn_cutoff": pair.dn_cutoff,
        "c6_ghz_um6": pair.c6,
        "c6_exchange_ghz_um6": pair.c6_exchange,
        "ratio": abs(pair.c6_exchange / pair.c6) if pair.c6 else math.inf,
        "channel_sums_ghz_um6": {
            str(k): v for k, v in enumerate(pair.channel_sums, start=1)
        },
    }
    return data, None


def _cmd_critical_radius(args, model, parser):
    _require_pair(args, parser)
    cr = critical_radius(model, args.na, args.nb, dn_cutoff=args.dn)
    data = {
        "schema": SCHEMA,
        "command": "critical-radius",
        "n_a": args.na,
        "n_b": args.nb,
        "radius_um": cr.radius_um,
        "channel": cr.channel,
        "ns": cr.ns,
        "nt": cr.nt,
        "defect_ghz": cr.defect_ghz,
        "rrr_ghz_um3": cr.rrr_ghz_um3,
        "max_coupling": cr.max_coupling,
    }
    return data, None


def _cmd_pair_sim(args, model, parser):
    v_plus, v_minus, _ = _couplings(args, model)
    nominal = math.sqrt(abs(v_plus * v_minus))
    omega2 = args.omega2 if args.omega2 is not None else nominal
    omega3 = args.omega3 if args.omega3 is not None else nominal
    data = {
        "schema": SCHEMA,
        "command": "pair-sim",
        "n_a": args.na,
        "n_b": args.nb,
        "spacing_um": args.spacing,
        "v_plus_khz": v_plus,
        "v_minus_khz": v_minus,
    }
    if args.optimize:
        opt = optimize_pairwise(v_plus, v_minus, seed=args.seed)
        result = opt.result
        data["optimizer"] = {
            "start_fidelity": opt.start_fidelity,
            "converged": opt.converged,
            "seed": args.seed,
        }
    else:
        result = pairwise_entangle(
            omega2, omega3, v_plus, v_minus, tau2_us=args.tau2, tau3_us=args.tau3
        )
    data.update(
        {
            "fidelity": result.fidelity,
            "omega_pulse2_khz": result.omega_pulse2_khz,
            "omega_pulse3_khz": result.omega_pulse3_khz,
            "tau2_us": result.tau2_us,
            "tau3_us": result.tau3_us,
            "per_pulse_durations_us": list(result.per_pulse_durations_us),
            "total_duration_us": sum(result.per_pulse_durations_us),
            "total_rydberg_time_us": result.total_rydberg_time_us,
            "rydberg_exposure_us": result.rydberg_exposure_us,
        }
    )
    return data, None


def _cmd_swap_sim(args, model, parser):
    v_plus, v_minus, coup = _couplings(args, model)
    if args.v_blockade is not None:
        v_blockade = args.v_blockade
    elif coup is not None:
        v_blockade = coup.corner_khz
    else:
        raise ValueError("--v-blockade is required when couplings are injected")
    nominal = math.sqrt(abs(v_plus * v_minus))
    omega = args.omega if args.omega is not None else 1.5 * nominal
    t_2pi = args.t2pi if args.t2pi is not None else 1e3 / omega
    result = swap_gate(omega, v_plus, v_minus, v_blockade, t_2pi, phi=args.phi)
    data = {
        "schema": SCHEMA,
        "command": "swap-sim",
        "n_a": args.na,
        "n_b": args.nb,
        "spacing_um": args.spacing,
        "v_plus_khz": v_plus,
        "v_minus_khz": v_minus,
        "v_blockade_khz": v_blockade,
        "omega_khz": omega,
        "t_2pi_us": t_2pi,
        "phi": args.phi,
        "basis_fidelities": result.basis_fidelities,
        "gate_fidelity": result.gate_fidelity,
        "total_duration_us": result.total_duration_us,
        "rydberg_exposure_us": result.rydberg_exposure_us,
        "total_rydberg_time_us": result.total_rydberg_time_us,
    }
    return data, None


def _cmd_chain(args, model, parser):
    spec = ChainSpec(
        atom_count=args.atoms,
        spacing_um=args.spacing,
        pair=(args.na, args.nb),
        gamma_per_ms=args.gamma,
    )
    schedule = chain_schedule(model, spec)
    coup = pair_couplings(model, args.na, args.nb, args.spacing)
    nominal = coup.nominal_omega_khz

    f1 = args.f1
    f_swap = args.fswap
    tau = args.tau
    pair_result = swap_result = None
    if f1 is None or tau is None:
        pair_result = pairwise_entangle(
            nominal, nominal, coup.v_plus_khz, coup.v_minus_khz
        )
        if f1 is None:
            f1 = pair_result.fidelity
    if f_swap is None or tau is None:
        omega_swap = 1.5 * nominal
        swap_result = swap_gate(
            omega_swap, coup.v_plus_khz, coup.v_minus_khz,
            coup.corner_khz, 1e3 / omega_swap,
        )
        if f_swap is None:
            f_swap = swap_result.gate_fidelity
    if tau is None:
        n_pair = spec.atom_count // 2
        n_swap = n_pair - 1
        total = (
            n_pair * pair_result.rydberg_exposure_us
            + n_swap * swap_result.rydberg_exposure_us
        )
        tau = total / (n_pair + n_swap)

    estimate = chain_fidelity_estimate(spec, f1, f_swap, tau_us=tau)
    spectator = spectator_blockade(model, spec)
    data = {
        "schema": SCHEMA,
        "command": "chain",
        "atom_count": spec.atom_count,
        "n_a": args.na,
        "n_b": args.nb,
        "spacing_um": args.spacing,
        "gamma_per_ms": args.gamma,
        "f1": f1,
        "f_swap": f_swap,
        "tau_us": tau,
        "fidelity": estimate.fidelity,
        "linear_error": estimate.linear_error,
        "gamma_tau": estimate.gamma_tau,
        "pairwise_ops": estimate.pairwise_ops,
        "swap_ops": estimate.swap_ops,
        "schedule": {
            "pulse_count": len(schedule.pulses),
            "step_durations_us": list(schedule.step_durations_us),
            "total_duration_us": schedule.total_duration_us,
        },
        "spectator": {
            "shift_khz": spectator.shift_khz,
            "separation_um": spectator.separation_um,
            "ratio_to_v_plus": spectator.ratio_to_v_plus,
            "negligible": spectator.negligible,
        },
    }
    return data, None


def _cmd_robustness(args, model, parser):
    v_plus, v_minus, coup = _couplings(args, model)
    omega = args.omega
    if omega is None:
        omega = math.sqrt(abs(v_plus * v_minus))
    cfg = RobustnessConfig(
        epsilon=args.epsilon,
        samples=args.samples,
        seed=args.seed,
        omega_khz=omega,
        v_plus_khz=v_plus,
        v_minus_khz=v_minus,
    )
    hist = robustness_scan(cfg)
    return histogram_payload(cfg, hist), histogram_rows(hist)


def _cmd_table(args, model, parser):
    data = run_table(args.table_id, model)
    return data, (data["columns"], data["rows"])


def _cmd_figure(args, model, parser):
    data = run_figure(args.figure_id, model, samples=args.samples, seed=args.seed)
    return data, (data["columns"], data["rows"])


_COMMANDS = {
    "coeffs": _cmd_coeffs,
    "critical-radius": _cmd_critical_radius,
    "pair-sim": _cmd_pair_sim,
    "swap-sim": _cmd_swap_sim,
    "chain": _cmd_chain,
    "robustness": _cmd_robustness,
    "table": _cmd_table,
    "figure": _cmd_figure,
}


def main(argv: list[str] | None = None) -> int:
    parser, coercions = build_parser()
    per_command = _suppress_defaults(parser)

    peek = argparse.ArgumentParser(add_help=False)
    peek.add_argument("--config", default=None)
    peeked, _ = peek.parse_known_args(argv)

    config_values: dict = {}
    if peeked.config is not None:
        try:
            entries = _load_config(peeked.config)
            for key, raw in entries.items():
                if key == "config":
                    continue
                if key not in coercions:
                    raise ValueError(f"unknown config key {key!r}")
                config_values[key] = coercions[key](raw)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))

    explicit = parser.parse_args(argv)
    merged = dict(per_command[explicit.command])
    merged.update(config_values)
    merged.update(vars(explicit))
    args = argparse.Namespace(**merged)
    try:
        model = (
            QuantumDefectModel.from_file(args.defects)
            if args.defects
            else QuantumDefectModel.default()
        )
        data, csv_spec = _COMMANDS[args.command](args, model, parser)
        _emit(args, data, csv_spec)
    except (ValueError, DefectDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
