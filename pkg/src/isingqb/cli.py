"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 infeasible request, 3 unreadable
or malformed input file, 4 residual or convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from isingqb.boundary import solve_perfect, verify_constants
from isingqb.errors import ConvergenceError, InfeasibleError
from isingqb.model import ControlConstants, GateKind, ModelParams, control_field
from isingqb.perturbative import (
    PerturbationInputs,
    compare_with_exact,
    fidelity_at_bound_fraction,
    max_fidelity,
)
from isingqb.search import fidelity_trace

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_PARSE = 3
EXIT_RESIDUAL = 4

TIME_CONVENTION = (
    "tau = J12 * t. 'seconds_if_J_is_angular' takes the quoted Hz value as J12 "
    "directly (T = tau / J12); 'seconds_if_J_is_hz' uses J12 = 2 pi * Hz "
    "(T = tau / (2 pi J12))."
)


@dataclass(frozen=True)
class Preset:
    name: str
    J12_hz: float
    J23_hz: float

    def __post_init__(self):
        if not (self.J12_hz > 0 and self.J23_hz > 0):
            raise ValueError("preset couplings must be positive")

    @property
    def K(self) -> float:
        return self.J23_hz / self.J12_hz


PRESETS = {
    p.name: p
    for p in (
        Preset("ethanamide", 88.05, 88.05),
        Preset("trifluoroaniline", 20.0, 20.0),
        Preset("chloro-nitro-benzene", 8.0, 7.0),
        Preset("chloroethenylphosphonic-acid", 9.1, 11.3),
        Preset("alanine", 54.0, 35.0),
    )
}


class UsageError(Exception):
    pass


class ParseFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fidelity(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("fidelity must lie in (0, 1]")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, GateKind):
        return obj.value
    return obj


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in columns})
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _resolve_k(args) -> tuple[float, Preset | None]:
    if getattr(args, "preset", None):
        preset = PRESETS[args.preset]
        return preset.K, preset
    if getattr(args, "k", None) is None:
        raise UsageError("one of --k or --preset is required")
    return args.k, None


def physical_time(tau: float, preset: Preset | None) -> dict | None:
    if preset is None:
        return None
    return {
        "J12_hz": preset.J12_hz,
        "seconds_if_J_is_angular": tau / preset.J12_hz,
        "seconds_if_J_is_hz": tau / (2 * math.pi * preset.J12_hz),
        "convention": TIME_CONVENTION,
    }


def _energy(K: float, c: ControlConstants) -> float:
    return ModelParams.for_constants(K, c).omega_hat


def cmd_solve_perfect(args) -> int:
    K, preset = _resolve_k(args)
    try:
        sols = solve_perfect(ModelParams(K), args.target, n_max=args.n_max, m_max=args.m_max)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        print(f"hint: max achievable fidelity f_max = {exc.f_max:.6g}; try solve-perturbative", file=sys.stderr)
        return EXIT_INFEASIBLE
    rows = []
    for s in sols[: args.limit] if args.limit else sols:
        rows.append({
            "n": list(s.profile.n),
            "m": s.profile.m,
            "constants": s.constants.as_dict(),
            "omega_K_sq": s.omega_K_sq,
            "omega_hat": _energy(K, s.constants),
            "f_minus": s.f_minus, "f_plus": s.f_plus,
            "g_plus": s.g_plus, "g_minus": s.g_minus,
            "physical_time": physical_time(s.constants.tau_star, preset),
        })
    if args.format == "csv":
        flat = [
            {"n": " ".join(map(str, r["n"])), "m": r["m"], **r["constants"],
             "omega_K_sq": r["omega_K_sq"], "omega_hat": r["omega_hat"]}
            for r in rows
        ]
        cols = ["n", "m", "tau_star", "Omega", "Bz", "B0", "theta0", "omega_K_sq", "omega_hat"]
        _emit(_rows_to_csv(flat, cols), args.out)
        return EXIT_OK
    report = {
        "command": "solve-perfect",
        "K": K,
        "preset": preset.name if preset else None,
        "target": GateKind(args.target).value,
        "fidelity": 1.0,
        "constants": rows[0]["constants"],
        "physical_time": rows[0]["physical_time"],
        "solutions": rows,
    }
    _emit(dumps(report), args.out)
    return EXIT_OK


def cmd_solve_perturbative(args) -> int:
    K, preset = _resolve_k(args)
    if args.fidelity is None:
        raise UsageError("--fidelity is required")
    inp = PerturbationInputs.from_K(K, args.fidelity)
    try:
        cmp = compare_with_exact(inp, args.target)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"exact solve failed: {exc}", file=sys.stderr)
        return EXIT_RESIDUAL
    pert = cmp.perturbative
    report = {
        "command": "solve-perturbative",
        "K": K,
        "preset": preset.name if preset else None,
        "target": GateKind(args.target).value,
        "fidelity": args.fidelity,
        "f_max": inp.f_max,
        "epsilon": inp.epsilon,
        "delta_eps_K": pert.delta_eps_K,
        "m": pert.m,
        "n": list(pert.profile.n),
        "perturbative": {
            "constants": pert.constants.as_dict(),
            "omega_K_sq": pert.omega_K_sq,
            "sigma": pert.sigma.sigma,
        },
        "exact": {
            "constants": cmp.exact.as_dict(),
            "omega_K_sq": cmp.exact.omega_K_sq,
            "omega_hat": _energy(K, cmp.exact),
            "sigma": cmp.exact_sigma.sigma,
        },
        "deviation": cmp.deviations(),
        "constants": cmp.exact.as_dict(),
        "physical_time": physical_time(cmp.exact.tau_star, preset),
    }
    if args.format == "csv":
        rows = [
            {"solution": "perturbative", **pert.constants.as_dict(), "omega_K_sq": pert.omega_K_sq},
            {"solution": "exact", **cmp.exact.as_dict(), "omega_K_sq": cmp.exact.omega_K_sq},
        ]
        cols = ["solution", "tau_star", "Omega", "Bz", "B0", "theta0", "omega_K_sq"]
        _emit(_rows_to_csv(rows, cols), args.out)
    else:
        _emit(dumps(report), args.out)
    return EXIT_OK


_CONSTANT_FIELDS = ("B0", "Bz", "Omega", "tau_star")


def load_constants_file(path: str) -> tuple[float, GateKind, float, ControlConstants]:
    """Read ``K``, ``target``, ``fidelity`` (default 1) and ``constants`` from JSON."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseFailure(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseFailure("top level must be a JSON object")
    try:
        K = float(data["K"])
        kind = GateKind(data["target"])
        f = float(data.get("fidelity", 1.0))
        raw = data["constants"]
        missing = [k for k in _CONSTANT_FIELDS if k not in raw]
        if missing:
            raise ParseFailure(f"constants missing field(s): {', '.join(missing)}")
        c = ControlConstants(
            B0=float(raw["B0"]), Bz=float(raw["Bz"]), Omega=float(raw["Omega"]),
            tau_star=float(raw["tau_star"]), theta0=float(raw.get("theta0", 0.0)),
        )
    except KeyError as exc:
        raise ParseFailure(f"missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ParseFailure(f"invalid value: {exc}") from exc
    if not 0 < f <= 1:
        raise ParseFailure("fidelity must lie in (0, 1]")
    return K, kind, f, c


def cmd_verify(args) -> int:
    try:
        K, kind, f, c = load_constants_file(args.constants)
    except ParseFailure as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    report = verify_constants(c, K, kind, f, steps=args.steps)
    out = {"command": "verify", **report.as_dict()}
    _emit(dumps(out), args.out)
    if not report.passed:
        print("residual failure: " + ", ".join(report.failures), file=sys.stderr)
        return EXIT_RESIDUAL
    return EXIT_OK


SWEEP_COLUMNS = ["K", "delta_K", "fidelity", "f_max", "tau_perturbative", "tau_exact", "status"]


def sweep_rows(k_from: float, k_to: float, count: int, fidelity: float | None, fraction: float, target_kind) -> list[dict]:
    rows = []
    for K in np.linspace(k_from, k_to, count):
        K = float(K)
        dK = K - 1.0
        f = fidelity if fidelity is not None else fidelity_at_bound_fraction(dK, fraction)
        row = {"K": K, "delta_K": dK, "fidelity": f, "f_max": max_fidelity(dK),
               "tau_perturbative": None, "tau_exact": None, "status": "ok"}
        try:
            cmp = compare_with_exact(PerturbationInputs(dK, f), target_kind)
            row["tau_perturbative"] = cmp.perturbative.constants.tau_star
            row["tau_exact"] = cmp.exact.tau_star
            if not cmp.perturbative.sigma.within_expansion:
                row["status"] = "outside-expansion"
        except InfeasibleError:
            row["status"] = "infeasible"
        except ConvergenceError:
            row["status"] = "no-exact-root"
        rows.append(row)
    return rows


def cmd_sweep_k(args) -> int:
    rows = sweep_rows(args.k_from, args.k_to, args.steps, args.fidelity, args.bound_fraction, args.target)
    if args.format == "json":
        _emit(dumps({"command": "sweep-k", "target": GateKind(args.target).value, "rows": rows}), args.out)
    else:
        _emit(_rows_to_csv(rows, SWEEP_COLUMNS), args.out)
    return EXIT_OK


TRACE_COLUMNS = ["tau", "Bx", "By", "Bz", "fidelity"]


def cmd_field_trace(args) -> int:
    if args.constants:
        try:
            K, kind, _, c = load_constants_file(args.constants)
        except ParseFailure as exc:
            print(f"parse error: {exc}", file=sys.stderr)
            return EXIT_PARSE
    else:
        K, _ = _resolve_k(args)
        kind = GateKind(args.target)
        try:
            c = solve_perfect(ModelParams(K), kind, n_max=args.n_max, m_max=args.m_max)[0].constants
        except InfeasibleError as exc:
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
    p = ModelParams.for_constants(K, c)
    taus, fids = fidelity_trace(p, c, args.samples, kind)
    fld = control_field(taus, c)
    rows = [
        {"tau": float(t), "Bx": float(b[0]), "By": float(b[1]), "Bz": float(b[2]), "fidelity": float(f)}
        for t, b, f in zip(taus, fld, fids)
    ]
    if args.format == "json":
        _emit(dumps({"command": "field-trace", "K": K, "target": kind.value,
                     "constants": c.as_dict(), "rows": rows}), args.out)
    else:
        _emit(_rows_to_csv(rows, TRACE_COLUMNS), args.out)
    return EXIT_OK


def cmd_presets(args) -> int:
    rows = [{"name": p.name, "J12_hz": p.J12_hz, "J23_hz": p.J23_hz, "K": p.K,
             "f_max": max_fidelity(p.K - 1.0)} for p in PRESETS.values()]
    if args.format == "csv":
        _emit(_rows_to_csv(rows, ["name", "J12_hz", "J23_hz", "K", "f_max"]), args.out)
    else:
        _emit(dumps({"command": "presets", "presets": rows}), args.out)
    return EXIT_OK


def _add_common(sp, fmt_default="json"):
    sp.add_argument("--format", choices=["json", "csv"], default=fmt_default)
    sp.add_argument("--out", help="write to this path instead of stdout")


def _add_model(sp):
    sp.add_argument("--target", choices=[g.value for g in GateKind], default=GateKind.US13.value)
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--k", type=float, help="coupling ratio J23/J12")
    grp.add_argument("--preset", choices=sorted(PRESETS), help="molecule preset")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="isingqb", description="Time-optimal gates on a controlled three-qubit Ising chain.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("solve-perfect", help="exact f = 1 solutions by integer-profile search")
    _add_model(sp)
    sp.add_argument("--n-max", type=_positive_int, default=6)
    sp.add_argument("--m-max", type=_positive_int, default=3)
    sp.add_argument("--limit", type=_positive_int, help="report only the fastest N solutions")
    _add_common(sp)
    sp.set_defaults(func=cmd_solve_perfect)

    sp = sub.add_parser("solve-perturbative", help="first-order solution near K = 1 plus the exact root")
    _add_model(sp)
    sp.add_argument("--fidelity", type=_fidelity)
    _add_common(sp)
    sp.set_defaults(func=cmd_solve_perturbative)

    sp = sub.add_parser("verify", help="certify a constants file against the numeric oracle")
    sp.add_argument("constants", help="JSON file with K, target, fidelity and constants")
    sp.add_argument("--steps", type=_positive_int, default=4096)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep-k", help="tau* and f_max across a range of K")
    sp.add_argument("--target", choices=[g.value for g in GateKind], default=GateKind.US13.value)
    sp.add_argument("--from", dest="k_from", type=float, default=0.9)
    sp.add_argument("--to", dest="k_to", type=float, default=1.1)
    sp.add_argument("--steps", type=_positive_int, default=21, help="number of K rows")
    sp.add_argument("--fidelity", type=_fidelity, help="fixed fidelity (default: per-row fraction of the bound)")
    sp.add_argument("--bound-fraction", type=float, default=0.9)
    _add_common(sp, fmt_default="csv")
    sp.set_defaults(func=cmd_sweep_k)

    sp = sub.add_parser("field-trace", help="control field and fidelity along the optimal trajectory")
    _add_model(sp)
    sp.add_argument("--constants", help="JSON constants file (default: fastest perfect solution)")
    sp.add_argument("--samples", type=int, default=101)
    sp.add_argument("--n-max", type=_positive_int, default=6)
    sp.add_argument("--m-max", type=_positive_int, default=3)
    _add_common(sp, fmt_default="csv")
    sp.set_defaults(func=cmd_field_trace)

    sp = sub.add_parser("presets", help="list molecule presets")
    sp.add_argument("action", nargs="?", choices=["list"], default="list")
    _add_common(sp)
    sp.set_defaults(func=cmd_presets)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("solve-perfect", "field-trace") and args.n_max < 2:
        parser.error("--n-max must be at least 2")
    if args.command == "field-trace" and args.samples < 2:
        parser.error("--samples must be at least 2")
    if args.command == "verify" and args.steps < 16:
        parser.error("--steps must be at least 16")
    if args.command == "sweep-k" and not 0 < args.bound_fraction <= 1:
        parser.error("--bound-fraction must lie in (0, 1]")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
