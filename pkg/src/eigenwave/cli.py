"""Command line: reference tables and sweep data as CSV, plus a Monte Carlo check.

Every command can take ``--config FILE`` (``key=value`` lines, keys are the
long option names with dashes or underscores). Command-line flags override
the file and the file overrides built-in defaults. Every run emits a manifest:
to ``--manifest`` if given, else ``<out>.manifest`` next to ``--out``, else to
standard error. A manifest is itself a valid config file, and
``eigenwave replay X.manifest`` re-runs it and checks the output checksum.

Exit codes: 0 ok, 2 invalid arguments, 3 infeasible BER target,
4 verification failure, 5 numeric-consistency error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .atp import atp_dynamic, atp_traditional, conditional_ber, individual_op
from .eigen import ChannelDims, NumericConsistencyError, outage_cdf
from .montecarlo import SimConfig, simulate
from .policy import (
    InfeasibleSpecError,
    Modulation,
    StreamSpec,
    derive_params,
    feasibility_check,
    lambda_out_from_siso_oe,
    snr_tilde_and_c,
)
from .special import gaussian_q

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4
EXIT_NUMERIC = 5

C_TABLE_BER = tuple(10.0 ** (-e / 2) for e in range(6, 17))
OUTAGE_TABLE_OE = (0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8)
CEILING_OE = tuple(round(1.0 + 0.1 * j, 1) for j in range(11))
ATP_BER_GRID = tuple(float(b) for b in np.logspace(-3, -8, 10))

Z_FAIL = 4.0
OUTAGE_GROUP = ("oe", "lambda_out", "target_op")
NOT_RECORDED = {"out", "config", "manifest", "command", "func"}


class CommandError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


# -- argument plumbing ------------------------------------------------------

def _floats(text):
    return [float(v) for v in str(text).replace(",", " ").split()]


def _ints(text):
    return [int(v) for v in str(text).replace(",", " ").split()]


class _ListAction(argparse.Action):
    """Accept ``--ber 1e-3 1e-6`` as well as ``--ber 1e-3,1e-6``."""

    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, [v for chunk in values for v in chunk])


def _opt(parser, *flags, default=None, group=None, **kw):
    """Register an option whose default only applies after the config file."""
    action = (group or parser).add_argument(*flags, default=None, **kw)
    parser._eigen_defaults[action.dest] = default
    return action


def _new_sub(subparsers, name, help_text):
    sub = subparsers.add_parser(name, help=help_text, description=help_text)
    sub._eigen_defaults = {}
    _opt(sub, "--out", help="output CSV path (default: standard output)")
    _opt(sub, "--exact", action="store_const", const=True,
         help="render floats with 17 significant digits instead of 4")
    _opt(sub, "--config", help="key=value configuration file")
    _opt(sub, "--manifest", help="manifest path (default: <out>.manifest)")
    return sub


def _add_dims(sub, nt=3, nr=6):
    _opt(sub, "--nt", type=int, default=nt, help=f"transmit antennas (default {nt})")
    _opt(sub, "--nr", type=int, default=nr, help=f"receive antennas (default {nr})")


def _add_modulation(sub):
    _opt(sub, "--xi", type=float, default=1.0, help="BER prefactor xi (default 1, BPSK)")
    _opt(sub, "--beta", type=float, default=2.0, help="BER exponent beta (default 2, BPSK)")


def _add_outage(sub):
    group = sub.add_mutually_exclusive_group()
    _opt(sub, "--oe", type=float, group=group, help="SISO outage exponent (default 1.0)")
    _opt(sub, "--lambda-out", type=float, group=group, help="explicit eigenvalue threshold")
    _opt(sub, "--target-op", type=float, group=group,
         help="target individual outage probability")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigenwave",
        description="Outage and average transmit power of eigen-beamformed MIMO links.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = _new_sub(subs, "qbound", "Q function against its Chernoff and dynamic bounds")
    _opt(sub, "--snr-min", type=float, default=0.0, help="first SNR in dB")
    _opt(sub, "--snr-max", type=float, default=14.0, help="last SNR in dB")
    _opt(sub, "--snr-step", type=float, default=0.25, help="SNR step in dB")
    _opt(sub, "--anchors", type=_floats, nargs="+", action=_ListAction,
         default=list(C_TABLE_BER), help="BER values whose tight c anchors the dynamic bound")
    _add_modulation(sub)
    sub.set_defaults(func=cmd_qbound)

    sub = _new_sub(subs, "cparam", "SNR and tight constant c per target BER")
    _opt(sub, "--ber", type=_floats, nargs="+", action=_ListAction,
         default=list(C_TABLE_BER), help="target BER list")
    _add_modulation(sub)
    sub.set_defaults(func=cmd_cparam)

    sub = _new_sub(subs, "optable", "SISO vs MIMO individual outage probability")
    _add_dims(sub)
    _opt(sub, "--stream", type=int, help="stream index (default: weakest, m)")
    _opt(sub, "--oe", type=_floats, nargs="+", action=_ListAction,
         default=list(OUTAGE_TABLE_OE), help="SISO outage exponents")
    sub.set_defaults(func=cmd_optable)

    sub = _new_sub(subs, "constraint", "largest admissible BER per stream and OE")
    _add_dims(sub)
    _opt(sub, "--oe", type=_floats, nargs="+", action=_ListAction,
         default=list(CEILING_OE), help="SISO outage exponents")
    _opt(sub, "--xi", type=float, default=1.0, help="BER prefactor xi")
    sub.set_defaults(func=cmd_constraint)

    sub = _new_sub(subs, "atp", "closed-form ATP for both policies over a BER grid")
    _add_dims(sub)
    _opt(sub, "--nr-list", type=_ints, nargs="+", action=_ListAction,
         help="one series per receive-antenna count (n sweep)")
    _opt(sub, "--stream", type=int, default=0, help="stream index (0 = all)")
    _add_outage(sub)
    _opt(sub, "--ber", type=_floats, nargs="+", action=_ListAction,
         default=list(ATP_BER_GRID), help="target BER grid")
    _add_modulation(sub)
    sub.set_defaults(func=cmd_atp)

    sub = _new_sub(subs, "simulate", "Monte Carlo estimates next to the closed forms")
    _add_dims(sub)
    _opt(sub, "--stream", type=int, default=0, help="stream index (0 = all)")
    _add_outage(sub)
    _opt(sub, "--ber", type=float, default=1e-6, help="target BER")
    _opt(sub, "--policy", choices=("trad", "dyn"), default="trad", help="power rule")
    _opt(sub, "--samples", type=int, default=1_000_000, help="channel realizations")
    _opt(sub, "--seed", type=int, default=42, help="RNG seed")
    _opt(sub, "--chunk", type=int, default=65_536, help="samples per chunk")
    _add_modulation(sub)
    sub.set_defaults(func=cmd_simulate)

    sub = subs.add_parser("replay", help="re-run a manifest and verify its checksum")
    sub._eigen_defaults = {}
    sub.add_argument("manifest_file", help="path of a .manifest file")
    _opt(sub, "--out", help="output CSV path (default: standard output)")
    sub.set_defaults(func=None)
    return parser


def read_keyvalue(path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CommandError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def resolve_args(parser, argv):
    """Parse ``argv`` and layer flags over the config file over defaults."""
    args = parser.parse_args(argv)
    if args.command == "replay":
        return args
    sub = _subparser(parser, args.command)
    file_values = read_keyvalue(args.config) if args.config else {}
    actions = {a.dest: a for a in sub._actions}
    if any(getattr(args, k, None) is not None for k in OUTAGE_GROUP if k in actions):
        file_values = {k: v for k, v in file_values.items() if k not in OUTAGE_GROUP}
    for dest, raw in file_values.items():
        action = actions.get(dest)
        if action is None or dest in NOT_RECORDED or getattr(args, dest) is not None:
            continue
        try:
            if action.const is True:
                value = raw.lower() in ("1", "true", "yes", "on")
            elif raw == "" or raw == "None":
                value = None
            else:
                value = action.type(raw) if action.type else raw
        except ValueError as exc:
            raise CommandError(f"config value {dest}={raw!r}: {exc}") from exc
        setattr(args, dest, value)
    for dest, default in sub._eigen_defaults.items():
        if getattr(args, dest) is None:
            setattr(args, dest, default)
    if "oe" in actions and all(k in actions for k in OUTAGE_GROUP):
        chosen = [k for k in OUTAGE_GROUP if getattr(args, k) is not None]
        if len(chosen) > 1:
            raise CommandError(f"choose one of --oe/--lambda-out/--target-op, got {chosen}")
        if not chosen:
            args.oe = 1.0
    return args


# -- rendering ---------------------------------------------------------------

def _fmt(value, exact):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return ("%.17g" if exact else "%.4g") % value
    return str(value)


def render_csv(header, rows, exact) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v, exact) for v in row])
    return buf.getvalue()


def _manifest_value(value):
    if isinstance(value, (list, tuple)):
        return ",".join(_manifest_value(v) for v in value)
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


def build_manifest(args, checksum: str) -> str:
    lines = [
        f"command={args.command}",
        f"version={__version__}",
        f"backend={_kernels.BACKEND}",
    ]
    for key in sorted(vars(args)):
        if key in NOT_RECORDED:
            continue
        lines.append(f"{key.replace('_', '-')}={_manifest_value(getattr(args, key))}")
    lines.append(f"checksum=sha256:{checksum}")
    return "\n".join(lines) + "\n"


# -- commands ----------------------------------------------------------------

def _modulation(args):
    try:
        return Modulation(args.xi, args.beta)
    except ValueError as exc:
        raise CommandError(str(exc)) from exc


def _dims(args, nr=None):
    try:
        return ChannelDims(args.nt, args.nr if nr is None else nr)
    except ValueError as exc:
        raise CommandError(str(exc)) from exc


def _streams(args, dims):
    if not args.stream:
        return list(range(1, dims.m + 1))
    try:
        return [dims.check_index(args.stream)]
    except ValueError as exc:
        raise CommandError(str(exc)) from exc


def _outage_kwargs(args):
    return {k: getattr(args, k) for k in OUTAGE_GROUP if getattr(args, k) is not None}


def dynamic_c_for(snr, anchors):
    """Tight c of the highest-SNR anchor at or below ``snr`` (2 if none).

    Only anchors below the evaluation SNR give a valid upper bound.
    """
    best_snr, best_c = -1.0, 2.0
    for anchor_snr, c in anchors:
        if best_snr < anchor_snr <= snr * (1.0 + 1e-12):
            best_snr, best_c = anchor_snr, c
    return best_c


def cmd_qbound(args):
    mod = _modulation(args)
    if args.snr_step <= 0 or args.snr_max < args.snr_min:
        raise CommandError("need snr-step > 0 and snr-max >= snr-min")
    anchors = [snr_tilde_and_c(b, mod) for b in args.anchors]
    count = int(math.floor((args.snr_max - args.snr_min) / args.snr_step + 1e-9)) + 1
    rows = []
    for j in range(count):
        snr_db = args.snr_min + j * args.snr_step
        snr = 10.0 ** (snr_db / 10.0)
        decay = math.exp(-0.5 * mod.beta * snr)
        c = dynamic_c_for(snr, anchors)
        rows.append((snr_db, mod.xi * gaussian_q(math.sqrt(mod.beta * snr)),
                     0.5 * mod.xi * decay, mod.xi / c * decay))
    return ["snr_db", "q_exact", "chernoff_bound", "dynamic_bound"], rows


def _db(snr):
    return 10.0 * math.log10(snr) if snr > 0 else -math.inf


def cmd_cparam(args):
    mod = _modulation(args)
    rows = []
    for ber in args.ber:
        snr, c = snr_tilde_and_c(ber, mod)
        rows.append((ber, _db(snr), c))
    return ["ber", "snr_db", "c"], rows


def cmd_optable(args):
    dims = _dims(args)
    i = dims.m if args.stream is None else args.stream
    try:
        i = dims.check_index(i)
    except ValueError as exc:
        raise CommandError(str(exc)) from exc
    siso = ChannelDims(1, 1)
    rows = []
    for oe in args.oe:
        lam = lambda_out_from_siso_oe(oe)
        rows.append((oe, lam, outage_cdf(siso, 1, lam), individual_op(dims, i, lam)))
    return ["oe", "lambda_out", "siso_op", "mimo_op"], rows


def cmd_constraint(args):
    dims = _dims(args)
    rows = []
    for oe in args.oe:
        for i in range(1, dims.m + 1):
            params = derive_params(dims, StreamSpec(i, 1e-12, Modulation(args.xi), oe=oe))
            rows.append((oe, i, 0.5 * args.xi * params.lambda_out / params.lambda_mea))
    return ["oe", "stream", "ber_ceiling"], rows


def cmd_atp(args):
    mod = _modulation(args)
    series = args.nr_list or [args.nr]
    rows = []
    for nr in series:
        dims = _dims(args, nr)
        for i in _streams(args, dims):
            for ber in args.ber:
                spec = StreamSpec(i, ber, mod, **_outage_kwargs(args))
                params = derive_params(dims, spec)
                check = feasibility_check(spec, params.lambda_out, params.lambda_mea)
                if check:
                    trad = atp_traditional(dims, spec, params)
                    dyn = atp_dynamic(dims, spec, params)
                    values = (trad.total, dyn.total, trad.rho_s_hat, trad.rho_delta,
                              dyn.rho_saving)
                else:
                    values = (math.nan,) * 5
                rows.append((dims.n_t, dims.n_r, i, ber, params.lambda_out,
                             check.ceiling, check.feasible) + values)
    header = ["nt", "nr", "stream", "target_ber", "lambda_out", "ber_ceiling", "feasible",
              "atp_traditional", "atp_dynamic", "rho_s_hat", "rho_delta", "rho_saving"]
    return header, rows


def cmd_simulate(args):
    dims = _dims(args)
    mod = _modulation(args)
    policy = "dynamic" if args.policy == "dyn" else "traditional"
    specs = [StreamSpec(i, args.ber, mod, **_outage_kwargs(args)) for i in _streams(args, dims)]
    params = [derive_params(dims, s) for s in specs]
    for spec, prm in zip(specs, params):
        check = feasibility_check(spec, prm.lambda_out, prm.lambda_mea)
        if not check:
            raise CommandError(
                f"stream {spec.stream}: BER {spec.target_ber:.3g} above ceiling "
                f"{check.ceiling:.3g}", EXIT_INFEASIBLE)
    try:
        config = SimConfig(dims, specs, policy, args.samples, args.seed, args.chunk)
    except ValueError as exc:
        raise CommandError(str(exc)) from exc
    result = simulate(config, params=params)

    rows, failed = [], []
    for spec, prm, est in zip(specs, params, result.streams):
        i = spec.stream
        op = individual_op(dims, i, prm.lambda_out)
        n = est.outage.count
        op_se = math.sqrt(op * (1.0 - op) / n)
        atp = (atp_dynamic if policy == "dynamic" else atp_traditional)(dims, spec, prm).total
        ber_ref = conditional_ber(dims, spec, prm, policy, "exact")
        if policy == "traditional":
            chern_ref = spec.target_ber
        else:
            chern_ref = conditional_ber(dims, spec, prm, policy, "chernoff")
        checks = [
            ("outage", est.outage, op, est.outage.z_score(op, op_se), False),
            ("atp", est.atp, atp, est.atp.z_score(atp), False),
            ("cond_ber", est.cond_ber, ber_ref, est.cond_ber.z_score(ber_ref), False),
            ("chernoff_ber", est.chernoff_ber, chern_ref,
             est.chernoff_ber.z_score(chern_ref), False),
            ("cond_ber_vs_target", est.cond_ber, spec.target_ber,
             est.cond_ber.z_score(spec.target_ber), True),
        ]
        for name, mc, ref, z, one_sided in checks:
            rows.append((i, name, mc.mean, mc.std_error, mc.count, ref, z))
            if (z > 3.0) if one_sided else (abs(z) > Z_FAIL):
                failed.append(f"stream {i} {name}: z={z:.2f}")
    header = ["stream", "metric", "mc_mean", "mc_std_error", "count", "reference", "z"]
    return header, rows, failed


# -- entry point -------------------------------------------------------------

def run(args):
    """Execute a resolved command; returns (csv text, failures)."""
    produced = args.func(args)
    header, rows = produced[0], produced[1]
    failed = produced[2] if len(produced) > 2 else []
    return render_csv(header, rows, bool(args.exact)), failed


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _replay(parser, args):
    manifest = read_keyvalue(args.manifest_file)
    command = manifest.get("command")
    expected = manifest.get("checksum", "")
    if not command or not expected.startswith("sha256:"):
        raise CommandError("manifest lacks command or checksum")
    resolved = resolve_args(parser, [command, "--config", args.manifest_file])
    text, failed = run(resolved)
    _emit(text, args.out)
    digest = hashlib.sha256(text.encode()).hexdigest()
    if digest != expected.split(":", 1)[1]:
        print(f"replay mismatch: got sha256:{digest}, manifest has {expected}",
              file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_VERIFY if failed else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = resolve_args(parser, argv)
        if args.command == "replay":
            return _replay(parser, args)
        text, failed = run(args)
        _emit(text, args.out)
        manifest = build_manifest(args, hashlib.sha256(text.encode()).hexdigest())
        manifest_path = args.manifest or (f"{args.out}.manifest" if args.out else None)
        if manifest_path:
            Path(manifest_path).write_text(manifest)
        else:
            sys.stderr.write(manifest)
        if failed:
            # comment lines keep a captured stderr usable as a manifest
            for line in failed:
                print(f"# verification failed: {line}", file=sys.stderr)
            return EXIT_VERIFY
        return EXIT_OK
    except CommandError as exc:
        print(f"eigenwave: {exc}", file=sys.stderr)
        return exc.code
    except InfeasibleSpecError as exc:
        print(f"eigenwave: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericConsistencyError, ArithmeticError) as exc:
        print(f"eigenwave: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"eigenwave: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
