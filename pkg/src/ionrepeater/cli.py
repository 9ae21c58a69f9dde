"""Command-line front end.

Every subcommand is deterministic for fixed flags and ``--seed``. Tables go
out as CSV or JSON (``--format``), to ``--out`` or stdout. Exit codes:
0 success, 1 input or configuration error, 2 numerical failure.
"""
import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import asdict, fields, replace

import numpy as np

from . import nodephysics as npx
from . import protosim as ps
from . import qmath as qm
from . import ratemodel as rm
from . import tomo
from .ratemodel import LinkParams, NodeParams, PRESETS


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config

def _load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from None


def _pick(cls, d, what):
    known = {f.name for f in fields(cls)}
    bad = set(d) - known
    if bad:
        raise ConfigError(f"unknown {what} field(s): {', '.join(sorted(bad))}")
    return d


def load_config(path):
    """RunConfig JSON: {"node": preset | {"preset": ..., overrides}, "link": {...}, "sim": {...}}."""
    raw = {} if path is None else _load_json(path)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(raw) - {"node", "link", "sim", "seed", "format", "output"}
    if extra:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(extra))}")
    return raw


def node_from(spec, default="current") -> NodeParams:
    if spec is None:
        spec = default
    try:
        if isinstance(spec, str):
            return PRESETS[spec.lower()]
        if isinstance(spec, dict):
            spec = dict(spec)
            base = PRESETS[spec.pop("preset", default).lower()]
            return replace(base, **_pick(NodeParams, spec, "node"))
    except KeyError as e:
        raise ConfigError(f"unknown preset {e}") from None
    except TypeError as e:
        raise ConfigError(str(e)) from None
    raise ConfigError("node must be a preset name or an object")


def link_kw(cfg) -> dict:
    d = dict(cfg.get("link", {}))
    d.pop("L", None)
    return _pick(LinkParams, d, "link")


# ---------------------------------------------------------------- output

def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else repr(x)
    return x


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit(args, payload=None, rows=None, header=None):
    """Write JSON ``payload`` or CSV ``rows`` according to ``--format``."""
    buf = io.StringIO()
    if rows is not None and args.format == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    else:
        if payload is None:
            payload = [dict(zip(header, r)) for r in rows]
        buf.write(json.dumps(_clean(payload), indent=2) + "\n")
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

RATE_HEADER = ["preset", "L_km", "eta", "rkr_direct_hz", "rkr_repeater_hz", "skr_hz",
               "skr_bound_hz", "k_cutoff"]


def cmd_rates(args, cfg):
    nodes = {"custom": node_from(cfg["node"])} if "node" in cfg else dict(PRESETS)
    if args.preset:
        nodes = {args.preset: node_from(args.preset)}
    if args.step <= 0 or args.lmax < args.lmin or args.lmin < 0:
        raise ConfigError("need 0 <= lmin <= lmax and step > 0")
    Ls = np.arange(args.lmin, args.lmax + args.step / 2, args.step)
    kw = link_kw(cfg)
    rows = []
    for name, node in nodes.items():
        for L in Ls:
            link = LinkParams(float(L), **kw)
            res = rm.skr_pipeline(node, link)
            bound = rm.skr_bound(link) if L > 0 else float("inf")
            rows.append([name, float(L), link.eta, rm.rkr_direct(node, link),
                         rm.rkr_repeater(node, link), res.skr, bound, res.K])
    emit(args, rows=rows, header=RATE_HEADER)


def cmd_skr(args, cfg):
    node = node_from(cfg.get("node"), default=args.preset)
    kw = link_kw(cfg)
    Lx = rm.skr_crossover(node, **kw)
    out = {"crossover_km": Lx}
    if np.isfinite(Lx):
        res = rm.skr_pipeline(node, LinkParams(Lx, **kw))
        out.update(k_cutoff=res.K, skr_hz=res.skr, skf=res.skf, rkr_hz=res.rkr)
    if args.length is not None:
        res = rm.skr_pipeline(node, LinkParams(args.length, **kw))
        out["at_length"] = {"L_km": args.length, **asdict(res)}
    emit(args, out)


def cmd_chain(args, cfg):
    emit(args, {
        "levels": args.levels,
        "t_tot_s": rm.chain_time(args.levels, args.p0, L0=args.l0, T0=args.t0),
        "fidelity": rm.chain_fidelity(args.levels, args.f0, args.fswap, args.v),
    })


def cmd_bounds(args, cfg):
    out = {
        "min_length_km": rm.bound_min_length(args.gamma),
        "storage_time_s": rm.bound_storage_time(args.p0, args.gamma),
        "khat": rm.bound_khat(args.p0),
    }
    try:
        eta_star, t_perfect = rm.bound_perfect(args.p0, args.gamma)
        out.update(eta_star=eta_star, t_perfect_s=t_perfect)
    except ValueError:
        out.update(eta_star=None, t_perfect_s=None)
    emit(args, out)


def cmd_simulate(args, cfg):
    sim = dict(cfg.get("sim", {}))
    mode = args.mode or sim.pop("mode", "repeater")
    sim.pop("mode", None)
    if args.preset:
        link = LinkParams(args.length, **link_kw(cfg))
        pc = ps.ProtocolConfig.from_node(node_from(args.preset), link, mode=mode,
                                         **_pick(ps.ProtocolConfig, sim, "sim"))
    else:
        pc = ps.ProtocolConfig(mode=mode, **_pick(ps.ProtocolConfig, sim, "sim"))
    run = ps.simulate_repeater if mode == "repeater" else ps.simulate_direct
    stats = run(pc, args.trials, seed=args.seed)
    out = stats.to_dict()
    if mode == "repeater":
        out["analytic_P_s"] = ps.analytic_Ps(pc)
        out["analytic_P2"] = ps.analytic_P2(pc)
    emit(args, out)


def _state_report(rho):
    return {
        "rho": [[[z.real, z.imag] for z in row] for row in np.asarray(rho)],
        "bell_fidelities": qm.bell_weights(rho).tolist(),
        "fidelity": qm.nearest_max_entangled_fidelity(rho),
        "concurrence": qm.concurrence(rho),
    }


def cmd_tomo(args, cfg):
    if args.synthetic:
        label = {"phi+": 0, "phi-": 1, "psi+": 2, "psi-": 3}.get(args.synthetic.lower())
        if label is None:
            raise ConfigError("--synthetic takes phi+, phi-, psi+ or psi-")
        rho = qm.depolarize(qm.bell_state(label), args.synthetic_fidelity)
        data = tomo.synthetic_dataset([rho] * 4, np.random.default_rng(args.seed), photons=args.photons)
        emit(args, data.to_dict())
        return
    if not args.infile:
        raise ConfigError("tomo needs --in or --synthetic")
    data = tomo.TomoDataset.from_dict(_load_json(args.infile))
    mc = tomo.MCConfig(resamples=args.resamples, seed=args.seed) if args.resamples else None
    outcomes = []
    for i in range(4):
        try:
            probs, weights = tomo.bayes_probabilities(data, i)
        except ValueError as e:
            outcomes.append({"ion_outcome": i + 1, "error": str(e)})
            continue
        res = tomo.mle_reconstruct(probs, weights)
        rep = {"ion_outcome": i + 1, "converged": res.converged, **_state_report(res.rho)}
        if mc is not None:
            for name, stat in (("fidelity", qm.nearest_max_entangled_fidelity),
                               ("concurrence", qm.concurrence)):
                _, lo, hi = tomo.mc_error_bars(data, stat, mc, ion_outcome=i)
                rep[f"{name}_delta_minus"], rep[f"{name}_delta_plus"] = lo, hi
        outcomes.append(rep)
    emit(args, {"outcomes": outcomes})


def _temps(name):
    if name in npx.TEMPS:
        return npx.TEMPS[name]
    d = _load_json(name)
    try:
        return npx.MotionalState(**d)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def cmd_spinecho(args, cfg):
    temps = _temps(args.temps)
    se = npx.SpinEchoConfig(n_echoes=args.echoes, grid_max=args.grid,
                            calibration=args.calibration, miscalibration=args.miscal)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        area = npx.calibrated_area(temps.eta, se)
        C = npx.spin_echo_visibility(temps, se, area)
    emit(args, {"temps": args.temps, "nbar": temps.nbar, "eta": temps.eta,
                "pulse_area": area, "C": C,
                "warnings": sorted({str(w.message) for w in caught})})


def cmd_coupling(args, cfg):
    if args.offset_scan:
        emit(args, rows=npx.offset_scan(step=args.step).tolist(),
             header=["offset_nm", "g_ion1", "g_ion2"])
        return
    off, g = npx.equalize_coupling()
    emit(args, {"antinode": npx.cavity_coupling(0, 2.9),
                "shifted_455nm": npx.cavity_coupling(455, 2.9),
                "equalized_offset_nm": off, "equalized": g})


def cmd_budget(args, cfg):
    out = {}
    for name, lst in (("node_A", rm.BUDGET_NODE_A), ("node_B", rm.BUDGET_NODE_B)):
        v, s = rm.efficiency_budget(lst)
        out[name] = {"value": v, "sigma": s}
    emit(args, out)


def cmd_reproduce(args, cfg):
    from .reproduce import headline_checks
    current = node_from(cfg.get("node"), default="current")
    checks = headline_checks(slow=not args.quick, seed=args.seed, current=current)
    if args.format == "json":
        emit(args, [c.to_dict() for c in checks])
    else:
        lines = [f"{'check':44s} {'computed':>12s} {'reference':>10s}  result"]
        for c in checks:
            lines.append(f"{c.name:44s} {c.computed:12.6g} {c.reference:10.4g}  "
                         f"{'PASS' if c.passed else 'FAIL'} [{c.lo:.4g}, {c.hi:.4g}]")
        text = "\n".join(lines) + "\n"
        if args.out:
            with open(args.out, "w") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
    if args.strict and not all(c.passed for c in checks):
        return 1
    return 0


# ---------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="RunConfig JSON file")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--json", dest="format", action="store_const", const="json",
                        help="shorthand for --format json")
    common.add_argument("--strict", action="store_true", help="nonzero exit on failed checks")

    p = argparse.ArgumentParser(prog="ionrepeater", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("rates", parents=[common], help="rate and key-rate table versus length")
    s.add_argument("--lmin", type=float, default=0.0)
    s.add_argument("--lmax", type=float, default=200.0)
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.set_defaults(func=cmd_rates, default_format="csv")

    s = sub.add_parser("skr", parents=[common], help="key-rate crossover and cut-off")
    s.add_argument("--preset", choices=sorted(PRESETS), default="enhanced")
    s.add_argument("--length", type=float)
    s.set_defaults(func=cmd_skr)

    s = sub.add_parser("chain", parents=[common], help="repeater-chain time and fidelity")
    s.add_argument("--levels", type=int, default=4)
    s.add_argument("--l0", type=float, default=50.0)
    s.add_argument("--p0", type=float, default=0.21)
    s.add_argument("--t0", type=float, default=175e-6)
    s.add_argument("--f0", type=float, default=0.99)
    s.add_argument("--fswap", type=float, default=0.99)
    s.add_argument("--v", type=float, default=0.98)
    s.set_defaults(func=cmd_chain)

    s = sub.add_parser("bounds", parents=[common], help="analytic advantage bounds")
    s.add_argument("--p0", type=float, default=0.018)
    s.add_argument("--gamma", type=float, default=rm.GAMMA)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("simulate", parents=[common], help="Monte-Carlo protocol simulation")
    s.add_argument("--trials", type=int, default=10**6)
    s.add_argument("--mode", choices=["repeater", "direct"])
    s.add_argument("--preset", choices=sorted(PRESETS), help="derive probabilities from a node preset")
    s.add_argument("--length", type=float, default=50.0)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("tomo", parents=[common], help="state reconstruction from a counts file")
    s.add_argument("--in", dest="infile")
    s.add_argument("--resamples", type=int, default=0, help="Monte-Carlo resamples (0 = none)")
    s.add_argument("--synthetic", help="write a synthetic dataset for this Bell state instead")
    s.add_argument("--synthetic-fidelity", type=float, default=1.0)
    s.add_argument("--photons", type=float, default=1e5)
    s.set_defaults(func=cmd_tomo)

    s = sub.add_parser("spinecho", parents=[common], help="spin-echo visibility")
    s.add_argument("--temps", default="start", help="start, mid, end or a MotionalState JSON file")
    s.add_argument("--echoes", type=int, default=40)
    s.add_argument("--grid", type=int, default=40)
    s.add_argument("--calibration", choices=["optimal", "mean"], default="optimal")
    s.add_argument("--miscal", type=float, default=0.0)
    s.set_defaults(func=cmd_spinecho)

    s = sub.add_parser("coupling", parents=[common], help="ion-cavity coupling geometry")
    s.add_argument("--offset-scan", action="store_true")
    s.add_argument("--step", type=float, default=1.0)
    s.set_defaults(func=cmd_coupling)

    s = sub.add_parser("budget", parents=[common], help="photon efficiency budget")
    s.set_defaults(func=cmd_budget)

    s = sub.add_parser("reproduce", parents=[common], help="table of headline numbers")
    s.add_argument("--quick", action="store_true", help="skip Monte-Carlo and spin-echo rows")
    s.set_defaults(func=cmd_reproduce, default_format="table")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.format is None:
            args.format = cfg.get("format") or ("csv" if getattr(args, "default_format", "") == "csv" else "json")
            if getattr(args, "default_format", "") == "table" and "format" not in cfg:
                args.format = "table"
        if args.out is None:
            args.out = cfg.get("output")
        if "seed" in cfg and "--seed" not in (argv if argv is not None else sys.argv):
            args.seed = int(cfg["seed"])
        code = args.func(args, cfg)
    # LinAlgError subclasses ValueError, so it must be caught first
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
