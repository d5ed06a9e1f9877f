"""Command-line interface.

Every subcommand takes --seed/--threads/--config/--out; a config file holds
flat `key = value` lines whose keys are the flag names without leading
dashes, and explicit flags win over config values. All outputs carry a
provenance record (full resolved arguments, seed, version) and print floats
at 17 significant digits. Exit codes: 0 ok, 2 usage, 3 solver failure,
4 budget timeout.
"""

import argparse
import io
import json
import sys

import numpy as np

from . import __version__, exact, experiments, phase
from .core import ComponentState, EdgeConfig, ModelParams, SolverError, make_rng
from .coupling import binomial_coupling_batch, coupling_time
from .dynamics import run_trajectory
from .gnp import sample_gnp_edges


class UsageError(Exception):
    pass


def _g(x):
    return format(float(x), ".17g")


def _ser(o):
    if o is None:
        return "null"
    if isinstance(o, bool):
        return "true" if o else "false"
    if isinstance(o, (int, np.integer)):
        return str(int(o))
    if isinstance(o, (float, np.floating)):
        return _g(o)
    if isinstance(o, str):
        return json.dumps(o)
    if isinstance(o, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_ser(v)}" for k, v in o.items()) + "}"
    if isinstance(o, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_ser(v) for v in o) + "]"
    raise TypeError("cannot serialize %r" % (o,))


def _provenance(cmd, ns):
    # out/config paths do not determine the run (config values are already
    # resolved into the namespace), so equal seeds give identical output bytes
    skip = ("func", "command", "out", "config", "report")
    args = {k: v for k, v in sorted(vars(ns).items()) if k not in skip}
    return {"tool": "rcmf", "version": __version__, "command": cmd, "args": args}


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _params(ns):
    try:
        return ModelParams(ns.n, ns.q, getattr(ns, "lam"))
    except ValueError as e:
        raise UsageError(str(e))


def _csv(prov, header, rows, fmt):
    buf = io.StringIO()
    buf.write("# %s\n" % _ser(prov))
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(f(x) for f, x in zip(fmt, row)) + "\n")
    return buf.getvalue()


def _cmd_critical_points(ns):
    cp = phase.critical_points(ns.q, ns.lam)
    doc = {
        "provenance": _provenance("critical-points", ns),
        "q": cp.q,
        "lambda": cp.lam,
        "lambda_c": cp.lambda_c,
        "lambda_s": cp.lambda_s,
        "lambda_S": cp.lambda_S,
        "theta_min": cp.theta_min,
        "theta_r": cp.theta_r,
        "theta_S_threshold": cp.theta_S_threshold,
    }
    _emit(_ser(doc) + "\n", ns.out)
    return 0


def _cmd_drift_scan(ns):
    if ns.lam is None:
        raise UsageError("drift-scan requires --lambda")
    scan = phase.drift_scan(phase.PhaseParams(ns.q, ns.lam), ns.grid)
    text = _csv(
        _provenance("drift-scan", ns),
        ("theta", "phi", "f", "f_prime"),
        scan.rows,
        (_g, _g, _g, _g),
    )
    _emit(text, ns.out)
    return 0


def _parse_init(init, n, kind):
    if kind == "cm":
        if init == "empty":
            return ComponentState.all_singletons(n)
        if init == "full":
            return ComponentState.single_component(n)
        if init.startswith("giant:"):
            theta = float(init[6:])
            return ComponentState.giant_plus_singletons(n, int(round(theta * n)))
    else:
        if init == "empty":
            return EdgeConfig.empty(n)
        if init == "full":
            return EdgeConfig.complete(n)
        if init.startswith("giant:"):
            theta = float(init[6:])
            k = int(round(theta * n))
            return EdgeConfig(n, [(i, i + 1) for i in range(max(k - 1, 0))])
    raise UsageError("bad --init %r (want empty, full or giant:<theta>)" % init)


def _cmd_simulate(ns):
    params = _params(ns)
    kind = ns.dynamics.replace("-", "_")
    init = _parse_init(ns.init, ns.n, kind)
    trace = run_trajectory(
        kind, init, params, ns.steps, make_rng(ns.seed), ns.record_every
    )
    buf = io.StringIO()
    trace.to_csv(buf, provenance=_ser(_provenance("simulate", ns)))
    _emit(buf.getvalue(), ns.out)
    return 0


def _cmd_coupling(ns):
    rng = make_rng(ns.seed)
    prov = _provenance("coupling", ns)
    if ns.mode == "binomial":
        _, _, succ = binomial_coupling_batch(
            ns.m, ns.r, ns.y, ns.trials, rng, method=ns.method
        )
        doc = {
            "provenance": prov,
            "mode": "binomial",
            "replicas": ns.trials,
            "success_rate": float(succ.mean()),
            "params": {"m": ns.m, "r": ns.r, "y": ns.y, "method": ns.method},
        }
        _emit(_ser(doc) + "\n", ns.out)
        return 0
    params = _params(ns)
    times = []
    shift = ns.n // 2
    for rep in range(ns.replicas):
        stream = rng.split(rep)
        eu, ev = sample_gnp_edges(ns.n, params.p, stream.split(0))
        x0 = EdgeConfig(ns.n, zip(eu.tolist(), ev.tolist()))
        y0 = EdgeConfig(
            ns.n,
            [((u + shift) % ns.n, (v + shift) % ns.n) for u, v in x0.edges],
        )
        times.append(coupling_time(x0, y0, params, ns.max_steps, stream.split(1)))
    done = [t for t in times if t is not None]
    doc = {
        "provenance": prov,
        "mode": "identity",
        "replicas": ns.replicas,
        "median_time": float(np.median(done)) if len(done) * 2 > len(times) else None,
        "timeouts": len(times) - len(done),
        "params": {"n": ns.n, "q": ns.q, "lambda": ns.lam},
    }
    _emit(_ser(doc) + "\n", ns.out)
    return 0 if doc["median_time"] is not None else 4


def _cmd_exact(ns):
    params = _params(ns)
    n = ns.n
    if n > exact.MAX_N_ENUM:
        raise UsageError("exact verification supports n <= %d" % exact.MAX_N_ENUM)
    mu = exact.exact_mu(n, params)
    chains = {"hb": exact.build_P_hb(n, params), "su": exact.build_P_su(n, params)}
    if n <= exact.MAX_N_JOINT:
        chains["cm"] = exact.build_P_cm(n, params)
    report = {
        "provenance": _provenance("exact", ns),
        "n": n,
        "q": params.q,
        "lambda": params.lam,
        "p": params.p,
        "mu_total_mass": float(mu.sum()),
    }
    gaps = {}
    ok = True
    for name, P in sorted(chains.items()):
        db = exact.reversibility_residual(P, mu)
        st = float(np.max(np.abs(mu @ P - mu)))
        rs = float(np.max(np.abs(P.sum(axis=1) - 1.0)))
        gaps[name] = exact.spectral_gap(P, mu)
        lo, hi = exact.mixing_bounds(P, mu)
        report[name] = {
            "row_sum_residual": rs,
            "detailed_balance_residual": db,
            "stationarity_residual": st,
            "spectral_gap": gaps[name],
            "mixing_lower": lo,
            "mixing_upper": hi,
        }
        ok = ok and db <= 1e-10 and st <= 1e-12 and rs <= 1e-12
    alpha = exact.sandwich_alpha(params)
    report["alpha"] = alpha
    su_hb_ok = alpha * gaps["hb"] <= gaps["su"] + 1e-12 and gaps["su"] <= gaps["hb"] + 1e-12
    report["su_hb_sandwich_ok"] = su_hb_ok
    ok = ok and su_hb_ok
    if "cm" in chains:
        import math

        m = n * (n - 1) // 2
        dec = exact.verify_decomposition(n, params)
        su_dec = float(
            np.max(np.abs(chains["su"] - exact.build_P_su_decomposed(n, params)))
        )
        cm_su_ok = (
            gaps["su"] <= gaps["cm"] + 1e-12
            and gaps["cm"] <= 8 * m * math.log(m) * gaps["su"] + 1e-12
        )
        report["decomposition_residual"] = dec
        report["su_decomposition_residual"] = su_dec
        report["cm_su_sandwich_ok"] = cm_su_ok
        ok = ok and dec <= 1e-10 and su_dec <= 1e-10 and cm_su_ok
    report["pass"] = ok
    _emit(_ser(report) + "\n", ns.out if ns.out else ns.report)
    return 0


def _cmd_mix_estimate(ns):
    params = _params(ns)
    est = experiments.tv_mixing_estimate(
        params, ns.start_a, ns.start_b, ns.t_max, ns.replicas,
        make_rng(ns.seed), ns.bins,
    )
    proxy = experiments.mixing_proxy(est)
    doc = {
        "provenance": _provenance("mix-estimate", ns),
        "replicas": ns.replicas,
        "bins": est[0].bins,
        "proxy": proxy,
        "estimates": [{"t": e.t, "tv": e.tv} for e in est],
    }
    _emit(_ser(doc) + "\n", ns.out)
    return 0 if proxy is not None else 4


def _cmd_escape(ns):
    params = _params(ns)
    times = experiments.escape_times(
        params, ns.theta0, (ns.band_lo, ns.band_hi), ns.max_steps,
        ns.replicas, make_rng(ns.seed),
    )
    med = experiments.censored_median(times, ns.max_steps)
    doc = {
        "provenance": _provenance("escape", ns),
        "replicas": ns.replicas,
        "median": med,
        "timeouts": sum(1 for t in times if t is None),
        "times": [-1 if t is None else t for t in times],
    }
    _emit(_ser(doc) + "\n", ns.out)
    return 0 if med is not None else 4


def _cmd_validate_drift(ns):
    params = _params(ns)
    try:
        thetas = [float(tok) for tok in ns.thetas.split(",") if tok.strip()]
    except ValueError:
        raise UsageError("bad --thetas; want comma-separated reals")
    if not thetas:
        raise UsageError("empty --thetas")
    rows = experiments.drift_validation(params, thetas, ns.replicas, make_rng(ns.seed))
    text = _csv(
        _provenance("validate-drift", ns),
        ("theta", "empirical", "phi", "gap"),
        rows,
        (_g, _g, _g, _g),
    )
    _emit(text, ns.out)
    return 0


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root RNG seed")
    common.add_argument(
        "--threads", type=int, default=1,
        help="worker count (reserved; replicas currently run sequentially)",
    )
    common.add_argument("--config", help="key = value file mirroring the flags")
    common.add_argument("--out", help="output path (default stdout)")

    top = argparse.ArgumentParser(prog="rcmf", description=__doc__)
    sub = top.add_subparsers(dest="command", metavar="subcommand")
    sub.required = True

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, parents=[common], **kwargs)
        p.set_defaults(func=fn)
        return p

    p = add("critical-points", _cmd_critical_points, help="window edges and roots")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None)

    p = add("drift-scan", _cmd_drift_scan, help="tabulate theta, phi, f, f'")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--grid", type=int, default=1000)

    p = add("simulate", _cmd_simulate, help="run one trajectory, emit a trace CSV")
    p.add_argument(
        "--dynamics", choices=("cm", "cm-edges", "hb", "su"), required=True
    )
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--init", default="empty", help="empty, full or giant:<theta>")

    p = add("coupling", _cmd_coupling, help="binomial or identity coupling runs")
    p.add_argument("--mode", choices=("binomial", "identity"), required=True)
    p.add_argument("--method", choices=("maximal", "walk"), default="maximal")
    p.add_argument("--m", type=int, default=10000)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--y", type=int, default=10)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--replicas", type=int, default=50)
    p.add_argument("--max-steps", type=int, default=10000)

    p = add("exact", _cmd_exact, help="small-n verification report")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--report", help="report path (synonym of --out)")

    p = add("mix-estimate", _cmd_mix_estimate, help="TV mixing proxy from two starts")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--t-max", type=int, required=True)
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--start-a", default="full")
    p.add_argument("--start-b", default="empty")

    p = add("escape", _cmd_escape, help="metastable escape times")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--theta0", type=float, required=True)
    p.add_argument("--band-lo", type=float, required=True)
    p.add_argument("--band-hi", type=float, default=1.0)
    p.add_argument("--max-steps", type=int, required=True)
    p.add_argument("--replicas", type=int, default=200)

    p = add("validate-drift", _cmd_validate_drift, help="one-step conditional drift")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--thetas", required=True, help="comma-separated theta grid")
    p.add_argument("--replicas", type=int, default=1000)

    return top, sub


def _load_config(path):
    values = {}
    try:
        with open(path) as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(
                        "%s:%d: expected key = value" % (path, line_no)
                    )
                key, _, val = line.partition("=")
                key = key.strip().lstrip("-").replace("-", "_")
                values[key] = val.strip()
    except OSError as e:
        raise UsageError("cannot read config: %s" % e)
    return values


def _apply_config(sub, command, argv):
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return
    parser = sub.choices.get(command)
    if parser is None:
        return
    # config keys are the flag names without dashes, e.g. "lambda" or
    # "record-every"; map them through option strings onto argparse dests
    by_flag = {}
    for a in parser._actions:
        for opt in a.option_strings:
            by_flag[opt.lstrip("-").replace("-", "_")] = a
        by_flag.setdefault(a.dest, a)
    defaults = {}
    for key, raw in _load_config(path).items():
        if key == "config":
            continue
        action = by_flag.get(key)
        if action is None:
            raise UsageError("config key %r does not match any flag" % key)
        defaults[action.dest] = action.type(raw) if callable(action.type) else raw
        action.required = False
    parser.set_defaults(**defaults)


def cli_main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    top, sub = _build_parser()
    try:
        if argv and not argv[0].startswith("-"):
            _apply_config(sub, argv[0], argv)
        try:
            ns = top.parse_args(argv)
        except SystemExit as e:
            return 2 if e.code not in (0, None) else 0
        return ns.func(ns)
    except UsageError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    except ValueError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    except SolverError as e:
        print("solver failure: %s" % e, file=sys.stderr)
        return 3


def main():
    sys.exit(cli_main())
