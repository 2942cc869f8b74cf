"""Command-line front end.

Every output embeds the package version and the resolved configuration,
and no timestamp, so identical runs give byte-identical files.  The
embedded configuration can be fed back through ``--config``.

Exit codes: 0 success, 1 domain error or failed verification, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from . import bosons, ed, meanfield, verify, zones
from .params import (MicroParams, Momentum, UnstableCouplingError, coupling_for_gamma,
                     derive_effective_params)

COMMANDS = ("params", "partition", "ed", "dispersion", "free-energy", "gap", "verify")
DEFAULT_FORMAT = {"params": "json", "partition": "csv", "ed": "json", "dispersion": "csv",
                  "free-energy": "json", "gap": "csv", "verify": "json"}
# flags that control where and how output goes; not part of the run itself
_IO_KEYS = {"config", "output", "format"}


class UsageError(Exception):
    pass


def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _micro_flags(p, nu=0.5):
    p.add_argument("--t", type=float, default=1.0, help="hopping (energy)")
    p.add_argument("--V", type=float, default=0.0, help="nearest-neighbour coupling (energy)")
    p.add_argument("--a", type=float, default=1.0, help="lattice constant")
    p.add_argument("--nu", type=float, default=nu, help="filling")


def build_parser():
    parser = argparse.ArgumentParser(prog="luttinger2d",
                                     description="2D t-V model and its nodal/antinodal effective model")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file of flag values, or a previous output file")
    common.add_argument("--output", help="output path (default: stdout); written atomically")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--threads", type=int, default=1,
                        help="worker cap (recorded; builds are vectorised and serial)")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled quantities")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("params", parents=[common], help="effective-model parameters")
    _micro_flags(p, nu=0.55)
    p.add_argument("--cells", type=int, help="L/atilde (odd); rounds nu to a commensurate value")

    p = sub.add_parser("partition", parents=[common], help="six-region Brillouin-zone partition")
    _micro_flags(p)
    p.add_argument("--cells", type=int, default=3, help="L/atilde (odd)")

    p = sub.add_parser("ed", parents=[common], help="exact diagonalization of the t-V model")
    _micro_flags(p)
    p.add_argument("--n1", type=int, default=4)
    p.add_argument("--n2", type=int, default=4)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--N", type=int, help="particle number (default: half filling)")

    p = sub.add_parser("dispersion", parents=[common], help="nodal boson dispersions")
    _micro_flags(p)
    p.add_argument("--gamma", type=float, help="override gamma (default: from t, V, nu)")
    p.add_argument("--gamma-from-params", action="store_true",
                   help="take gamma from t, V, nu (the default unless --gamma is given)")
    p.add_argument("--grid", type=int, default=64, help="points per axis over the cutoff window")
    p.add_argument("--source", choices=(bosons.CLOSED_FORM, bosons.NUMERIC),
                   default=bosons.CLOSED_FORM)

    p = sub.add_parser("free-energy", parents=[common], help="nodal boson free energy")
    _micro_flags(p)
    p.add_argument("--cells", type=int, default=9, help="L/atilde of the boson grid")
    p.add_argument("--T", default="0,0.1,0.5,1,2", help="comma-separated temperatures")
    p.add_argument("--dispersion", choices=(bosons.CLOSED_FORM, bosons.NUMERIC),
                   default=bosons.CLOSED_FORM)
    p.add_argument("--edge", choices=("closed", "trapezoid"), default="closed")

    p = sub.add_parser("gap", parents=[common], help="mean-field CDW gap scan")
    _micro_flags(p)
    p.set_defaults(V=4.0)
    p.add_argument("--nus", help="comma-separated fillings (default: --nu)")
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--T", default="0", help="comma-separated temperatures")
    p.add_argument("--coupling", type=float, default=1.0, help="gap-equation convention constant")
    p.add_argument("--damping", type=float, default=0.5)
    p.add_argument("--delta0", type=float, help="initial gap (default: t)")

    p = sub.add_parser("verify", parents=[common], help="truncated Fock-space verification")
    p.add_argument("--check", choices=("schwinger", "kronig", "hn"), required=False,
                   default="schwinger")
    p.add_argument("--modes", type=int, default=10, help="longitudinal modes per branch")
    p.add_argument("--margin", type=int, help="safe margin W (default: 3, or modes/2)")
    p.add_argument("--trans", type=int, default=1, help="transverse momenta per branch")
    p.add_argument("--gamma", type=float, default=0.1, help="nodal coupling for --check hn")
    p.add_argument("--levels", type=int, default=4, help="levels compared for --check hn")
    p.add_argument("--interaction-window", type=int,
                   help="override the cutoff window of the interaction (units of 2 pi/L)")
    return parser


def _load_config(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.startswith("#"):
        for line in text.splitlines():
            if line.startswith("# config: "):
                return json.loads(line[len("# config: "):])
        raise UsageError(f"{path}: no embedded config line")
    data = json.loads(text)
    if isinstance(data, dict) and "config" in data and "result" in data:
        data = data["config"]
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    return data


def parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = _load_config(args.config)
        cmd = cfg.pop("command", args.command)
        cfg.pop("version", None)
        if cmd != args.command:
            raise UsageError(f"config is for '{cmd}', not '{args.command}'")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        # flags given on the command line override the file
        sub.set_defaults(**{k: v for k, v in cfg.items() if k not in _IO_KEYS})
        args = parser.parse_args(argv)
    return args


def resolved_config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in _IO_KEYS}
    return cfg


# ---------------------------------------------------------------- commands

def _micro(args, cells=None):
    if cells is None:
        return MicroParams(t=args.t, V=args.V, a=args.a, nu=args.nu)
    return MicroParams.on_grid(args.t, args.V, cells, args.nu, args.a)


def cmd_params(args):
    p = _micro(args, args.cells)
    eff = derive_effective_params(p)
    out = {k: getattr(eff, k) for k in
           ("Q", "v_F", "c_F", "g1", "g2", "g3", "g4", "mu_a", "mu", "gamma")}
    out.update(stable=eff.stable, nu=p.nu, nu_requested=p.nu_requested,
               nu_rounding=p.nu_rounding, atilde=p.atilde,
               V_bound=coupling_for_gamma(1.0, p.t, eff.Q))
    g3, g4 = (bosons.effective_antinodal_couplings(eff) if eff.stable else (None, None))
    out.update(g3_eff=g3, g4_eff=g4)
    return out


def cmd_partition(args):
    p = _micro(args, args.cells)
    rows = zones.region_map(p).rows()
    return (["k1", "k2", "r", "s", "kp_plus", "kp_minus"], rows)


def cmd_ed(args):
    spec = ed.LatticeSpec(args.n1, args.n2)
    p = MicroParams(t=args.t, V=args.V, a=args.a, nu=args.nu)
    N = spec.n_sites // 2 if args.N is None else args.N
    op = ed.build_htv(spec, p, args.mu, N)
    gs = ed.ground_state(op)
    return {"lattice": [spec.n1, spec.n2], "params": {"t": p.t, "V": p.V, "mu": args.mu},
            "sector": N, "dim": op.dim, "energy": gs.energy, "degeneracy": gs.degeneracy,
            "cdw_order": ed.cdw_order(gs.vectors, op), "residual": gs.residual}


def _eff_for_gamma(args, gamma):
    eff = derive_effective_params(MicroParams(t=args.t, V=args.V, a=args.a, nu=args.nu))
    if gamma is None:
        return eff
    V = coupling_for_gamma(gamma, args.t, eff.Q)
    return derive_effective_params(MicroParams(t=args.t, V=V, a=args.a, nu=args.nu))


def cmd_dispersion(args):
    eff = _eff_for_gamma(args, args.gamma)
    b = math.pi / eff.atilde
    x = np.linspace(-b, b, args.grid)
    pp, pm = np.meshgrid(x, x, indexing="ij")
    p = Momentum(pp.ravel(), pm.ravel())
    fn = bosons.closed_form_dispersion if args.source == bosons.CLOSED_FORM \
        else bosons.numeric_dispersion
    d = fn(p, eff)
    rows = [(a, c, wp, wm, args.source) for a, c, wp, wm in
            zip(p.k_plus, p.k_minus, d.omega_plus, d.omega_minus)]
    return (["p_plus", "p_minus", "omega_plus", "omega_minus", "source"], rows)


def cmd_free_energy(args):
    eff = derive_effective_params(MicroParams(t=args.t, V=args.V, a=args.a, nu=args.nu))
    grid = bosons.BosonGrid.from_cells(args.cells, args.a, args.edge)
    res = bosons.free_energy(eff, grid, _floats(args.T), args.dispersion)
    return {"E_n": res.E_n, "gamma": eff.gamma,
            "table": [[float(t), float(f)] for t, f in zip(res.T, res.F)],
            "metadata": res.metadata}


def cmd_gap(args):
    nus = _floats(args.nus) if args.nus else [args.nu]
    rows = []
    for T in _floats(args.T):
        for r in meanfield.gap_phase_scan(args.t, args.V, nus, args.grid, T, args.a,
                                          coupling=args.coupling, damping=args.damping,
                                          Delta0=args.delta0):
            rows.append((r.Q, r.V, r.T, r.Delta, r.filling, r.iterations, r.residual,
                         r.dfilling_dmu, int(r.gapped)))
    return (["Q", "V", "T", "Delta", "filling", "iterations", "residual",
             "dfilling_dmu", "gapped"], rows)


def cmd_verify(args):
    if args.check == "schwinger":
        margin = 3 if args.margin is None else args.margin
        space = verify.TruncatedChiralSpace(((1, 1), (-1, 1), (1, -1), (-1, -1)),
                                            args.modes, args.trans, margin)
        rep = verify.schwinger_sweep(space)
    elif args.check == "kronig":
        margin = args.modes // 2 if args.margin is None else args.margin
        space = verify.TruncatedChiralSpace(((1, 1),), args.modes, args.trans, margin)
        rep = verify.kronig_check(1, 1, space)
    else:
        margin = args.modes // 2 if args.margin is None else args.margin
        space = verify.TruncatedChiralSpace(((1, 1), (-1, 1), (1, -1), (-1, -1)),
                                            args.modes, args.trans, margin)
        Q = math.pi / 2
        eff = derive_effective_params(MicroParams(t=1.0, V=coupling_for_gamma(args.gamma, 1.0, Q)))
        rep = verify.hn_equivalence_check(eff, space, args.levels,
                                          interaction_window=args.interaction_window)
    return rep.to_dict()


HANDLERS = {"params": cmd_params, "partition": cmd_partition, "ed": cmd_ed,
            "dispersion": cmd_dispersion, "free-energy": cmd_free_energy, "gap": cmd_gap,
            "verify": cmd_verify}


# ---------------------------------------------------------------- output

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (dict, list)):
        return json.dumps(_jsonable(v), sort_keys=True)
    return str(v)


def render(result, fmt, config) -> str:
    header = {"version": __version__, "config": _jsonable(config)}
    if fmt == "json":
        if isinstance(result, tuple):
            cols, rows = result
            result = {"columns": cols, "rows": [list(r) for r in rows]}
        doc = dict(header, result=_jsonable(result))
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# luttinger2d {__version__}\n")
    buf.write("# config: " + json.dumps(header["config"], sort_keys=True) + "\n")
    if isinstance(result, tuple):
        cols, rows = result
    else:
        cols, rows = ["key", "value"], sorted(result.items())
    buf.write(",".join(cols) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


DOMAIN_ERRORS = (ValueError, ArithmeticError, UnstableCouplingError, ed.ConvergenceError,
                 meanfield.ConvergenceError, zones.PartitionError)


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, OSError, json.JSONDecodeError) as exc:
        print(build_parser().format_usage().rstrip(), file=sys.stderr)
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    fmt = args.format or DEFAULT_FORMAT[args.command]
    try:
        result = HANDLERS[args.command](args)
    except DOMAIN_ERRORS as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1
    text = render(result, fmt, dict(resolved_config(args), command=args.command))
    if args.output:
        write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    if args.command == "verify" and not result["pass"]:
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
