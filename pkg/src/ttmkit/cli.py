"""
Command line front end.

Exit codes: 0 success, 1 selftest failure, 2 invalid arguments or input,
3 I/O or numerical-consistency failure. Data go to files; only ``info`` and
``markovian-steps`` print tables to stdout.
"""

import argparse
import sys
from typing import List, Optional

import numpy as np

from ttmkit import analysis, csvio, jcmodel, selftest, ttm
from ttmkit.jcmodel import ModelParams, NumericalConsistencyError

EXIT_OK, EXIT_SELFTEST, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3

ATOM_COLUMNS = ("p_up", "p_down", "c_re", "c_im")


class InputError(ValueError):
    pass


def _params(args) -> ModelParams:
    return ModelParams(args.g, args.kappa)


def _int_list(text: str) -> List[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"not a comma-separated integer list: {text!r}") from None
    if not out:
        raise InputError("k list is empty")
    return out


def _param_list(text: str) -> List[ModelParams]:
    out = []
    for item in text.split(","):
        g, sep, kappa = item.partition(":")
        if not sep:
            raise InputError(f"expected g:kappa pairs, got {item!r}")
        out.append(ModelParams(float(g), float(kappa)))
    if not out:
        raise InputError("empty parameter list")
    return out


def cmd_info(args, out):
    p = _params(args)
    info = jcmodel.regime(p)
    kp, km = jcmodel.eigenrates(p)
    out.write(f"g             {p.g!r}\n")
    out.write(f"kappa         {p.kappa!r}\n")
    out.write(f"regime        {info.kind}\n")
    out.write(f"r = kappa/4g  {info.r!r}\n")
    out.write(f"kappa_plus    {kp.real!r} {kp.imag:+.17g}i\n")
    out.write(f"kappa_minus   {km.real!r} {km.imag:+.17g}i\n")
    zeros = analysis.markovian_steps(p, 3)
    if zeros.zeros:
        out.write("markovian steps " + " ".join(repr(t) for t in zeros.zeros) + "\n")
    else:
        out.write(f"markovian steps none ({zeros.note})\n")


def cmd_markovian_steps(args, out):
    p = _params(args)
    if args.n < 1:
        raise InputError("-n must be >= 1")
    table = analysis.markovian_steps(p, args.n)
    if not table.zeros:
        out.write(f"# {table.note}\n")
    out.write("m,t,gt\n")
    for m, t in enumerate(table.zeros, start=1):
        out.write(f"{m},{csvio.fmt(t)},{csvio.fmt(p.g * t)}\n")


def cmd_maps(args, out):
    p = _params(args)
    if not args.dt > 0:
        raise InputError("--dt must be > 0")
    if args.steps < 1:
        raise InputError("--steps must be >= 1")
    ts = args.dt * np.arange(1, args.steps + 1)
    if args.channel == "coherence":
        mats = np.asarray(jcmodel.Ec(p, ts)).reshape(-1, 1, 1)
    elif args.channel == "population":
        mats = np.asarray(jcmodel.Ep(p, ts)).reshape(-1, 1, 1)
    else:
        mats = np.array([jcmodel.atom_map(p, t) for t in ts])
    csvio.write_series(args.out, args.dt, mats, f"maps {args.channel} g={p.g!r} kappa={p.kappa!r}")


def cmd_extract(args, out):
    dt, mats = csvio.read_series(args.inp)
    tensors = ttm.extract(ttm.MapSeries(dt, mats))
    csvio.write_series(args.out, dt, tensors.tensors, "tensors")


def _parse_init(text: str, dim: int) -> np.ndarray:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"malformed --init {text!r}") from None
    if dim == 1 and len(vals) in (1, 2):
        return np.array([complex(*vals) if len(vals) == 2 else vals[0]])
    if dim == 4 and len(vals) == 4:
        return np.array(vals, dtype=complex)
    raise InputError(f"--init has {len(vals)} values; tensors have dim {dim} "
                     "(expect 'c_re,c_im' for dim 1 or 'p_up,p_down,c_re,c_im' for dim 4)")


def _parse_cutoff(text: str) -> Optional[int]:
    if text == "unlimited":
        return None
    try:
        m = int(text)
    except ValueError:
        raise InputError(f"--cutoff must be an integer or 'unlimited', got {text!r}") from None
    if m < 1:
        raise InputError("--cutoff must be >= 1")
    return m


def cmd_propagate(args, out):
    cutoff = _parse_cutoff(args.cutoff)
    if args.steps < 1:
        raise InputError("--steps must be >= 1")
    dt, mats = csvio.read_series(args.inp)
    tensors = ttm.TensorSeries(dt, mats)
    rho0 = _parse_init(args.init, tensors.dim)
    traj = ttm.propagate(tensors, rho0, args.steps, cutoff)
    ts = dt * np.arange(args.steps + 1)
    if tensors.dim == 1:
        table = analysis.Table(("t", "re", "im"), np.column_stack([ts, traj[:, 0].real, traj[:, 0].imag]))
    else:
        table = analysis.Table(("t",) + ATOM_COLUMNS, np.column_stack([ts, traj.real]))
    csvio.write_table(args.out, table, {"dt": csvio.fmt(dt), "cutoff": args.cutoff})


def cmd_kernel_compare(args, out):
    p = _params(args)
    ks = _int_list(args.k)
    table = analysis.kernel_difference_curve(p, args.t_max, args.samples, ks, args.channel)
    csvio.write_table(args.out, table)


def cmd_heatmap(args, out):
    grid = analysis.heatmap_T2c(args.gt_max, args.ratio_max, args.nx, args.ny)
    if args.zeros_out and args.zero_orders < 1:
        raise InputError("--zero-orders must be >= 1")
    meta = {"gt_max": csvio.fmt(args.gt_max), "ratio_max": csvio.fmt(args.ratio_max),
            "nx": str(args.nx), "ny": str(args.ny)}
    csvio.write_table(args.out, grid.to_table(), meta)
    if args.zeros_out:
        csvio.write_table(args.zeros_out, analysis.zero_curves(grid.ratio_values, args.zero_orders))


def cmd_trajectory(args, out):
    params = _param_list(args.g_kappa_list)
    if args.mark_zeros < 0:
        raise InputError("--mark-zeros must be >= 0")
    table = analysis.regime_trajectories(params, args.t_max, args.samples,
                                         args.channel, args.mark_zeros)
    csvio.write_table(args.out, table)


def cmd_selftest(args, out):
    def emit(line):
        out.write(line + "\n")
    return EXIT_OK if selftest.run(emit, perturb=args.perturb) else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttmkit",
        description="Transfer tensors and memory kernels for a lossy Jaynes-Cummings atom.")
    sub = parser.add_subparsers(dest="command", required=True)

    def params(p):
        p.add_argument("--g", type=float, required=True, help="atom-cavity coupling")
        p.add_argument("--kappa", type=float, required=True, help="cavity loss rate")

    p = sub.add_parser("info", help="regime, eigenrates and Markovian steps")
    params(p)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("markovian-steps", help="time steps where T2c vanishes")
    params(p)
    p.add_argument("-n", type=int, default=3)
    p.set_defaults(func=cmd_markovian_steps)

    p = sub.add_parser("maps", help="write exact dynamical maps")
    params(p)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--channel", choices=("coherence", "population", "atom"), default="coherence")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_maps)

    p = sub.add_parser("extract", help="transfer tensors from a map file")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("propagate", help="propagate with transfer tensors")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--init", required=True,
                   help="'c_re,c_im' (dim 1) or 'p_up,p_down,c_re,c_im' (dim 4)")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--cutoff", default="unlimited")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("kernel-compare", help="|T_k(t/k) k^2/t^2 - K(t)| table")
    params(p)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--k", default="2,8,32,128")
    p.add_argument("--channel", choices=("coherence", "population"), default="coherence")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_kernel_compare)

    p = sub.add_parser("heatmap", help="T2c over gt and kappa/4g")
    p.add_argument("--gt-max", type=float, required=True)
    p.add_argument("--ratio-max", type=float, required=True)
    p.add_argument("--nx", type=int, default=200)
    p.add_argument("--ny", type=int, default=100)
    p.add_argument("--zero-orders", type=int, default=3)
    p.add_argument("--zeros-out", default=None, help="also write the zero lines (m, r, gt)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("trajectory", help="Ec or Ep trajectories for several g:kappa pairs")
    p.add_argument("--g-kappa-list", required=True, help="e.g. '1:0.8,1:4,1:8'")
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--channel", choices=("coherence", "population"), default="coherence")
    p.add_argument("--mark-zeros", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("selftest", help="run the invariant suite")
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code = args.func(args, out)
    except csvio.CsvFormatError as err:
        print(f"ttmkit: {err}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalConsistencyError as err:
        print(f"ttmkit: numerical consistency: {err}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        print(f"ttmkit: {err}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as err:
        print(f"ttmkit: {err}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
