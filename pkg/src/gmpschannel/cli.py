"""Command-line front end.

Subcommands write CSV tables (9 significant digits, '#' JSON header echoing
every parameter) to ``--out`` or stdout. Exit codes: 0 success, 1
verification or feasibility failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .core import ChannelConfig, Gibbs, Markov, NonMarkov
from .gibbs import HarmonicChainNoise, verify_exact_optimality
from .gmps_build import build_report, export_cm_csv, squeezing_for_phi_in, squeezing_to_db
from .gmps_rate import SWEEP_PARAMS, approx_phi_in, rate_ratio_sweep, with_param
from .spectra import DEFAULT_GRID_POINTS, load_custom_csv, noise_spectrum

SWEEP_COLUMNS = ("param", "C", "R_gmps", "R_coh", "phi_in_opt", "ratio", "nbar_thr")
PHI_COLUMNS = ("param", "phi_in_opt", "approx", "r_in", "dB")


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[float]:
    """``a:b:step`` with both endpoints; ``b`` snaps to the nearest grid point."""
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"bad range {text!r}, expected start:stop:step") from None
    if step == 0:
        if a != b:
            raise UsageError("step 0 is only allowed when start == stop")
        return [a]
    if step < 0 or b < a:
        raise UsageError("range needs start <= stop and a positive step")
    count = int(math.floor((b - a) / step + 0.5)) + 1
    return [round(a + i * step, 12) for i in range(count)]


def fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "NA"
    return f"{v:.9g}"


def write_table(out, meta: dict, columns, rows) -> None:
    lines = ["# " + json.dumps(meta, sort_keys=True), ",".join(columns)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# --------------------------------------------------------------------------
# argument plumbing
# --------------------------------------------------------------------------


def _channel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--channel", choices=("additive", "lossy"), default="additive")
    p.add_argument("--eta", type=float, default=1.0, help="beam-splitter transmittance")
    p.add_argument("--noise", choices=("markov", "nonmarkov", "gibbs", "custom"), default="markov")
    p.add_argument("--N", type=float, default=1.0, help="noise variance N_M or N_N")
    p.add_argument("--phi", type=float, default=0.0, help="Markov correlation")
    p.add_argument("--s", type=float, default=0.0, help="non-Markov correlation")
    p.add_argument("--beta", type=float, default=1.0, help="inverse temperature (gibbs)")
    p.add_argument("--phi-chain", type=float, default=0.3, help="chain GMPS correlation (gibbs)")
    p.add_argument("--convention", choices=("normalized", "literal"), default="normalized")
    p.add_argument("--nbar", type=float, default=5.0, help="mean input photon number")
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.add_argument("--custom-spectrum", nargs=2, metavar=("QCSV", "PCSV"),
                   help="two-column (x, value) CSV files for gamma_q and gamma_p")


def _sweep_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--range", required=True, metavar="A:B:STEP")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.add_argument("--workers", type=int, default=1)


def _noise_from_args(args):
    if args.noise == "markov":
        return Markov(args.N, args.phi)
    if args.noise == "nonmarkov":
        return NonMarkov(args.N, args.s)
    if args.noise == "gibbs":
        return Gibbs(args.beta, args.phi_chain, args.convention)
    if not args.custom_spectrum:
        raise UsageError("--noise custom requires --custom-spectrum QCSV PCSV")
    return load_custom_csv(*args.custom_spectrum)


def config_from_args(args) -> ChannelConfig:
    try:
        noise = _noise_from_args(args)
        return ChannelConfig(noise, args.nbar, kind=args.channel,
                             eta=args.eta if args.channel == "lossy" else 1.0)
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from None


def _meta(command: str, args) -> dict:
    meta = {k: v for k, v in vars(args).items() if k not in ("func",)}
    meta["command"] = command
    return meta


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

PLOT_TEMPLATE = '''"""Plot {csv} (generated by gmpschannel rate-sweep)."""
import matplotlib.pyplot as plt

data = np.genfromtxt({csv!r}, delimiter=",", names=True, comments="#",
                     missing_values="NA", filling_values=np.nan)
fig, ax = plt.subplots()
ax.plot(data["param"], data["C"], "-", label="C")
ax.plot(data["param"], data["R_gmps"], "x", label="R_GMPS")
ax.plot(data["param"], data["R_coh"], "--", label="R_coh")
ax.set_xlabel({param!r})
ax.set_ylabel("rate [bits per use]")
ax.legend()
fig.savefig({png!r}, dpi=150)
'''


def cmd_rate_sweep(args) -> int:
    cfg = _base_config(args)
    values = parse_range(args.range)
    rows = rate_ratio_sweep(cfg, args.param, values, points=args.grid_points,
                            workers=args.workers)
    table = [[getattr(r, c) for c in SWEEP_COLUMNS] for r in rows]
    write_table(args.out, _meta("rate-sweep", args), SWEEP_COLUMNS, table)
    for r in rows:
        if not r.ok:
            print(f"param={r.param:.9g}: {r.error}", file=sys.stderr)
    if args.plot:
        if not args.out:
            raise UsageError("--plot needs --out")
        out = Path(args.out)
        script = out.with_name(out.stem + "_plot.py")
        script.write_text(PLOT_TEMPLATE.format(csv=out.name, png=out.stem + ".png",
                                               param=args.param))
    return 0 if any(r.ok for r in rows) else 1


def _base_config(args) -> ChannelConfig:
    cfg = config_from_args(args)
    values = parse_range(args.range)
    try:
        with_param(cfg, args.param, values[0])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def cmd_phi_opt(args) -> int:
    cfg = _base_config(args)
    values = parse_range(args.range)
    rows = rate_ratio_sweep(cfg, args.param, values, points=args.grid_points,
                            workers=args.workers)
    table = []
    for value, r in zip(values, rows):
        try:
            approx = approx_phi_in(with_param(cfg, args.param, value).noise)
        except ValueError:
            approx = math.nan
        if r.ok:
            r_in = squeezing_for_phi_in(r.phi_in_opt)
            table.append([value, r.phi_in_opt, approx, r_in, squeezing_to_db(r_in)])
        else:
            table.append([value, math.nan, approx, math.nan, math.nan])
            print(f"param={value:.9g}: {r.error}", file=sys.stderr)
    write_table(args.out, _meta("phi-opt", args), PHI_COLUMNS, table)
    return 0 if any(r.ok for r in rows) else 1


def cmd_build_gmps(args) -> int:
    if args.n < 2:
        raise UsageError(f"--n must be >= 2, got {args.n}")
    r_B = args.r if args.r_B is None else args.r_B
    r_T = args.r if args.r_T is None else args.r_T
    if r_B < 0 or r_T < 0:
        raise UsageError("squeezing must be >= 0")
    rep = build_report(args.n, r_B, r_T)
    meta = {k: v for k, v in rep.items() if k != "cm"}
    if args.out:
        export_cm_csv(rep["cm"], args.out, meta)
    pure = rep["purity_residual"] <= 1e-7
    print(f"n                  {args.n}")
    print(f"r_B, r_T           {fmt(r_B)}, {fmt(r_T)}")
    print(f"phi_in (fit)       {fmt(rep['phi_in_fit'])}")
    print(f"fit residual       {fmt(rep['fit_residual'])}")
    print(f"phi_in (n=inf)     {fmt(rep['phi_in_closed_form'])}")
    print(f"purity residual    {rep['purity_residual']:.3e}")
    print(f"quantum valid      {'yes' if rep['valid'] else 'NO'}")
    return 0 if rep["valid"] and pure else 1


def cmd_verify_gibbs(args) -> int:
    try:
        chain = HarmonicChainNoise.nearest_neighbor(args.beta, args.phi_chain, args.convention)
        noise = None
        if args.noise == "markov":
            noise = noise_spectrum(Markov(args.N, args.phi))
        elif args.noise == "nonmarkov":
            noise = noise_spectrum(NonMarkov(args.N, args.s))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = verify_exact_optimality(chain, noise=noise, nbar=args.nbar, points=args.grid_points)
    print(f"noise              {args.noise}")
    print(f"beta               {fmt(args.beta)}")
    print(f"phi_chain          {fmt(args.phi_chain)}")
    print(f"convention         {args.convention}")
    print(f"max deviation      {rep.max_deviation:.3e}")
    if args.nbar is not None:
        print(f"nbar_thr           {fmt(rep.nbar_thr)}")
        print(f"capacity           {fmt(rep.capacity)}")
        print(f"GMPS rate          {fmt(rep.gmps_rate)}")
    print(f"result             {'PASS' if rep.passed else 'FAIL'} (tol {rep.tol:g})")
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmpschannel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate-sweep", help="C, R_GMPS and R_coh over a parameter range")
    _channel_args(p)
    _sweep_args(p)
    p.add_argument("--plot", action="store_true", help="also write a matplotlib script")
    p.set_defaults(func=cmd_rate_sweep)

    p = sub.add_parser("phi-opt", help="optimal phi_in and the squeezing that realises it")
    _channel_args(p)
    _sweep_args(p)
    p.set_defaults(func=cmd_phi_opt)

    p = sub.add_parser("build-gmps", help="assemble a finite-n GMPS covariance matrix")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=float, default=0.3, help="common squeezing r_B = r_T")
    p.add_argument("--r-B", type=float)
    p.add_argument("--r-T", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_gmps)

    p = sub.add_parser("verify-gibbs", help="exact optimality of the GMPS for thermal-chain noise")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--phi-chain", type=float, default=0.3)
    p.add_argument("--convention", choices=("normalized", "literal"), default="normalized")
    p.add_argument("--noise", choices=("gibbs", "markov", "nonmarkov"), default="gibbs",
                   help="noise to test the chain's GMPS against")
    p.add_argument("--N", type=float, default=1.0)
    p.add_argument("--phi", type=float, default=0.3)
    p.add_argument("--s", type=float, default=0.3)
    p.add_argument("--nbar", type=float)
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.set_defaults(func=cmd_verify_gibbs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
