"""``qbath`` command line.

Subcommands: eos, invert, sample, tail, shell, converge, check, plot.
Exit codes: 0 success, 2 usage error, 3 domain error, 4 resource error.
"""

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .bath_sim import (BathSpec, convergence_study, estimate_tail, resolve_method, shell_entropy)
from .closed_forms import TwoLevel, dirac2, haar2
from .energy_laws import (Spectrum, completeness_check, dirac_law, haar_law, load_custom_law,
                          sample_haar_energy)
from .errors import DomainError, ResourceError
from .rng import RngStream, map_chunks
from .thermo import ThermoPoint, entropy_of_energy, eos_scan, invert_beta, log_partition

EOS_COLUMNS = ("beta", "logZ", "energy", "entropy", "heat_capacity", "temperature")
MC_METHODS = ("mc-naive", "mc-tilted")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------------
# argument helpers
# ----------------------------------------------------------------------------

def parse_grid(text, scale="linear"):
    """``start:stop:count`` (both ends included) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            start, stop, count = float(start), float(stop), int(count)
            if count < 1:
                raise ValueError("count must be >= 1")
            if scale == "log":
                if not (start > 0 and stop > 0):
                    raise ValueError("log grids need positive endpoints")
                return list(np.geomspace(start, stop, count))
            return list(np.linspace(start, stop, count))
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}: {exc}") from None


def parse_int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad integer list {text!r}") from None


def _common(p, mc=False):
    p.add_argument("--law", choices=("dirac", "haar", "custom"), default="dirac")
    p.add_argument("--levels", help="spectrum, e.g. 0,1 or 0:1,1:2")
    p.add_argument("--custom", metavar="PATH", help="JSON file of {energy, weight} atoms")
    p.add_argument("--kB", type=float, default=1.0, dest="k_B")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--output", "-o", metavar="PATH")
    if mc:
        p.add_argument("--seed", type=int, help="falls back to $QBATH_SEED")
        p.add_argument("--samples", type=int, default=100_000)
        p.add_argument("--threads", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="qbath", description="Quantum heat bath thermodynamics.")
    parser.add_argument("--version", action="version", version=f"qbath {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eos", help="equation-of-state table")
    _common(p)
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--beta", help="beta grid")
    grid.add_argument("--energy-grid", help="specific-energy grid")
    p.add_argument("--grid-scale", choices=("linear", "log"), default="linear")

    p = sub.add_parser("invert", help="specific energy -> beta, entropy")
    _common(p)
    p.add_argument("--energy", type=float, required=True)

    p = sub.add_parser("sample", help="draws of the molecular energy")
    _common(p, mc=True)

    for name, text in (("tail", "finite-n entropy of {avg <= E}"),
                       ("shell", "finite-n entropy of {E - delta <= avg <= E}")):
        p = sub.add_parser(name, help=text)
        _common(p, mc=True)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--energy", type=float, required=True)
        p.add_argument("--method", choices=("auto", "exact", "mc", "tilted"), default="auto")
        if name == "shell":
            p.add_argument("--delta", type=float, required=True)

    p = sub.add_parser("converge", help="finite-n entropy against the Chernoff bound")
    _common(p, mc=True)
    p.add_argument("--n-list", required=True)
    p.add_argument("--energy", type=float, required=True)
    p.add_argument("--method", choices=("auto", "exact", "mc", "tilted"), default="auto")

    p = sub.add_parser("check", help="completeness report")
    _common(p)
    p.add_argument("--epsilons", default="", help="extra probe energies")

    p = sub.add_parser("plot", help="SVG line chart of an eos CSV")
    p.add_argument("--input", required=True, metavar="CSV")
    p.add_argument("--x", default="beta")
    p.add_argument("--columns", default="energy,entropy,heat_capacity")
    p.add_argument("--output", "-o", metavar="PATH")
    return parser


def _spectrum(args):
    if args.levels is None:
        if args.law != "custom":
            raise UsageError("--levels is required")
        return None
    return Spectrum.parse(args.levels)


def _law(args, spectrum):
    if args.law == "custom":
        if not args.custom:
            raise UsageError("--law custom needs --custom PATH")
        try:
            return load_custom_law(args.custom)
        except OSError as exc:
            raise UsageError(f"cannot read {args.custom}: {exc.strerror}") from None
    return dirac_law(spectrum) if args.law == "dirac" else haar_law(spectrum)


def _two_level(args, spectrum):
    """Closed-form handle when the request is a plain two-level system."""
    if args.law == "custom" or spectrum is None or len(spectrum.levels) != 2:
        return None
    if any(m != 1 for _, m in spectrum.levels):
        return None
    return TwoLevel(spectrum.levels[0][0], spectrum.levels[1][0])


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QBATH_SEED")
    if env is None:
        raise UsageError("Monte Carlo needs --seed or QBATH_SEED")
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"QBATH_SEED={env!r} is not an integer") from None


# ----------------------------------------------------------------------------
# output
# ----------------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars become python."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render_csv(columns, rows):
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(row[c]) for c in columns) + "\n")
    return buf.getvalue()


def render_json(meta, data):
    return json.dumps(_clean({"meta": meta, "data": data}), indent=2, allow_nan=False) + "\n"


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _meta(args, spectrum, seed=None, method=None, **extra):
    meta = {
        "law": args.law if args.law != "custom" else f"custom:{args.custom}",
        "spectrum": spectrum.text() if spectrum is not None else None,
        "seed": seed,
        "method": method,
        "version": __version__,
    }
    meta.update(extra)
    return meta


def _table(args, spectrum, columns, rows, default="csv", **meta):
    fmt = args.format or default
    if fmt == "csv":
        return render_csv(columns, rows)
    return render_json(_meta(args, spectrum, **meta), rows)


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------

def _eos_row(p):
    return {"beta": p.beta, "logZ": p.log_Z, "energy": p.energy, "entropy": p.entropy,
            "heat_capacity": p.heat_capacity, "temperature": p.temperature}


def _closed_point(tl, model, beta, k_B):
    fn = dirac2 if model == "dirac" else haar2
    c = fn(tl, beta, k_B)
    return ThermoPoint(beta=float(beta), log_Z=c.log_Z, energy=c.E, entropy=c.S,
                       heat_capacity=c.C,
                       temperature=math.inf if beta == 0 else 1.0 / (k_B * beta))


def cmd_eos(args):
    spectrum = _spectrum(args)
    if not args.k_B > 0:
        raise DomainError(f"k_B must be positive, got {args.k_B}", args.k_B)
    scale = args.grid_scale
    tl = _two_level(args, spectrum)
    errors = []
    if args.beta is not None:
        betas = parse_grid(args.beta, scale)
        if tl is not None:
            points = []
            for i, b in enumerate(betas):
                try:
                    if not b >= 0:
                        raise DomainError(f"beta = {b} < 0 is not supported", b)
                    points.append(_closed_point(tl, args.law, b, args.k_B))
                except DomainError as exc:
                    errors.append({"index": i, "value": b, "message": str(exc)})
            method = f"closed-form-{args.law}"
        else:
            eos = eos_scan(_law(args, spectrum), betas=betas, k_B=args.k_B)
            points, method = eos.points, "generic"
            errors = [{"index": e.index, "value": e.value, "message": e.message} for e in eos.errors]
    else:
        eos = eos_scan(_law(args, spectrum), energies=parse_grid(args.energy_grid, scale),
                       k_B=args.k_B)
        points, method = eos.points, "generic"
        errors = [{"index": e.index, "value": e.value, "message": e.message} for e in eos.errors]
    for e in errors:
        print(f"qbath: grid entry {e['index']} ({e['value']!r}) skipped: {e['message']}",
              file=sys.stderr)
    if not points:
        raise DomainError("no grid entry lies in the valid domain")
    rows = [_eos_row(p) for p in points]
    return _table(args, spectrum, EOS_COLUMNS, rows, method=method, k_B=args.k_B,
                  errors=errors)


def cmd_invert(args):
    spectrum = _spectrum(args)
    law = _law(args, spectrum)
    beta = invert_beta(law, args.energy)
    row = {"energy": args.energy, "beta": beta, "logZ": log_partition(law, beta),
           "entropy": entropy_of_energy(law, args.energy, args.k_B)}
    if (args.format or "json") == "csv":
        return render_csv(tuple(row), [row])
    return render_json(_meta(args, spectrum, k_B=args.k_B), row)


def cmd_sample(args):
    spectrum = _spectrum(args)
    seed = _seed(args)
    rng = RngStream(seed)
    if args.samples < 0:
        raise DomainError("samples must be non-negative", args.samples)
    if args.law == "haar":
        draws = sample_haar_energy(spectrum, rng, args.samples, threads=args.threads)
    else:
        law = _law(args, spectrum)
        parts = map_chunks(law.sample, args.samples, rng, threads=args.threads)
        draws = np.concatenate(parts) if parts else np.empty(0)
    rows = [{"energy": float(v)} for v in draws]
    return _table(args, spectrum, ("energy",), rows, seed=seed, method="sample")


def _tail_row(est, k_B):
    d = est.to_dict()
    d["entropy"] = est.entropy(k_B)
    return d


TAIL_COLUMNS = ("n", "energy", "delta", "value", "entropy", "std_error", "method", "samples",
                "hits", "zero_hits")


def _mc_context(args, spec):
    """(seed, stream); the seed is mandatory only when sampling is certain."""
    if resolve_method(spec, args.method) in MC_METHODS:
        seed = _seed(args)
    else:
        # auto may still fall back to tilted sampling on a resource bound
        try:
            seed = _seed(args)
        except UsageError:
            return None, None
    return seed, RngStream(seed)


def cmd_tail(args, shell=False):
    spectrum = _spectrum(args)
    spec = BathSpec(_law(args, spectrum), args.n)
    seed, rng = _mc_context(args, spec)
    kw = dict(samples=args.samples, rng=rng, threads=args.threads)
    if shell:
        est = shell_entropy(spec, args.energy, args.delta, args.method, **kw)
    else:
        est = estimate_tail(spec, args.energy, args.method, **kw)
    row = _tail_row(est, args.k_B)
    if (args.format or "json") == "csv":
        return render_csv(TAIL_COLUMNS, [row])
    return render_json(_meta(args, spectrum, seed=seed if est.method in MC_METHODS else None,
                             method=est.method, k_B=args.k_B), row)


def cmd_converge(args):
    spectrum = _spectrum(args)
    law = _law(args, spectrum)
    n_list = parse_int_list(args.n_list)
    if not n_list:
        raise UsageError("--n-list is empty")
    seed, rng = _mc_context(args, BathSpec(law, n_list[0]))
    rows = convergence_study(law, args.energy, n_list, args.method, samples=args.samples,
                             rng=rng, k_B=args.k_B, threads=args.threads)
    rows = [r.to_dict() for r in rows]
    return _table(args, spectrum, ("n", "entropy", "bound", "gap", "std_error", "method"), rows,
                  seed=seed, method=rows[0]["method"], k_B=args.k_B, energy=args.energy)


def cmd_check(args):
    spectrum = _spectrum(args)
    law = _law(args, spectrum)
    if spectrum is None:
        spectrum = Spectrum.from_eigenvalues(law.energies)
    eps = parse_grid(args.epsilons) if args.epsilons else []
    report = completeness_check(spectrum, law, eps)
    if (args.format or "json") == "csv":
        rows = [{"epsilon": e, "probability": p} for e, p in report.witnesses]
        return render_csv(("epsilon", "probability"), rows)
    return render_json(_meta(args, spectrum), report.to_dict())


def _read_columns(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        data = {k: [] for k in reader.fieldnames or ()}
        for row in reader:
            for k, v in row.items():
                data[k].append(float(v))
    return {k: np.array(v) for k, v in data.items()}


def render_svg(x, series, x_label="x"):
    """Deterministic 800x600 line chart; one polyline per named series."""
    width, height, pad = 800, 600, 60
    ys = np.concatenate([y for _, y in series]) if series else np.empty(0)
    finite_x = x[np.isfinite(x)]
    finite_y = ys[np.isfinite(ys)]
    x0, x1 = (finite_x.min(), finite_x.max()) if finite_x.size else (0.0, 1.0)
    y0, y1 = (finite_y.min(), finite_y.max()) if finite_y.size else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(v):
        return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

    def py(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
           f'width="{width}" height="{height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" '
           'stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
           f'<text x="{pad}" y="{height - pad + 20}" font-size="12">{x0:.6g}</text>',
           f'<text x="{width - pad}" y="{height - pad + 20}" font-size="12" '
           f'text-anchor="end">{x1:.6g}</text>',
           f'<text x="{width / 2:.0f}" y="{height - 15}" font-size="14" '
           f'text-anchor="middle">{x_label}</text>',
           f'<text x="{pad - 5}" y="{height - pad}" font-size="12" text-anchor="end">{y0:.6g}</text>',
           f'<text x="{pad - 5}" y="{pad + 4}" font-size="12" text-anchor="end">{y1:.6g}</text>']
    for i, (name, y) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok], y[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{width - pad - 5}" y="{pad + 16 * (i + 1)}" font-size="12" '
                   f'fill="{color}" text-anchor="end">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_plot(args):
    try:
        data = _read_columns(args.input)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror}") from None
    except ValueError as exc:
        raise DomainError(f"{args.input} is not a numeric CSV: {exc}") from None
    names = [c.strip() for c in args.columns.split(",") if c.strip()]
    missing = [c for c in [args.x] + names if c not in data]
    if missing:
        raise UsageError(f"columns not in {args.input}: {', '.join(missing)}")
    return render_svg(data[args.x], [(c, data[c]) for c in names], x_label=args.x)


COMMANDS = {
    "eos": cmd_eos,
    "invert": cmd_invert,
    "sample": cmd_sample,
    "tail": cmd_tail,
    "shell": lambda args: cmd_tail(args, shell=True),
    "converge": cmd_converge,
    "check": cmd_check,
    "plot": cmd_plot,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        text = COMMANDS[args.command](args)
        _emit(text, args.output)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"qbath: error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        value = "" if exc.value is None else f" (value: {exc.value!r})"
        print(f"qbath: domain error: {exc}{value}", file=sys.stderr)
        return 3
    except ResourceError as exc:
        print(f"qbath: resource error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
