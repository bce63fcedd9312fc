"""Command-line experiment runner.

Subcommands map onto the standard experiment families: `cdf` (distribution
of a bound vs its asymptotic law), `ergodic` (mean capacity vs SNR),
`moments` (asymptotic moments vs array size), `validate` (the acceptance
criteria suite) and `version`.

Every result file is CSV with one header line and numbers at nine
significant digits, written atomically (write-then-rename) and paired with
a JSON manifest carrying the full parameter set and the file digest.  For a
fixed command line and seed the result bytes are identical regardless of
the RASCAP_WORKERS setting.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
import time

from . import __version__, acceptance
from .bounds import asymptotic_ergodic, bub_density, bub_gaussian, mub_density, \
    mub_ergodic_moments
from .channel import SystemConfig
from .mc import ks_distance, sample_bub_exact, sample_mub_exact, \
    sample_selected_capacity

ES_FEASIBLE_SUBSETS = 10_000  # auto method switches to greedy beyond this


def _fmt(v) -> str:
    return f"{float(v):.9g}"


def _parse_range(text: str, cast):
    """Parse '1,2,3' lists or 'start:step:stop' (stop inclusive) ranges."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(
                f"range must be start:step:stop, got {text!r}")
        start, step, stop = (cast(p) for p in parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        out = []
        v = start
        while v <= stop + (1e-9 if cast is float else 0):
            out.append(cast(v))
            v += step
        return out
    try:
        return [cast(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _int_list(text):
    return _parse_range(text, int)


def _float_list(text):
    return _parse_range(text, float)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _rho_bar_from(ns) -> float:
    if ns.rho_bar is not None:
        return ns.rho_bar
    return 10.0 ** (ns.snr_db / 10.0)


def _write_result(out_dir: str, name: str, header: list, rows: list,
                  manifest_params: dict, fmt: str, t_start: float):
    """Atomically write one table plus its manifest; returns the file path."""
    os.makedirs(out_dir, exist_ok=True)
    if fmt == "json":
        path = os.path.join(out_dir, name + ".json")
        payload = json.dumps(
            [{k: v for k, v in zip(header, row)} for row in rows],
            indent=1).encode() + b"\n"
    else:
        path = os.path.join(out_dir, name + ".csv")
        lines = [",".join(header)]
        lines += [",".join(str(c) for c in row) for row in rows]
        payload = ("\n".join(lines) + "\n").encode()

    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".tmp-" + name)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

    manifest = {
        "tool": "rascap",
        "version": __version__,
        "params": manifest_params,
        "output": os.path.basename(path),
        "rows": len(rows),
        "sha256": hashlib.sha256(payload).hexdigest(),
        "duration_s": round(time.perf_counter() - t_start, 3),
    }
    with open(path + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def _cdf_points(sample, law, n_points: int = 512):
    lo = min(float(sample.values[0]), law_lo(law))
    hi = max(float(sample.values[-1]), law_hi(law))
    pad = 0.02 * (hi - lo)
    return [lo - pad + (hi - lo + 2 * pad) * i / (n_points - 1)
            for i in range(n_points)]


def law_lo(law) -> float:
    if hasattr(law, "x0"):
        return law.x0
    return law.mu - 8.0 * law.sigma


def law_hi(law) -> float:
    if hasattr(law, "x0"):
        return law.x0 + law.dx * (law.pdf.size - 1)
    return law.mu + 8.0 * law.sigma


def cmd_cdf(ns) -> int:
    rho = _rho_bar_from(ns)
    for nr in ns.nr:
        t0 = time.perf_counter()
        cfg = SystemConfig(ns.nt, nr, ns.l, rho)
        if ns.regime == "bub":
            law = bub_density(bub_gaussian(cfg))
            sample = sample_bub_exact(cfg, ns.trials, ns.seed)
        else:
            law = mub_density(cfg)
            sample = sample_mub_exact(cfg, ns.trials, ns.seed)
        ks = ks_distance(sample, law)
        header = ["x_bits", "cdf_exact_mc", "cdf_asymptotic"]
        rows = [[_fmt(x), _fmt(sample.cdf_at(x)), _fmt(law.cdf_at(x))]
                for x in _cdf_points(sample, law)]
        rows.append(["ks_distance", _fmt(ks), ""])
        params = {"subcommand": "cdf", "regime": ns.regime, "n_t": ns.nt,
                  "n_r": nr, "l": ns.l, "rho_bar": rho, "trials": ns.trials,
                  "seed": ns.seed}
        path = _write_result(ns.out, f"cdf_{ns.regime}_nr{nr}", header, rows,
                             params, ns.format, t0)
        print(f"wrote {path} (ks={ks:.4f})")
    return 0


def cmd_ergodic(ns) -> int:
    rho_grid = [(db, 10.0 ** (db / 10.0)) for db in ns.snr_db]
    for l in ns.l:
        t0 = time.perf_counter()
        method = ns.method
        if method == "auto":
            method = ("exhaustive"
                      if math.comb(ns.nr, l) <= ES_FEASIBLE_SUBSETS else "greedy")
        rows = []
        for db, rho in rho_grid:
            cfg = SystemConfig(ns.nt, ns.nr, l, rho)
            if ns.regime == "bub":
                asym = bub_gaussian(cfg).mu
                exact = sample_bub_exact(cfg, ns.trials, ns.seed).mean()
            else:
                asym = mub_ergodic_moments(cfg)[0]
                exact = sample_mub_exact(cfg, ns.trials, ns.seed).mean()
            cap = sample_selected_capacity(cfg, ns.trials, ns.seed,
                                           method=method).mean()
            rows.append([_fmt(db), _fmt(rho), _fmt(asym), _fmt(exact),
                         _fmt(cap), method])
        header = ["snr_db", "rho_bar", "asym_bound_mean", "exact_bound_mean",
                  "capacity_mean", "capacity_method"]
        params = {"subcommand": "ergodic", "regime": ns.regime, "n_t": ns.nt,
                  "n_r": ns.nr, "l": l, "snr_db": ns.snr_db,
                  "trials": ns.trials, "seed": ns.seed, "method": method}
        path = _write_result(ns.out, f"ergodic_{ns.regime}_l{l}", header, rows,
                             params, ns.format, t0)
        print(f"wrote {path}")
    return 0


def cmd_moments(ns) -> int:
    t0 = time.perf_counter()
    rho = _rho_bar_from(ns)
    rows = []
    for nr in ns.nr:
        cfg = SystemConfig(ns.nt, nr, ns.l, rho)
        if ns.regime == "bub":
            mean, var = asymptotic_ergodic(bub_gaussian(cfg))
        else:
            mean, var = asymptotic_ergodic(mub_density(cfg))
        rows.append([str(nr), _fmt(mean), _fmt(var)])
    header = ["n_r", "asym_mean", "asym_variance"]
    params = {"subcommand": "moments", "regime": ns.regime, "n_t": ns.nt,
              "l": ns.l, "n_r": ns.nr, "rho_bar": rho, "seed": ns.seed}
    path = _write_result(ns.out, f"moments_{ns.regime}", header, rows, params,
                         ns.format, t0)
    print(f"wrote {path}")
    return 0


def cmd_validate(ns) -> int:
    report = acceptance.run_suite(ns.suite, ns.seed, criteria=ns.criteria)
    print(acceptance.format_report(report))
    if ns.out is not None:
        os.makedirs(ns.out, exist_ok=True)
        path = os.path.join(ns.out, "validate_report.json")
        with open(path, "w") as fh:
            json.dump(report.as_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        print(f"wrote {path}")
    return 0 if report.passed else 1


def _add_common(p: argparse.ArgumentParser, *, single_nr: bool,
                single_l: bool, snr_sweep: bool):
    p.add_argument("--nt", type=_positive_int, required=True,
                   help="transmit antenna count")
    if single_nr:
        p.add_argument("--nr", type=_positive_int, required=True,
                       help="receive antenna count")
    else:
        p.add_argument("--nr", type=_int_list, required=True,
                       help="receive antenna counts: list 16,32 or range 16:16:256")
    if single_l:
        p.add_argument("--l", type=_positive_int, required=True,
                       help="selected antenna count")
    else:
        p.add_argument("--l", type=_int_list, required=True,
                       help="selected antenna counts (list or range)")
    snr = p.add_mutually_exclusive_group(required=True)
    if snr_sweep:
        snr.add_argument("--snr-db", type=_float_list,
                         help="normalised SNR sweep in dB (list or start:step:stop)")
    else:
        snr.add_argument("--snr-db", type=float, help="normalised SNR in dB")
    snr.add_argument("--rho-bar", type=float,
                     help="normalised SNR as a linear ratio (overrides --snr-db)")
    p.add_argument("--trials", type=_positive_int, default=50_000,
                   help="Monte-Carlo trials (default 50000)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="result file format (default csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rascap",
        description="Receive-antenna-selection capacity bounds: Monte-Carlo "
                    "simulation and asymptotic approximations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cdf", help="bound CDF: exact Monte-Carlo vs asymptotic law")
    p.add_argument("--regime", choices=("bub", "mub"), required=True)
    _add_common(p, single_nr=False, single_l=True, snr_sweep=False)
    p.set_defaults(fn=cmd_cdf)

    p = sub.add_parser("ergodic", help="mean capacity and bounds vs SNR")
    p.add_argument("--regime", choices=("bub", "mub"), required=True)
    p.add_argument("--method", choices=("auto", "exhaustive", "greedy"),
                   default="auto",
                   help="subset search for the capacity column (default auto)")
    _add_common(p, single_nr=True, single_l=False, snr_sweep=True)
    p.set_defaults(fn=cmd_ergodic)

    p = sub.add_parser("moments", help="asymptotic bound moments vs array size")
    p.add_argument("--regime", choices=("bub", "mub"), required=True)
    _add_common(p, single_nr=False, single_l=True, snr_sweep=False)
    p.set_defaults(fn=cmd_moments)

    p = sub.add_parser("validate", help="run the acceptance criteria suite")
    p.add_argument("--suite", choices=("fast", "full"), default="fast")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--criteria", type=_int_list, default=None,
                   help="criterion subset, e.g. 1,2,7")
    p.add_argument("--out", default=None,
                   help="directory for the JSON report (optional)")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("version", help="print the tool version")
    p.set_defaults(fn=lambda ns: print(__version__) or 0)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.fn(ns)
    except (ValueError, RuntimeError) as exc:
        print(f"rascap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
