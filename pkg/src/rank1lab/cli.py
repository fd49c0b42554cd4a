"""Command-line front end.

Every command writes its artifacts into ``--out`` (default ``./out``) and
prints a short result on stdout; ``--json`` / ``--csv`` print the report or
table instead.  Exit status: 0 ok, 2 invalid input, 3 cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .construction import ConstructionError, classify_measure, heights, preset, stage_summaries
from .correlation import LevelAlgebra
from .geometry import LEVEL_CAP, build_tower_map
from .kernels import resolve_threads
from .limits import (
    AnalysisError,
    fit_best_convention,
    fit_shift,
    kappa_distance,
    poly_score,
    polynomial_limit_search,
    rigidity_scan,
)
from .spacers import SpacerError
from .spectral import GRID, spectral_sequence, zero_mean_function
from .words import EXPLICIT_CAP, CapExceeded, expand_word, save_word, symbol_counts, word_csv

EXIT_OK, EXIT_INVALID, EXIT_CAP = 0, 2, 3
SCAN_CAP = 10**5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _Invalid(message)


class _Invalid(Exception):
    pass


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, (set, tuple)):
        return list(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _dumps(payload: dict) -> str:
    return json.dumps(payload, indent=1, sort_keys=True, default=_jsonable) + "\n"


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of integers, got {text!r}") from None


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--preset", help="preset name, e.g. classical, poly:2, custom:FILE")
    p.add_argument("--repeat-last", action="store_true", help="extend a custom spacer list with its last value")
    p.add_argument("--out", default="out", help="output directory (default ./out)")
    p.add_argument("--config", help="JSON file with flag values (command-line flags win)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (RANK1LAB_THREADS overrides)")
    p.add_argument("--json", action="store_true", help="print the JSON report")
    p.add_argument("--csv", action="store_true", help="print the CSV table")
    return p


def _stages(p, base=True, target=True):
    if base:
        p.add_argument("--base", type=int, default=1, help="alphabet stage j")
    if target:
        p.add_argument("--target", type=int, help="tower stage J (default j + 6)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rank1lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rank1lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()

    p = sub.add_parser("heights", parents=[common], help="stage heights a_j and spacer sums")
    p.add_argument("--stages", type=int, default=8)

    p = sub.add_parser("measure", parents=[common], help="finite / infinite measure verdict")
    p.add_argument("--probe", type=int, default=64)

    p = sub.add_parser("word", parents=[common], help="coding word W_{j,J}")
    _stages(p)
    p.add_argument("--storage", choices=("auto", "explicit", "rle"), default="auto")
    p.add_argument("--max-length", type=int, default=EXPLICIT_CAP, help="explicit storage cap")

    p = sub.add_parser("geom", parents=[common], help="exact interval map of the stage-J tower")
    p.add_argument("--stages", type=int, default=3)
    p.add_argument("--max-levels", type=int, default=LEVEL_CAP)

    p = sub.add_parser("correlate", parents=[common], help="correlation matrix at one shift")
    _stages(p)
    p.add_argument("--shift", type=int, default=1)

    p = sub.add_parser("weaklimit", parents=[common], help="NNLS weak-limit fit at one shift")
    _stages(p)
    p.add_argument("--shift", type=int, required=False, default=None)
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--convention", choices=("best", "exact"), default="best")
    p.add_argument("--no-theta", action="store_true")

    p = sub.add_parser("rigidity", parents=[common], help="partial rigidity scan")
    _stages(p)
    p.add_argument("--n-max", type=int, default=SCAN_CAP)
    p.add_argument("--candidates", type=_int_list, help="explicit shift list (skips the dense scan)")
    p.add_argument("--top", type=int, default=20)

    p = sub.add_parser("kappa", parents=[common], help="distance to (1-k) I + k Theta")
    _stages(p)
    p.add_argument("--shifts", type=_int_list, help="shift list (default a_{j+4}..a_{j+7})")

    p = sub.add_parser("polysearch", parents=[common], help="search for (I + T^p)/2 limits")
    _stages(p)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--K", type=int)
    p.add_argument("--search", type=_int_list)
    p.add_argument("--no-theta", action="store_true")

    p = sub.add_parser("spectrum", parents=[common], help="autocorrelations, periodogram, Cesaro statistic")
    _stages(p)
    p.add_argument("--seed", type=int, default=0, help="level a of g = 1_{E^a} - mu(E^a)")
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--mode", choices=("fast", "exact"), default="fast")
    p.add_argument("--grid", type=int, default=GRID)
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise _Invalid(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise _Invalid("config must be a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        cfg.pop("command", None)
        cfg.pop("config", None)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise _Invalid(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    if not args.preset:
        raise _Invalid("--preset is required (on the command line or in --config)")
    if os.environ.get("RANK1LAB_THREADS"):
        args.threads = resolve_threads(args.threads)
    if args.threads < 1:
        raise _Invalid("--threads must be >= 1")
    return args


def resolved_config(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("config", "json", "csv")}
    if getattr(args, "base", None) is not None and "target" in cfg and cfg["target"] is None:
        cfg["target"] = args.base + 6
    return cfg


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


class Run:
    def __init__(self, args):
        self.args = args
        self.spec = preset(args.preset, repeat_last=args.repeat_last)
        self.out = Path(args.out)
        self.config = resolved_config(args)
        self.stdout: list[str] = []

    def write(self, name: str, text: str | bytes) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        if isinstance(text, bytes):
            path.write_bytes(text)
        else:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)

    def report(self, name: str, body: dict) -> str:
        payload = {"version": __version__, "config": self.config, "spec": self.spec.to_dict(), **body}
        text = _dumps(payload)
        self.write(name, text)
        return text

    def emit(self, text: str) -> None:
        self.stdout.append(text if text.endswith("\n") else text + "\n")

    def algebra(self) -> LevelAlgebra:
        a = self.args
        return LevelAlgebra(self.spec, a.base, a.target if a.target is not None else a.base + 6, threads=a.threads)


def cmd_heights(run: Run) -> None:
    rows = stage_summaries(run.spec, run.args.stages)
    short = "j,s_j,a_j\n" + "".join(f"{s.j},{s.s},{s.a}\n" for s in rows)
    full = "j,s_j,a_j,w_j,cum_measure,tail_bound\n" + "".join(
        f"{s.j},{s.s},{s.a},{_jsonable(s.w)},{_jsonable(s.cum_measure)},"
        f"{'' if s.tail_bound is None else _jsonable(s.tail_bound) if isinstance(s.tail_bound, Fraction) else s.tail_bound}\n"
        for s in rows
    )
    run.write("heights.csv", full)
    rep = run.report(
        "heights.json",
        {
            "stages": [
                {
                    "j": s.j,
                    "spacers": list(s.spacers),
                    "s_j": s.s,
                    "a_j": s.a,
                    "w_j": s.w,
                    "cum_measure": s.cum_measure,
                    "tail_bound": s.tail_bound,
                }
                for s in rows
            ]
        },
    )
    run.emit(rep if run.args.json else short)


def cmd_measure(run: Run) -> None:
    mc = classify_measure(run.spec, run.args.probe)
    rep = run.report("measure.json", {"measure": mc.to_dict()})
    run.emit(rep if run.args.json else mc.kind)


def cmd_word(run: Run) -> None:
    a = run.args
    target = a.target if a.target is not None else a.base + 6
    w = expand_word(run.spec, a.base, target, storage=a.storage, cap=a.max_length)
    run.out.mkdir(parents=True, exist_ok=True)
    save_word(w, run.out / "word.r1w")
    counts = symbol_counts(w)
    body = {
        "base": a.base,
        "target": target,
        "length": w.length,
        "storage": w.storage,
        "alphabet": heights(run.spec, a.base)[-1],
        "spacer_count": counts.get(0xFFFF, 0),
        "file": "word.r1w",
    }
    rep = run.report("word.json", body)
    if a.csv:
        text = word_csv(w)
        run.write("word.csv", text)
        run.emit(text)
    elif a.json:
        run.emit(rep)
    else:
        run.emit(f"W_{{{a.base},{target}}}: {w.length} symbols ({w.storage}) -> {run.out / 'word.r1w'}")


def cmd_geom(run: Run) -> None:
    a = run.args
    tmap = build_tower_map(run.spec, a.stages, cap=a.max_levels)
    payload = {"version": __version__, "config": run.config, **tmap.to_dict()}
    text = _dumps(payload)
    run.write("geom.json", text)
    if a.json:
        run.emit(text)
    else:
        run.emit(f"stage {tmap.stage}: {len(tmap)} levels of width {_jsonable(tmap.width)}, measure {_jsonable(tmap.measure())}")


def cmd_correlate(run: Run) -> None:
    alg = run.algebra()
    m = alg.matrix(run.args.shift)
    table = m.to_csv()
    run.write("correlate.csv", table)
    rep = run.report("correlate.json", {"matrix": m.summary()})
    run.emit(table if run.args.csv else rep if run.args.json else json.dumps(m.summary(), sort_keys=True))


def cmd_weaklimit(run: Run) -> None:
    a = run.args
    alg = run.algebra()
    n = a.shift
    if n is None:
        if alg.target < 7:
            raise AnalysisError("--shift is required when J < 7")
        n = alg.a[alg.target - 7]  # a_{J-6}
    if a.convention == "best":
        fit = fit_best_convention(alg, n, a.K, use_theta=not a.no_theta)
    else:
        fit = fit_shift(alg, n, a.K, use_theta=not a.no_theta)
    rep = run.report("weaklimit.json", {"requested_shift": n, "fit": fit.to_dict()})
    if a.json:
        run.emit(rep)
    else:
        top = ", ".join(f"a[{m}]={c:.4f}" for m, c in fit.ranked()[:3])
        run.emit(f"{fit.convention}: {top}, theta={fit.beta:.4f}, residual={fit.residual:.3g}")


def cmd_rigidity(run: Run) -> None:
    a = run.args
    alg = run.algebra()
    rep_obj = rigidity_scan(alg, a.candidates, n_max=a.n_max, top=a.top, threads=a.threads)
    table = rep_obj.leaderboard_csv()
    run.write("rigidity.csv", table)
    rep = run.report("rigidity.json", {"rigidity": rep_obj.to_dict(a.top)})
    if a.csv:
        run.emit(table)
    elif a.json:
        run.emit(rep)
    else:
        run.emit(f"best n={rep_obj.best.n} rho={rep_obj.best.rho:.6f}")


def cmd_kappa(run: Run) -> None:
    a = run.args
    alg = run.algebra()
    shifts = a.shifts
    if shifts is None:
        shifts = [alg.a[k - 1] for k in range(alg.base + 4, alg.base + 8) if k <= len(alg.a) and alg.a[k - 1] < alg.length]
    if not shifts:
        raise AnalysisError("no shifts to evaluate")
    rows = []
    for n in shifts:
        k, d = kappa_distance(alg.matrix(n), alg.theta)
        rows.append({"n": n, "kappa": k, "distance": d})
    best = min(rows, key=lambda r: (r["distance"], r["n"]))
    table = "n,kappa,distance\n" + "".join(f"{r['n']},{r['kappa']!r},{r['distance']!r}\n" for r in rows)
    run.write("kappa.csv", table)
    rep = run.report("kappa.json", {"rows": rows, "best": best})
    if a.csv:
        run.emit(table)
    elif a.json:
        run.emit(rep)
    else:
        run.emit(f"best n={best['n']} kappa={best['kappa']:.2f} distance={best['distance']:.4f}")


def cmd_polysearch(run: Run) -> None:
    a = run.args
    alg = run.algebra()
    n, fit = polynomial_limit_search(alg, a.p, a.search, a.K, use_theta=not a.no_theta, threads=a.threads)
    score, sign = poly_score(fit, a.p)
    rep = run.report("polysearch.json", {"p": a.p, "n": n, "score": score, "sign": sign, "fit": fit.to_dict()})
    if a.json:
        run.emit(rep)
    else:
        run.emit(f"n={n} score={score:.4f} a[0]={fit.coef(0):.4f} a[{sign * a.p}]={fit.coef(sign * a.p):.4f}")


def cmd_spectrum(run: Run) -> None:
    a = run.args
    alg = run.algebra()
    g = zero_mean_function(alg, a.seed)
    seq = spectral_sequence(alg, g, a.N, mode=a.mode, grid=a.grid, threads=a.threads)
    run.write("spectrum_sequence.csv", seq.sequence_csv())
    run.write("spectrum_periodogram.csv", seq.periodogram_csv())
    body = {"spectrum": seq.summary(), "g": {str(k): v for k, v in sorted(g.items())}}
    if seq.c_exact is not None:
        body["c0_exact"] = seq.c_exact[0]
    rep = run.report("spectrum.json", body)
    if a.csv:
        run.emit(seq.sequence_csv())
    elif a.json:
        run.emit(rep)
    else:
        s = seq.summary()
        run.emit(f"c0={s['c0']:.6g} cesaro={s['cesaro']:.6g} max_bound={s['max_bound']:.3g}")


COMMANDS = {
    "heights": cmd_heights,
    "measure": cmd_measure,
    "word": cmd_word,
    "geom": cmd_geom,
    "correlate": cmd_correlate,
    "weaklimit": cmd_weaklimit,
    "rigidity": cmd_rigidity,
    "kappa": cmd_kappa,
    "polysearch": cmd_polysearch,
    "spectrum": cmd_spectrum,
}


def run_command(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = parse_args(argv)
        run = Run(args)
        COMMANDS[args.command](run)
    except _Invalid as exc:
        print(f"rank1lab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (CapExceeded, OverflowError, MemoryError) as exc:
        print(f"rank1lab: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConstructionError, SpacerError, AnalysisError, ValueError, OSError) as exc:
        print(f"rank1lab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    stdout.write("".join(run.stdout))
    return EXIT_OK


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
