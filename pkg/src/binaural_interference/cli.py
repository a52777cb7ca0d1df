"""Command-line front end.

    binaural-interference run --experiment vdh1999-spi --seed 1 --out results/
    binaural-interference run --spec my_condition.txt --no-interference
    binaural-interference coherence --masker ODN --itd 2 --out coherence/
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import ModelError
from .model import Simulation, masker_correlations
from .stimuli import MaskerSpec, analytic_coherence_odn, gen_masker, write_wav

log = logging.getLogger("binaural_interference")


def _fmt(x: float, digits: int = 4) -> str:
    if not np.isfinite(x):
        return "nan"
    return f"{x:.{digits}f}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_curve(curve: ex.ThresholdCurve, path: Path) -> None:
    _write_csv(path, ["swept_value", "threshold_db", "threshold_db_ablation", "flag"],
               ([f"{x:g}", _fmt(t), _fmt(a), f] for x, t, a, f in curve.rows()))


def _simulation(args) -> Simulation:
    return Simulation(sample_rate=args.sample_rate, duration=args.duration, tokens=args.tokens,
                      seed=args.seed, backend=args.backend)


def _references(args, names):
    """Map series name -> reference file from ``PATH`` or ``SERIES=PATH`` options."""
    refs = {}
    for item in args.reference or []:
        key, sep, path = item.partition("=")
        if not sep:
            if len(names) != 1:
                raise ModelError("several series: use --reference SERIES=PATH")
            key, path = names[0], item
        match = [n for n in names if n == key or n.endswith("-" + key)]
        if len(match) != 1:
            raise ModelError(f"--reference {item!r} does not name one of {names}")
        refs[match[0]] = ex.load_reference(path)
    return refs


def cmd_run(args) -> int:
    sim = _simulation(args)
    if args.spec:
        specs = [ex.load_spec(args.spec, sim)]
    else:
        try:
            specs = ex.named_experiments(args.experiment, sim)
        except KeyError:
            known = sorted(set(ex.EXPERIMENTS) | set(ex.GROUPS))
            print(f"unknown experiment {args.experiment!r}; known: {', '.join(known)}", file=sys.stderr)
            return 2
    if args.no_interference:
        specs = [replace(s, params=s.params.without_interference()) for s in specs]
    names = [s.name for s in specs]
    refs = _references(args, names)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    curves = []
    meta_lines = []
    for spec in specs:
        log.info("running %s (%d conditions)", spec.name, len(spec.conditions))
        curve = ex.run_experiment(spec)
        curves.append(curve)
        target = out if len(specs) == 1 else out / spec.name
        target.mkdir(parents=True, exist_ok=True)
        write_curve(curve, target / "thresholds.csv")
        meta_lines.append(f"[{spec.name}]")
        meta_lines += [f"{k} = {v}" for k, v in curve.metadata.items()]
        meta_lines.append("")
        if args.export_audio:
            audio = target / "audio"
            audio.mkdir(exist_ok=True)
            for i, cond in enumerate(spec.conditions):
                write_wav(audio / f"masker_{i:02d}.wav",
                          gen_masker(cond.masker, sim.duration, sim.sample_rate, seed=sim.seed))
    (out / "metadata.txt").write_text("\n".join(meta_lines), encoding="utf-8")

    if refs:
        lines = []
        scored = [(c, refs[c.name]) for c in curves if c.name in refs]
        for c, r in scored:
            for fit in (False, True):
                s = ex.score(c, r, fit_offset=fit)
                lines.append(f"{c.name} offset_fitted={fit} R2={s.r2:.4f} RMSE_dB={s.rmse:.4f} "
                             f"offset_dB={s.offset:.4f} n={s.n}")
        if len(scored) > 1:
            for fit in (False, True):
                s = ex.score([c for c, _ in scored], [r for _, r in scored], fit_offset=fit)
                lines.append(f"pooled offset_fitted={fit} R2={s.r2:.4f} RMSE_dB={s.rmse:.4f} "
                             f"offset_dB={s.offset:.4f} n={s.n}")
        (out / "score.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif not args.reference:
        log.info("no reference data supplied; scoring skipped")
    n_bad = sum(1 for c in curves for f in c.flags if "no_threshold" in f)
    if n_bad:
        log.warning("%d condition(s) without threshold (flagged in the CSV)", n_bad)
    return 0


def cmd_coherence(args) -> int:
    sim = _simulation(args)
    grid = sim.grid
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    itd = args.itd * 1e-3
    masker = MaskerSpec(args.masker, tuple(args.band), itd=itd)
    gamma = masker_correlations(masker, sim)
    fc = grid.center_frequencies
    narrow = analytic_coherence_odn(fc, itd) if args.masker == "ODN" else np.ones_like(fc)
    _write_csv(out / "coherence_vs_frequency.csv",
               ["channel", "center_frequency_hz", "coherence", "analytic_narrowband"],
               ([int(k), _fmt(f, 3), _fmt(abs(g), 6), _fmt(a, 6)]
                for k, f, g, a in zip(grid.offsets, fc, gamma, narrow)))
    itds = np.round(np.arange(0, args.itd_max + 1e-9, args.itd_step), 6)
    k0 = grid.on_frequency_index
    rows = []
    for t in itds:
        g = masker_correlations(MaskerSpec(args.masker, tuple(args.band), itd=t * 1e-3), sim)
        rows.append([f"{t:g}", _fmt(abs(g[k0]), 6)])
    _write_csv(out / "coherence_vs_itd.csv", ["itd_ms", "coherence_on_frequency"], rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="binaural-interference",
                                description="Binaural tone-in-noise detection model with incoherence interference")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tokens):
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--tokens", type=int, default=tokens, help="noise tokens per interval")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--sample-rate", type=float, default=48000.0)
        sp.add_argument("--duration", type=float, default=0.5, help="token duration in seconds")
        sp.add_argument("--backend", choices=("spectral", "time"), default="spectral")

    run = sub.add_parser("run", help="simulate thresholds for an experiment")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--experiment", help="named experiment or panel, e.g. vdh1999-spi")
    src.add_argument("--spec", help="key = value experiment file")
    common(run, 100)
    run.add_argument("--no-interference", action="store_true", help="single-channel model")
    run.add_argument("--reference", action="append", metavar="[SERIES=]PATH",
                     help="digitised thresholds CSV (swept_value,threshold_db[,subject])")
    run.add_argument("--export-audio", action="store_true", help="write one masker token per condition as WAV")
    run.set_defaults(func=cmd_run)

    coh = sub.add_parser("coherence", help="per-channel and on-frequency masker coherence")
    coh.add_argument("--masker", choices=("SDN", "ODN"), default="ODN")
    coh.add_argument("--itd", type=float, default=2.0, help="ITD (ms) of the frequency profile")
    coh.add_argument("--itd-max", type=float, default=5.0)
    coh.add_argument("--itd-step", type=float, default=0.05)
    coh.add_argument("--band", type=float, nargs=2, default=(50.0, 950.0))
    common(coh, 50)
    coh.set_defaults(func=cmd_coherence)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "tokens", 2) < 2:
        print("--tokens must be at least 2", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
