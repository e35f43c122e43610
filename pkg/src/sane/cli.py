"""Command-line interface: ``sane run|label|compare|sweep --config cfg.json``.

Exit status 0 on success, 2 on configuration errors (the message names
the offending key) and 3 on runtime errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness, report
from .config import RunSpec, config_snapshot, load_config
from .engine import BAD, GOOD, Trace, initial_design, predicted_raw_map, prepare_box, run
from .errors import ConfigError, ParseError, SaneError
from .metrics import evaluate_trace
from .problem import BlackBox

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _parse_seeds(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError("seeds", f"expected a comma-separated integer list, got {text!r}") from None
    if not seeds:
        raise ConfigError("seeds", "at least one seed is required")
    return seeds


def _labeler(spec: RunSpec):
    if spec.auto_labels:
        return harness.auto_labeler(spec.builtin)
    if spec.labels_path is not None:
        try:
            return harness.file_labeler(report.read_labels_csv(spec.labels_path))
        except OSError as exc:
            raise ConfigError("labels", str(exc)) from None
        except ParseError as exc:
            raise ConfigError("labels", str(exc)) from None
    return None


def _labels_for(spec: RunSpec, box: BlackBox):
    labeler = _labeler(spec)
    if labeler is None or spec.config.gate == "none":
        return None
    cands, idx = initial_design(spec.config, box)
    return [(cands[j], lab) for j, lab in zip(idx, labeler(cands[idx])) if lab is not None]


# ---------------------------------------------------------------------------
# run


def _grid_axes(cands: np.ndarray):
    axes = [np.unique(cands[:, m]) for m in range(cands.shape[1])]
    if np.prod([a.size for a in axes]) != cands.shape[0]:
        return None
    return axes


def write_slices(out: Path, trace: Trace, box: BlackBox, pred: np.ndarray) -> list[str]:
    """CSV slice over the first two axes through the best sample, for grids above 2-D."""
    anchor = np.asarray(trace.archive.best().location)
    on = np.all(trace.candidates[:, 2:] == anchor[2:], axis=1)
    rows = [[*x, p, box.truth(x)] for x, p in zip(trace.candidates[on], pred[on])]
    header = [*(f"x{m + 1}" for m in range(trace.dim)), "predicted", "truth"]
    path = out / "slice.csv"
    path.write_text(report.format_trace_csv(header, rows))
    return [path.name]


def write_heatmaps(out: Path, trace: Trace, box: BlackBox, pred: np.ndarray) -> list[str]:
    """SVG maps of truth, prediction and final gate for 2-D grids; a CSV slice above 2-D."""
    if trace.dim > 2:
        return write_slices(out, trace, box, pred)
    if trace.dim != 2:
        return []
    axes = _grid_axes(trace.candidates)
    if axes is None:
        return []
    shape = (axes[0].size, axes[1].size)
    pts = [(int(np.searchsorted(axes[0], s.location[0])), int(np.searchsorted(axes[1], s.location[1])))
           for s in trace.archive]
    foci = [(int(np.searchsorted(axes[0], f.location[0])), int(np.searchsorted(axes[1], f.location[1])))
            for f in trace.foci]
    maps = {"predicted": pred, "truth": np.array([box.truth(x) for x in trace.candidates])}
    if trace.final_gate is not None:
        maps["gate"] = trace.final_gate.mean_map(trace.candidates_norm)
    written = []
    for name, values in maps.items():
        path = out / f"{name}.svg"
        path.write_text(report.heatmap_svg(np.asarray(values).reshape(shape), pts, title=name, marks=foci))
        written.append(path.name)
    return written


def summarize(trace: Trace, box: BlackBox, spec: RunSpec) -> tuple[dict, np.ndarray]:
    rep = evaluate_trace(trace, box, radius=spec.radius, min_count=spec.min_count, bins=spec.bins)
    summary = {
        "problem": trace.box_name,
        "direction": trace.direction,
        "config": config_snapshot(trace.config),
        "report": rep.as_dict(),
        "early_stop": trace.early_stop,
        "foci": [{"archive_index": f.archive_index, "location": list(f.location), "value": f.value}
                 for f in trace.foci],
        "roi_events": [{"iteration": e.iteration, "kind": e.kind, "candidate": e.candidate, "p": e.p,
                        "accepted": e.accepted} for e in trace.roi_events],
        "gate_events": [{"iteration": e.iteration, "n_train": e.n_train} for e in trace.gate_events],
    }
    return summary, predicted_raw_map(trace)


def cmd_run(spec: RunSpec, seeds, out: Path, quiet: bool) -> int:
    if seeds is not None:
        if len(seeds) != 1:
            raise ConfigError("seeds", "run takes a single seed; use compare or sweep for several")
        spec.config = replace(spec.config, seed=seeds[0])
    box = spec.build_box()
    trace = run(spec.config, box, _labels_for(spec, box))
    box = prepare_box(spec.config, box)
    out.mkdir(parents=True, exist_ok=True)
    report.write_trace_csv(out / "trace.csv", trace)
    summary, pred = summarize(trace, box, spec)
    summary["heatmaps"] = write_heatmaps(out, trace, box, pred)
    report.write_json(out / "summary.json", summary)
    if not quiet:
        r = summary["report"]
        print(f"{trace.box_name}: {len(trace.records)} iterations, best {r['best_value']:.6g}, "
              f"{len(trace.foci)} foci -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# label


def prompt_labels(locations, values, ask=input, emit=print) -> list[str | None]:
    """Ask good/bad/skip for each sample; EOF counts as skip."""
    out = []
    for k, (loc, val) in enumerate(zip(locations, values), start=1):
        coords = ", ".join(f"{v:.6g}" for v in loc)
        while True:
            try:
                ans = ask(f"[{k}/{len(values)}] x = ({coords})  y = {val:.6g}  good/bad/skip? ").strip().lower()
            except EOFError:
                ans = "skip"
            if ans in ("g", "good"):
                out.append(GOOD)
            elif ans in ("b", "bad"):
                out.append(BAD)
            elif ans in ("s", "skip", ""):
                out.append(None)
            else:
                emit("please answer good, bad or skip")
                continue
            break
    return out


def cmd_label(spec: RunSpec, seeds, out: Path, quiet: bool, ask=input) -> int:
    if seeds is not None:
        if len(seeds) != 1:
            raise ConfigError("seeds", "label takes a single seed")
        spec.config = replace(spec.config, seed=seeds[0])
    box = prepare_box(spec.config, spec.build_box())
    cands, idx = initial_design(spec.config, box)
    values = [box(cands[j]) for j in idx]
    labels = prompt_labels(cands[idx], values, ask=ask)
    kept = [(cands[j], lab) for j, lab in zip(idx, labels) if lab is not None]
    path = spec.labels_path or (out / "labels.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    report.write_labels_csv(path, [loc for loc, _ in kept] if kept else np.empty((0, box.dim)),
                            [lab for _, lab in kept])
    classes = {lab for _, lab in kept}
    if len(classes) < 2:
        print("warning: labels cover fewer than two classes; the gate will be inactive", file=sys.stderr)
    if not quiet:
        print(f"wrote {len(kept)} labels to {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare / sweep


def cmd_compare(spec: RunSpec, seeds, out: Path, quiet: bool, only_own: bool = False) -> int:
    seeds = seeds or [spec.config.seed]
    box = spec.build_box()
    labeler = _labeler(spec)
    strategies = [harness.strategy_name(spec.config)] if only_own else None
    comp = harness.compare(spec.config, box, seeds, labeler, strategies, spec.radius, spec.min_count, spec.bins)
    rows = comp.table()
    out.mkdir(parents=True, exist_ok=True)
    harness.write_table(out / ("sweep.csv" if only_own else "compare.csv"), rows)
    report.write_json(out / ("sweep.json" if only_own else "compare.json"), {
        "seeds": comp.seeds,
        "per_seed": {name: {str(s): m for s, m in res.metrics.items()} for name, res in comp.results.items()},
        "aggregates": {name: res.aggregates for name, res in comp.results.items()},
    })
    if not quiet:
        print(harness.format_table(rows))
    return EXIT_OK


def cmd_sweep(spec: RunSpec, seeds, out: Path, quiet: bool) -> int:
    return cmd_compare(spec, seeds, out, quiet, only_own=True)


COMMANDS = {"run": cmd_run, "label": cmd_label, "compare": cmd_compare, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sane", description="Multi-optimum Bayesian optimization with a human-labeled gate.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seeds", help="comma-separated seed list")
    p.add_argument("--out", help="output directory (overrides the config's 'output')")
    p.add_argument("--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        spec = load_config(args.config, check_labels=args.command != "label")
        out = Path(args.out) if args.out else spec.output
        return COMMANDS[args.command](spec, _parse_seeds(args.seeds), out, args.quiet)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SaneError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
