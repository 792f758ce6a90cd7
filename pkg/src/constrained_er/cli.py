"""Command-line entry point: ``constrained-er <subcommand> ...``.

Each stage reads and writes plain files so it can be re-run on its own:

    synth       -> left.json, right.json, truth.csv
    block       -> pairs.csv      (id1,id2)
    train       -> model.json
    score       -> scores.csv     (id1,id2,<features>,score)
    match       -> matching.csv   (id1,id2,score)
    eval        -> counts as JSON
    pr-curve    -> pr_curve.csv
    dedupe-scan -> duplicates.csv

Exit status is 0 on success, 1 on a domain error (one ``code: message`` line
on stderr) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .blocking import DEFAULT_STOPWORDS, CandidatePairSet, build_index, candidate_pairs, load_stopwords
from .combiner import LogisticModel, TrainConfig
from .config import PipelineConfig
from .errors import FieldError, ResolutionError, SchemaError, UsageError
from .evaluation import count_outcomes, default_grid, pr_curve, score_grid, self_duplicate_scan
from .features import FEATURE_NAMES
from .io_utils import atomic_write, read_bytes
from .matchers import ALGORITHMS, DIRECTIONS, ScoredGraph, run
from .model import (
    Dataset,
    Side,
    format_score,
    guess_format,
    parse_dataset,
    parse_matching,
    parse_truth_set,
    write_matching,
)
from .pipeline import score_pairs, train_from_truth

log = logging.getLogger("constrained_er")

SCORE_COLUMNS = ("id1", "id2") + FEATURE_NAMES + ("score",)
PR_COLUMNS = ("theta", "tp", "fp", "fn", "precision", "recall", "weight", "size")


# --- argument parsing ---------------------------------------------------------

def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="FILE", default=default, help="pipeline config JSON")
    parser.add_argument("--seed", type=int, default=default, help="overrides the config seed")
    parser.add_argument("--threads", type=int, default=default, help="worker threads where a stage can use them")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="constrained-er", description="One-to-one entity resolution pipeline.")
    top.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(top, suppress=False)
    sub = top.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def command(name: str, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_, description=help_)
        _global_flags(p, suppress=True)
        return p

    def datasets(p, required_note: str = ""):
        p.add_argument("--left", metavar="FILE", help="left dataset (.json or .csv)" + required_note)
        p.add_argument("--right", metavar="FILE", help="right dataset (.json or .csv)" + required_note)

    p = command("ingest", "validate datasets and an optional truth set, print a summary")
    datasets(p)
    p.add_argument("--truth", metavar="FILE")
    p.add_argument("--out", metavar="FILE", help="summary JSON path (default: stdout)")

    p = command("block", "emit candidate pairs sharing a normalized title token")
    datasets(p)
    p.add_argument("--stopwords", metavar="FILE")
    p.add_argument("--max-pairs-per-token", type=int, metavar="N")
    p.add_argument("--out", metavar="FILE", help="default: <output_dir>/pairs.csv")

    p = command("score", "compute feature scores, and combined scores given a model")
    datasets(p)
    p.add_argument("--pairs", metavar="FILE", help="candidate pairs from `block` (default: block now)")
    p.add_argument("--model", metavar="FILE")
    p.add_argument("--stopwords", metavar="FILE")
    p.add_argument("--out", metavar="FILE", help="default: <output_dir>/scores.csv")

    p = command("train", "fit the logistic score combiner on a labeled truth set")
    datasets(p)
    p.add_argument("--truth", metavar="FILE")
    p.add_argument("--stopwords", metavar="FILE")
    p.add_argument("--method", choices=("gradient", "newton"))
    p.add_argument("--l2", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--out", metavar="FILE", help="default: <output_dir>/model.json")

    p = command("match", "resolve scored pairs with one matcher at one threshold")
    p.add_argument("--scores", metavar="FILE")
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--direction", choices=DIRECTIONS)
    p.add_argument("--threshold", type=float)
    datasets(p, " used to fix handle order for tie-breaks")
    p.add_argument("--out", metavar="FILE", help="default: <output_dir>/matching.csv")

    p = command("eval", "count true/false positives of a matching against a truth set")
    p.add_argument("--matching", metavar="FILE", required=True)
    p.add_argument("--truth", metavar="FILE")
    datasets(p)
    p.add_argument("--dedupe-fp", action="store_true", default=None,
                   help="count a pair that is both truth-negative and inferred-wrong once")
    p.add_argument("--out", metavar="FILE", help="default: stdout")

    p = command("pr-curve", "sweep a threshold grid and emit precision/recall per threshold")
    p.add_argument("--scores", metavar="FILE")
    p.add_argument("--truth", metavar="FILE")
    datasets(p)
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--direction", choices=DIRECTIONS)
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--grid", metavar="T1,T2,...", help="comma-separated thresholds")
    grid.add_argument("--at-scores", action="store_true", default=None, help="use every distinct score")
    p.add_argument("--dedupe-fp", action="store_true", default=None)
    p.add_argument("--out", metavar="FILE", help="default: <output_dir>/pr_curve.csv")

    p = command("dedupe-scan", "rank likely duplicates within a single dataset")
    p.add_argument("--dataset", metavar="FILE", required=True)
    p.add_argument("--model", metavar="FILE")
    p.add_argument("--step", type=int, default=1, help="emit every STEP-th ranked pair")
    p.add_argument("--limit", type=int, help="emit at most LIMIT pairs")
    p.add_argument("--stopwords", metavar="FILE")
    p.add_argument("--out", metavar="FILE", help="default: <output_dir>/duplicates.csv")

    p = command("synth", "generate a seeded synthetic corpus with complete truth")
    p.add_argument("--out-dir", metavar="DIR", help="default: <output_dir>")
    return top


# --- helpers ------------------------------------------------------------------

def _pick(flag, fallback, what: str):
    value = flag if flag is not None else fallback
    if value is None:
        raise UsageError(f"{what} is required (flag or config)")
    return value


def _out_path(args, cfg: PipelineConfig, default_name: str) -> str:
    return args.out if args.out is not None else str(Path(cfg.output_dir) / default_name)


def _emit(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        atomic_write(path, text.encode("utf-8"))


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load_dataset(path: str, side: Side) -> Dataset:
    return parse_dataset(read_bytes(path), guess_format(path), side, name=Path(path).stem)


def _datasets(args, cfg: PipelineConfig, required: bool = True):
    lp = args.left if args.left is not None else cfg.left
    rp = args.right if args.right is not None else cfg.right
    if lp is None or rp is None:
        if required:
            raise UsageError("--left and --right are required (flag or config)")
        return None, None
    return _load_dataset(lp, Side.LEFT), _load_dataset(rp, Side.RIGHT)


def _stopwords(args, cfg: PipelineConfig):
    path = args.stopwords if args.stopwords is not None else cfg.stopwords
    return DEFAULT_STOPWORDS if path is None else load_stopwords(path)


def _load_model(path: str) -> LogisticModel:
    try:
        return LogisticModel.from_json(read_bytes(path).decode("utf-8"))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: not a model file ({exc})") from None


def read_scores(path: str) -> list[tuple[str, str, float]]:
    """``(id1, id2, score)`` triples from a `score` output with a filled score column."""
    reader = csv.DictReader(io.StringIO(read_bytes(path).decode("utf-8")))
    for required in ("id1", "id2", "score"):
        if required not in (reader.fieldnames or []):
            raise SchemaError(f"{path}: missing column {required!r}")
    out = []
    for rec in reader:
        raw = rec["score"]
        if raw is None or raw == "":
            raise FieldError(reader.line_num, "score", "empty; run `score` with --model")
        try:
            out.append((rec["id1"], rec["id2"], float(raw)))
        except ValueError:
            raise FieldError(reader.line_num, "score", repr(raw)) from None
    return out


def _graph(triples, left: Optional[Dataset], right: Optional[Dataset]) -> ScoredGraph:
    """Handles follow dataset order when datasets are given, sorted ids otherwise."""
    if left is not None:
        for a, b, _ in triples:
            left.handle(a)
            right.handle(b)
        return ScoredGraph.from_scored_pairs(triples, left.ids, right.ids)
    lids = sorted({a for a, _, _ in triples})
    rids = sorted({b for _, b, _ in triples})
    return ScoredGraph.from_scored_pairs(triples, lids, rids)


# --- subcommands ------------------------------------------------------------------

def cmd_ingest(args, cfg: PipelineConfig) -> None:
    left, right = _datasets(args, cfg)

    def summary(d: Dataset) -> dict:
        return {
            "entities": len(d),
            "with_year": sum(e.year is not None for e in d),
            "with_runtime": sum(e.runtime is not None for e in d),
            "with_cast": sum(bool(e.cast) for e in d),
            "with_directors": sum(bool(e.directors) for e in d),
        }

    report = {"left": summary(left), "right": summary(right)}
    truth_path = args.truth if args.truth is not None else cfg.truth
    if truth_path is not None:
        t = parse_truth_set(read_bytes(truth_path), left, right)
        n_neg = len(left) * len(right) - len(t.positives) if t.complete else len(t.negatives)
        report["truth"] = {"positives": len(t.positives), "negatives": n_neg, "complete": t.complete}
    _emit(args.out, json.dumps(report, indent=2, sort_keys=True) + "\n")


def cmd_block(args, cfg: PipelineConfig) -> None:
    left, right = _datasets(args, cfg)
    stop = _stopwords(args, cfg)
    pairs = candidate_pairs(build_index(left, stop), build_index(right, stop), args.max_pairs_per_token)
    lids, rids = left.ids, right.ids
    _emit(_out_path(args, cfg, "pairs.csv"), _csv_text(("id1", "id2"), ((lids[a], rids[b]) for a, b in pairs)))


def _read_pairs(path: str, left: Dataset, right: Dataset) -> CandidatePairSet:
    reader = csv.DictReader(io.StringIO(read_bytes(path).decode("utf-8")))
    for required in ("id1", "id2"):
        if required not in (reader.fieldnames or []):
            raise SchemaError(f"{path}: missing column {required!r}")
    keys = {(left.handle(r["id1"]), right.handle(r["id2"])) for r in reader}
    ordered = sorted(keys)
    lh = np.fromiter((a for a, _ in ordered), dtype=np.int64, count=len(ordered))
    rh = np.fromiter((b for _, b in ordered), dtype=np.int64, count=len(ordered))
    return CandidatePairSet(lh, rh)


def cmd_score(args, cfg: PipelineConfig) -> None:
    left, right = _datasets(args, cfg)
    pairs = _read_pairs(args.pairs, left, right) if args.pairs is not None else None
    model_path = args.model if args.model is not None else cfg.model
    model = _load_model(model_path) if model_path is not None else None
    sp = score_pairs(left, right, pairs, model, _stopwords(args, cfg), cfg.features)
    lids, rids = left.ids, right.ids

    def rows():
        for k, (a, b) in enumerate(zip(sp.left_handles.tolist(), sp.right_handles.tolist())):
            feats = ["" if np.isnan(v) else format_score(float(v)) for v in sp.features[k]]
            score = "" if sp.scores is None else format_score(float(sp.scores[k]))
            yield [lids[a], rids[b], *feats, score]

    _emit(_out_path(args, cfg, "scores.csv"), _csv_text(SCORE_COLUMNS, rows()))


def cmd_train(args, cfg: PipelineConfig) -> None:
    left, right = _datasets(args, cfg)
    truth_path = _pick(args.truth, cfg.truth, "--truth")
    truth = parse_truth_set(read_bytes(truth_path), left, right)
    base = cfg.combiner
    tc = TrainConfig(
        method=args.method or base.method,
        max_iter=args.max_iter if args.max_iter is not None else base.max_iter,
        tol=args.tol if args.tol is not None else base.tol,
        l2=args.l2 if args.l2 is not None else base.l2,
        init_step=base.init_step,
        armijo=base.armijo,
    )
    model = train_from_truth(left, right, truth, tc, seed=cfg.seed, stopwords=_stopwords(args, cfg),
                             params=cfg.features)
    if not model.converged:
        log.warning("training stopped after %d iterations without meeting the tolerance", model.iterations)
    _emit(_out_path(args, cfg, "model.json"), model.to_json())


def cmd_match(args, cfg: PipelineConfig) -> None:
    triples = read_scores(_pick(args.scores, cfg.scores, "--scores"))
    left, right = _datasets(args, cfg, required=False)
    g = _graph(triples, left, right)
    m = cfg.matcher
    algorithm = args.algorithm or m.algorithm
    theta = args.threshold if args.threshold is not None else m.threshold
    if not 0.0 <= theta <= 1.0:
        raise UsageError("--threshold must lie in [0, 1]")
    matching = run(g, algorithm, theta, args.direction or m.direction)
    buf = io.StringIO()
    write_matching(matching, buf)
    _emit(_out_path(args, cfg, "matching.csv"), buf.getvalue())


def cmd_eval(args, cfg: PipelineConfig) -> None:
    left, right = _datasets(args, cfg, required=False)
    truth = parse_truth_set(read_bytes(_pick(args.truth, cfg.truth, "--truth")), left, right)
    matching = parse_matching(read_bytes(args.matching))
    dedupe = args.dedupe_fp if args.dedupe_fp is not None else cfg.matcher.dedupe_fp
    counts = count_outcomes(matching, truth, dedupe=dedupe, left=left, right=right)
    report = counts.to_dict()
    report["size"] = len(matching)
    report["weight"] = matching.weight
    _emit(args.out, json.dumps(report, indent=2, sort_keys=True) + "\n")


def cmd_pr_curve(args, cfg: PipelineConfig) -> None:
    triples = read_scores(_pick(args.scores, cfg.scores, "--scores"))
    left, right = _datasets(args, cfg, required=False)
    truth = parse_truth_set(read_bytes(_pick(args.truth, cfg.truth, "--truth")), left, right)
    g = _graph(triples, left, right)
    m = cfg.matcher
    at_scores = args.at_scores if args.at_scores is not None else m.at_scores
    if args.grid is not None:
        try:
            grid = [float(x) for x in args.grid.split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"--grid must be comma-separated numbers, got {args.grid!r}") from None
    elif at_scores:
        grid = score_grid(g).tolist() or [1.0]
    elif m.grid is not None:
        grid = list(m.grid)
    else:
        grid = default_grid().tolist()
    if not grid or min(grid) < 0.0 or max(grid) > 1.0:
        raise UsageError("thresholds must be non-empty and lie in [0, 1]")
    dedupe = args.dedupe_fp if args.dedupe_fp is not None else m.dedupe_fp
    threads = args.threads if args.threads is not None else cfg.threads
    points = pr_curve(g, args.algorithm or m.algorithm, truth, grid, args.direction or m.direction,
                      threads=max(1, threads), dedupe=dedupe)
    rows = (
        [format_score(p.theta), p.counts.tp, p.counts.fp, p.counts.fn, format_score(p.precision),
         format_score(p.recall), format_score(p.weight), p.size]
        for p in points
    )
    _emit(_out_path(args, cfg, "pr_curve.csv"), _csv_text(PR_COLUMNS, rows))


def cmd_dedupe_scan(args, cfg: PipelineConfig) -> None:
    if args.step < 1:
        raise UsageError("--step must be >= 1")
    if args.limit is not None and args.limit < 0:
        raise UsageError("--limit must be >= 0")
    d = _load_dataset(args.dataset, Side.LEFT)
    model = _load_model(_pick(args.model, cfg.model, "--model"))
    found = self_duplicate_scan(d, model, step=args.step, limit=args.limit, stopwords=_stopwords(args, cfg),
                                params=cfg.features)
    rows = ((c.rank, c.id1, c.id2, format_score(c.score)) for c in found)
    _emit(_out_path(args, cfg, "duplicates.csv"), _csv_text(("rank", "id1", "id2", "score"), rows))


def cmd_synth(args, cfg: PipelineConfig) -> None:
    from .synth import generate

    sc = cfg.synth if args.seed is None else replace(cfg.synth, seed=args.seed)
    sc.validate()
    corpus = generate(sc)
    corpus.write(args.out_dir if args.out_dir is not None else cfg.output_dir, sc)


COMMANDS = {
    "ingest": cmd_ingest,
    "block": cmd_block,
    "score": cmd_score,
    "train": cmd_train,
    "match": cmd_match,
    "eval": cmd_eval,
    "pr-curve": cmd_pr_curve,
    "dedupe-scan": cmd_dedupe_scan,
    "synth": cmd_synth,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code or 0)
    for name in ("config", "seed", "threads"):
        if not hasattr(args, name):
            setattr(args, name, None)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = PipelineConfig.load(args.config) if args.config is not None else PipelineConfig()
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be >= 1")
        COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{exc.code}: {_one_line(exc)}", file=sys.stderr)
        return 2
    except ResolutionError as exc:
        print(f"{exc.code}: {_one_line(exc)}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"cli:{type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 1
    return 0


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
