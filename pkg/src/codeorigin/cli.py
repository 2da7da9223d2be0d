"""Command line entry point: ``codeorigin <command> ...``."""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import calibrate as cal
from . import pipeline
from .config import PipelineConfig, load_config
from .corpus import compute_stats, format_stats_table, load_dataset, num_classes, save_dataset
from .langid import detect_language
from .metrics import eval_report
from .normalize import augment, normalize_code, sample_rng
from .protocol import ExternalScorer
from .scorers import NativeLinearScorer, fit_native

log = logging.getLogger("codeorigin")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)


def cmd_stats(args, cfg: PipelineConfig) -> int:
    stats = compute_stats(load_dataset(args.file, args.task))
    print(format_stats_table(stats))
    print()
    print(_dump(stats.to_dict()))
    return 0


def cmd_normalize(args, cfg: PipelineConfig) -> int:
    samples = load_dataset(args.input)
    out = []
    for s in samples:
        text = normalize_code(s.text)
        if args.augment:
            text = augment(text, cfg.task_a.augment, sample_rng(cfg.seed, s.id))
        out.append(dataclasses.replace(s, text=text))
    save_dataset(out, args.output)
    return 0


def cmd_langid(args, cfg: PipelineConfig) -> int:
    rows = []
    for s in load_dataset(args.file):
        rec = s.to_record()
        rec["detected_language"] = detect_language(normalize_code(s.text)).value
        rows.append(rec)
    if args.out:
        pipeline.write_jsonl(args.out, rows)
    else:
        for r in rows:
            print(json.dumps(r, ensure_ascii=False))
    return 0


def cmd_train_baseline(args, cfg: PipelineConfig) -> int:
    samples = load_dataset(args.train, args.task)
    k = num_classes(args.task)
    texts = [normalize_code(s.text) for s in samples]
    scheme = args.weights or ("uniform" if args.task.upper() == "A" else "balanced")
    scorer = fit_native(texts, [s.label for s in samples], k, cfg.features, cfg.train, scheme, cfg.task_b.cb_beta)
    scorer.save(args.out)
    log.info("saved %d-class model over %d features to %s", k, len(scorer.vocab), args.out)
    return 0


def _lolo_config(cfg: PipelineConfig, languages) -> PipelineConfig:
    if not languages:
        return cfg
    lolo = dataclasses.replace(cfg.task_a.lolo, languages=tuple(languages))
    return dataclasses.replace(cfg, task_a=dataclasses.replace(cfg.task_a, lolo=lolo))


def cmd_lolo(args, cfg: PipelineConfig) -> int:
    cfg = _lolo_config(cfg, args.languages)
    samples = load_dataset(args.train, "A")
    folds = pipeline.build_lolo_folds(samples, cfg.task_a.lolo, cfg.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "folds.json").write_text(_dump([f.to_json() for f in folds]) + "\n", encoding="utf-8")
    with contextlib.ExitStack() as stack:
        def fit(train, k):
            if args.scorer_cmd:
                cmd = args.scorer_cmd.format(fold=k, held_out=folds[k].held_out, seed=cfg.seed + k)
                return stack.enter_context(ExternalScorer(cmd, 2))
            scorer = pipeline.fit_native_binary(train, cfg, cfg.seed + k)
            scorer.save(out / f"fold{k}")
            return scorer

        records, _ = pipeline.run_oof(folds, samples, fit, cfg.task_a.chunks)
    pipeline.write_jsonl(out / "oof.jsonl", (r.to_json() for r in records))
    log.info("wrote %d OOF scores to %s", len(records), out / "oof.jsonl")
    return 0


def cmd_hardset(args, cfg: PipelineConfig) -> int:
    samples = [dataclasses.replace(s, text=normalize_code(s.text)) for s in load_dataset(args.train, "A")]
    size = args.size if args.size is not None else cfg.task_a.calibration.difficult_size
    folds = args.folds if args.folds is not None else cfg.task_a.calibration.difficult_folds
    hard = cal.build_difficult_set(samples, folds, size, cfg.seed, cfg.features, cfg.train)
    save_dataset(hard.samples, args.out)
    log.info("%d misclassified, wrote %d to %s", hard.n_misclassified, len(hard.samples), args.out)
    return 0


def _open_scorers(args, stack: contextlib.ExitStack, k: int, seeds=(None,)):
    if args.scorer_cmd:
        return [stack.enter_context(ExternalScorer(args.scorer_cmd.format(seed=s), k)) for s in seeds]
    if not args.model:
        raise SystemExit("either --model or --scorer-cmd is required")
    return [NativeLinearScorer.load(d) for d in args.model]


def cmd_calibrate(args, cfg: PipelineConfig) -> int:
    oof = pipeline.read_jsonl(args.oof)
    difficult = load_dataset(args.difficult, "A")
    if args.difficult_scores:
        by_id = {r["id"]: float(r["score"]) for r in pipeline.read_jsonl(args.difficult_scores)}
        missing = [s.id for s in difficult if s.id not in by_id]
        if missing:
            raise SystemExit(f"no score for difficult sample {missing[0]!r}")
        scores = [by_id[s.id] for s in difficult]
    else:
        with contextlib.ExitStack() as stack:
            scorer = pipeline.MeanScorer(_open_scorers(args, stack, 2))
            scores = list(pipeline.score_chunked(scorer, [normalize_code(s.text) for s in difficult],
                                                 cfg.task_a.chunks))
    scored = [cal.ScoredSample(dataclasses.replace(s, text=normalize_code(s.text)), float(p))
              for s, p in zip(difficult, scores)]
    ts = pipeline.calibrate_thresholds([r["score"] for r in oof], [r["label"] for r in oof], scored,
                                       cfg.task_a.calibration.min_group)
    ts.save(args.out)
    print(_dump(ts.to_json()))
    return 0


def cmd_predict(args, cfg: PipelineConfig) -> int:
    task = args.task.upper()
    samples = load_dataset(args.file, task)
    k = num_classes(task)
    with contextlib.ExitStack() as stack:
        if task == "A":
            scorer = pipeline.MeanScorer(_open_scorers(args, stack, k))
            if args.thresholds:
                ts = cal.ThresholdSet.load(args.thresholds)
            else:
                ts = cal.ThresholdSet(0.5, 0.5)
            plans: list = [] if args.dump_chunks else None
            preds = pipeline.predict_binary(scorer, samples, ts, cfg.task_a.chunks, plans=plans)
            if args.dump_chunks:
                Path(args.dump_chunks).write_text(
                    _dump([{"id": s.id, **p.to_json()} for s, p in zip(samples, plans)]) + "\n", encoding="utf-8")
        else:
            b = cfg.task_b
            scorers = _open_scorers(args, stack, k, b.seeds)
            preds = pipeline.predict_multiclass(scorers, samples, b.eval_head_fractions, b.pack)
    pipeline.write_jsonl(args.out, (p.to_json() for p in preds))
    return 0


def cmd_evaluate(args, cfg: PipelineConfig) -> int:
    gold = load_dataset(args.gold, args.task)
    preds = {r["id"]: int(r["label"]) for r in pipeline.read_jsonl(args.predictions)}
    missing = [s.id for s in gold if s.id not in preds]
    if missing:
        raise SystemExit(f"no prediction for id {missing[0]!r} ({len(missing)} missing)")
    langs = [s.language or detect_language(normalize_code(s.text)).value for s in gold]
    report = eval_report([preds[s.id] for s in gold], [s.label for s in gold], langs, num_classes(args.task))
    print(report.format())
    if args.json:
        Path(args.json).write_text(_dump(report.to_json()) + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="codeorigin", description="AI-generated code detection pipeline")
    p.add_argument("--config", help="JSON file overriding configuration defaults")
    p.add_argument("--seed", type=int, help="global seed (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stats", help="dataset statistics")
    s.add_argument("file")
    s.add_argument("--task", choices=["A", "B"], required=True)
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("normalize", help="normalize (and optionally augment) a dataset")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--augment", action="store_true")
    s.set_defaults(func=cmd_normalize)

    s = sub.add_parser("langid", help="annotate records with a detected language")
    s.add_argument("file")
    s.add_argument("--out")
    s.set_defaults(func=cmd_langid)

    s = sub.add_parser("train-baseline", help="fit TF-IDF + logistic regression")
    s.add_argument("train")
    s.add_argument("--task", choices=["A", "B"], required=True)
    s.add_argument("--weights", choices=["uniform", "balanced", "effective_number"])
    s.add_argument("--out", required=True, help="output model directory")
    s.set_defaults(func=cmd_train_baseline)

    s = sub.add_parser("lolo", help="leave-one-language-out training and OOF scores")
    s.add_argument("train")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--languages", nargs="+")
    s.add_argument("--scorer-cmd", help="external scorer command; {fold}, {held_out}, {seed} are substituted")
    s.set_defaults(func=cmd_lolo)

    s = sub.add_parser("hardset", help="build the difficult calibration set")
    s.add_argument("train")
    s.add_argument("--out", required=True)
    s.add_argument("--size", type=int)
    s.add_argument("--folds", type=int)
    s.set_defaults(func=cmd_hardset)

    s = sub.add_parser("calibrate", help="blend OOF and difficult-set thresholds")
    s.add_argument("--oof", required=True)
    s.add_argument("--difficult", required=True)
    s.add_argument("--difficult-scores")
    s.add_argument("--model", nargs="+")
    s.add_argument("--scorer-cmd")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("predict", help="score a dataset")
    s.add_argument("file")
    s.add_argument("--task", choices=["A", "B"], required=True)
    s.add_argument("--model", nargs="+", help="native model directories (averaged)")
    s.add_argument("--scorer-cmd", help="external scorer command; {seed} is substituted per ensemble seed")
    s.add_argument("--thresholds")
    s.add_argument("--dump-chunks")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("evaluate", help="macro-F1, confusions, per-language errors")
    s.add_argument("predictions")
    s.add_argument("gold")
    s.add_argument("--task", choices=["A", "B"], required=True)
    s.add_argument("--json")
    s.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = load_config(args.config, args.seed)
    return args.func(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
