"""Command line front end for the toolkit.

One binary, six subcommand families::

    algolisp corpus   load | filter | stats | convert
    algolisp judge    eval
    algolisp attack   gen
    algolisp metrics  distance
    algolisp augment  run
    algolisp attn     grad-check

Conventions shared by every subcommand: ``--out -`` streams to stdout
(the default), ``--seed`` defaults to 42, all file formats are JSONL,
and every run that writes a file also writes a ``<out>.manifest.json``
recording the resolved configuration and input/output digests.  Exit
codes: 0 on success, 1 on a domain error (a JSON object describing it
goes to stderr), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, attacks, augment, corpus, metrics
from .attnkernel import GateParams, grad_check
from .dsl import DslError
from .interp import Limits
from .judge import score_predictions
from .providers import ProviderUnavailable

_DOMAIN_ERRORS = (
    OSError,
    ValueError,          # covers metrics/judge/config validation errors
    KeyError,
    json.JSONDecodeError,
    corpus.CorpusError,
    DslError,
    attacks.AttackError,
    augment.AugmentError,
    ProviderUnavailable,
)


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record written beside every file output."""

    subcommand: str
    config: dict
    seed: int | None
    inputs: dict[str, str]
    outputs: dict[str, str]
    version: str
    wall_clock_s: float

    def to_json_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "config": self.config,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "version": self.version,
            "wall_clock_s": self.wall_clock_s,
        }


@dataclass
class _RunResult:
    """What a handler reports back for manifest assembly."""

    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_text(text: str, out: str) -> list[str]:
    if out == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return []
    Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    return [out]


def _write_jsonl(rows, out: str) -> list[str]:
    text = "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows)
    if out == "-":
        sys.stdout.write(text)
        return []
    Path(out).write_text(text, encoding="utf-8")
    return [out]


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        row = json.loads(line)
        if not isinstance(row, dict):
            raise ValueError(f"{path}:{lineno}: expected a JSON object per line")
        rows.append(row)
    return rows


def _limits(args: argparse.Namespace) -> Limits:
    return Limits(max_steps=args.max_steps, max_depth=args.max_depth)


# -- corpus ------------------------------------------------------------------------


def _cmd_corpus_load(args) -> _RunResult:
    instances = corpus.load(args.infile, format=args.format)
    lazy = sum(1 for inst in instances if inst.is_lazy)
    summary = {"instances": len(instances), "lazy": lazy}
    outputs = _write_text(json.dumps(summary, indent=2), args.out)
    return _RunResult(inputs=[args.infile], outputs=outputs, summary=summary)


def _cmd_corpus_convert(args) -> _RunResult:
    instances = corpus.load(args.infile, format=args.format)
    outputs = _write_jsonl(map(corpus.instance_to_json_dict, instances), args.out)
    return _RunResult(inputs=[args.infile], outputs=outputs,
                      summary={"instances": len(instances)})


def _cmd_corpus_filter(args) -> _RunResult:
    instances = corpus.load(args.infile, format=args.format)
    kept, rejected = corpus.filter_valid(instances, limits=_limits(args), jobs=args.jobs)
    outputs = _write_jsonl(map(corpus.instance_to_json_dict, kept), args.out)
    if args.rejected:
        rows = ({"id": r.instance.id, "reasons": list(r.reasons)} for r in rejected)
        outputs += _write_jsonl(rows, args.rejected)
    return _RunResult(inputs=[args.infile], outputs=outputs,
                      summary={"kept": len(kept), "rejected": len(rejected)})


def _cmd_corpus_stats(args) -> _RunResult:
    instances = corpus.load(args.infile, format=args.format)
    report = corpus.stats(instances, count_parens=args.count_parens)
    outputs = _write_text(json.dumps(report.to_json_dict(), indent=2), args.out)
    sys.stderr.write(report.to_table(label=Path(args.infile).stem) + "\n")
    return _RunResult(inputs=[args.infile], outputs=outputs,
                      summary=report.to_json_dict())


# -- judge --------------------------------------------------------------------------


def _cmd_judge_eval(args) -> _RunResult:
    instances = corpus.load(args.corpus)
    predictions = {}
    for row in _read_jsonl(args.predictions):
        if "id" not in row or "program" not in row:
            raise ValueError("prediction rows need 'id' and 'program' fields")
        predictions[str(row["id"])] = row["program"]
    report = score_predictions(instances, predictions, limits=_limits(args), jobs=args.jobs)
    outputs = _write_text(json.dumps(report.to_json_dict(), indent=2), args.out)
    return _RunResult(inputs=[args.corpus, args.predictions], outputs=outputs,
                      summary={"accuracy": report.accuracy, "n_total": report.n_total})


# -- attack -------------------------------------------------------------------------


def _parse_classes(spec: str):
    if spec == "all":
        return None
    classes = []
    for name in spec.split(","):
        try:
            classes.append(attacks.AttackClass(name.strip()))
        except ValueError:
            raise ValueError(f"unknown attack class {name.strip()!r}; "
                             f"choose from vc, rr, sr, voc, vi, all") from None
    return classes


def _load_lexicon(path: str | None):
    if path is None:
        return None, None
    table = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(table, dict):
        raise ValueError("lexicon file must hold a JSON object")
    return table.get("stopwords"), table.get("synonyms")


def _cmd_attack_gen(args) -> _RunResult:
    instances = corpus.load(args.infile)
    stopword_list, synonym_lexicon = _load_lexicon(args.lexicon)
    suite = attacks.build_suite(
        instances,
        per_class=args.per_class,
        rng=args.seed,
        classes=_parse_classes(args.attack_class),
        stopword_list=stopword_list,
        synonym_lexicon=synonym_lexicon,
        jobs=args.jobs,
    )
    outputs = _write_jsonl((adv.to_json_dict() for adv in suite), args.out)
    counts: dict[str, int] = {}
    for adv in suite:
        counts[adv.attack_class.value] = counts.get(adv.attack_class.value, 0) + 1
    inputs = [args.infile] + ([args.lexicon] if args.lexicon else [])
    return _RunResult(inputs=inputs, outputs=outputs, summary={"per_class": counts})


# -- metrics ------------------------------------------------------------------------


def _embedding_provider(args):
    if args.embeddings:
        return metrics.FixtureEmbeddingProvider(args.embeddings)
    url = args.embedding_url or os.environ.get("EMBEDDING_URL")
    if url:
        return metrics.HttpEmbeddingProvider(url, cache_dir=os.environ.get("PROVIDER_CACHE_DIR"))
    return None


def _cmd_metrics_distance(args) -> _RunResult:
    provider = _embedding_provider(args)
    rows = []
    for row in _read_jsonl(args.suite):
        try:
            label = row["attack_class"]
            original = str(row["original_description"]).split()
            perturbed = str(row["instance"]["text"]).split()
        except (KeyError, TypeError):
            raise ValueError("suite rows need attack_class, original_description, "
                             "and instance.text fields") from None
        rows.append((label, metrics.measure(original, perturbed, provider)))
    table = metrics.mean_distances(rows)
    outputs = _write_text(json.dumps(table, indent=2), args.out)

    header = f"{'class':<6} {'count':>5} {'lev':>8} {'lev_ratio':>10} {'embedding':>10}"
    lines = [header, "-" * len(header)]
    for label in sorted(table):
        cell = table[label]
        emb = "-" if cell["embedding_distance"] is None else f"{cell['embedding_distance']:.4f}"
        lines.append(f"{label:<6} {cell['count']:>5} {cell['lev']:>8.2f} "
                     f"{cell['lev_ratio']:>10.4f} {emb:>10}")
    sys.stderr.write("\n".join(lines) + "\n")

    inputs = [args.suite] + ([args.embeddings] if args.embeddings else [])
    return _RunResult(inputs=inputs, outputs=outputs, summary=table)


# -- augment ------------------------------------------------------------------------


def _parse_rho(text: str) -> tuple[float, float, float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 3:
        raise ValueError(f"--rho needs three comma-separated numbers, got {text!r}")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _resolve_augment_providers(args, instances, cfg) -> augment.Providers:
    cache_dir = args.translator_cache or os.environ.get("PROVIDER_CACHE_DIR")

    translator_url = args.translator_url or os.environ.get("TRANSLATOR_URL")
    if translator_url:
        translator = augment.HttpTranslator(translator_url, cache_dir=cache_dir)
    elif args.translator_cache:
        # replay-only: cache hits translate, misses are skipped variants
        translator = augment.HttpTranslator("offline://translator", cache_dir=cache_dir)
    else:
        translator = augment.EchoTranslator()

    filler_url = args.filler_url or (
        os.environ.get("FILLER_URL") if args.filler is None else None
    )
    if filler_url:
        filler = augment.HttpMaskFiller(filler_url, cache_dir=cache_dir)
    else:
        filler = augment.UnigramMaskFiller(instances, protected=cfg.protected)

    attention = augment.KernelAttentionSource(seed=cfg.seed)
    return augment.Providers(filler=filler, translator=translator, attention=attention)


def _cmd_augment_run(args) -> _RunResult:
    cfg = augment.AugmentConfig(alpha=args.alpha, rho=_parse_rho(args.rho), seed=args.seed)
    instances = corpus.load(args.infile)
    providers = _resolve_augment_providers(args, instances, cfg)
    result = augment.run_pipeline(instances, cfg, providers)

    outputs = _write_jsonl(map(corpus.instance_to_json_dict, result.instances), args.out)
    audit_path = args.audit or (f"{args.out}.audit.jsonl" if args.out != "-" else None)
    if audit_path:
        outputs += _write_jsonl((row.to_json_dict() for row in result.audit), audit_path)

    skipped = sum(1 for row in result.audit if row.skipped)
    return _RunResult(
        inputs=[args.infile], outputs=outputs,
        summary={"originals": len(instances), "variants": result.variant_count,
                 "total": len(result.instances), "skipped": skipped},
    )


# -- attn ---------------------------------------------------------------------------


def _cmd_attn_grad_check(args) -> _RunResult:
    rng = np.random.default_rng(args.seed)
    n, d = args.n, args.d
    m = args.m if args.m is not None else n
    if args.op == "sda":
        inputs = {
            "q": rng.standard_normal((n, d)),
            "k": rng.standard_normal((m, d)),
            "v": rng.standard_normal((m, d)),
        }
        err = grad_check("sda", inputs, eps=args.eps)
    else:
        inputs = {
            "q": rng.standard_normal((n, d)),
            "f": rng.standard_normal((n, d)),
        }
        err = grad_check("gca", inputs, params=GateParams.random(d, seed=args.seed), eps=args.eps)

    passed = err < args.tol
    payload = {"op": args.op, "n": n, "m": m, "d": d, "seed": args.seed,
               "eps": args.eps, "tol": args.tol, "max_rel_err": err, "passed": passed}
    outputs = _write_text(json.dumps(payload, indent=2), args.out)
    if not passed:
        raise ValueError(f"gradient check failed: max relative error {err:.3e} >= {args.tol:g}")
    return _RunResult(outputs=outputs, summary=payload)


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="algolisp", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"algolisp {__version__}")
    top = parser.add_subparsers(dest="command", metavar="command")

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default="-", help="output path, or - for stdout (default)")
        p.add_argument("--seed", type=int, default=42, help="random seed (default 42)")

    def limits(p: argparse.ArgumentParser) -> None:
        p.add_argument("--max-steps", type=int, default=1_000_000)
        p.add_argument("--max-depth", type=int, default=10_000)

    def fmt(p: argparse.ArgumentParser) -> None:
        p.add_argument("--format", choices=("canonical-jsonl", "official-json"),
                       default="canonical-jsonl")

    # corpus
    corpus_p = top.add_parser("corpus", help="load, validate, and summarize corpora")
    corpus_sub = corpus_p.add_subparsers(dest="subcommand", metavar="action")

    p = corpus_sub.add_parser("load", help="parse a corpus and print a summary")
    p.add_argument("--in", dest="infile", required=True)
    fmt(p); common(p)
    p.set_defaults(handler=_cmd_corpus_load, label="corpus load")

    p = corpus_sub.add_parser("convert", help="rewrite a corpus as canonical JSONL")
    p.add_argument("--in", dest="infile", required=True)
    fmt(p); common(p)
    p.set_defaults(handler=_cmd_corpus_convert, label="corpus convert")

    p = corpus_sub.add_parser("filter", help="keep instances whose program passes its examples")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--rejected", help="optional JSONL path for rejection reasons")
    p.add_argument("--jobs", type=int, default=1)
    fmt(p); limits(p); common(p)
    p.set_defaults(handler=_cmd_corpus_filter, label="corpus filter")

    p = corpus_sub.add_parser("stats", help="dataset statistics as JSON (table on stderr)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--count-parens", action="store_true",
                   help="include parentheses in program length")
    fmt(p); common(p)
    p.set_defaults(handler=_cmd_corpus_stats, label="corpus stats")

    # judge
    judge_p = top.add_parser("judge", help="score predictions by functional equivalence")
    judge_sub = judge_p.add_subparsers(dest="subcommand", metavar="action")
    p = judge_sub.add_parser("eval", help="accuracy of a prediction file against a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--predictions", required=True,
                   help="JSONL rows with 'id' and 'program' fields")
    p.add_argument("--jobs", type=int, default=1)
    limits(p); common(p)
    p.set_defaults(handler=_cmd_judge_eval, label="judge eval")

    # attack
    attack_p = top.add_parser("attack", help="generate adversarial description suites")
    attack_sub = attack_p.add_subparsers(dest="subcommand", metavar="action")
    p = attack_sub.add_parser("gen", help="build a validated suite for the chosen classes")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--class", dest="attack_class", default="all",
                   help="vc, rr, sr, voc, vi, all, or a comma list (default all)")
    p.add_argument("--per-class", type=int, default=200)
    p.add_argument("--lexicon", help="JSON file with 'stopwords' and/or 'synonyms'")
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(handler=_cmd_attack_gen, label="attack gen")

    # metrics
    metrics_p = top.add_parser("metrics", help="perturbation distances over a suite")
    metrics_sub = metrics_p.add_subparsers(dest="subcommand", metavar="action")
    p = metrics_sub.add_parser("distance", help="per-class mean distances for a suite")
    p.add_argument("--suite", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--embeddings", help="fixture JSON mapping text to vector")
    group.add_argument("--embedding-url", help="sentence-embedding service URL")
    common(p)
    p.set_defaults(handler=_cmd_metrics_distance, label="metrics distance")

    # augment
    augment_p = top.add_parser("augment", help="run the data-augmentation pipeline")
    augment_sub = augment_p.add_subparsers(dest="subcommand", metavar="action")
    p = augment_sub.add_parser("run", help="emit variants plus originals with an audit log")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--rho", default="0.5,0.2,0.1",
                   help="three comma-separated probabilities (default 0.5,0.2,0.1)")
    p.add_argument("--translator-url")
    p.add_argument("--translator-cache", help="on-disk response cache directory")
    p.add_argument("--filler", choices=("unigram",),
                   help="force the offline unigram mask filler")
    p.add_argument("--filler-url")
    p.add_argument("--audit", help="audit JSONL path (default <out>.audit.jsonl)")
    common(p)
    p.set_defaults(handler=_cmd_augment_run, label="augment run")

    # attn
    attn_p = top.add_parser("attn", help="attention kernel numerics")
    attn_sub = attn_p.add_subparsers(dest="subcommand", metavar="action")
    p = attn_sub.add_parser("grad-check", help="compare analytic gradients to finite differences")
    p.add_argument("--op", choices=("sda", "gca"), default="gca")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int, help="key count for sda (default n)")
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--tol", type=float, default=1e-5)
    common(p)
    p.set_defaults(handler=_cmd_attn_grad_check, label="attn grad-check")

    return parser


def _manifest_config(args: argparse.Namespace) -> dict:
    skip = {"handler", "label", "command", "subcommand"}
    config = {}
    for key, value in vars(args).items():
        if key in skip:
            continue
        config[key] = str(value) if isinstance(value, Path) else value
    return config


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return exc.code if isinstance(exc.code, int) else 2
    if not hasattr(args, "handler"):
        parser.print_usage(sys.stderr)
        return 2

    started = time.perf_counter()
    try:
        result = args.handler(args)
    except _DOMAIN_ERRORS as exc:
        message = str(exc) or type(exc).__name__
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": message}) + "\n")
        return 1

    if result.outputs:
        manifest = RunManifest(
            subcommand=args.label,
            config=_manifest_config(args),
            seed=getattr(args, "seed", None),
            inputs={p: _sha256(p) for p in result.inputs},
            outputs={p: _sha256(p) for p in result.outputs},
            version=__version__,
            wall_clock_s=round(time.perf_counter() - started, 6),
        )
        manifest_path = f"{result.outputs[0]}.manifest.json"
        Path(manifest_path).write_text(
            json.dumps(manifest.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )
    return 0


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
