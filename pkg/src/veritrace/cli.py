"""Command-line pipeline: ingest -> evidence -> featurize -> train -> eval,
plus single-post verify.

One TOML config drives every command; a handful of flags override it. Each
command that writes files also writes a resolved-config snapshot next to
them, and all outputs are byte-deterministic given the same inputs and
seed (timestamps appear only in log lines).

Exit codes: 0 success, 1 bad input (paths, flags, config, malformed data),
2 missing or unusable pipeline artifact (features, model, vocab, evidence
store), 3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

import numpy as np

from . import __version__, classifiers, features, metrics, neural
from .corpus import (Corpus, CorpusError, SplitSpec, filter_media, label_to_int,
                     load_corpus, stratified_split)
from .evidence import (BingVisualSearchClient, ConfigError, EvidenceStore, FetchError,
                       GoogleImagesClient, ReplayClient, fetch_live, get_titles,
                       import_records)
from .corpus import Post
from .similarity import (DEFAULT_THRESHOLD, ExternalFileScorer, LexicalScorer,
                         ScoreLookupError, classify_case)
from .textprep import (DEFAULT_MAX_LEN, Vocab, build_vocab, load_vocab, normalize,
                       save_vocab)
from .traces import default_lexicon, detect, load_lexicon

log = logging.getLogger(__name__)

MODEL_CHOICES = classifiers.KINDS + ("bilstm",)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_MISSING_ARTIFACT = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class ArtifactMissingError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


@dataclass
class RunConfig:
    seed: int | None = None
    engine: str = "fixture"
    mode: str = "image_only"
    corpus_path: str = ""
    corpus_format: str = "vmu_tsv"
    evidence_path: str = ""
    scores_path: str = ""
    doubt_lexicon: str = ""
    fake_lexicon: str = ""
    output_dir: str = "out"
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    split_by: str = "post"
    scorer: str = "lexical_builtin"
    threshold: float = DEFAULT_THRESHOLD
    scores_missing: str = "error"
    k: int = 10
    title_trace_reduce: str = "fraction"
    model_kind: str = "logreg"
    model_hyper: dict = field(default_factory=dict)
    vote: str = "mean_prob"
    neural: dict = field(default_factory=dict)


_TOML_SECTIONS = {
    "paths": {"corpus": "corpus_path", "corpus_format": "corpus_format",
              "evidence": "evidence_path", "scores": "scores_path",
              "doubt_lexicon": "doubt_lexicon", "fake_lexicon": "fake_lexicon",
              "output_dir": "output_dir"},
    "split": {"train": "train_frac", "val": "val_frac", "test": "test_frac",
              "by": "split_by"},
    "similarity": {"scorer": "scorer", "threshold": "threshold",
                   "missing": "scores_missing"},
    "features": {"k": "k", "title_trace_reduce": "title_trace_reduce"},
    "model": {"kind": "model_kind", "hyper": "model_hyper"},
}
_TOML_TOP = ("seed", "engine", "mode")


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config file {path} is not valid TOML: {exc}")
    cfg = RunConfig()
    for key, value in data.items():
        if key in _TOML_TOP:
            setattr(cfg, key, value)
        elif key == "neural":
            if not isinstance(value, dict):
                raise UsageError("config section [neural] must be a table")
            cfg.neural = dict(value)
        elif key in _TOML_SECTIONS:
            mapping = _TOML_SECTIONS[key]
            if not isinstance(value, dict):
                raise UsageError(f"config section [{key}] must be a table")
            for sub, subval in value.items():
                if sub not in mapping:
                    raise UsageError(f"unknown config key [{key}].{sub}")
                setattr(cfg, mapping[sub], subval)
        else:
            raise UsageError(f"unknown config key {key!r}")
    return cfg


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for flag, attr in (("seed", "seed"), ("engine", "engine"), ("mode", "mode"),
                       ("model", "model_kind"), ("output_dir", "output_dir")):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    if cfg.seed is None:
        raise UsageError("seed is required: set `seed` in the config or pass --seed")
    if cfg.engine not in ("fixture", "bing_visual", "google_images"):
        raise UsageError(f"unknown engine {cfg.engine!r}")
    if cfg.mode not in neural.MODES:
        raise UsageError(f"mode must be one of {neural.MODES}")
    if cfg.model_kind not in MODEL_CHOICES:
        raise UsageError(f"model must be one of {MODEL_CHOICES}")
    if cfg.scorer not in ("lexical_builtin", "external_file"):
        raise UsageError(f"scorer must be lexical_builtin or external_file")
    cfg.vote = cfg.neural.get("vote", cfg.vote)
    if cfg.vote not in neural.VOTES:
        raise UsageError(f"[neural].vote must be one of {neural.VOTES}")
    return cfg


def _write_snapshot(cfg: RunConfig, command: str) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    path = os.path.join(cfg.output_dir, f"{command}_config.json")
    snapshot = {"command": command, "config": dataclasses.asdict(cfg)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(snapshot, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# Shared loading helpers
# ---------------------------------------------------------------------------


def _load_corpus(cfg: RunConfig, path: str | None = None,
                 format: str | None = None) -> Corpus:
    corpus_path = path or cfg.corpus_path
    if not corpus_path:
        raise UsageError("no corpus path: set [paths].corpus or pass --corpus")
    if not os.path.exists(corpus_path):
        raise UsageError(f"corpus file not found: {corpus_path}")
    return load_corpus(corpus_path, format or cfg.corpus_format)


def _load_store(cfg: RunConfig, must_exist: bool = True) -> EvidenceStore:
    if not cfg.evidence_path:
        raise UsageError("no evidence store path: set [paths].evidence")
    if not os.path.exists(cfg.evidence_path):
        if must_exist:
            raise ArtifactMissingError(
                f"evidence store not found: {cfg.evidence_path}; "
                "run `veritrace evidence` first"
            )
        return EvidenceStore()
    return EvidenceStore.load(cfg.evidence_path)


def _make_scorer(cfg: RunConfig):
    if cfg.scorer == "lexical_builtin":
        return LexicalScorer()
    if not cfg.scores_path:
        raise UsageError("scorer external_file needs [paths].scores")
    if not os.path.exists(cfg.scores_path):
        raise UsageError(f"scores file not found: {cfg.scores_path}")
    return ExternalFileScorer(cfg.scores_path, missing=cfg.scores_missing)


def _load_lexicon(cfg: RunConfig):
    if cfg.doubt_lexicon or cfg.fake_lexicon:
        if not (cfg.doubt_lexicon and cfg.fake_lexicon):
            raise UsageError("set both doubt_lexicon and fake_lexicon, or neither")
        return load_lexicon(cfg.doubt_lexicon, cfg.fake_lexicon)
    return default_lexicon()


def _split(cfg: RunConfig, corpus: Corpus) -> tuple[Corpus, Corpus, Corpus]:
    spec = SplitSpec(train_frac=cfg.train_frac, val_frac=cfg.val_frac,
                     test_frac=cfg.test_frac, seed=cfg.seed)
    return stratified_split(corpus, spec, by=cfg.split_by)


def _model_path(cfg: RunConfig) -> str:
    if cfg.model_kind == "bilstm":
        return os.path.join(cfg.output_dir, f"model_bilstm_{cfg.mode}.json")
    return os.path.join(cfg.output_dir, f"model_{cfg.model_kind}.json")


def _vocab_path(cfg: RunConfig) -> str:
    return os.path.join(cfg.output_dir, f"vocab_bilstm_{cfg.mode}.tsv")


def _features_path(cfg: RunConfig, override: str | None = None) -> str:
    return override or os.path.join(cfg.output_dir, "features.csv")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace, cfg: RunConfig) -> int:
    corpus = _load_corpus(cfg, args.corpus, args.format)
    images = filter_media(corpus, "image")
    dropped = len(corpus) - len(images)
    print(f"{'event':<28}{'real imgs':>10}{'real posts':>12}"
          f"{'fake imgs':>10}{'fake posts':>12}")
    totals = [0, 0, 0, 0]
    for event, ri, rp, fi, fp in images.event_table():
        print(f"{event:<28}{ri:>10}{rp:>12}{fi:>10}{fp:>12}")
        totals[0] += ri
        totals[1] += rp
        totals[2] += fi
        totals[3] += fp
    print(f"{'total':<28}{totals[0]:>10}{totals[1]:>12}{totals[2]:>10}{totals[3]:>12}")
    print(f"{len(images.events)} events, {len(images)} image posts"
          + (f" ({dropped} non-image posts filtered out)" if dropped else ""))
    degenerate = images.degenerate_ids()
    if degenerate:
        print(f"warning: {len(degenerate)} posts have empty text")
    return EXIT_OK


def cmd_evidence(args: argparse.Namespace, cfg: RunConfig) -> int:
    if not cfg.evidence_path:
        raise UsageError("no evidence store path: set [paths].evidence")
    store = _load_store(cfg, must_exist=False)
    if args.action == "import":
        if not args.input:
            raise UsageError("evidence import needs --input")
        if not os.path.exists(args.input):
            raise UsageError(f"input file not found: {args.input}")
        count = import_records(store, args.input)
        os.makedirs(os.path.dirname(cfg.evidence_path) or ".", exist_ok=True)
        store.save(cfg.evidence_path)
        _write_snapshot(cfg, "evidence")
        print(f"{count} records imported, store now holds {len(store)}")
        return EXIT_OK

    # fetch
    if not args.image_map:
        raise UsageError("evidence fetch needs --image-map (TSV: image_id<TAB>image_ref)")
    if not os.path.exists(args.image_map):
        raise UsageError(f"image map not found: {args.image_map}")
    if cfg.engine == "fixture" or args.fixtures_dir:
        if not args.fixtures_dir:
            raise UsageError("fetch with the fixture engine needs --fixtures-dir")
        client = ReplayClient(args.fixtures_dir, engine=cfg.engine)
    elif cfg.engine == "bing_visual":
        client = BingVisualSearchClient()
    else:
        client = GoogleImagesClient()
    fetched = 0
    with open(args.image_map, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cells = line.split("\t")
            if len(cells) != 2:
                raise UsageError(f"{args.image_map}: line {lineno}: expected 2 columns")
            fetch_live(store, client, cells[0], cells[1])
            fetched += 1
    os.makedirs(os.path.dirname(cfg.evidence_path) or ".", exist_ok=True)
    store.save(cfg.evidence_path)
    _write_snapshot(cfg, "evidence")
    print(f"{fetched} images fetched via {client.engine}, store now holds {len(store)}")
    return EXIT_OK


def cmd_featurize(args: argparse.Namespace, cfg: RunConfig) -> int:
    corpus = filter_media(_load_corpus(cfg), "image")
    store = _load_store(cfg)
    scorer = _make_scorer(cfg)
    lexicon = _load_lexicon(cfg)
    table = features.featurize_corpus(
        corpus, store, cfg.engine, scorer, lexicon,
        threshold=cfg.threshold, k=cfg.k,
        title_trace_reduce=cfg.title_trace_reduce,
    )
    out = _features_path(cfg, args.out)
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    features.save_features(table, out)
    _write_snapshot(cfg, "featurize")
    low = sum(table.low_evidence)
    print(f"{len(table)} feature rows -> {out}"
          + (f" ({low} low-evidence)" if low else ""))
    return EXIT_OK


def _neural_config(cfg: RunConfig, vocab: Vocab) -> neural.NeuralConfig:
    opts = dict(cfg.neural)
    opts.pop("vote", None)
    opts.pop("min_freq", None)
    try:
        return neural.NeuralConfig(
            vocab_size=vocab.size, mode=cfg.mode,
            vocab_hash=vocab.content_hash(),
            max_len=vocab.max_len, **opts,
        )
    except TypeError as exc:
        raise UsageError(f"bad [neural] config: {exc}")


def cmd_train(args: argparse.Namespace, cfg: RunConfig) -> int:
    corpus = filter_media(_load_corpus(cfg), "image")
    train_split, val_split, _ = _split(cfg, corpus)
    os.makedirs(cfg.output_dir, exist_ok=True)
    model_path = _model_path(cfg)

    if cfg.model_kind == "bilstm":
        store = _load_store(cfg)
        train_insts = neural.build_instances(train_split, store, cfg.engine,
                                             cfg.mode, cfg.k)
        val_insts = neural.build_instances(val_split, store, cfg.engine,
                                           cfg.mode, cfg.k)
        if not train_insts:
            raise UsageError("no training instances: every training post lacks evidence")
        vocab = build_vocab(
            (normalize(inst.text) for inst in train_insts),
            min_freq=int(cfg.neural.get("min_freq", 1)),
            max_len=int(cfg.neural.get("max_len", DEFAULT_MAX_LEN)),
        )
        ncfg = _neural_config(cfg, vocab)
        model, report = neural.train(
            neural.encode_instances(train_insts, vocab),
            ncfg, seed=cfg.seed,
            val_instances=neural.encode_instances(val_insts, vocab) or None,
        )
        save_vocab(vocab, _vocab_path(cfg))
        neural.save_model(model, model_path)
        _write_snapshot(cfg, "train")
        for st in report.epochs:
            log.info("epoch %d: train loss %.4f acc %.3f, val loss %.4f acc %.3f",
                     st.epoch, st.train_loss, st.train_acc, st.val_loss, st.val_acc)
        last = report.epochs[-1]
        print(f"bilstm[{cfg.mode}] trained on {len(train_insts)} instances "
              f"({len(val_insts)} val), best epoch {report.best_epoch}, "
              f"final val acc {last.val_acc:.3f}")
        print(f"model -> {model_path}")
        print(f"vocab -> {_vocab_path(cfg)}")
        return EXIT_OK

    table_path = _features_path(cfg, args.features)
    if not os.path.exists(table_path):
        raise ArtifactMissingError(
            f"features file not found: {table_path}; run `veritrace featurize` first"
        )
    table = features.load_features(table_path)
    train_ids = {p.post_id for p in train_split.posts}
    sub = table.subset(train_ids)
    if len(sub) == 0:
        raise UsageError("no feature rows match the training split")
    hyper = None
    if cfg.model_hyper:
        try:
            hyper = classifiers.HYPER_TYPES[cfg.model_kind](**cfg.model_hyper)
        except TypeError as exc:
            raise UsageError(f"bad [model].hyper for {cfg.model_kind}: {exc}")
    model = classifiers.train(cfg.model_kind, sub.X, sub.y, hyper=hyper, seed=cfg.seed)
    classifiers.save_model(model, model_path)
    _write_snapshot(cfg, "train")
    print(f"{cfg.model_kind} trained on {len(sub)} posts")
    print(f"model -> {model_path}")
    return EXIT_OK


def _classic_eval(cfg: RunConfig, args: argparse.Namespace,
                  model_path: str, test_split: Corpus) -> metrics.MetricReport:
    model = classifiers.load_model(model_path)
    table_path = _features_path(cfg, args.features)
    if not os.path.exists(table_path):
        raise ArtifactMissingError(
            f"features file not found: {table_path}; run `veritrace featurize` first"
        )
    table = features.load_features(table_path).subset(
        {p.post_id for p in test_split.posts}
    )
    if len(table) == 0:
        raise UsageError("no feature rows match the test split")
    labels, _ = classifiers.predict_batch(model, table.X)
    cm = metrics.confusion(table.y.tolist(), labels.tolist())
    return metrics.compute(cm, metadata={
        "model": model.kind, "engine": cfg.engine, "split": "test",
        "level": "post", "scorer": cfg.scorer,
    })


def _neural_eval(cfg: RunConfig, args: argparse.Namespace, model_path: str,
                 test_split: Corpus) -> dict:
    model = neural.load_model(model_path)
    vocab_path = args.vocab_file or _vocab_path(cfg)
    if not os.path.exists(vocab_path):
        raise ArtifactMissingError(
            f"vocabulary file not found: {vocab_path}; run `veritrace train` first"
        )
    vocab = load_vocab(vocab_path)
    if model.config.vocab_hash and vocab.content_hash() != model.config.vocab_hash:
        raise neural.VocabMismatchError(
            f"{vocab_path} does not match the vocabulary this model was trained with"
        )
    store = _load_store(cfg)

    insts = neural.encode_instances(
        neural.build_instances(test_split, store, cfg.engine, cfg.mode, cfg.k), vocab
    )
    if not insts:
        raise UsageError("no test instances: every test post lacks evidence")
    y_inst = [inst.label for inst in insts]
    p_inst = [1 if neural.forward(model, inst.ids) >= 0.5 else 0 for inst in insts]
    inst_report = metrics.compute(metrics.confusion(y_inst, p_inst), metadata={
        "model": "bilstm", "mode": cfg.mode, "engine": cfg.engine,
        "split": "test", "level": "instance",
    })

    y_post: list[int] = []
    p_post: list[int] = []
    abstained = 0
    for post in test_split.posts:
        titles = get_titles(store, post.image_id, cfg.engine, cfg.k)
        label, _ = neural.predict_post(model, vocab, post.text, titles,
                                       mode=cfg.mode, vote=cfg.vote)
        if label is None:
            abstained += 1
            continue
        y_post.append(label_to_int(post.label))
        p_post.append(label)
    out: dict = {"instance_level": inst_report.as_dict(), "abstained_posts": abstained}
    if y_post:
        post_report = metrics.compute(metrics.confusion(y_post, p_post), metadata={
            "model": "bilstm", "mode": cfg.mode, "engine": cfg.engine,
            "split": "test", "level": "post", "vote": cfg.vote,
        })
        out["post_level"] = post_report.as_dict()
        print(metrics.format_table(post_report))
        print()
    print(metrics.format_table(inst_report))
    if abstained:
        print(f"{abstained} posts abstained (no evidence titles)")
    return out


def cmd_eval(args: argparse.Namespace, cfg: RunConfig) -> int:
    corpus = filter_media(_load_corpus(cfg), "image")
    _, _, test_split = _split(cfg, corpus)
    model_path = args.model_file or _model_path(cfg)
    if not os.path.exists(model_path):
        raise ArtifactMissingError(
            f"model file not found: {model_path}; run `veritrace train` first"
        )
    os.makedirs(cfg.output_dir, exist_ok=True)
    if cfg.model_kind == "bilstm":
        payload = _neural_eval(cfg, args, model_path, test_split)
        out_path = os.path.join(cfg.output_dir, f"metrics_bilstm_{cfg.mode}.json")
    else:
        report = _classic_eval(cfg, args, model_path, test_split)
        print(metrics.format_table(report))
        payload = report.as_dict()
        out_path = os.path.join(cfg.output_dir, f"metrics_{cfg.model_kind}.json")
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_snapshot(cfg, "eval")
    print(f"metrics -> {out_path}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, cfg: RunConfig) -> int:
    if args.text is None or not args.image_id:
        raise UsageError("verify needs --text and --image-id")
    store = _load_store(cfg)
    lexicon = _load_lexicon(cfg)
    titles = get_titles(store, args.image_id, cfg.engine, cfg.k)
    q = detect(args.text, lexicon)

    model_path = args.model_file or _model_path(cfg)
    if not os.path.exists(model_path):
        raise ArtifactMissingError(
            f"model file not found: {model_path}; run `veritrace train` first"
        )
    with open(model_path, encoding="utf-8") as fh:
        fmt = json.load(fh).get("format", "")

    if fmt == neural.MODEL_FORMAT:
        model = neural.load_model(model_path)
        vocab_path = args.vocab_file or _vocab_path(cfg)
        if not os.path.exists(vocab_path):
            raise ArtifactMissingError(f"vocabulary file not found: {vocab_path}")
        vocab = load_vocab(vocab_path)
        label, score = neural.predict_post(model, vocab, args.text, titles,
                                           mode=cfg.mode, vote=cfg.vote)
        model_desc = f"bilstm[{cfg.mode}]"
    else:
        cmodel = classifiers.load_model(model_path)
        scorer = _make_scorer(cfg)
        probe = Post(post_id="query", text=args.text, user_id="cli",
                     image_id=args.image_id, event="query", label="real",
                     media_kind="image")  # label is a placeholder, never read
        fv = features.featurize(probe, store, cfg.engine, scorer, lexicon,
                                threshold=cfg.threshold, k=cfg.k,
                                title_trace_reduce=cfg.title_trace_reduce)
        label, score = classifiers.predict(cmodel, np.array(fv.values()))
        model_desc = cmodel.kind

    if label is None:
        print(f"decision: abstain (score 0.500, {model_desc}): no stored evidence "
              f"for image {args.image_id!r}")
    else:
        print(f"decision: {'fake' if label == 1 else 'real'} "
              f"(score {score:.4f}, {model_desc})")
    phrases = ", ".join(q.matched_phrases) if q.matched_phrases else "none"
    print(f"query traces: uns={q.uns} db={q.db}, matched: {phrases}")

    if not titles:
        print("no evidence titles stored for this image")
        return EXIT_OK
    scorer = _make_scorer(cfg)
    print(f"evidence titles ({len(titles)}):")
    for idx, title in enumerate(titles, start=1):
        t = detect(title, lexicon)
        s = scorer.score(args.text, title)
        case = classify_case(s, q.uns, t.uns, threshold=cfg.threshold)
        print(f"  [{idx}] s={s:.3f} {case.value} (title uns={t.uns} db={t.db}) {title!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="veritrace", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"veritrace {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--seed", type=int, help="overrides config seed")
    common.add_argument("--engine", help="evidence engine (fixture/bing_visual/google_images)")
    common.add_argument("--mode", help="neural input mode (image_only/tweet_plus_image)")
    common.add_argument("--model", help="model kind (classical kinds or bilstm)")
    common.add_argument("--output-dir", help="overrides [paths].output_dir")
    common.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="load a corpus, print per-event counts")
    p.add_argument("--corpus", help="corpus path (overrides config)")
    p.add_argument("--format", choices=("vmu_tsv", "fixture_jsonl"))

    p = sub.add_parser("evidence", parents=[common], help="import or fetch evidence records")
    p.add_argument("action", choices=("import", "fetch"))
    p.add_argument("--input", help="JSONL records file (import)")
    p.add_argument("--image-map", help="TSV image_id<TAB>image_ref (fetch)")
    p.add_argument("--fixtures-dir", help="canned responses for replay fetch")

    p = sub.add_parser("featurize", parents=[common], help="write the feature CSV")
    p.add_argument("--out", help="output CSV path")

    p = sub.add_parser("train", parents=[common], help="train the configured model")
    p.add_argument("--features", help="feature CSV path (classical kinds)")

    p = sub.add_parser("eval", parents=[common], help="evaluate on the held-out split")
    p.add_argument("--features", help="feature CSV path (classical kinds)")
    p.add_argument("--model-file", help="model file (default: output dir by kind)")
    p.add_argument("--vocab-file", help="vocabulary file (bilstm)")

    p = sub.add_parser("verify", parents=[common], help="classify a single post")
    p.add_argument("--text", help="tweet text")
    p.add_argument("--image-id", help="image id with stored evidence")
    p.add_argument("--model-file", help="model file (default: output dir by kind)")
    p.add_argument("--vocab-file", help="vocabulary file (bilstm)")

    return parser


COMMANDS = {
    "ingest": cmd_ingest,
    "evidence": cmd_evidence,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "eval": cmd_eval,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
            format="%(asctime)s %(name)s %(levelname)s %(message)s",
            stream=sys.stderr,
        )
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (CorpusError, ConfigError, ScoreLookupError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (ArtifactMissingError, classifiers.ModelVersionError,
            neural.VocabMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACT
    except FetchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive catch-all
        log.exception("internal error: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
