"""Command-line entry points.

Offline-friendly by default: embedding and LLM backends resolve to the
deterministic in-tree stubs unless a different backend spec is given,
so every command runs without network access or model weights.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import corpus as corpus_mod
from . import metrics as metrics_mod
from . import retrieval as retrieval_mod
from . import training as training_mod
from .agent.api import AgentService, create_app
from .agent.pipeline import PipelineConfig, make_retriever, run_pipeline
from .agent.sessions import SessionStore
from .clients import HashAcousticEncoder, HashTextEncoder, resolve_llm_backend
from .distortion import assess as run_assess, evaluate_distortion
from .errors import MindvlogError
from .features import store as feature_store


@click.group()
def main():
    """Depression screening and CBT distortion-analysis toolkit."""


def _die(exc):
    click.echo(f"error [{getattr(exc, 'code', 'error')}]: {exc}", err=True)
    sys.exit(1)


# --- corpus ---------------------------------------------------------------

@main.group()
def corpus():
    """Manifest validation and stratified splitting."""


@corpus.command("validate")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--expected", default="reference",
              help="Path to an expected-counts JSON, or 'reference'.")
def corpus_validate(manifest, expected):
    try:
        corp = corpus_mod.load_manifest(manifest)
        stats = corpus_mod.CorpusStats.from_samples(list(corp))
        if expected == "reference":
            want = corpus_mod.REFERENCE_STATS
        else:
            want = corpus_mod.CorpusStats.from_dict(
                json.loads(Path(expected).read_text(encoding="utf-8"))
            )
        report = corpus_mod.validate_counts(stats, want)
    except MindvlogError as exc:
        _die(exc)
    click.echo(f"samples: {stats.total}")
    if report.ok:
        click.echo("counts match expected")
    else:
        for line in report.lines():
            click.echo(f"mismatch {line}")
        sys.exit(2)


@corpus.command("split")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--ratios", default="7:1:2", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path())
def corpus_split(manifest, ratios, seed, out_dir):
    try:
        parts = tuple(int(x) for x in ratios.replace(",", ":").split(":"))
        corp = corpus_mod.load_manifest(manifest)
        spec = corpus_mod.SplitSpec(ratios=parts, seed=seed)
        pieces = corpus_mod.split(corp, spec)
    except (MindvlogError, ValueError) as exc:
        _die(exc)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in pieces.items():
        corpus_mod.write_manifest(part, out / f"{name}.jsonl")
        click.echo(f"{name}: {len(part)} samples -> {out / (name + '.jsonl')}")


# --- features ---------------------------------------------------------------

@main.command("features")
@click.argument("action", type=click.Choice(["extract"]))
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--modalities", default="a,v,t", show_default=True,
              help="Comma list from a,v,t.")
@click.option("--text-dim", default=768, show_default=True, type=int)
@click.option("--acoustic-dim", default=64, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
def features_cmd(action, manifest, out_dir, modalities, text_dim, acoustic_dim, seed):
    """Extract and store per-sample feature bundles (stub encoders)."""
    del action
    del modalities  # the bundle always carries every extractable part
    acoustic = HashAcousticEncoder(dimension=acoustic_dim, seed=seed)
    text = HashTextEncoder(dimension=text_dim, seed=seed)
    try:
        corp = corpus_mod.load_manifest(manifest)
    except MindvlogError as exc:
        _die(exc)
    done = 0
    for sample in corp:
        try:
            bundle = feature_store.extract_bundle(sample, acoustic, text)
            feature_store.write_bundle(out_dir, bundle)
            done += 1
        except MindvlogError as exc:
            click.echo(f"skip {sample.sample_id}: {exc}", err=True)
    click.echo(f"extracted {done} bundles -> {out_dir}")


# --- training ---------------------------------------------------------------

def _load_train_config(path):
    cfg = training_mod.TrainConfig()
    if path:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        for key, value in data.items():
            if not hasattr(cfg, key):
                raise MindvlogError(f"unknown training config key: {key}")
            setattr(cfg, key, tuple(value) if key == "seeds" else value)
    return cfg


def _split_sets(manifest, features_dir, modalities, audio_mode, seed):
    corp = corpus_mod.load_manifest(manifest)
    pieces = corpus_mod.split(corp, corpus_mod.SplitSpec(seed=seed))
    return tuple(
        training_mod.load_training_set(
            list(pieces[name]), features_dir,
            modalities=modalities, audio_mode=audio_mode,
        )
        for name in ("train", "valid", "test")
    )


@main.command("train")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--features", "features_dir", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--seeds", default=None, type=int, help="Override seed count.")
@click.option("--run-name", default="run", show_default=True)
@click.option("--split-seed", default=0, show_default=True, type=int)
def train_cmd(manifest, features_dir, config_path, seeds, run_name, split_seed):
    """Split the manifest 7:1:2, then train once per seed."""
    try:
        cfg = _load_train_config(config_path)
        if seeds is not None:
            cfg.seeds = tuple(range(seeds))
        train_set, valid_set, test_set = _split_sets(
            manifest, features_dir, ("video", "audio", "text"), "spect", split_seed
        )
        for seed in cfg.seeds:
            model_cfg = training_mod.infer_model_config(train_set, seed=seed)
            from .fusion.model import FusionModel

            model = FusionModel(model_cfg)
            record = training_mod.train(
                model, train_set, valid_set, cfg, seed=seed, run_name=run_name
            )
            best = FusionModel.load(record.checkpoint_path)
            report = training_mod.evaluate(best, test_set, threshold=cfg.threshold)
            click.echo(
                f"seed {seed}: best_epoch={record.best_epoch} "
                f"test_f1={report.f1:.4f} wa={report.weighted_accuracy:.4f} "
                f"ckpt={record.checkpoint_path}"
            )
    except MindvlogError as exc:
        _die(exc)


@main.command("ablate")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--features", "features_dir", required=True, type=click.Path(exists=True))
@click.option("--variants", default="table5", show_default=True,
              help="table5, table6, or a comma list of variant keys.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Also write rows as JSONL.")
@click.option("--split-seed", default=0, show_default=True, type=int)
def ablate_cmd(manifest, features_dir, variants, config_path, out_path, split_seed):
    """Train/evaluate ablation variants and print the results table."""
    if variants == "table5":
        keys = training_mod.TABLE5_VARIANTS
    elif variants == "table6":
        keys = training_mod.TABLE6_VARIANTS
    else:
        keys = tuple(v.strip() for v in variants.split(",") if v.strip())
    try:
        cfg = _load_train_config(config_path)

        def dataset_fn(variant):
            return _split_sets(
                manifest, features_dir, variant.modalities, variant.audio_mode,
                split_seed,
            )

        rows = training_mod.run_ablation(keys, cfg, dataset_fn)
    except MindvlogError as exc:
        _die(exc)
    click.echo(training_mod.format_ablation_table(rows))
    if out_path:
        with Path(out_path).open("w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row.to_dict()) + "\n")
        click.echo(f"rows -> {out_path}")


# --- metrics ---------------------------------------------------------------

def _read_lines(path):
    return [
        line.rstrip("\n")
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


@main.command("score")
@click.option("--metric", required=True,
              type=click.Choice(["bleu4", "rougeL", "semsim", "prf1"]))
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--averaging", default="weighted", show_default=True,
              type=click.Choice(["binary", "weighted", "macro"]))
def score_cmd(metric, pred_path, gold_path, averaging):
    """Score line-aligned prediction/reference files."""
    preds = _read_lines(pred_path)
    golds = _read_lines(gold_path)
    try:
        if metric == "prf1":
            report = metrics_mod.prf1(preds, golds, averaging=averaging)
            click.echo(json.dumps(report.to_dict(), indent=1))
            return
        if len(preds) != len(golds):
            _die(MindvlogError(
                f"{len(preds)} predictions vs {len(golds)} references"))
        embedder = HashTextEncoder() if metric == "semsim" else None
        scores = []
        for pred, gold in zip(preds, golds):
            if metric == "bleu4":
                value = metrics_mod.bleu4(pred, [gold])
            elif metric == "rougeL":
                value = metrics_mod.rouge_l(pred, gold)
            else:
                value = metrics_mod.semantic_similarity(pred, gold, embedder)
            scores.append(value)
            click.echo(json.dumps({"pred": pred, "gold": gold, "score": value}))
        click.echo(json.dumps({"aggregate": float(np.mean(scores)), "n": len(scores)}))
    except MindvlogError as exc:
        _die(exc)


# --- distortion ---------------------------------------------------------------

def _read_utterances(path):
    items = []
    for line in _read_lines(path):
        if line.lstrip().startswith("{"):
            record = json.loads(line)
            items.append(record.get("text") or record.get("utterance") or "")
        else:
            items.append(line)
    return [u for u in items if u.strip()]


@main.group()
def distort():
    """Cognitive-distortion assessment and scoring."""


@distort.command("assess")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--variant", default="fcot_abcdr", show_default=True)
@click.option("--llm", "llm_spec", default="heuristic", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--index", "index_path", default=None, type=click.Path(exists=True),
              help="Vector index for the retrieval-augmented variant.")
@click.option("--k", default=3, show_default=True, type=int)
@click.option("--retries", default=2, show_default=True, type=int)
def distort_assess(in_path, variant, llm_spec, out_path, index_path, k, retries):
    variant = variant.upper()
    try:
        llm = resolve_llm_backend(llm_spec)
        retriever = None
        if index_path:
            index = retrieval_mod.load(index_path)
            embedder = HashTextEncoder(dimension=index.dimension)
            hits = make_retriever(index, embedder, k=k)
            retriever = lambda q: [c.text for c, _ in hits(q)]
        utterances = _read_utterances(in_path)
        with Path(out_path).open("w", encoding="utf-8") as fh:
            for utt in utterances:
                result = run_assess(
                    utt, variant=variant, llm=llm, retriever=retriever,
                    retries=retries,
                )
                fh.write(json.dumps(result.to_dict(), ensure_ascii=False) + "\n")
    except MindvlogError as exc:
        _die(exc)
    click.echo(f"assessed {len(utterances)} utterances -> {out_path}")


@distort.command("eval")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
def distort_eval(pred_path, gold_path):
    """Score assessment records against gold verdict/type pairs."""
    def read_pairs(path):
        pairs = []
        for line in _read_lines(path):
            record = json.loads(line)
            pairs.append((record["verdict"], record.get("distortion", "none")))
        return pairs

    try:
        scores = evaluate_distortion(read_pairs(pred_path), read_pairs(gold_path))
    except MindvlogError as exc:
        _die(exc)
    click.echo(json.dumps(scores, indent=1))


# --- retrieval ---------------------------------------------------------------

@main.group()
def rag():
    """Chunking, indexing, and retrieval over domain documents."""


@rag.command("index")
@click.option("--docs", "docs_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--dim", default=768, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--chunk-size", default=256, show_default=True, type=int)
def rag_index(docs_dir, out_path, dim, seed, chunk_size):
    docs = {
        p.stem: p.read_text(encoding="utf-8")
        for p in sorted(Path(docs_dir).glob("*.txt"))
    }
    try:
        embedder = HashTextEncoder(dimension=dim, seed=seed)
        index = retrieval_mod.index_documents(docs, embedder, size=chunk_size)
        retrieval_mod.persist(index, out_path)
    except MindvlogError as exc:
        _die(exc)
    click.echo(f"indexed {len(docs)} docs, {len(index)} chunks -> {out_path}")


@rag.command("query")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--q", "query", required=True)
@click.option("-k", default=5, show_default=True, type=int)
def rag_query(index_path, query, k):
    try:
        index = retrieval_mod.load(index_path)
        embedder = HashTextEncoder(dimension=index.dimension)
        hits = retrieval_mod.retrieve(index, query, k=k, embedder=embedder)
    except MindvlogError as exc:
        _die(exc)
    for chunk, score in hits:
        click.echo(json.dumps(
            {"chunk_id": chunk.chunk_id, "score": round(score, 6),
             "text": chunk.text}
        ))


# --- service ---------------------------------------------------------------

def _pipeline_config(llm_spec, index_path, checkpoint, features_dir, k,
                     threshold, retries, safety, config_path):
    options = {
        "llm": llm_spec, "index": index_path, "checkpoint": checkpoint,
        "features": features_dir, "k": k, "threshold": threshold,
        "retries": retries, "safety": safety,
    }
    if config_path:
        file_options = json.loads(Path(config_path).read_text(encoding="utf-8"))
        for key, value in file_options.items():
            if key not in options:
                raise MindvlogError(f"unknown service config key: {key}")
            if options[key] is None or options[key] == _SERVICE_DEFAULTS.get(key):
                options[key] = value
    retriever = None
    if options["index"]:
        index = retrieval_mod.load(options["index"])
        embedder = HashTextEncoder(dimension=index.dimension)
        retriever = make_retriever(index, embedder, k=options["k"])
    return PipelineConfig(
        llm=resolve_llm_backend(options["llm"]),
        retriever=retriever,
        features_root=options["features"],
        checkpoint_path=options["checkpoint"],
        threshold=options["threshold"],
        retries=options["retries"],
        safety_enabled=options["safety"],
    )


_SERVICE_DEFAULTS = {"llm": "heuristic", "k": 3, "threshold": 0.5,
                     "retries": 2, "safety": True}


def _service_options(fn):
    for deco in (
        click.option("--llm", "llm_spec", default="heuristic", show_default=True),
        click.option("--index", "index_path", default=None, type=click.Path()),
        click.option("--checkpoint", default=None, type=click.Path()),
        click.option("--features", "features_dir", default=None, type=click.Path()),
        click.option("--k", default=3, show_default=True, type=int),
        click.option("--threshold", default=0.5, show_default=True, type=float),
        click.option("--retries", default=2, show_default=True, type=int),
        click.option("--safety/--no-safety", "safety", default=True),
        click.option("--config", "config_path", default=None,
                     type=click.Path(exists=True)),
        click.option("--sessions", "sessions_dir", default="sessions",
                     show_default=True, type=click.Path()),
    ):
        fn = deco(fn)
    return fn


@main.command("serve")
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@_service_options
def serve_cmd(port, host, llm_spec, index_path, checkpoint, features_dir, k,
              threshold, retries, safety, config_path, sessions_dir):
    """Run the HTTP agent service."""
    import uvicorn

    try:
        cfg = _pipeline_config(llm_spec, index_path, checkpoint, features_dir,
                               k, threshold, retries, safety, config_path)
    except MindvlogError as exc:
        _die(exc)
    app = create_app(AgentService(SessionStore(sessions_dir), cfg))
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("chat")
@_service_options
def chat_cmd(llm_spec, index_path, checkpoint, features_dir, k, threshold,
             retries, safety, config_path, sessions_dir):
    """Terminal REPL over the same pipeline the service runs."""
    try:
        cfg = _pipeline_config(llm_spec, index_path, checkpoint, features_dir,
                               k, threshold, retries, safety, config_path)
    except MindvlogError as exc:
        _die(exc)
    store = SessionStore(sessions_dir)
    session_id = store.create()
    click.echo(f"session {session_id}; empty line to quit")
    while True:
        try:
            text = click.prompt("you", default="", show_default=False)
        except (EOFError, click.Abort):
            break
        if not text.strip():
            break
        try:
            _, record = store.post(session_id, text,
                                   lambda t: run_pipeline(t, cfg))
        except MindvlogError as exc:
            click.echo(f"error [{getattr(exc, 'code', 'error')}]: {exc}", err=True)
            continue
        if record["assessment"]:
            a = record["assessment"]
            click.echo(f"[{a['verdict']} / {a['distortion']}]")
        click.echo(record["text"])
    click.echo("bye")
