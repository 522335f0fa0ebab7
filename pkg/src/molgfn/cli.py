"""Command-line entry points.

    molgfn ingest    corpus.smi            cache parsed molecules + labels
    molgfn pretrain  -c run.ini            hybrid online/offline pretraining
    molgfn finetune  -c run.ini CKPT       task adaptation (or --from-scratch)
    molgfn sample    CKPT -n 1000          JSON-lines of sampled molecules
    molgfn eval      samples.jsonl         metrics JSON/CSV + figures
    molgfn enumerate --elements C,N,O      tiny-space enumeration dump
"""

from __future__ import annotations

import importlib
import json
import os
import sys

import click
import numpy as np

from .checkpoint import load_checkpoint
from .config import RunConfig, desk_config, load_config, preset, save_config
from .errors import ConfigError, MolGfnError
from .metrics import (
    build_record,
    read_records_jsonl,
    report,
    write_records_jsonl,
    write_report_files,
)
from .smiles import ingest_corpus


def _load_cfg(config_path, preset_name, overrides) -> RunConfig:
    if config_path and preset_name:
        raise ConfigError("give either --config or --preset, not both")
    if preset_name:
        cfg = preset(preset_name)
    elif config_path:
        cfg = load_config(config_path)
    else:
        cfg = desk_config()
    if overrides:
        from dataclasses import replace

        from .config import _CANONICAL, _convert

        kw = {}
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} must look like key=value")
            key, raw = item.split("=", 1)
            canon = _CANONICAL.get(key.lower())
            if canon is None:
                raise ConfigError(f"unknown config key {key!r}")
            kw[canon] = _convert(canon, raw)
        cfg = replace(cfg, **kw)
    return cfg


def _out_dir(cfg: RunConfig, flag_value) -> str:
    # env var override keeps batch jobs relocatable without editing configs
    return flag_value or os.environ.get("MOLGFN_OUT_DIR") or cfg.out_dir


def _load_corpus(path):
    graphs, rep = ingest_corpus(path)
    click.echo(
        f"corpus: {rep.accepted} accepted, "
        + ", ".join(f"{k}={v}" for k, v in rep.rejected.items() if v)
        if any(rep.rejected.values())
        else f"corpus: {rep.accepted} accepted"
    )
    return graphs


def _external_scorer(spec: str):
    mod_name, _, fn_name = spec.partition(":")
    if not fn_name:
        raise ConfigError("external reward must be 'module:function'")
    mod = importlib.import_module(mod_name)
    return getattr(mod, fn_name)


@click.group()
def main():
    """Atom-level goal-conditioned GFlowNet molecule generator."""


@main.command()
@click.argument("smiles_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="label cache path")
def ingest(smiles_path, out):
    """Parse a SMILES file and cache property labels alongside it."""
    from .props import compute_properties

    graphs, rep = ingest_corpus(smiles_path)
    out = out or smiles_path + ".labels.jsonl"
    from .smiles import write_smiles

    with open(out, "w", encoding="utf-8") as fh:
        for g in graphs:
            row = {"smiles": write_smiles(g), **compute_properties(g).as_dict()}
            fh.write(json.dumps(row) + "\n")
    click.echo(
        f"accepted {rep.accepted} molecules; rejected "
        + json.dumps({k: v for k, v in rep.rejected.items() if v})
    )
    click.echo(f"labels cached to {out}")


@main.command()
@click.option("--config", "-c", "config_path", type=click.Path(exists=True), default=None)
@click.option("--preset", "-p", "preset_name", default=None)
@click.option("--set", "-s", "overrides", multiple=True, help="key=value config override")
@click.option("--out-dir", "-o", default=None)
def pretrain(config_path, preset_name, overrides, out_dir):
    """Hybrid online-offline pretraining on the configured corpus."""
    from .trainer import pretrain as run_pretrain

    try:
        cfg = _load_cfg(config_path, preset_name, overrides)
        if not cfg.corpus:
            raise ConfigError("config needs a corpus path for pretraining")
        graphs = _load_corpus(cfg.corpus)
        out = _out_dir(cfg, out_dir)
        os.makedirs(out, exist_ok=True)
        save_config(cfg, os.path.join(out, "config.ini"))
        final = run_pretrain(cfg, graphs, out_dir=out, eval_hook=_make_eval_hook(cfg))
    except (MolGfnError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    _render_curves(out)
    click.echo(f"final checkpoint: {final}")


@main.command()
@click.argument("checkpoint", type=click.Path(exists=True), required=False)
@click.option("--config", "-c", "config_path", type=click.Path(exists=True), default=None)
@click.option("--preset", "-p", "preset_name", default=None)
@click.option("--set", "-s", "overrides", multiple=True)
@click.option("--out-dir", "-o", default=None)
@click.option("--from-scratch", is_flag=True, help="task-train a fresh model instead")
@click.option("--external-reward", default=None, help="module:function scorer in (0,1]")
def finetune(checkpoint, config_path, preset_name, overrides, out_dir, from_scratch, external_reward):
    """Fine-tune a pretrained checkpoint toward a task reward."""
    from .trainer import finetune as run_finetune

    try:
        cfg = _load_cfg(config_path, preset_name, overrides)
        if not from_scratch and checkpoint is None:
            raise ConfigError("finetune needs a checkpoint (or --from-scratch)")
        scorer = _external_scorer(external_reward) if external_reward else None
        graphs = _load_corpus(cfg.corpus) if (cfg.finetune_mode == "hybrid" and cfg.corpus) else None
        out = _out_dir(cfg, out_dir)
        os.makedirs(out, exist_ok=True)
        save_config(cfg, os.path.join(out, "config.ini"))
        final = run_finetune(
            cfg,
            None if from_scratch else checkpoint,
            corpus_graphs=graphs,
            out_dir=out,
            external_reward=scorer,
            eval_hook=_make_eval_hook(cfg),
        )
    except (MolGfnError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    _render_curves(out)
    click.echo(f"final checkpoint: {final}")


@main.command()
@click.argument("checkpoint", type=click.Path(exists=True))
@click.option("-n", "num", type=int, default=1000)
@click.option("--config", "-c", "config_path", type=click.Path(exists=True), default=None)
@click.option("--preset", "-p", "preset_name", default=None)
@click.option("--set", "-s", "overrides", multiple=True)
@click.option("--out", type=click.Path(), default="samples.jsonl")
@click.option("--cond", type=click.Choice(["fixed", "sampled"]), default="fixed")
def sample(checkpoint, num, config_path, preset_name, overrides, out, cond):
    """Sample molecules from a checkpoint into a JSON-lines record file."""
    from .trainer import RewardEngine, make_policy, sample_molecules

    try:
        cfg = _load_cfg(config_path, preset_name, overrides)
        net = make_policy(cfg)
        load_checkpoint(checkpoint, net, cfg=cfg)
        engine = RewardEngine(cfg)
        trajs = sample_molecules(net, cfg, num, engine, conds=cond)
        records = [
            build_record(t.final_state, cfg.properties, t.cond.ranges, task=cfg.task)
            for t in trajs
        ]
        write_records_jsonl(records, out)
    except (MolGfnError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {len(records)} records to {out}")


@main.command("eval")
@click.argument("samples_path", type=click.Path(exists=True))
@click.option("--config", "-c", "config_path", type=click.Path(exists=True), default=None)
@click.option("--preset", "-p", "preset_name", default=None)
@click.option("--set", "-s", "overrides", multiple=True)
@click.option("--corpus", type=click.Path(exists=True), default=None, help="novelty reference")
@click.option("--out-dir", "-o", default="eval_out")
def eval_cmd(samples_path, config_path, preset_name, overrides, corpus, out_dir):
    """Compute the metric suite for a sample file; emit JSON, CSV, figures."""
    from .graph import canonical_key
    from .reports import render_eval_figures

    try:
        cfg = _load_cfg(config_path, preset_name, overrides)
        records = read_records_jsonl(samples_path)
        corpus_keys: set[str] = set()
        if corpus:
            graphs = _load_corpus(corpus)
            corpus_keys = {canonical_key(g) for g in graphs}
        rep = report(records, cfg.properties, corpus_keys)
        write_report_files(rep, records, out_dir)
        figures = render_eval_figures(records, cfg.properties, out_dir)
    except (MolGfnError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(rep.to_json())
    click.echo(f"report files in {out_dir} ({len(figures)} figures)")


@main.command()
@click.option("--elements", default="C,N,O")
@click.option("--max-atoms", type=int, default=3)
@click.option("--orders", default="1,2")
@click.option("--out", type=click.Path(), default="enumeration.json")
def enumerate(elements, max_atoms, orders, out):
    """Exhaustively enumerate a tiny chemical space to a keyed dump."""
    from .enumeration import TinySpaceConfig, dump_enumeration, enumerate_terminals

    try:
        cfg = TinySpaceConfig(
            elements=tuple(elements.split(",")),
            max_atoms=max_atoms,
            orders=tuple(int(o) for o in orders.split(",")),
        )
        terms = enumerate_terminals(cfg)
        dump_enumeration(terms, out)
    except (MolGfnError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"{len(terms)} terminal states -> {out}")


def _make_eval_hook(cfg: RunConfig):
    from .metrics import success_percent, uniqueness
    from .trainer import RewardEngine, sample_molecules

    engine = RewardEngine(cfg)

    def hook(step: int, net) -> dict:
        trajs = sample_molecules(net, cfg, cfg.eval_samples, engine, seed_domain=11)
        records = [
            build_record(t.final_state, cfg.properties, sas_table=engine.sas_table)
            for t in trajs
        ]
        return {
            "eval_success_pct": success_percent(records, cfg.properties),
            "eval_uniqueness": uniqueness(records),
            "eval_mean_reward": float(np.mean([t.reward for t in trajs])),
        }

    return hook


def _render_curves(out_dir: str) -> None:
    from .reports import render_training_curves

    stats = os.path.join(out_dir, "stats.jsonl")
    if os.path.exists(stats):
        render_training_curves(stats, out_dir)


if __name__ == "__main__":
    main()
