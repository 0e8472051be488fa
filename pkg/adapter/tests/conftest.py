"""Shared fixtures: a synthetic 50-doc corpus made by the audit CLI, a tiny
local checkpoint covering its vocabulary, and one session-scoped run of each
export so the schema and contract tests share the expensive work."""

import json
import os
import subprocess
import sys

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")

from linguaudit_adapter import (  # noqa: E402
    finetune_and_export_ensemble,
    finetune_and_export_generations,
    finetune_and_export_trajectories,
    load_config,
)

N_DOCS = 50


def run_cli(*argv: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        list(argv), capture_output=True, text=True, timeout=600
    )


@pytest.fixture(scope="session")
def corpus_file(tmp_path_factory) -> str:
    path = str(tmp_path_factory.mktemp("corpus") / "corpus.jsonl")
    proc = run_cli(
        sys.executable, "-m", "linguaudit.cli", "synth",
        "--docs", str(N_DOCS), "--vocab", "60", "--redundancy", "0.6",
        "--seed", "3", "--min-len", "6", "--max-len", "20", "--out", path,
    )
    assert proc.returncode == 0, proc.stderr
    return path


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory, corpus_file) -> str:
    """Word-level tokenizer over the corpus vocabulary plus an untrained
    two-head one-layer causal LM, saved locally so no download happens."""
    import torch
    from tokenizers import Tokenizer, models, pre_tokenizers
    from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

    words: set[str] = set()
    with open(corpus_file, encoding="utf-8") as fh:
        for line in fh:
            words.update(json.loads(line)["text"].split())
    vocab = {"[PAD]": 0, "[UNK]": 1, "[EOS]": 2}
    for w in sorted(words):
        vocab[w] = len(vocab)

    tok = Tokenizer(models.WordLevel(vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok, pad_token="[PAD]", unk_token="[UNK]", eos_token="[EOS]"
    )
    out = str(tmp_path_factory.mktemp("ckpt") / "tiny")
    fast.save_pretrained(out)
    config = GPT2Config(
        vocab_size=len(vocab), n_positions=64, n_embd=32, n_layer=1, n_head=2,
        pad_token_id=0, eos_token_id=2, bos_token_id=2,
    )
    torch.manual_seed(0)
    GPT2LMHeadModel(config).save_pretrained(out)
    return out


def write_toml(path, lines: list[str]) -> str:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


@pytest.fixture(scope="session")
def gen_config_file(tmp_path_factory, checkpoint) -> str:
    return write_toml(
        tmp_path_factory.mktemp("cfg") / "gen.toml",
        [
            'task = "generation"',
            "epochs = 1",
            "batch_size = 8",
            "learning_rate = 5e-3",
            "seed = 5",
            "max_length = 64",
            "max_new_tokens = 8",
            "samples_per_prompt = 1",
            "[model_names]",
            f'syn = "{checkpoint}"',
        ],
    )


@pytest.fixture(scope="session")
def cls_config_file(tmp_path_factory, checkpoint) -> str:
    return write_toml(
        tmp_path_factory.mktemp("cfg") / "cls.toml",
        [
            'task = "classification"',
            "epochs = 2",
            "batch_size = 8",
            "learning_rate = 5e-3",
            "seed = 5",
            "max_length = 64",
            "n_models = 10",
            "inclusion_prob = 0.5",
            "n_bins = 4",
            "member_fraction = 0.5",
            "[model_names]",
            f'syn = "{checkpoint}"',
        ],
    )


@pytest.fixture(scope="session")
def gen_export(tmp_path_factory, gen_config_file, corpus_file) -> dict[str, str]:
    out = str(tmp_path_factory.mktemp("exports") / "gen")
    return finetune_and_export_generations(
        load_config(gen_config_file), corpus_file, (3, 5), out
    )


@pytest.fixture(scope="session")
def ens_export(tmp_path_factory, cls_config_file, corpus_file) -> dict[str, str]:
    out = str(tmp_path_factory.mktemp("exports") / "ens")
    return finetune_and_export_ensemble(load_config(cls_config_file), corpus_file, out)


@pytest.fixture(scope="session")
def traj_export(tmp_path_factory, cls_config_file, corpus_file) -> dict[str, str]:
    out = str(tmp_path_factory.mktemp("exports") / "traj")
    return finetune_and_export_trajectories(
        load_config(cls_config_file), corpus_file, out, epochs=30
    )
