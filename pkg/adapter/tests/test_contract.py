"""Format parity with the audit toolkit, exercised on a 50-doc micro-run.

Every exported file must be accepted by the toolkit's own readers, and the
file-mode pipelines must run to completion on adapter output via the public
CLI. The adapter package itself never imports the toolkit; these tests are
the boundary where the two meet.
"""

import json
import os
import sys

from conftest import N_DOCS, run_cli


def test_generation_log_passes_schema_reader(gen_export):
    from linguaudit.extraction import read_generation_log

    records = read_generation_log(gen_export["generation_log"])
    assert len(records) > 0
    assert {r.prompt_size for r in records} == {3, 5}
    assert all(r.model_id in ("tiny-greedy", "tiny-sample-1") for r in records)


def test_loss_matrix_passes_schema_reader(ens_export):
    from linguaudit.memorization import read_loss_matrix

    lm = read_loss_matrix(ens_export["losses"], ens_export["mask"])
    assert lm.losses.shape == (10, N_DOCS)
    assert lm.in_mask.shape == (10, N_DOCS)


def test_trajectories_pass_schema_reader(traj_export):
    from linguaudit.mia import read_trajectories

    shadow = read_trajectories(traj_export["shadow"])
    target = read_trajectories(traj_export["target"])
    assert len(shadow) + len(target) == N_DOCS
    assert all(len(t.conf) == 30 for t in shadow + target)


def test_memorize_pipeline_consumes_ensemble_export(tmp_path, ens_export):
    out = str(tmp_path / "mem")
    proc = run_cli(
        sys.executable, "-m", "linguaudit.cli", "memorize",
        "--losses", ens_export["losses"], "--mask", ens_export["mask"], "--out", out,
    )
    assert proc.returncode == 0, proc.stderr
    with open(os.path.join(out, "scores.jsonl"), encoding="utf-8") as fh:
        scores = [json.loads(line) for line in fh]
    assert len(scores) == N_DOCS
    summary = json.loads(
        open(os.path.join(out, "memorization_summary.json"), encoding="utf-8").read()
    )
    assert summary["n_docs"] == N_DOCS


def test_mia_pipeline_consumes_trajectory_export(tmp_path, traj_export):
    out = str(tmp_path / "mia")
    proc = run_cli(
        sys.executable, "-m", "linguaudit.cli", "mia",
        "--shadow", traj_export["shadow"], "--target", traj_export["target"],
        "--out", out, "--rounds", "40",
    )
    assert proc.returncode == 0, proc.stderr
    result = json.loads(open(os.path.join(out, "mia_result.json"), encoding="utf-8").read())
    assert 0.0 <= result["accuracy"] <= 1.0


def test_adapter_cli_round_trip(tmp_path, cls_config_file, corpus_file):
    sub = tmp_path / "sub.jsonl"
    with open(corpus_file, encoding="utf-8") as fh:
        lines = [next(fh) for _ in range(10)]
    sub.write_text("".join(lines), encoding="utf-8")
    out = str(tmp_path / "ens")
    proc = run_cli(
        "linguaudit-adapter", "ensemble",
        "--config", cls_config_file, "--corpus", str(sub), "--out", out,
        "--models", "3",
    )
    assert proc.returncode == 0, proc.stderr
    assert os.path.exists(os.path.join(out, "losses.csv"))
    assert os.path.exists(os.path.join(out, "mask.csv"))
    assert os.path.exists(os.path.join(out, "export_header.json"))


def test_adapter_cli_reports_caller_errors(tmp_path, cls_config_file):
    proc = run_cli(
        "linguaudit-adapter", "ensemble",
        "--config", cls_config_file, "--corpus", str(tmp_path / "missing.jsonl"),
        "--out", str(tmp_path / "o"),
    )
    assert proc.returncode == 2
    assert "linguaudit-adapter: error:" in proc.stderr
