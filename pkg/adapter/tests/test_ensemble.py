"""Ensemble export: CSV pair shape, mask guarantees, determinism."""

import json

from linguaudit_adapter import finetune_and_export_ensemble, load_config

from conftest import N_DOCS


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        rows = [line.rstrip("\n").split(",") for line in fh]
    return rows[0], rows[1:]


def test_ten_rows_in_both_csvs(ens_export):
    l_header, l_rows = read_csv(ens_export["losses"])
    m_header, m_rows = read_csv(ens_export["mask"])
    assert l_header == m_header
    assert l_header[0] == "model_id" and len(l_header) == N_DOCS + 1
    assert len(l_rows) == 10 and len(m_rows) == 10
    assert [r[0] for r in l_rows] == [r[0] for r in m_rows]
    assert [r[0] for r in l_rows] == [f"model-{i:02d}" for i in range(10)]


def test_losses_finite_and_mask_binary(ens_export):
    _, l_rows = read_csv(ens_export["losses"])
    _, m_rows = read_csv(ens_export["mask"])
    for row in l_rows:
        for cell in row[1:]:
            value = float(cell)
            assert value == value and abs(value) != float("inf")
    for row in m_rows:
        assert set(row[1:]) <= {"0", "1"}


def test_every_doc_on_both_sides(ens_export):
    _, m_rows = read_csv(ens_export["mask"])
    n_models = len(m_rows)
    for j in range(1, N_DOCS + 1):
        column = sum(int(row[j]) for row in m_rows)
        assert 1 <= column <= n_models - 1


def test_header_records_setup(ens_export):
    header = json.loads(open(ens_export["header"], encoding="utf-8").read())
    assert header["operation"] == "ensemble"
    assert header["n_models"] == 10
    assert header["n_docs"] == N_DOCS
    assert header["hyperparameters"]["epochs"] == 2


def test_deterministic_across_runs(tmp_path, cls_config_file, corpus_file):
    sub = tmp_path / "sub.jsonl"
    with open(corpus_file, encoding="utf-8") as fh:
        lines = [next(fh) for _ in range(10)]
    sub.write_text("".join(lines), encoding="utf-8")
    config = load_config(cls_config_file)
    a = finetune_and_export_ensemble(config, str(sub), str(tmp_path / "a"), n_models=3)
    b = finetune_and_export_ensemble(config, str(sub), str(tmp_path / "b"), n_models=3)
    assert open(a["losses"], "rb").read() == open(b["losses"], "rb").read()
    assert open(a["mask"], "rb").read() == open(b["mask"], "rb").read()
