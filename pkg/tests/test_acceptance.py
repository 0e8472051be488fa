"""Acceptance gate: seven go/no-go checks with stated tolerances.

Each check prints one visible PASS line with its elapsed time and budget;
a failed expectation surfaces as an ordinary pytest failure instead. The
checks are numbered and run in file order:

  1. indicator correctness on the frozen hand-annotated fixture
  2. indicator invariants over seeded synthetic corpora
  3. extraction detector soundness and completeness
  4. end-to-end extraction on the toy generator, with held-out controls
     and the redundancy direction
  5. counterfactual flagging of a planted outlier, with a null control
  6. membership-inference floor, ceiling, and separability growth
  7. report arithmetic and manifest determinism
"""

import itertools
import math
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

import oracles
from helpers import build_corpus, make_vocab, rand_token_docs
from linguaudit import (
    Corpus,
    LossMatrix,
    Table,
    assign_length_bins,
    collect_trajectories,
    counterfactual_scores,
    evaluate_mia,
    flag_memorized,
    make_ensemble_masks,
    profile,
    separability_report,
    spearman,
    synth_corpus,
    train_attack,
)
from linguaudit.corpus import Document, Token
from linguaudit.extraction import PromptSpec, build_index, build_prompts, detect_extraction
from linguaudit.mia import ConfidenceTrajectory
from linguaudit.models import BinClassifier, NGramModel, ensemble_loss_matrix
from linguaudit.pipeline import PipelineConfig, _extraction_artifacts, run_extraction_stage
from linguaudit.report import emit


def _passed(capsys, idx, name, elapsed, bound):
    with capsys.disabled():
        print(f"\nacceptance {idx}/7 PASS {name} ({elapsed:.2f}s, budget {bound})")


def _token_docs(corpus):
    return [list(d.surfaces) for d in corpus.docs]


def _contains(haystack, needle):
    n = len(needle)
    return any(tuple(haystack[i : i + n]) == tuple(needle) for i in range(len(haystack) - n + 1))


def test_gate_1_metric_correctness(metrics_corpus, capsys):
    """T, C, D exact; M exact vs hand-counted variant sets; S and R to 1e-9."""
    t0 = time.perf_counter()
    prof = profile(metrics_corpus)

    assert prof.T == float(Fraction(943, 200))
    assert prof.C == float(Fraction(1, 10))
    assert prof.D == float(Fraction(47, 200))
    assert prof.M == float(Fraction(47, 30))

    hand_entropy = (
        0.25 * math.log(4) + 0.2 * math.log(5) + 0.5 * math.log(10) + 0.05 * math.log(20)
    )
    assert abs(prof.S - hand_entropy) <= 1e-9
    assert abs(prof.R - oracles.pmi_exhaustive(_token_docs(metrics_corpus))) <= 1e-9

    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _passed(capsys, 1, "metric correctness on frozen fixture", elapsed, "1s")


def test_gate_2_metric_invariants(capsys):
    """Duplication/order invariance, TTR decrease, entropy bound; 100 cases each."""
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(77))
    for case in range(100):
        corpus = synth_corpus(
            n_docs=int(rng.integers(6, 15)),
            vocab_size=int(rng.integers(20, 60)),
            redundancy_knob=float(rng.random()),
            inflection_knob=float(1.0 + 1.5 * rng.random()),
            seed=case,
            doc_len=(5, int(rng.integers(8, 18))),
        )
        p = profile(corpus)

        doubled = replace(
            corpus,
            docs=corpus.docs + tuple(replace(d, id=d.id + "-copy") for d in corpus.docs),
        )
        pd = profile(doubled)
        assert pd.T == p.T and pd.C == p.C and pd.M == p.M
        assert pd.D < p.D

        n_labels = len({r for d in corpus.docs for r in d.deprels})
        assert p.S <= math.log(n_labels) + 1e-12

        perm = rng.permutation(len(corpus.docs))
        shuffled = replace(corpus, docs=tuple(corpus.docs[i] for i in perm))
        ps = profile(shuffled)
        assert (ps.M, ps.S, ps.R, ps.T, ps.C, ps.D) == (p.M, p.S, p.R, p.T, p.C, p.D)

    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    _passed(capsys, 2, "metric invariants, 100 seeded corpora", elapsed, "30s")


def test_gate_3_extraction_soundness_completeness(capsys):
    """Reported matches confirmed by naive search; all long overlaps found;
    zero false positives on 1,000 disjoint-vocabulary fixtures."""
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(88))
    probe = PromptSpec(doc_id="probe", prompt_size=1, prompt_tokens=("x",), continuation_tokens=())

    # soundness + completeness against the exhaustive longest-span oracle;
    # most generations splice a real document slice between random flanks
    vocab = make_vocab(6)
    checked_hits = 0
    for order, min_match in ((5, 10), (3, 6)):
        for _ in range(150):
            docs = rand_token_docs(rng, vocab, int(rng.integers(3, 6)), 10, 40)
            while sum(len(d) for d in docs) > 200:
                docs.pop()
            gen = [vocab[int(j)] for j in rng.integers(0, len(vocab), size=int(rng.integers(12, 31)))]
            if rng.random() < 0.65:
                src_doc = docs[int(rng.integers(0, len(docs)))]
                length = int(rng.integers(4, min(26, len(src_doc) + 1)))
                start = int(rng.integers(0, len(src_doc) - length + 1))
                at = int(rng.integers(0, len(gen) + 1))
                gen = gen[:at] + src_doc[start : start + length] + gen[at:]
            corpus = build_corpus(docs)
            index = build_index(corpus, seed_ngram=order)
            m = detect_extraction(gen, probe, index, min_match_len=min_match, near_threshold=0.0)
            longest = oracles.longest_shared_span(gen, docs)
            if longest < max(min_match, order):
                assert m is None
            else:
                assert m is not None and m.match_len == longest
                span = m.matched_span_text.split(" ")
                src = docs[int(m.source_doc_id[1:])]
                assert _contains(gen, span) and _contains(src, span)
                checked_hits += 1
    assert checked_hits >= 100

    # planted spans at least max(min_match_len, order) long are always found
    for trial in range(100):
        span_len = int(rng.integers(12, 19))
        span = [f"s{trial}x{j}" for j in range(span_len)]
        doc = [f"a{j}" for j in range(8)] + span + [f"b{j}" for j in range(8)]
        gen = [f"c{j}" for j in range(5)] + span + [f"e{j}" for j in range(5)]
        index = build_index(build_corpus([doc]), seed_ngram=5)
        m = detect_extraction(gen, probe, index, min_match_len=10, near_threshold=0.0)
        assert m is not None and m.match_len >= span_len

    # zero false positives when generation and corpus share no vocabulary
    fp = 0
    for trial in range(1000):
        docs = rand_token_docs(rng, make_vocab(8, "p"), 3, 10, 30)
        gen = [f"q{int(j)}" for j in rng.integers(0, 8, size=20)]
        index = build_index(build_corpus(docs), seed_ngram=5)
        if detect_extraction(gen, probe, index, min_match_len=10, near_threshold=0.0):
            fp += 1
    assert fp == 0

    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _passed(capsys, 3, "extraction soundness/completeness, 1300 fixtures", elapsed, "60s")


def test_gate_4_end_to_end_extraction(capsys):
    """Order-5 generator on 500 synthetic sentences at redundancy 0.9:
    >= 80% of unique-4-prefix training sentences extracted greedily, zero
    extractions of unseen-prefix held-out sentences, and sampled decoding
    finds strictly more unique spans at redundancy 0.9 than at 0.1."""
    t0 = time.perf_counter()
    train = synth_corpus(
        n_docs=500, vocab_size=200, redundancy_knob=0.9, seed=41, doc_len=(15, 30)
    )
    lm = NGramModel(order=5, smoothing=0.1).fit(train)
    index = build_index(train, seed_ngram=5)
    specs = build_prompts(train, 5, min_match_len=10)
    by_id = train.by_id()

    # one representative prompt per distinct sentence whose 4-token prefix
    # identifies it uniquely among distinct training sentences
    prefix_texts: dict[tuple, set] = {}
    for d in train.docs:
        prefix_texts.setdefault(tuple(d.surfaces[:4]), set()).add(d.text)
    targets: dict[str, PromptSpec] = {}
    for spec in specs:
        text = by_id[spec.doc_id].text
        if len(prefix_texts[tuple(spec.prompt_tokens[:4])]) == 1 and text not in targets:
            targets[text] = spec
    assert len(targets) >= 50

    hits = 0
    for spec in targets.values():
        gen = lm.generate(spec.prompt_tokens, 40)
        m = detect_extraction(gen, spec, index, min_match_len=10, near_threshold=0.0)
        if m is not None and m.kind == "exact":
            hits += 1
    rate = hits / len(targets)
    assert rate >= 0.8

    # held-out sentences whose prefixes never occur in training: never "extracted"
    held = synth_corpus(
        n_docs=120, vocab_size=200, redundancy_knob=0.0, seed=43, doc_len=(15, 30)
    )
    train_windows = set()
    for d in train.docs:
        s = d.surfaces
        train_windows.update(tuple(s[i : i + 4]) for i in range(len(s) - 3))
    held_index = build_index(held, seed_ngram=5)
    kept = [
        s
        for s in build_prompts(held, 5, min_match_len=10)
        if tuple(s.prompt_tokens[:4]) not in train_windows
        and tuple(s.prompt_tokens[1:5]) not in train_windows
    ]
    assert len(kept) >= 50
    held_extractions = 0
    for spec in kept:
        gen = lm.generate(spec.prompt_tokens, 40)
        if detect_extraction(gen, spec, held_index, min_match_len=10, near_threshold=0.0):
            held_extractions += 1
    assert held_extractions == 0

    # redundancy direction under stochastic decoding (three seeded samples per
    # prompt): a greedy count model replays every unique sentence verbatim, so
    # only sampling exposes that repeated text is far easier to reproduce
    def unique_sampled_spans(knob: float) -> int:
        c = synth_corpus(
            n_docs=500, vocab_size=200, redundancy_knob=knob, seed=41, doc_len=(15, 30)
        )
        model = NGramModel(order=5, smoothing=0.1).fit(c)
        idx = build_index(c, seed_ngram=5)
        spans = set()
        for j, spec in enumerate(build_prompts(c, 5, min_match_len=10)):
            for s in range(1, 4):
                gen = model.generate(spec.prompt_tokens, 40, mode="sample", seed=j * 7 + s)
                hit = detect_extraction(gen, spec, idx, min_match_len=10, near_threshold=0.0)
                if hit is not None:
                    spans.add(hit.matched_span_text)
        return len(spans)

    high = unique_sampled_spans(0.9)
    low = unique_sampled_spans(0.1)
    assert high > low

    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    _passed(
        capsys,
        4,
        f"end-to-end extraction (rate {rate:.2f}, held-out 0, spans {high}>{low})",
        elapsed,
        "2min",
    )


def test_gate_5_counterfactual_outlier(capsys):
    """A planted repeated-rare-text outlier is tail-flagged in >= 9/10 mask
    seeds; an exchangeable null flags 5% +- 1% with mean score 0 +- 3 SE."""
    t0 = time.perf_counter()
    base = synth_corpus(
        n_docs=999, vocab_size=200, redundancy_knob=0.3, seed=7, doc_len=(8, 24)
    )
    words = [f"zq{i}" for i in range(15)] * 50
    outlier = Document(
        id="planted-outlier",
        language=base.language,
        text=" ".join(words),
        tokens=tuple(Token.from_surface(w) for w in words),
    )
    binned = assign_length_bins(
        Corpus(language=base.language, docs=base.docs + (outlier,)), n_bins=9
    )

    flagged_seeds = 0
    for seed in range(10):
        lm = ensemble_loss_matrix(
            binned, n_models=10, inclusion_prob=0.5, seed=seed, epochs=30, dim=1024, lr=50.0
        )
        flagged, _ = flag_memorized(counterfactual_scores(lm), percentile=0.95)
        if next(s for s in flagged if s.doc_id == "planted-outlier").flagged:
            flagged_seeds += 1
    assert flagged_seeds >= 9

    ids = [f"null{i:04d}" for i in range(1000)]
    mask = make_ensemble_masks(ids, n_models=10, inclusion_prob=0.5, seed=123)
    null_rng = np.random.Generator(np.random.Philox(456))
    null = LossMatrix(
        model_ids=[f"null-{k}" for k in range(10)],
        doc_ids=ids,
        losses=null_rng.normal(2.0, 0.4, size=(10, 1000)),
        in_mask=mask,
    )
    null_scores = counterfactual_scores(null)
    vals = np.array([s.score for s in null_scores])
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean()) <= 3.0 * se
    null_flagged, _ = flag_memorized(null_scores, percentile=0.95)
    frac = sum(1 for s in null_flagged if s.flagged) / len(null_flagged)
    assert 0.04 <= frac <= 0.06

    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    _passed(
        capsys,
        5,
        f"counterfactual outlier ({flagged_seeds}/10 seeds, null {frac:.0%})",
        elapsed,
        "2min",
    )


def test_gate_6_mia_floor_ceiling(capsys):
    """Chance accuracy 0.5 +- 0.05 on exchangeable trajectories, exactly 1.0
    on a separable fixture, and separability non-decreasing across epochs of
    a pure-memorization classifier run, averaged over 5 seeds."""
    t0 = time.perf_counter()

    def uniform_trajs(rng, n_in, n_out, epochs, prefix):
        out = []
        for i in range(n_in + n_out):
            conf = tuple(float(v) for v in rng.uniform(0.3, 0.7, size=epochs))
            out.append(ConfidenceTrajectory(f"{prefix}{i}", i < n_in, conf))
        return out

    rng = np.random.Generator(np.random.Philox(202))
    shadow = uniform_trajs(rng, 150, 150, 8, "s")
    target = uniform_trajs(rng, 300, 300, 8, "t")
    attack = train_attack(shadow, n_rounds=40)
    floor = evaluate_mia(attack, target)
    assert abs(floor.accuracy - 0.5) <= 0.05

    flat_shadow = [
        ConfidenceTrajectory(f"fs{i}", i < 40, ((0.92,) if i < 40 else (0.12,)) * 5)
        for i in range(80)
    ]
    flat_target = [
        ConfidenceTrajectory(f"ft{i}", i < 30, ((0.92,) if i < 30 else (0.12,)) * 5)
        for i in range(60)
    ]
    ceiling = evaluate_mia(train_attack(flat_shadow, n_rounds=20), flat_target)
    assert ceiling.accuracy == 1.0

    # pure-memorization fixture: orthogonal per-document features with spread
    # magnitudes, so member confidence climbs at document-specific speeds
    # while non-member logits never move
    corpus = synth_corpus(
        n_docs=120, vocab_size=300, redundancy_knob=0.2, seed=11, doc_len=(8, 24)
    )
    binned = assign_length_bins(corpus, n_bins=9)
    ids = binned.doc_ids()
    epochs = 30
    feats = np.eye(len(ids), 128) * np.linspace(0.4, 1.0, len(ids))[:, None]
    mean_sep = np.zeros(epochs)
    for seed in range(5):
        split_rng = np.random.Generator(np.random.Philox(seed))
        members = sorted(split_rng.permutation(ids)[:60].tolist())
        clf = BinClassifier(dim=128, epochs=epochs, lr=60.0, init_scale=1e-6, seed=seed).fit(
            binned, members, features=feats
        )
        trajs = collect_trajectories(clf, binned)
        for e in range(1, epochs + 1):
            mean_sep[e - 1] += (1.0 - separability_report(trajs, epoch=e).overlap) / 5
    assert (np.diff(mean_sep) >= -1e-12).all()
    assert mean_sep[-1] - mean_sep[0] >= 0.5

    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    _passed(
        capsys,
        6,
        f"mia floor/ceiling (chance {floor.accuracy:.3f}, sep growth {mean_sep[-1]:.2f})",
        elapsed,
        "2min",
    )


def test_gate_7_report_determinism(tmp_path, capsys):
    """Rank correlation matches brute force to 1e-12 on exhaustive small
    vectors, CSV round-trips are identities, and artifact manifests are
    byte-identical across runs and thread counts."""
    t0 = time.perf_counter()

    # exhaustive permutations up to n=6 plus permutation pairs at n=3,4
    for n in range(3, 7):
        xs = [float(i) for i in range(1, n + 1)]
        for perm in itertools.permutations(xs):
            got = spearman(xs, list(perm))
            want = oracles.spearman_bruteforce(xs, list(perm))
            assert got is not None and abs(got - want) <= 1e-12
    for n in (3, 4):
        base = [float(i) for i in range(1, n + 1)]
        for pa in itertools.permutations(base):
            for pb in itertools.permutations(base):
                got = spearman(list(pa), list(pb))
                want = oracles.spearman_bruteforce(list(pa), list(pb))
                assert got is not None and abs(got - want) <= 1e-12

    # randomized tie-heavy vectors up to length 10
    rng = np.random.Generator(np.random.Philox(99))
    for _ in range(1000):
        n = int(rng.integers(3, 11))
        xs = [float(v) for v in rng.integers(0, 4, size=n)]
        ys = [float(v) for v in rng.integers(0, 4, size=n)]
        got = spearman(xs, ys)
        want = oracles.spearman_bruteforce(xs, ys)
        if want is None:
            assert got is None
        else:
            assert abs(got - want) <= 1e-12

    table = Table(
        name="roundtrip",
        columns=("label", "count", "value"),
        col_types=("str", "int", "float"),
        rows=[("a,b", 1, math.pi), ('q"x"', None, 1e-300), ("nl\nnl", -3, None)],
    )
    text = table.to_csv()
    back = Table.from_csv("roundtrip", text, table.col_types)
    assert back.rows == table.rows and back.to_csv() == text

    corpus = synth_corpus(n_docs=60, vocab_size=120, redundancy_knob=0.6, seed=5, doc_len=(12, 24))
    manifests = []
    for tag, jobs in (("a", 1), ("b", 1), ("c", 4)):
        config = PipelineConfig(seed=9, prompt_sizes=(5, 12), n_samples=1, n_jobs=jobs)
        report, _, _ = run_extraction_stage(corpus, config)
        manifests.append(emit(_extraction_artifacts(report), str(tmp_path / tag)))
    assert manifests[0] == manifests[1] == manifests[2]

    elapsed = time.perf_counter() - t0
    _passed(capsys, 7, "report oracles and manifest determinism", elapsed, "-")
