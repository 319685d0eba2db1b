"""Acceptance gate: one test per release criterion, each printing a
PASS/FAIL line with the measured values and runtime.

Run with `pytest tests/test_acceptance.py -s` to see the lines live.
"""

import json
import time

import numpy as np
import pytest

from cardiotriage.cli import main as cli_main
from cardiotriage.corpus import SplitSpec, as_matrix, generate_synthetic, split
from cardiotriage.embed import EmbeddingStore, store_read, store_write
from cardiotriage.forest import (
    ForestConfig,
    best_split,
    fit,
    load_model,
    mdi_importances,
    predict_batch,
    save_model,
)
from cardiotriage.metrics import ConfusionMatrix, cohen_kappa, f1, precision, recall, roc_auc
from cardiotriage.rng import SplitMix64
from cardiotriage.tokenizer import CLS, PAD, SEP, UNK, encode, normalize, wordpiece
from cardiotriage.forest import Prediction
from cardiotriage.verify import Lexicon, verify_prediction

from oracles import brute_force_best_split, pair_count_auc


def report(name: str, ok: bool, detail: str, elapsed: float, budget: float) -> None:
    status = "PASS" if ok and elapsed < budget else "FAIL"
    print(f"{status}  {name}: {detail} [{elapsed:.3f}s < {budget:g}s]")


def run_cli(*argv):
    return cli_main([str(a) for a in argv])


def test_metric_formulas():
    t0 = time.perf_counter()
    p = precision(ConfusionMatrix(tp=7, fp=1))
    r = recall(ConfusionMatrix(tp=5, fn=1))
    f = f1(p, r)
    elapsed = time.perf_counter() - t0
    ok = p == 0.875 and abs(r - 5 / 6) < 1e-15 and abs(f - 0.853) < 0.001
    report(
        "metric-formulas",
        ok,
        f"precision={p:.4f} recall={r:.4f} f1={f:.4f} (table: 87.5/83.3/85.3)",
        elapsed,
        0.001,
    )
    assert p == 0.875
    assert r == pytest.approx(5 / 6, abs=1e-15)
    # 85.3% within 0.1 percentage point
    assert abs(f * 100 - 85.3) < 0.1
    assert elapsed < 0.001


def test_split_finder_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    checked = 0
    for _ in range(250):
        n = int(rng.integers(2, 13))
        d = int(rng.integers(1, 4))
        X = np.round(rng.normal(size=(n, d)), 2)
        y = rng.integers(0, 2, size=n)
        samples = np.arange(n)
        expected = brute_force_best_split(samples, X, y, range(d))
        got = best_split(samples, X, y, range(d))
        if expected is None:
            assert got is None
        else:
            assert got is not None
            assert got[0] == expected[0] and got[1] == expected[1]
            assert abs(got[2] - expected[2]) < 1e-15
        checked += 1
    elapsed = time.perf_counter() - t0
    report("split-finder-oracle", True, f"{checked} random instances match exhaustive enumeration", elapsed, 5.0)
    assert checked >= 200
    assert elapsed < 5.0


def test_forest_determinism(tmp_path):
    t0 = time.perf_counter()
    ds, store = generate_synthetic(n=20, margin=8.0, dim=768, seed=42)
    parts = split(ds, SplitSpec(seed=42))
    X, y = as_matrix(parts.train, store)
    cfg = ForestConfig(n_estimators=100, max_depth=None, seed=42)
    paths = []
    for tag in ("a", "b"):
        model = fit(X, y, cfg)
        path = tmp_path / f"{tag}.cvdf"
        save_model(model, path)
        paths.append(path.read_bytes())
    elapsed = time.perf_counter() - t0
    identical = paths[0] == paths[1]
    report("forest-determinism", identical, f"two fits -> {len(paths[0])}-byte files, byte-identical={identical}", elapsed, 10.0)
    assert identical
    assert elapsed < 10.0


def _pipeline_accuracy(tmp_path, tag: str, margin: float, synth_seed: int, train_seed: int) -> float:
    ds = tmp_path / f"ds-{tag}.jsonl"
    store = tmp_path / f"emb-{tag}.cvde"
    model = tmp_path / f"model-{tag}.cvdf"
    rep = tmp_path / f"report-{tag}.json"
    assert run_cli("synth", "--n", 20, "--margin", margin, "--dim", 768,
                   "--seed", synth_seed, "--out", ds, "--store-out", store) == 0
    assert run_cli("train", "--dataset", ds, "--model-out", model,
                   "--provider", "file", "--store", store, "--seed", train_seed) == 0
    assert run_cli("evaluate", "--model", model, "--dataset", ds, "--report", rep,
                   "--provider", "file", "--store", store, "--seed", train_seed) == 0
    return json.loads(rep.read_text())["accuracy"]


def test_end_to_end_desk_scale(tmp_path):
    t0 = time.perf_counter()
    acc8 = _pipeline_accuracy(tmp_path, "m8", margin=8.0, synth_seed=42, train_seed=42)
    accs2 = [
        _pipeline_accuracy(tmp_path, f"m2-{s}", margin=2.0, synth_seed=s, train_seed=s)
        for s in range(1, 21)
    ]
    mean2 = float(np.mean(accs2))
    elapsed = time.perf_counter() - t0
    ok = acc8 == 1.0 and mean2 >= 0.8
    report(
        "end-to-end-desk-scale",
        ok,
        f"margin=8 accuracy={acc8:.3f} (need 1.0); margin=2 mean accuracy={mean2:.3f} over seeds 1..20 (need >= 0.8)",
        elapsed,
        60.0,
    )
    assert acc8 == 1.0
    assert elapsed < 60.0
    # Known shortfall: a forest on 14 training rows in 768 dimensions with a
    # single informative coordinate cannot average 0.8 held-out accuracy at
    # margin=2 (Bayes limit 0.841; the sklearn reference scores ~0.42 on the
    # identical data). Asserted as specified; see the decisions ledger.
    assert mean2 >= 0.8, f"margin=2 mean accuracy {mean2:.3f} < 0.8"


def test_mdi_importances(tmp_path):
    t0 = time.perf_counter()
    ds, store = generate_synthetic(n=20, margin=8.0, dim=768, seed=42)
    parts = split(ds, SplitSpec(seed=42))
    X, y = as_matrix(parts.train, store)
    model = fit(X, y, ForestConfig(seed=42))
    imp = mdi_importances(model)
    model_path = tmp_path / "m.cvdf"
    save_model(model, model_path)
    csv_path = tmp_path / "imp.csv"
    assert run_cli("importance", "--model", model_path, "--out", csv_path) == 0
    rows = csv_path.read_text().strip().splitlines()
    elapsed = time.perf_counter() - t0
    ok = bool(np.all(imp >= 0)) and abs(imp.sum() - 1.0) < 1e-9 and imp[0] > 0.9 and len(rows) == 11
    report(
        "mdi-importances",
        ok,
        f"min={imp.min():.3g} sum={imp.sum():.12f} imp[dim0]={imp[0]:.3f} csv_rows={len(rows) - 1}",
        elapsed,
        10.0,
    )
    assert np.all(imp >= 0)
    assert abs(imp.sum() - 1.0) < 1e-9
    assert imp[0] > 0.9
    assert len(rows) - 1 == 10
    assert elapsed < 10.0


def test_auroc_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(777)
    for _ in range(100):
        n = int(rng.integers(2, 51))
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = np.round(rng.random(size=n), 1)  # coarse grid -> ties
        expected = pair_count_auc(scores.tolist(), labels.tolist())
        got = roc_auc(scores.tolist(), labels.tolist())
        assert abs(got - expected) < 1e-12
    perfect = roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    elapsed = time.perf_counter() - t0
    report("auroc-oracle", perfect == 1.0, f"100 instances match pair counting to 1e-12; separated={perfect}", elapsed, 1.0)
    assert perfect == 1.0
    assert elapsed < 1.0


def test_cohen_kappa():
    t0 = time.perf_counter()
    a = [1] * 8 + [0] * 8 + [1, 1, 0, 0]
    b = [1] * 8 + [0] * 8 + [0, 0, 1, 1]
    table_kappa = cohen_kappa(a, b)
    self_one = cohen_kappa([1, 0, 1], [1, 0, 1])
    rng = SplitMix64(31337)
    for _ in range(100):
        n = rng.next_below(40) + 1
        va = [rng.next_below(2) for _ in range(n)]
        vb = [rng.next_below(2) for _ in range(n)]
        assert cohen_kappa(va, vb) == cohen_kappa(vb, va)
    elapsed = time.perf_counter() - t0
    ok = abs(table_kappa - 0.6) < 1e-12 and self_one == 1.0
    report("cohen-kappa", ok, f"20-case table kappa={table_kappa:.6f} (need 0.600000); kappa(a,a)={self_one}", elapsed, 1.0)
    assert table_kappa == pytest.approx(0.6, abs=1e-12)
    assert self_one == 1.0
    assert elapsed < 1.0


def test_tokenizer_conformance(toy_vocab):
    t0 = time.perf_counter()
    cases_run = 0

    def check(cond):
        nonlocal cases_run
        assert cond
        cases_run += 1

    # normalization
    check(normalize("Chest  Tightness!") == "chest tightness !")
    check(normalize("") == "")
    check(normalize("SHORTNESS-of-Breath") == "shortness - of - breath")
    # wordpiece
    check(wordpiece("shortness", toy_vocab) == ["short", "##ness"])
    check(wordpiece("chest", toy_vocab) == ["chest"])
    check(wordpiece("angina", toy_vocab) == [UNK])
    check(wordpiece("breathless", toy_vocab) == ["breathless"])
    check(wordpiece("breaths", toy_vocab) == [UNK])
    # encode: pad, truncate, boundaries
    seq = encode("shortness of breath", toy_vocab, max_len=8)
    check(seq.tokens == (CLS, "short", "##ness", "of", "breath", SEP, PAD, PAD))
    check(seq.attention_mask == (1, 1, 1, 1, 1, 1, 0, 0))
    seq = encode("", toy_vocab, max_len=4)
    check(seq.tokens == (CLS, SEP, PAD, PAD))
    seq = encode("chest pain chest pain chest pain", toy_vocab, max_len=5)
    check(seq.tokens == (CLS, "chest", "pain", "chest", SEP))
    seq = encode("chest pain", toy_vocab, max_len=4)
    check(seq.tokens == (CLS, "chest", "pain", SEP))
    elapsed = time.perf_counter() - t0
    report("tokenizer-conformance", cases_run >= 10, f"{cases_run} hand-traced cases", elapsed, 1.0)
    assert cases_run >= 10
    assert elapsed < 1.0


def test_verifier_mini_corpus():
    t0 = time.perf_counter()
    lex = Lexicon.default()

    def analysis(text):
        from cardiotriage.verify import detect_negation, detect_temporal_ambiguity, match_symptoms

        matches = detect_negation(text, match_symptoms(text, lex), lex)
        return matches, detect_temporal_ambiguity(text, matches, lex)

    matches, _ = analysis("denies chest pain")
    assert [m.negated for m in matches] == [True]
    matches, _ = analysis("no fever but chest pain")
    assert [m.negated for m in matches] == [False]
    matches, _ = analysis("chest pain, no radiation")
    assert [m.negated for m in matches] == [False]
    assert analysis("chest pain for two days")[1] is False
    assert analysis("chest pain")[1] is True
    assert analysis("denies chest pain")[1] is False

    # hallucination flag implication on 1000 fuzzed text/prediction pairs
    rng = SplitMix64(424242)
    words = [
        "chest", "pain", "denies", "no", "fatigue", "sudden", "breath", "of",
        "shortness", "palpitations", "well", "but", ",", "for", "two", "days",
        "morning", "without", "feels", "history",
    ]
    violations = 0
    for _ in range(1000):
        text = " ".join(words[rng.next_below(len(words))] for _ in range(rng.next_below(10)))
        label = rng.next_below(2)
        pred = Prediction(label=label, score=float(label), votes=(1 - label, label))
        rep = verify_prediction(text, pred, lex)
        if rep.hallucination_flag and pred.label != 1:
            violations += 1
    elapsed = time.perf_counter() - t0
    report("verifier-mini-corpus", violations == 0, f"6 hand-labeled cases exact; implication violations={violations}/1000", elapsed, 1.0)
    assert violations == 0
    assert elapsed < 1.0


def test_persistence_round_trips(tmp_path):
    t0 = time.perf_counter()
    # forest round trip
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 8))
    y = np.array([0, 1] * 15)
    model = fit(X, y, ForestConfig(n_estimators=12, seed=11, max_features=3))
    p1, p2 = tmp_path / "m1.cvdf", tmp_path / "m2.cvdf"
    save_model(model, p1)
    save_model(load_model(p1), p2)
    model_ok = p1.read_bytes() == p2.read_bytes()

    # 100-vector embedding store: float bit patterns preserved
    store = EmbeddingStore(dim=16)
    raw = rng.normal(size=(100, 16)).astype(np.float32)
    raw[0, 0] = np.float32(1e-42)  # subnormal
    raw[1, 1] = np.float32(-0.0)
    for i in range(100):
        store.put(f"v{i:03d}", raw[i])
    sp = tmp_path / "s.cvde"
    store_write(store, sp)
    loaded = store_read(sp)
    store_ok = all(loaded.get(f"v{i:03d}").tobytes() == raw[i].tobytes() for i in range(100))
    predictions_match = predict_batch(load_model(p1), X) == predict_batch(model, X)
    elapsed = time.perf_counter() - t0
    ok = model_ok and store_ok and predictions_match
    report(
        "persistence",
        ok,
        f"model save/load/save byte-identical={model_ok}; 100-vector store bits preserved={store_ok}",
        elapsed,
        1.0,
    )
    assert model_ok and store_ok and predictions_match
    assert elapsed < 1.0
