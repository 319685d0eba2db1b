import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cardiotriage.corpus import (
    CorpusError,
    Dataset,
    SplitSpec,
    SymptomRecord,
    generate_synthetic,
    load_records,
    save_records,
    split,
    summarize,
)


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


class TestLoadRecords:
    def test_single_labeled_line(self, tmp_path):
        p = tmp_path / "ds.jsonl"
        write_jsonl(p, [{"id": "a", "text": "chest tightness", "label": 1}])
        ds = load_records(p)
        assert len(ds) == 1
        rec = ds.records[0]
        assert (rec.id, rec.text, rec.label, rec.source) == ("a", "chest tightness", 1, "real")

    def test_empty_file(self, tmp_path):
        p = tmp_path / "ds.jsonl"
        p.write_text("")
        assert len(load_records(p)) == 0

    def test_duplicate_id_names_line(self, tmp_path):
        p = tmp_path / "ds.jsonl"
        write_jsonl(p, [{"id": "a", "text": "x"}, {"id": "a", "text": "y"}])
        with pytest.raises(CorpusError, match=r":2.*duplicate id 'a'"):
            load_records(p)

    def test_invalid_label(self, tmp_path):
        p = tmp_path / "ds.jsonl"
        write_jsonl(p, [{"id": "a", "text": "x", "label": 2}])
        with pytest.raises(CorpusError, match="label"):
            load_records(p)

    def test_parse_error_names_line(self, tmp_path):
        p = tmp_path / "ds.jsonl"
        p.write_text('{"id": "a", "text": "x"}\nnot json\n')
        with pytest.raises(CorpusError, match=r":2"):
            load_records(p)

    def test_csv_round_trip(self, tmp_path, tiny_dataset):
        p = tmp_path / "ds.csv"
        save_records(tiny_dataset, p)
        loaded = load_records(p)
        assert loaded == tiny_dataset

    def test_jsonl_round_trip(self, tmp_path, tiny_dataset):
        p = tmp_path / "ds.jsonl"
        save_records(tiny_dataset, p)
        assert load_records(p) == tiny_dataset

    def test_csv_label_validation(self, tmp_path):
        p = tmp_path / "ds.csv"
        p.write_text('id,text,label,source\na,"chest pain",7,real\n')
        with pytest.raises(CorpusError, match="label"):
            load_records(p)

    def test_record_order_is_file_order(self, tmp_path):
        p = tmp_path / "ds.jsonl"
        rows = [{"id": f"r{i}", "text": f"t{i}"} for i in range(10)]
        write_jsonl(p, rows)
        assert load_records(p).ids == [f"r{i}" for i in range(10)]


class TestRecordInvariants:
    def test_empty_text_rejected(self):
        with pytest.raises(CorpusError):
            SymptomRecord(id="a", text="   ")

    def test_empty_id_rejected(self):
        with pytest.raises(CorpusError):
            SymptomRecord(id="", text="x")

    def test_duplicate_ids_rejected(self):
        recs = (SymptomRecord(id="a", text="x"), SymptomRecord(id="a", text="y"))
        with pytest.raises(CorpusError, match="duplicate"):
            Dataset(recs)


class TestSplit:
    def test_twenty_at_70_30(self):
        ds, _ = generate_synthetic(n=20, margin=1.0, dim=2, seed=42)
        parts = split(ds, SplitSpec(train_fraction=0.7, seed=42))
        assert len(parts.train) == 14
        assert len(parts.test) == 6

    def test_minimal_split(self):
        ds = Dataset(
            (SymptomRecord(id="a", text="x", label=0), SymptomRecord(id="b", text="y", label=1))
        )
        parts = split(ds, SplitSpec(train_fraction=0.5, seed=1))
        assert len(parts.train) == 1
        assert len(parts.test) == 1
        assert set(parts.train.ids).isdisjoint(parts.test.ids)

    def test_determinism(self):
        ds, _ = generate_synthetic(n=30, margin=1.0, dim=2, seed=3)
        a = split(ds, SplitSpec(seed=42))
        b = split(ds, SplitSpec(seed=42))
        assert a == b

    def test_unlabeled_rejected(self):
        ds = Dataset((SymptomRecord(id="a", text="x", label=1), SymptomRecord(id="b", text="y")))
        with pytest.raises(CorpusError, match="unlabeled"):
            split(ds)

    def test_too_small_rejected(self):
        ds = Dataset((SymptomRecord(id="a", text="x", label=1),))
        with pytest.raises(CorpusError, match="at least 2"):
            split(ds)

    @settings(max_examples=60, deadline=None)
    @given(
        n=st.integers(min_value=2, max_value=60),
        frac=st.floats(min_value=0.05, max_value=0.95),
        seed=st.integers(min_value=0, max_value=2**64 - 1),
        stratified=st.booleans(),
    )
    def test_partition_property(self, n, frac, seed, stratified):
        records = tuple(
            SymptomRecord(id=f"r{i}", text=f"case {i}", label=i % 2) for i in range(n)
        )
        ds = Dataset(records)
        parts = split(ds, SplitSpec(train_fraction=frac, seed=seed, stratified=stratified))
        train_ids = set(parts.train.ids)
        test_ids = set(parts.test.ids)
        assert train_ids.isdisjoint(test_ids)
        assert train_ids | test_ids == set(ds.ids)
        assert len(parts.train) == int(np.floor(frac * n + 0.5))

    @settings(max_examples=40, deadline=None)
    @given(
        n0=st.integers(min_value=1, max_value=30),
        n1=st.integers(min_value=1, max_value=30),
        frac=st.floats(min_value=0.1, max_value=0.9),
        seed=st.integers(min_value=0, max_value=2**32),
    )
    def test_stratified_proportions_within_one(self, n0, n1, frac, seed):
        records = tuple(
            SymptomRecord(id=f"r{i}", text=f"case {i}", label=0 if i < n0 else 1)
            for i in range(n0 + n1)
        )
        parts = split(
            Dataset(records), SplitSpec(train_fraction=frac, seed=seed, stratified=True)
        )
        for label, class_size in ((0, n0), (1, n1)):
            got = sum(1 for r in parts.train if r.label == label)
            assert abs(got - frac * class_size) <= 1.0


class TestGenerateSynthetic:
    def test_balanced_construction(self):
        ds, store = generate_synthetic(n=20, margin=8.0, dim=768, seed=42)
        labels = ds.labels()
        assert labels.count(1) == 10
        assert labels.count(0) == 10
        assert store.dim == 768
        assert set(ds.ids) == set(store.vectors)
        assert all(rec.source == "synthetic" for rec in ds)

    def test_zero_margin_shares_mean(self):
        _, s0 = generate_synthetic(n=400, margin=0.0, dim=4, seed=9)
        xs = np.array([v[0] for v in s0.vectors.values()])
        assert abs(xs.mean()) < 0.2

    def test_cluster_means_along_dim0(self):
        # sample-mean oracle over a large draw: class means sit at +-margin/2
        ds, store = generate_synthetic(n=10000, margin=8.0, dim=2, seed=42)
        high = np.array([store.get(r.id)[0] for r in ds if r.label == 1])
        low = np.array([store.get(r.id)[0] for r in ds if r.label == 0])
        assert abs(high.mean() - 4.0) < 0.15
        assert abs(low.mean() - (-4.0)) < 0.15

    def test_threshold_classifier_separates_margin8(self):
        for seed in (1, 2, 42):
            ds, store = generate_synthetic(n=20, margin=8.0, dim=768, seed=seed)
            for rec in ds:
                x0 = store.get(rec.id)[0]
                assert (x0 > 0) == (rec.label == 1)

    def test_determinism(self):
        a_ds, a_store = generate_synthetic(n=10, margin=2.0, dim=8, seed=5)
        b_ds, b_store = generate_synthetic(n=10, margin=2.0, dim=8, seed=5)
        assert a_ds == b_ds
        for rid in a_store.vectors:
            assert a_store.get(rid).tobytes() == b_store.get(rid).tobytes()

    def test_odd_n_rejected(self):
        with pytest.raises(ValueError, match="even"):
            generate_synthetic(n=7, margin=1.0, dim=4, seed=1)

    def test_small_dim_rejected(self):
        with pytest.raises(ValueError, match="dim"):
            generate_synthetic(n=4, margin=1.0, dim=1, seed=1)


def test_summarize(tiny_dataset):
    s = summarize(tiny_dataset)
    assert s == {"records": 6, "labeled": 6, "high_risk": 3, "low_risk": 3, "synthetic": 0}
