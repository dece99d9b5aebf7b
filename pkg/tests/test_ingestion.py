import itertools
import json

import pytest

from taxledger.domain import annotated_to_json, dumps_record
from taxledger.ingestion import (
    CorpusManifest,
    LabelError,
    ParseError,
    SizeError,
    clean_corpus,
    load_corpus,
    read_split_dir,
    split_corpus,
    write_corpus,
    write_split_dir,
)

from conftest import make_annotated


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(dumps_record(annotated_to_json(record)) + "\n")


class TestLoadCorpus:
    def test_valid_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [make_annotated(f"p{i}") for i in range(3)])
        manifest = load_corpus(path)
        assert len(manifest) == 3
        assert manifest.provenance == str(path)

    def test_malformed_json_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        good = dumps_record(annotated_to_json(make_annotated("p1")))
        path.write_text(good + "\n{not json\n")
        with pytest.raises(ParseError) as err:
            load_corpus(path)
        assert err.value.line_no == 2

    def test_bad_label_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        lines = [dumps_record(annotated_to_json(make_annotated(f"p{i}"))) for i in range(5)]
        obj = annotated_to_json(make_annotated("p5"))
        obj["labels"]["source"] = "X"
        lines.append(dumps_record(obj))
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(LabelError) as err:
            load_corpus(path)
        assert err.value.line_no == 6
        assert err.value.field == "source"

    def test_round_trip_write_read(self, tmp_path):
        records = [make_annotated(f"p{i}", positive=i % 3 == 0) for i in range(7)]
        manifest = CorpusManifest(records=records)
        path = tmp_path / "out.jsonl"
        write_corpus(manifest, path)
        assert load_corpus(path).records == records


class TestCleanCorpus:
    def test_counts_both_categories(self):
        records = (
            [make_annotated(f"a{i}") for i in range(10)]
            + [make_annotated("a0"), make_annotated("a1")]           # duplicates
            + [make_annotated(f"u{i}", available=False) for i in range(4)]
        )
        cleaned, report = clean_corpus(CorpusManifest(records=records))
        assert len(cleaned) == 10
        assert report.removed_unavailable == 4
        assert report.removed_duplicates == 2

    def test_noop_when_clean(self):
        manifest = CorpusManifest(records=[make_annotated(f"p{i}") for i in range(5)])
        cleaned, report = clean_corpus(manifest)
        assert cleaned.records == manifest.records
        assert report.to_dict() == {"removed_unavailable": 0, "removed_duplicates": 0}

    def test_repeated_record_collapses(self):
        record = make_annotated("same")
        cleaned, report = clean_corpus(CorpusManifest(records=[record] * 5))
        assert len(cleaned) == 1
        assert report.removed_duplicates == 4
        assert report.removed_unavailable == 0

    def test_idempotent(self):
        records = [make_annotated("x"), make_annotated("x"), make_annotated("y", available=False)]
        once, _ = clean_corpus(CorpusManifest(records=records))
        twice, report = clean_corpus(once)
        assert twice.records == once.records
        assert report.to_dict() == {"removed_unavailable": 0, "removed_duplicates": 0}


class TestSplitCorpus:
    def _manifest(self, n):
        return CorpusManifest(records=[make_annotated(f"p{i}", positive=i % 4 == 0) for i in range(n)])

    def test_reference_sizes(self):
        split = split_corpus(self._manifest(2081), 400, 0.2, seed=7)
        assert (len(split.train), len(split.validation), len(split.test)) == (1345, 336, 400)

    def test_zero_val_fraction(self):
        split = split_corpus(self._manifest(10), 2, 0.0, seed=1)
        assert (len(split.train), len(split.validation), len(split.test)) == (8, 0, 2)

    def test_deterministic(self):
        m = self._manifest(50)
        a = split_corpus(m, 10, 0.2, seed=3)
        b = split_corpus(m, 10, 0.2, seed=3)
        ids = lambda part: [r.post.post_id for r in part]
        assert ids(a.train) == ids(b.train)
        assert ids(a.validation) == ids(b.validation)
        assert ids(a.test) == ids(b.test)
        c = split_corpus(m, 10, 0.2, seed=4)
        assert ids(a.test) != ids(c.test)

    def test_partition_property(self):
        m = self._manifest(37)
        split = split_corpus(m, 9, 0.25, seed=5)
        all_ids = sorted(r.post.post_id for r in m.records)
        split_ids = sorted(
            r.post.post_id for part in (split.train, split.validation, split.test) for r in part
        )
        assert split_ids == all_ids

    def test_size_errors(self):
        m = self._manifest(10)
        with pytest.raises(SizeError):
            split_corpus(m, 10, 0.2, seed=1)
        with pytest.raises(SizeError):
            split_corpus(m, 0, 0.2, seed=1)
        with pytest.raises(SizeError):
            split_corpus(m, 2, 1.0, seed=1)

    def test_class_counts_within_hypergeometric_support(self):
        # brute-force support check on corpora small enough to enumerate
        for n, test_size in [(8, 3), (10, 4), (12, 5)]:
            m = self._manifest(n)
            positives = {r.post.post_id for r in m.records if r.labels.hidden_economy}
            k = len(positives)
            support = {
                sum(1 for pid in combo if pid in positives)
                for combo in itertools.combinations([r.post.post_id for r in m.records], test_size)
            }
            for seed in range(10):
                split = split_corpus(m, test_size, 0.0, seed=seed)
                observed = sum(1 for r in split.test if r.labels.hidden_economy)
                assert observed in support
                assert max(0, test_size - (n - k)) <= observed <= min(test_size, k)


class TestSplitDirIO:
    def test_round_trip(self, tmp_path):
        m = CorpusManifest(records=[make_annotated(f"p{i}") for i in range(20)], seed=3)
        split = split_corpus(m, 5, 0.2, seed=3)
        out = tmp_path / "splits"
        write_split_dir(split, out)
        assert (out / "train.jsonl").exists()
        assert (out / "validation.jsonl").exists()
        assert (out / "test.jsonl").exists()
        back = read_split_dir(out)
        assert back.seed == 3
        assert [r.post.post_id for r in back.test] == [r.post.post_id for r in split.test]

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_split_dir(tmp_path)
