import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ocon.dataset import (
    ARPABET_CODES,
    ColumnLayout,
    FeatureRecord,
    PhonemeLabel,
    SpeakerGroup,
    class_statistics,
    decode_filename,
    encode_filename,
    filter_usable,
    load_dataset,
    read_records_csv,
    write_records_csv,
)
from ocon.errors import (
    MalformedFilename,
    MalformedRow,
    MissingColumn,
    NonNumericSpeakerId,
    UnknownGroupChar,
    UnknownPhonemeCode,
)
from ocon.features import FeatureSetKind


def make_record(code="ae", group=SpeakerGroup.MAN, speaker=10, **overrides):
    values = {k: 1000.0 for k in FeatureRecord.__dataclass_fields__
              if k.startswith(("f0", "f1", "f2", "f3"))}
    values["f0_ss"] = 100.0
    values.update(overrides)
    return FeatureRecord(group, speaker, PhonemeLabel.from_code(code), **values)


class TestDecodeFilename:
    def test_man_example(self):
        group, speaker, phoneme = decode_filename("m10ae")
        assert group is SpeakerGroup.MAN
        assert speaker == 10
        assert phoneme == PhonemeLabel("ae", 0)

    def test_woman_example(self):
        group, speaker, phoneme = decode_filename("w49ih")
        assert group is SpeakerGroup.WOMAN
        assert speaker == 49
        assert phoneme == PhonemeLabel("ih", 6)

    def test_unknown_group_char(self):
        with pytest.raises(UnknownGroupChar):
            decode_filename("x10ae")

    def test_non_numeric_speaker(self):
        with pytest.raises(NonNumericSpeakerId):
            decode_filename("m1aae")

    def test_unknown_phoneme(self):
        with pytest.raises(UnknownPhonemeCode):
            decode_filename("m10zz")

    def test_wrong_length(self):
        with pytest.raises(MalformedFilename):
            decode_filename("m10aeh")

    def test_label_id_bijection(self):
        expected = {"ae": 0, "ah": 1, "aw": 2, "eh": 3, "er": 4, "ei": 5,
                    "ih": 6, "iy": 7, "oa": 8, "oo": 9, "uh": 10, "uw": 11}
        for code, label_id in expected.items():
            assert PhonemeLabel.from_code(code).label_id == label_id
            assert PhonemeLabel.from_id(label_id).arpabet == code

    def test_roundtrip_all_valid_names(self):
        # all 4 groups x 99 speakers x 12 phonemes
        for group, speaker, code in itertools.product(
                SpeakerGroup, range(1, 100), ARPABET_CODES):
            phoneme = PhonemeLabel.from_code(code)
            name = encode_filename(group, speaker, phoneme)
            assert decode_filename(name) == (group, speaker, phoneme)


def write_dat(tmp_path, rows, header_lines=0):
    path = tmp_path / "sample.dat"
    lines = ["header junk"] * header_lines + rows
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def simple_layout():
    # filename + 13 consecutive numeric columns in canonical key order
    from ocon.dataset import FEATURE_KEYS
    return ColumnLayout(columns={k: i + 1 for i, k in enumerate(FEATURE_KEYS)})


def row_for(name, values):
    return name + " " + " ".join(str(v) for v in values)


class TestLoadDataset:
    def test_row_count_preserved(self, tmp_path):
        rows = [row_for("m01ae", [100] + [500] * 12),
                row_for("w02ih", [200] + [0] * 12)]   # zeros kept, not filtered
        records = load_dataset(write_dat(tmp_path, rows), simple_layout())
        assert len(records) == 2
        assert records[1].f1_10 == 0.0

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.dat"
        path.write_text("")
        assert load_dataset(str(path), simple_layout()) == []

    def test_non_numeric_cell(self, tmp_path):
        rows = [row_for("m01ae", [100] + [500] * 11 + ["oops"])]
        with pytest.raises(MalformedRow) as err:
            load_dataset(write_dat(tmp_path, rows), simple_layout())
        assert err.value.line_no == 1

    def test_negative_value_rejected(self, tmp_path):
        rows = [row_for("m01ae", [100, -5] + [500] * 11)]
        with pytest.raises(MalformedRow):
            load_dataset(write_dat(tmp_path, rows), simple_layout())

    def test_missing_column(self, tmp_path):
        rows = [row_for("m01ae", [100] * 5)]
        with pytest.raises(MissingColumn):
            load_dataset(write_dat(tmp_path, rows), simple_layout())

    def test_skip_rows_and_comma_delimiting(self, tmp_path):
        layout = ColumnLayout(columns=simple_layout().columns, skip_rows=2)
        rows = ["m01ae," + ",".join(["100"] + ["500"] * 12)]
        records = load_dataset(write_dat(tmp_path, rows, header_lines=2), layout)
        assert len(records) == 1
        assert records[0].f0_ss == 100.0

    def test_bad_filename_reported_with_line(self, tmp_path):
        rows = [row_for("m01ae", [100] + [500] * 12),
                row_for("z01ae", [100] + [500] * 12)]
        with pytest.raises(MalformedRow) as err:
            load_dataset(write_dat(tmp_path, rows), simple_layout())
        assert err.value.line_no == 2

    def test_default_layout_matches_public_distribution(self):
        layout = ColumnLayout.hgcw_bigdata()
        assert layout.skip_rows == 43
        assert layout.columns["f0_ss"] == 2
        assert layout.columns["f1_ss"] == 3
        assert layout.columns["f1_10"] == 6
        assert layout.columns["f3_50"] == 20
        assert layout.columns["f2_80"] == 28

    def test_layout_file_roundtrip(self, tmp_path):
        layout = ColumnLayout.hgcw_bigdata()
        path = tmp_path / "layout.cfg"
        layout.to_file(str(path))
        assert ColumnLayout.from_file(str(path)) == layout


class TestFilterUsable:
    def test_partition_property(self):
        records = [make_record(), make_record(f2_50=0.0), make_record(f0_ss=0.0)]
        kept, dropped = filter_usable(records, FeatureSetKind.TT12)
        assert len(kept) + len(dropped) == len(records)
        assert set(map(id, kept)).isdisjoint(map(id, dropped))

    def test_zero_timetrack_kept_for_ss_set(self):
        # f2@50% failure only matters to the time-tracks set
        rec = make_record(f2_50=0.0)
        kept, _ = filter_usable([rec], FeatureSetKind.SS3)
        assert kept == [rec]
        kept, dropped = filter_usable([rec], FeatureSetKind.TT12)
        assert dropped == [rec]

    def test_zero_f0_dropped_everywhere(self):
        rec = make_record(f0_ss=0.0)
        for kind in FeatureSetKind:
            _, dropped = filter_usable([rec], kind)
            assert dropped == [rec]

    @given(st.lists(st.sampled_from([0.0, 250.0, 1200.0]), min_size=13, max_size=13))
    def test_partition_for_random_zero_patterns(self, values):
        from ocon.dataset import FEATURE_KEYS
        rec = make_record(**dict(zip(FEATURE_KEYS, values)))
        for kind in FeatureSetKind:
            kept, dropped = filter_usable([rec], kind)
            assert len(kept) + len(dropped) == 1
            expected_kept = all(rec.value(k) > 0 for k in kind.required_keys)
            assert bool(kept) == expected_kept


class TestClassStatistics:
    def test_counts_and_totals(self):
        records = [make_record("ae"), make_record("ae", group=SpeakerGroup.BOY),
                   make_record("ih", group=SpeakerGroup.GIRL)]
        stats = class_statistics(records)
        assert stats.count(0, SpeakerGroup.MAN) == 1
        assert stats.count(0, SpeakerGroup.BOY) == 1
        assert stats.phoneme_total(0) == 2
        assert stats.group_total(SpeakerGroup.GIRL) == 1
        assert stats.total == 3

    def test_empty_input(self):
        stats = class_statistics([])
        assert stats.total == 0
        assert all(stats.phoneme_total(i) == 0 for i in range(12))

    def test_row_sums_match_cells(self, synth_corpus):
        stats = class_statistics(synth_corpus)
        for label_id in range(12):
            assert stats.phoneme_total(label_id) == sum(stats.counts[label_id])
        assert stats.total == sum(stats.phoneme_total(i) for i in range(12))

    def test_format_table_mentions_every_code(self):
        text = class_statistics([make_record()]).format_table()
        for code in ARPABET_CODES:
            assert code in text


class TestRecordsCsv:
    def test_roundtrip_exact(self, tmp_path, synth_corpus):
        path = tmp_path / "records.csv"
        subset = synth_corpus[:50]
        write_records_csv(subset, str(path))
        back = read_records_csv(str(path))
        assert back == subset


def test_synthetic_full_corpus_shape(tmp_path):
    # the default synthetic corpus mirrors the real table's 1668 raw rows
    from ocon.synth import write_synth_dat
    path = str(tmp_path / "synth.dat")
    write_synth_dat(path, seed=0, zero_rate=0.04)
    records = load_dataset(path)  # default public-distribution layout
    assert len(records) == 1668
    kept, dropped = filter_usable(records, FeatureSetKind.TT12)
    assert len(kept) + len(dropped) == 1668
    assert dropped  # zero_rate injected some extraction failures
