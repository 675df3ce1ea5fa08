from __future__ import annotations

import csv
from importlib import resources

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from traitstat._toml import load_toml
from traitstat.ingest import ManifestError, RawRecord, builtin_manifest
from traitstat.scoring import (
    KEYINGS,
    KeyTable,
    TraitScores,
    builtin_key_table,
    load_key_table,
    score_record,
    score_table,
    score_trait,
)
from traitstat.variables import TRAITS

ALT = tuple("+-+-+-+-+-")

items10 = st.lists(st.integers(1, 5), min_size=10, max_size=10)
keys10 = st.lists(st.sampled_from("+-"), min_size=10, max_size=10)


def test_examples():
    assert score_trait([3] * 10, ALT) == 30
    assert score_trait([3] * 10, tuple("++++++++++")) == 30
    assert score_trait([5, 1] * 5, ALT) == 50
    # pairs: 4+4, 3+1, 1+5, 2+3, 4+1
    assert score_trait((4, 2, 3, 5, 1, 1, 2, 3, 4, 5), ALT) == 28
    assert score_trait([3, 3, 0, 3, 3, 3, 3, 3, 3, 3], ALT) is None
    assert score_trait([3] * 9 + [6], ALT) is None


def test_unicode_minus_key():
    assert score_trait([1] * 10, ["−"] * 10) == 50


def test_length_mismatch():
    with pytest.raises(ValueError):
        score_trait([3] * 9, ALT[:9])
    with pytest.raises(ValueError):
        score_trait([3] * 10, ALT[:9])


@given(items10, keys10)
def test_range(items, keys):
    assert 10 <= score_trait(items, keys) <= 50


@given(items10, keys10)
def test_reversal_symmetry(items, keys):
    assert score_trait([6 - x for x in items], keys) == 60 - score_trait(items, keys)


@given(items10, keys10)
def test_keying_flip(items, keys):
    flipped = ["-" if k == "+" else "+" for k in keys]
    assert score_trait(items, flipped) == 60 - score_trait(items, keys)


@given(items10, keys10, st.randoms(use_true_random=False))
def test_permutation_invariance(items, keys, rnd):
    pairs = list(zip(items, keys))
    rnd.shuffle(pairs)
    assert score_trait([p[0] for p in pairs], [p[1] for p in pairs]) == score_trait(items, keys)


def _record(manifest, value="3", **overrides):
    cells = {c: value for c in manifest.all_item_columns}
    cells.update(overrides)
    return RawRecord(cells, manifest.dataset_id, 0)


@pytest.mark.parametrize("keying", KEYINGS)
def test_score_record_midpoint(keying):
    m = builtin_manifest("sample1")
    kt = builtin_key_table(keying, m)
    assert score_record(_record(m), kt, m) == TraitScores(30, 30, 30, 30, 30)


def test_one_missing_item_only_affects_its_trait():
    m = builtin_manifest("sample1")
    s = score_record(_record(m, E4="0"), builtin_key_table("codebook", m), m)
    assert s.e is None and s.as_tuple()[1:] == (30, 30, 30, 30)
    assert s["N"] == 30


def test_score_record_missing_column():
    m = builtin_manifest("sample1")
    rec = _record(m)
    del rec.cells["O10"]
    with pytest.raises(ManifestError, match="O10"):
        score_record(rec, builtin_key_table("eq1", m), m)


def _spreadsheet_scores(path, signs, prefix):
    """Row-0 scores straight from the file with the csv module and the raw sign strings."""
    with open(path, newline="") as fh:
        row = next(csv.DictReader(fh, delimiter="\t"))
    out = []
    for t in TRAITS:
        total = 0
        for i, s in enumerate(signs[t].strip(), start=1):
            x = int(row[f"{prefix[t]}{i}"])
            if not 1 <= x <= 5:
                total = None
                break
            total += x if s == "+" else 6 - x
        out.append(total)
    return tuple(out)


@pytest.mark.parametrize("keying", KEYINGS)
def test_row_zero_matches_spreadsheet(fixture_tables, fixture_paths, keying):
    table = fixture_tables["sample1"]
    m = table.manifest
    with resources.as_file(resources.files("traitstat") / "data" / "keys" / f"{keying}.toml") as path:
        signs = load_toml(path)["keys"]
    expected = _spreadsheet_scores(fixture_paths["sample1"], signs, {t: t for t in TRAITS})
    assert score_record(table.record(0), builtin_key_table(keying, m), m).as_tuple() == expected


@pytest.mark.parametrize("name", ["sample1", "sample2", "sample3"])
def test_score_table_agrees_with_score_record(fixture_tables, name):
    table = fixture_tables[name]
    kt = builtin_key_table("codebook", table.manifest)
    arr = score_table(table, kt)
    assert arr.shape == (len(table), 5)
    present = arr[~np.isnan(arr)]
    assert ((present >= 10) & (present <= 50)).all()
    for i in range(0, len(table), 37):
        expected = [np.nan if v is None else v for v in score_record(table.record(i), kt).as_tuple()]
        np.testing.assert_array_equal(arr[i], expected)


def test_sample3_null_rows_are_missing(fixture_tables):
    table = fixture_tables["sample3"]
    arr = score_table(table, builtin_key_table("eq1", table.manifest))
    assert np.isnan(arr[2]).all()


def test_key_table_validation(tmp_path):
    m = builtin_manifest("sample1")
    with pytest.raises(ManifestError):
        KeyTable.from_signs("bad", {t: "+-+-+" for t in TRAITS}, m)
    with pytest.raises(ManifestError):
        KeyTable.from_signs("bad", {t: "+-+-+-+-+-" for t in TRAITS[:4]}, m)
    with pytest.raises(ManifestError):
        builtin_key_table("nope", m)
    path = tmp_path / "all_plus.toml"
    path.write_text('keying_id = "plus"\n[keys]\n' + "".join(f'{t} = "++++++++++"\n' for t in TRAITS))
    kt = load_key_table(path, m)
    assert kt.keying_id == "plus" and kt.keys("A") == ("+",) * 10
    assert kt.columns("A") == m.item_columns["A"]
