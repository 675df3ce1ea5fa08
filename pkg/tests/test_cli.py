from __future__ import annotations

import csv
import json
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from traitstat.cli import main
from traitstat.ingest import load_manifest
from traitstat.pipeline import (
    RunConfig,
    compare_fits,
    fetch_dataset,
    file_sha256,
    reproduce,
    resolve_path,
)
from traitstat.published import EQUATIONS
from traitstat.regress import ols_fit
from traitstat.variables import FACTOR_SETS, TRAITS


@pytest.fixture(autouse=True)
def _empty_cache(tmp_path, monkeypatch):
    # never pick up a real download from the user's cache
    monkeypatch.setenv("TRAITSTAT_CACHE", str(tmp_path / "cache"))


def data_flags(paths, names=("sample1", "sample2", "sample3")):
    out = []
    for n in names:
        out += ["--data", f"{n}={paths[n]}"]
    return out


def test_usage_errors_exit_1(capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["regress"]) == 1  # --factors missing
    assert main(["regress", "--factors", "biological", "--trait", "Q"]) == 1
    assert main(["score", "--data", "nonsense"]) == 1
    err = capsys.readouterr().err
    assert "error:" in err


def test_missing_data_exit_2(capsys):
    assert main(["score", "--dataset", "sample1"]) == 2
    assert "traitstat fetch" in capsys.readouterr().err
    assert main(["regress", "--factors", "family"]) == 2


def test_bad_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\n1\t2\n")
    assert main(["score", "--dataset", "sample1", "--data", f"sample1={bad}"]) == 2
    assert "header lacks" in capsys.readouterr().err


def test_score(fixture_paths, tmp_path):
    out = tmp_path / "scores.csv"
    assert main(["score", "--dataset", "sample1", "--keying", "eq1", "--out", str(out)] + data_flags(fixture_paths)) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 1000
    assert rows[0]["source"] == "sample1" and rows[0]["row"] == "0"
    assert all(r["E"] == "" or 10 <= int(r["E"]) <= 50 for r in rows)
    assert main(["score"] + data_flags(fixture_paths)) == 1  # needs exactly one dataset


def test_score_auto_keying_is_logged(fixture_paths, tmp_path, caplog):
    out = tmp_path / "s.csv"
    with caplog.at_level("INFO", logger="traitstat"):
        assert main(["score", "-v", "--dataset", "sample1", "--out", str(out)] + data_flags(fixture_paths)) == 0
    assert "keying auto-selected on sample1" in caplog.text


def test_validate(fixture_paths, capsys):
    assert main(["validate", "--dataset", "sample2"] + data_flags(fixture_paths)) == 0
    out = capsys.readouterr().out
    assert out.startswith("sample2\trows 1000\tnon-numeric 1")
    assert main(["validate", "--strict", "--dataset", "sample2"] + data_flags(fixture_paths)) == 2


def test_describe(fixture_paths, capsys):
    assert main(["describe", "--keying", "eq1", "--format", "csv", "--dataset", "sample3"] + data_flags(fixture_paths)) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == '"Trait","N","Mean","SD"' and len(lines) == 6
    assert main(["describe", "--by-country", "--keying", "eq1", "--dataset", "sample3"] + data_flags(fixture_paths)) == 0
    text = capsys.readouterr().out
    assert "Per-country trait aggregates" in text and "NONE" not in text


def test_regress(fixture_paths, tmp_path):
    out = tmp_path / "bio.csv"
    argv = ["regress", "--factors", "biological", "--trait", "E", "--keying", "eq1", "--format", "csv", "--out", str(out)]
    assert main(argv + data_flags(fixture_paths)) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0][:6] == ["Model", "Term", "B", "SE", "T", "P"]
    assert [r[1] for r in rows[1:]] == ["Constant", "X_growth", "X_gender", "X_hand"]
    assert rows[1][8] == "(3)" and int(rows[1][9]) > 1000  # samples 1 and 2 merged


def test_regress_family_rejects_sample1_only(fixture_paths):
    # sample 1 has engnat only; every other family column is all-zero and the design is singular
    assert main(["regress", "--factors", "family", "--dataset", "sample1", "--keying", "eq1"] + data_flags(fixture_paths)) == 2


def test_tree(fixture_paths, tmp_path, capsys):
    argv = ["tree", "--factors", "culture", "--trait", "O", "--max-depth", "3", "--keying", "eq1", "--out", str(tmp_path)]
    assert main(argv + data_flags(fixture_paths)) == 0
    tree = json.loads((tmp_path / "tree_culture_O_sample2.json").read_text())
    assert tree["params"]["max_depth"] == 3 and tree["target"] == "O"
    assert (tmp_path / "tree_culture_O_sample2.dot").read_text().startswith("digraph")
    assert main(["tree", "--factors", "culture", "--min-child", "500", "--min-parent", "100"] + data_flags(fixture_paths)) == 1


def test_config_precedence(fixture_paths, tmp_path):
    cfg = tmp_path / "run.toml"
    lines = ['keying = "codebook"', "max_depth = 1", f'out = "{tmp_path / "from-config"}"', "[data]"]
    lines += [f'{n} = "{p}"' for n, p in fixture_paths.items()]
    cfg.write_text("\n".join(lines) + "\n")
    assert main(["tree", "--config", str(cfg), "--factors", "biological", "--trait", "E"]) == 0
    tree = json.loads((tmp_path / "from-config" / "tree_biological_E_sample1-sample2.json").read_text())
    assert tree["params"]["max_depth"] == 1 and tree["metadata"]["keying"] == "codebook"
    # flags win over the file
    argv = ["tree", "--config", str(cfg), "--factors", "biological", "--trait", "E", "--max-depth", "2",
            "--keying", "eq1", "--out", str(tmp_path / "flags")]
    assert main(argv) == 0
    tree = json.loads((tmp_path / "flags" / "tree_biological_E_sample1-sample2.json").read_text())
    assert tree["params"]["max_depth"] == 2 and tree["metadata"]["keying"] == "eq1"
    cfg.write_text("colour = 1\n")
    assert main(["tree", "--config", str(cfg), "--factors", "biological"]) == 1
    assert main(["tree", "--config", str(tmp_path / "absent.toml"), "--factors", "biological"]) == 1


def _manifest_copy(tmp_path, url, sha=""):
    text = (resources.files("traitstat") / "data" / "manifests" / "sample1.toml").read_text()
    lines = []
    for line in text.splitlines():
        if line.startswith("url ="):
            line = f'url = "{url}"'
        elif line.startswith("sha256 ="):
            line = f'sha256 = "{sha}"'
        lines.append(line)
    path = tmp_path / "sample1-local.toml"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_fetch_with_pinned_checksum(fixture_paths, tmp_path, capsys):
    src = fixture_paths["sample1"]
    man = _manifest_copy(tmp_path, src.as_uri(), file_sha256(src))
    cache = tmp_path / "dl"
    assert main(["fetch", "--dataset", "sample1", "--manifest", f"sample1={man}", "--cache", str(cache)]) == 0
    got = cache / "sample1.tsv"
    assert got.read_bytes() == src.read_bytes()
    assert capsys.readouterr().out.strip() == f"sample1\t{got}"
    assert resolve_path("sample1", RunConfig(cache=str(cache), manifests={"sample1": str(man)})) == got
    bad = _manifest_copy(tmp_path, src.as_uri(), "0" * 64)
    assert main(["fetch", "--dataset", "sample1", "--manifest", f"sample1={bad}", "--cache", str(tmp_path / "x")]) == 2
    assert not list((tmp_path / "x").glob("*.part"))


def test_fetch_trust_on_first_use(fixture_paths, tmp_path):
    src = tmp_path / "upstream.tsv"
    src.write_bytes(fixture_paths["sample1"].read_bytes())
    manifest = load_manifest(_manifest_copy(tmp_path, src.as_uri()))
    cache = tmp_path / "dl"
    path = fetch_dataset(manifest, cache)
    assert (cache / "sample1.tsv.sha256").read_text().strip() == file_sha256(path)
    assert fetch_dataset(manifest, cache) == path  # verified cached copy
    path.write_text("tampered")
    src.write_text("changed upstream")
    with pytest.raises(Exception, match="checksum mismatch"):
        fetch_dataset(manifest, cache)


def test_reproduce_with_only_sample1(fixture_paths, tmp_path, capsys):
    out = tmp_path / "bundle"
    argv = ["reproduce", "--out", str(out)] + data_flags(fixture_paths, ("sample1",))
    assert main(argv) == 0
    err = capsys.readouterr().err
    assert "SKIPPED family models and trees" in err and "SKIPPED culture models and trees" in err
    names = sorted(p.name for p in out.iterdir())
    manifest = json.loads((out / next(n for n in names if n.startswith("manifest_"))).read_text())
    assert {s["item"] for s in manifest["skipped"]} == {
        "dataset sample2", "dataset sample3", "family models and trees", "culture models and trees"}
    assert sum(n.startswith("fit_biological_") for n in names) == 5
    assert not any(n.startswith(("fit_family", "fit_culture")) for n in names)


def test_reproduce_full_and_thread_invariant(fixture_paths, tmp_path):
    bundles = {}
    for threads in (1, 4):
        cfg = RunConfig(data={n: str(p) for n, p in fixture_paths.items()}, out=str(tmp_path / f"t{threads}"),
                        threads=threads)
        bundles[threads] = reproduce(cfg)
    a, b = bundles[1], bundles[4]
    assert a.files == b.files
    names = list(a.files)
    assert sum(n.startswith("fit_") for n in names) == 15
    assert sum(n.startswith("tree_") and n.endswith(".json") for n in names) == 15
    assert sum(n.startswith("tree_") and n.endswith(".dot") for n in names) == 15
    h = a.run["config_hash"]
    for stem in ("comparison", "trees", "countries_sample3", "boxplot-CA-US_sample3", "describe_sample3"):
        assert f"{stem}_{h}.csv" in names
    on_disk = {p.name: p.read_text() for p in (tmp_path / "t4").iterdir()}
    assert on_disk == a.files
    fit = json.loads(a.files[f"fit_biological_E_sample1-sample2_{h}.json"])
    assert fit["run"]["config_hash"] == h and fit["metadata"]["datasets"] == ["sample1", "sample2"]


def test_config_hash_tracks_settings(fixture_paths, tmp_path):
    data = {"sample1": str(fixture_paths["sample1"])}
    h1 = reproduce(RunConfig(data=data, out=str(tmp_path / "a"))).run["config_hash"]
    h2 = reproduce(RunConfig(data=data, out=str(tmp_path / "b"), threads=3)).run["config_hash"]
    h3 = reproduce(RunConfig(data=data, out=str(tmp_path / "c"), missing_policy="drop-row")).run["config_hash"]
    assert h1 == h2 != h3


def _planted_fit(factor_set, trait, seed=0, n=20000):
    rng = np.random.default_rng(seed)
    _, coefs = EQUATIONS[(factor_set, trait)]
    preds = FACTOR_SETS[factor_set]
    X = rng.integers(1, 5, (n, len(preds))).astype(float)
    y = coefs["const"] + X @ np.array([coefs[p] for p in preds]) + rng.normal(0, 0.5, n)
    fit = ols_fit(X, y, preds)
    return type(fit)(**{**fit.__dict__, "metadata": {"factor_set": factor_set, "trait": trait}})


def test_comparison_flags_planted_deltas():
    fits = [_planted_fit("biological", t, i) for i, t in enumerate(TRAITS)]
    doc = compare_fits(fits)
    coef_rows = [r for r in doc.rows if r[3] != "F"]
    assert len(coef_rows) == 20
    assert all(r[10] == "ok" for r in coef_rows)
    shifted = dict(EQUATIONS)
    eq, coefs = shifted[("biological", "N")]
    shifted[("biological", "N")] = (eq, {**coefs, "gender": coefs["gender"] + 0.4})
    flagged = [r for r in compare_fits(fits, reference=shifted).rows if r[10] != "ok"]
    assert [(r[1], r[3]) for r in flagged] == [("N", "gender")]
    assert flagged[0][10] == "DELTA" and abs(flagged[0][7].value + 0.4) < 0.05
    # listed inconsistencies are marked as expected rather than as failures
    fam = _planted_fit("family", "E")
    shifted[("family", "E")] = (8, {**EQUATIONS[("family", "E")][1], "const": 29.408})
    row = next(r for r in compare_fits([fam], reference=shifted).rows if r[3] == "const")
    assert row[10] == "EXPECTED"


def test_biological_table_labels_in_comparison():
    doc = compare_fits([_planted_fit("biological", "E")])
    assert [r[4] for r in doc.rows[:4]] == ["Constant", "gender", "hand", "growth"]
    assert doc.rows[4][3] == "F" and doc.rows[4][10] == "ok"


def test_module_entry_point(fixture_paths):
    proc = subprocess.run([sys.executable, "-m", "traitstat", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("traitstat ")
