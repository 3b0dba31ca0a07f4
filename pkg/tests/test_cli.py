import json

import pytest

from strbarcode.cli import SUMMARY_FIELDS, bench_table2, bench_tsv, main


@pytest.fixture
def rand_fa(tmp_path):
    path = tmp_path / "r.fa"
    assert main(["random", "12", "800", "--seed", "5", "-o", str(path)]) == 0
    return path


def test_random_byte_identical(tmp_path):
    a, b = tmp_path / "a.fa", tmp_path / "b.fa"
    main(["random", "2", "5", "--seed", "1", "-o", str(a)])
    main(["random", "2", "5", "--seed", "1", "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_random_shape(tmp_path):
    from strbarcode.sequence_model import read_fasta

    path = tmp_path / "r.fa"
    main(["random", "10", "10000", "--seed", "7", "-o", str(path)])
    inst = read_fasta(path)
    assert inst.n == 10 and all(len(s) == 10_000 for s in inst)


def test_random_invalid(capsys):
    assert main(["random", "0", "5"]) == 2


def test_select_and_verify(rand_fa, tmp_path, capsys):
    out = tmp_path / "rep.json"
    assert main(["select", str(rand_fa), "-o", str(out)]) == 0
    summary = capsys.readouterr().out
    assert all(f in summary for f in SUMMARY_FIELDS)
    report = json.loads(out.read_text())
    assert set(report) >= {"config", "n", "pool_stats", "distinguishers", "barcodes", "uncovered_pairs", "iterations", "wall_times"}
    assert "threads" not in report["config"]
    d = report["distinguishers"][0]
    assert set(d) >= {"id", "text", "length", "gc", "tm", "perfect_ids"}
    assert main(["verify", str(rand_fa), str(out)]) == 0
    assert "PASS" in capsys.readouterr().out


def test_verify_detects_edit(rand_fa, tmp_path, capsys):
    out = tmp_path / "rep.json"
    main(["select", str(rand_fa), "-o", str(out)])
    report = json.loads(out.read_text())
    t = report["distinguishers"][0]["text"]
    report["distinguishers"][0]["text"] = t[:-1] + ("a" if t[-1] != "a" else "c")
    out.write_text(json.dumps(report))
    assert main(["verify", str(rand_fa), str(out)]) == 1


def test_verify_missing_name(rand_fa, tmp_path):
    out = tmp_path / "rep.json"
    main(["select", str(rand_fa), "-o", str(out)])
    report = json.loads(out.read_text())
    report["sequences"][0] = "nope"
    out.write_text(json.dumps(report))
    assert main(["verify", str(rand_fa), str(out)]) == 2


def test_identical_records_exit_1(tmp_path, capsys):
    fa = tmp_path / "d.fa"
    fa.write_text(">a\nacgtacgt\n>b\nacgtacgt\n>c\nttttgggg\n")
    out = tmp_path / "d.json"
    assert main(["select", str(fa), "-o", str(out)]) == 1
    report = json.loads(out.read_text())
    assert report["uncovered_pairs"] == [{"i": 0, "j": 1, "count": 0, "impossible": True}]
    assert main(["verify", str(fa), str(out)]) == 0


def test_bad_input_exit_2(tmp_path):
    fa = tmp_path / "bad.fa"
    fa.write_text(">a\nacxt\n")
    assert main(["select", str(fa)]) == 2
    assert main(["select", str(tmp_path / "missing.fa")]) == 2
    good = tmp_path / "g.fa"
    good.write_text(">a\nacgt\n>b\nttgt\n")
    assert main(["select", str(good), "--min-length", "5", "--max-length", "3"]) == 2
    assert main(["select", str(good), "--sources", "zz"]) == 2
    with pytest.raises(SystemExit) as e:
        main(["select", str(good), "--format", "xml"])
    assert e.value.code == 2


def test_constraints_and_sources(rand_fa, tmp_path, capsys):
    out = tmp_path / "c.json"
    code = main([
        "select", str(rand_fa), "--min-length", "6", "--max-length", "10", "--min-edit", "3",
        "--gc-min", "0.3", "--gc-max", "0.7", "--sources", "2", "-o", str(out),
    ])
    assert code in (0, 1)
    report = json.loads(out.read_text())
    assert report["config"]["sources"] == ["r1", "r2"]
    for d in report["distinguishers"]:
        assert 6 <= d["length"] <= 10 and 0.3 <= d["gc"] <= 0.7
    assert main(["verify", str(rand_fa), str(out)]) == 0


def test_sources_by_name(rand_fa, tmp_path):
    out = tmp_path / "s.json"
    main(["select", str(rand_fa), "--sources", "r3,r1", "-o", str(out)])
    assert json.loads(out.read_text())["config"]["sources"] == ["r1", "r3"]


def test_forbidden(tmp_path):
    fa = tmp_path / "x.fa"
    fa.write_text(">a\nacgtacgg\n>b\nttttcccc\n>c\ngggaaatt\n")
    contam = tmp_path / "f.fa"
    contam.write_text(">bug\ncgta\n")
    out = tmp_path / "x.json"
    main(["select", str(fa), "--forbidden", str(contam), "-o", str(out)])
    report = json.loads(out.read_text())
    assert report["config"]["forbidden"] == ["bug"]
    assert all(d["text"] not in "cgta" for d in report["distinguishers"])


def test_tsv_format(rand_fa, tmp_path, capsys):
    out = tmp_path / "b.tsv"
    assert main(["select", str(rand_fa), "--format", "tsv", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("sequence\t")
    assert len(lines) == 13
    assert main(["verify", str(rand_fa), str(out)]) == 0


def test_reproducible_threads(rand_fa, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["select", str(rand_fa), "--reproducible", "--threads", "1", "-o", str(a)])
    main(["select", str(rand_fa), "--reproducible", "--threads", "4", "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_bench_unknown_suite(capsys):
    assert main(["bench", "table9"]) == 2


def test_bench_tsv_columns():
    rows = bench_table2(seed=1, seeds=2, length=500, cells=[(10, 1)])
    header, line = bench_tsv(rows).splitlines()
    assert header.split("\t") == ["suite", "cell", "seed_count", "mean", "stddev", "wall_time"]
    assert line.split("\t")[:3] == ["table2-desk", "n=10,r=1", "2"]


def test_bench_theorem1(tmp_path):
    out = tmp_path / "t.tsv"
    assert main(["bench", "theorem1", "--seeds", "1", "-o", str(out)]) == 0
    rows = [ln.split("\t") for ln in out.read_text().splitlines()[1:]]
    k8 = next(r for r in rows if "k=8," in r[1])
    assert abs(float(k8[3]) - 0.141) < 0.02


def test_synth(tmp_path):
    out = tmp_path / "s.fa"
    assert main(["synth", "-o", str(out)]) == 0
    assert out.read_text().count(">") == 12


def test_hidden_oracle(tmp_path, capsys):
    fa = tmp_path / "o.fa"
    fa.write_text(">a\naacc\n>b\naagg\n>c\nttcc\n>d\nttgg\n")
    assert main(["oracle", str(fa)]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["exact_minimum"] == 2
    assert result["greedy"] >= 2
