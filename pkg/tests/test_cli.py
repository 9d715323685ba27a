import io

import pytest

from cptree import load_model, read_sections
from cptree.cli import main


def run_cli(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_report(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split("\t")
    rows = [dict(zip(header, line.split("\t"))) for line in lines[1:]]
    return header, rows


@pytest.fixture()
def streams(tmp_path):
    train = tmp_path / "train.txt"
    test = tmp_path / "test.txt"
    write_lines(
        train,
        ["A | c0", "B | c1", "A | c0", "B | c1", "A | c0 c1:0.5", "B | c1 c0:0.25"],
    )
    write_lines(test, ["A | c0", "B | c1", "A | c0", "B | c1"])
    return train, test


def test_train_eval_round_trip(streams, tmp_path):
    train, test = streams
    model = tmp_path / "m.bin"
    report = tmp_path / "r.tsv"
    code, _ = run_cli("train", "--mode", "cpt-online", "--train", str(train),
                      "--model", str(model), "--eta", "0.3")
    assert code == 0 and model.exists()
    code, _ = run_cli("eval", "--model", str(model), "--test", str(test),
                      "--report", str(report))
    assert code == 0
    header, rows = read_report(report)
    assert header == ["mode", "examples", "sq_loss", "ci", "equivalent",
                      "updates_per_example", "seconds"]
    assert rows[0]["mode"] == "cpt-online"
    assert rows[0]["examples"] == "4"
    assert 0.0 <= float(rows[0]["sq_loss"]) <= 1.0


def test_small_stream_builds_the_forced_structure(streams, tmp_path):
    train, _ = streams
    small = tmp_path / "small.txt"
    write_lines(small, ["A | f", "B | g", "A | f"])
    model = tmp_path / "m.bin"
    assert run_cli("train", "--mode", "cpt-online", "--train", str(small),
                   "--model", str(model))[0] == 0
    tree = load_model(model).estimator
    assert tree.n_labels == 2
    assert sum(1 for node in tree.nodes if not node.is_leaf) == 1
    code, text = run_cli("inspect", "--model", str(model))
    assert code == 0
    assert "labels: 2" in text and "max depth: 1" in text


def test_training_is_deterministic(streams, tmp_path):
    train, _ = streams
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    for path in (a, b):
        assert run_cli("train", "--mode", "cpt-random", "--train", str(train),
                       "--model", str(path), "--seed", "7")[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_reports_are_deterministic_up_to_timing(streams, tmp_path):
    train, test = streams
    model = tmp_path / "m.bin"
    run_cli("train", "--mode", "cpt-online", "--train", str(train),
            "--model", str(model))
    reports = []
    for name in ("r1.tsv", "r2.tsv"):
        path = tmp_path / name
        run_cli("eval", "--model", str(model), "--test", str(test),
                "--report", str(path))
        _, rows = read_report(path)
        reports.append([{k: v for k, v in row.items() if k != "seconds"}
                        for row in rows])
    assert reports[0] == reports[1]


def test_second_pass_freezes_structure_but_not_weights(streams, tmp_path):
    train, _ = streams
    one, two = tmp_path / "p1.bin", tmp_path / "p2.bin"
    run_cli("train", "--mode", "cpt-online", "--train", str(train),
            "--model", str(one), "--passes", "1")
    run_cli("train", "--mode", "cpt-online", "--train", str(train),
            "--model", str(two), "--passes", "2")
    _, _, structure_one, weights_one = read_sections(one)
    _, _, structure_two, weights_two = read_sections(two)
    assert structure_one == structure_two
    assert weights_one != weights_two


def test_oaa_model_holds_one_regressor_per_label(tmp_path):
    train = tmp_path / "train.txt"
    labels = [f"y{i}" for i in range(9)]
    write_lines(train, [f"{y} | f{i % 3}" for i, y in enumerate(labels)])
    model = tmp_path / "m.bin"
    run_cli("train", "--mode", "oaa", "--train", str(train), "--model", str(model))
    assert len(load_model(model).estimator.regressors) == 9


def test_compare_emits_one_row_per_mode(streams, tmp_path):
    train, test = streams
    report = tmp_path / "cmp.tsv"
    code, _ = run_cli("compare", "--modes", "oaa,cpt-online,table",
                      "--train", str(train), "--test", str(test),
                      "--report", str(report))
    assert code == 0
    _, rows = read_report(report)
    assert [row["mode"] for row in rows] == ["oaa", "cpt-online", "table"]


def test_compare_single_mode(streams, tmp_path):
    _, test = streams
    report = tmp_path / "cmp.tsv"
    assert run_cli("compare", "--modes", "table", "--test", str(test),
                   "--report", str(report))[0] == 0
    _, rows = read_report(report)
    assert len(rows) == 1


def test_compare_update_costs_on_a_hundred_label_stream(tmp_path):
    # All 100 labels appear early, then repeats dominate: the flat baseline
    # spends roughly one update per known label per example while the tree
    # stays within ceil(log2 100) + 2 = 9.
    labels = [f"y{i}" for i in range(100)]
    lines = [f"{y} | f{i % 7}" for i, y in enumerate(labels)]
    lines += [f"{labels[i % 100]} | f{i % 7}" for i in range(1900)]
    stream = tmp_path / "stream.txt"
    write_lines(stream, lines)
    report = tmp_path / "cmp.tsv"
    code, _ = run_cli("compare", "--modes", "oaa,cpt-online", "--alpha", "1.0",
                      "--test", str(stream), "--report", str(report))
    assert code == 0
    _, rows = read_report(report)
    by_mode = {row["mode"]: row for row in rows}
    assert 90.0 <= float(by_mode["oaa"]["updates_per_example"]) <= 100.0
    assert float(by_mode["cpt-online"]["updates_per_example"]) <= 9.0


def test_tradeoff_values(tmp_path):
    report = tmp_path / "curve.tsv"
    code, text = run_cli("tradeoff", "--n", "16", "--k-list", "2,4,16",
                         "--report", str(report))
    assert code == 0
    rows = [line.split("\t") for line in report.read_text().strip().splitlines()[1:]]
    assert [r[0] for r in rows] == ["2", "4", "16"]
    assert [int(r[1]) for r in rows] == [4, 6, 15]
    assert [float(r[2]) for r in rows] == [16.0, 9.0, 3.515625]


def test_tradeoff_rejects_bad_fanout():
    assert run_cli("tradeoff", "--n", "16", "--k-list", "3")[0] == 1


def test_inspect_balanced_eight_labels(tmp_path):
    train = tmp_path / "train.txt"
    write_lines(train, [f"y{i} | f{i}" for i in range(8)])
    model = tmp_path / "m.bin"
    run_cli("train", "--mode", "cpt-fixed", "--train", str(train),
            "--model", str(model))
    code, text = run_cli("inspect", "--model", str(model))
    assert code == 0
    assert "max depth: 3" in text
    assert "depth bound: 5.0000 [OK]" in text


def test_inspect_single_label_model(tmp_path):
    train = tmp_path / "train.txt"
    write_lines(train, ["only | f"])
    model = tmp_path / "m.bin"
    run_cli("train", "--mode", "cpt-online", "--train", str(train),
            "--model", str(model))
    code, text = run_cli("inspect", "--model", str(model))
    assert code == 0 and "max depth: 0" in text


def test_inspect_rejects_non_tree_models(streams, tmp_path):
    train, _ = streams
    model = tmp_path / "m.bin"
    run_cli("train", "--mode", "table", "--train", str(train), "--model", str(model))
    assert run_cli("inspect", "--model", str(model))[0] == 1


def test_frozen_eval_is_no_better_on_novel_labels(streams, tmp_path):
    train, _ = streams
    novel = tmp_path / "novel.txt"
    write_lines(novel, [f"new{i % 5} | c{i % 2}" for i in range(60)])
    model = tmp_path / "m.bin"
    run_cli("train", "--mode", "cpt-online", "--train", str(train),
            "--model", str(model))
    frozen_report = tmp_path / "frozen.tsv"
    online_report = tmp_path / "online.tsv"
    run_cli("eval", "--model", str(model), "--test", str(novel),
            "--report", str(frozen_report), "--freeze")
    run_cli("eval", "--model", str(model), "--test", str(novel),
            "--report", str(online_report))
    _, frozen_rows = read_report(frozen_report)
    _, online_rows = read_report(online_report)
    assert float(frozen_rows[0]["sq_loss"]) >= float(online_rows[0]["sq_loss"])
    assert float(frozen_rows[0]["sq_loss"]) == 1.0  # never learns the new labels


def test_mode_mismatch_is_a_config_error(streams, tmp_path, capsys):
    train, test = streams
    model = tmp_path / "m.bin"
    run_cli("train", "--mode", "oaa", "--train", str(train), "--model", str(model))
    assert run_cli("eval", "--model", str(model), "--test", str(test),
                   "--mode", "cpt-online")[0] == 1
    assert "mode" in capsys.readouterr().err


def test_empty_test_stream_is_an_error(streams, tmp_path, capsys):
    train, _ = streams
    empty = tmp_path / "empty.txt"
    empty.write_text("", encoding="utf-8")
    model = tmp_path / "m.bin"
    run_cli("train", "--mode", "cpt-online", "--train", str(train),
            "--model", str(model))
    assert run_cli("eval", "--model", str(model), "--test", str(empty))[0] == 1
    assert "empty" in capsys.readouterr().err


def test_parse_errors_carry_line_numbers(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    write_lines(bad, ["ok | f", "broken line without pipe"])
    model = tmp_path / "m.bin"
    assert run_cli("train", "--mode", "cpt-online", "--train", str(bad),
                   "--model", str(model))[0] == 1
    assert "line 2" in capsys.readouterr().err


def test_missing_input_file_is_reported(tmp_path, capsys):
    assert run_cli("train", "--mode", "cpt-online", "--train",
                   str(tmp_path / "nope.txt"), "--model",
                   str(tmp_path / "m.bin"))[0] == 1
    assert "error" in capsys.readouterr().err


def test_kway_requires_fanout(streams, tmp_path):
    train, _ = streams
    assert run_cli("train", "--mode", "kway", "--train", str(train),
                   "--model", str(tmp_path / "m.bin"))[0] == 1
    assert run_cli("train", "--mode", "kway", "--train", str(train),
                   "--model", str(tmp_path / "m.bin"), "--k", "2")[0] == 0


def test_synth_emits_parseable_stream(tmp_path):
    out_path = tmp_path / "synth.txt"
    code, text = run_cli("synth", "--task", "clustered", "--contexts", "16",
                         "--labels", "32", "--examples", "500",
                         "--seed", "3", "--out", str(out_path))
    assert code == 0
    lines = out_path.read_text().strip().splitlines()
    assert len(lines) == 500
    model = tmp_path / "m.bin"
    assert run_cli("train", "--mode", "cpt-online", "--train", str(out_path),
                   "--model", str(model))[0] == 0
    assert load_model(model).estimator.n_labels > 10


def test_synth_is_deterministic(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for path in (a, b):
        run_cli("synth", "--examples", "200", "--seed", "11", "--out", str(path))
    assert a.read_bytes() == b.read_bytes()
