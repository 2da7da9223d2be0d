import json

import pytest

from codeorigin.cli import main
from codeorigin.corpus import save_dataset
from codeorigin.pipeline import read_jsonl
from codeorigin.synthetic import make_corpus

from .conftest import stub_command

LANGS = ("Alpha", "Beta", "Gamma")


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    save_dataset(make_corpus(LANGS, per_language=60, seed=1), d / "train.jsonl")
    save_dataset(make_corpus(("Delta",), per_language=40, seed=2, prefix="t"), d / "test.jsonl")
    (d / "cfg.json").write_text(json.dumps({
        "train": {"epochs": 4},
        "task_a": {"lolo": {"languages": list(LANGS), "dominant": "Alpha",
                            "cap_with_dominant": 60, "cap_without_dominant": 60},
                   "calibration": {"difficult_size": 5}},
    }))
    return d


def run(work, *args):
    return main(["--config", str(work / "cfg.json"), *map(str, args)])


class TestDataCommands:
    def test_stats(self, work, capsys):
        assert run(work, "stats", work / "train.jsonl", "--task", "A") == 0
        out = capsys.readouterr().out
        assert '"count": 180' in out

    def test_normalize(self, work, tmp_path):
        assert run(work, "normalize", work / "train.jsonl", tmp_path / "n.jsonl", "--augment") == 0
        a = read_jsonl(tmp_path / "n.jsonl")
        assert run(work, "normalize", work / "train.jsonl", tmp_path / "m.jsonl", "--augment") == 0
        assert a == read_jsonl(tmp_path / "m.jsonl") and len(a) == 180

    def test_langid(self, tmp_path, work):
        save_dataset([], tmp_path / "empty.jsonl")
        (tmp_path / "one.jsonl").write_text(json.dumps({"id": "x", "code": "def f():\n    return [i for i in x]"}) + "\n")
        assert run(work, "langid", tmp_path / "one.jsonl", "--out", tmp_path / "o.jsonl") == 0
        assert read_jsonl(tmp_path / "o.jsonl")[0]["detected_language"] == "Python"


@pytest.fixture(scope="module")
def lolo(work):
    assert run(work, "lolo", work / "train.jsonl", "--out-dir", work / "lolo") == 0
    return work / "lolo"


class TestTaskAPipeline:
    def test_lolo_outputs(self, lolo):
        assert len(read_jsonl(lolo / "oof.jsonl")) == 180
        assert len(json.loads((lolo / "folds.json").read_text())) == 3
        assert all(any((lolo / f"fold{k}").iterdir()) for k in range(3))

    def test_hardset_calibrate_predict_evaluate(self, work, lolo, capsys):
        models = [lolo / f"fold{k}" for k in range(3)]
        assert run(work, "hardset", work / "train.jsonl", "--out", work / "hard.jsonl") == 0
        assert run(work, "calibrate", "--oof", lolo / "oof.jsonl", "--difficult", work / "hard.jsonl",
                   "--model", *models, "--out", work / "t.json") == 0
        ts = json.loads((work / "t.json").read_text())
        assert ts["tau_global"] == pytest.approx((ts["tau_oof"] + ts["tau_diff"]) / 2)
        assert run(work, "predict", work / "test.jsonl", "--task", "A", "--model", *models,
                   "--thresholds", work / "t.json", "--dump-chunks", work / "chunks.json",
                   "--out", work / "pred.jsonl") == 0
        preds = read_jsonl(work / "pred.jsonl")
        assert len(preds) == 40 and set(preds[0]) == {"id", "score", "label"}
        assert len(json.loads((work / "chunks.json").read_text())) == 40
        capsys.readouterr()
        assert run(work, "evaluate", work / "pred.jsonl", work / "test.jsonl", "--task", "A",
                   "--json", work / "report.json") == 0
        assert "macro-F1" in capsys.readouterr().out
        assert json.loads((work / "report.json").read_text())["macro_f1"] > 0.5

    def test_lolo_with_external_scorer(self, work, tmp_path):
        cmd = stub_command("length") + " {fold} {held_out} {seed}"
        assert run(work, "lolo", work / "train.jsonl", "--out-dir", tmp_path, "--scorer-cmd", cmd) == 0
        assert len(read_jsonl(tmp_path / "oof.jsonl")) == 180

    def test_predict_external(self, work, tmp_path):
        assert run(work, "predict", work / "test.jsonl", "--task", "A", "--scorer-cmd", stub_command("echo"),
                   "--out", tmp_path / "p.jsonl") == 0
        assert {r["label"] for r in read_jsonl(tmp_path / "p.jsonl")} == {1}

    def test_calibrate_needs_scores(self, work, lolo):
        with pytest.raises(SystemExit):
            run(work, "calibrate", "--oof", lolo / "oof.jsonl", "--difficult", work / "train.jsonl",
                "--out", work / "x.json")


class TestTaskB:
    def test_train_and_predict(self, work, tmp_path):
        rows = [{"id": f"b{i}", "code": f"int v{i} = {i};" * (i % 7 + 1), "label": i % 11} for i in range(110)]
        (tmp_path / "b.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))
        assert run(work, "train-baseline", tmp_path / "b.jsonl", "--task", "B",
                   "--weights", "effective_number", "--out", tmp_path / "m") == 0
        assert run(work, "predict", tmp_path / "b.jsonl", "--task", "B", "--model", tmp_path / "m",
                   "--out", tmp_path / "p.jsonl") == 0
        preds = read_jsonl(tmp_path / "p.jsonl")
        assert len(preds) == 110 and all(0 <= p["label"] < 11 for p in preds)

    def test_external_ensemble(self, work, tmp_path):
        (tmp_path / "b.jsonl").write_text(json.dumps({"id": "x", "code": "int a;", "label": 3}) + "\n")
        assert run(work, "predict", tmp_path / "b.jsonl", "--task", "B",
                   "--scorer-cmd", stub_command("echo") + " {seed}", "--out", tmp_path / "p.jsonl") == 0
        assert read_jsonl(tmp_path / "p.jsonl")[0]["score"] == pytest.approx(1 / 11)


class TestArgs:
    def test_missing_command(self):
        with pytest.raises(SystemExit):
            main([])

    def test_unknown_config_key(self, tmp_path, work):
        (tmp_path / "bad.json").write_text('{"nope": 1}')
        with pytest.raises(KeyError):
            main(["--config", str(tmp_path / "bad.json"), "stats", str(work / "train.jsonl"), "--task", "A"])
