"""Command-line behavior: exit codes, output formats, and reproducibility.

Commands run in-process through main(argv) so stdout/stderr can be captured
exactly.  The corpus under tests/data/ is checked in; the evaluate
regression pins the byte-exact records produced by the first verified run
of the pinned flag set.
"""

import json
from pathlib import Path

import pytest

from citevec.cli import main
from citevec.model import load_model

FIXTURE_TSV = Path(__file__).parent / "data" / "cli_fixture.tsv"

# pinned regression flags for the checked-in corpus
TRAIN_FLAGS = [
    "--dim", "8", "--window", "6", "--negative", "3", "--iterations", "10",
    "--learning-rate", "0.05", "--seed", "13",
    "--test-fraction", "0.25", "--split-seed", "7",
]
SPLIT_FLAGS = ["--test-fraction", "0.25", "--split-seed", "7"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """Model trained once on the checked-in corpus with the pinned flags."""
    path = tmp_path_factory.mktemp("cli") / "model.dcv"
    code = main(["train", str(FIXTURE_TSV), str(path)] + TRAIN_FLAGS)
    assert code == 0
    return path


class TestSynth:
    def test_deterministic_output(self, tmp_path, capsys):
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        flags = ["--n-topics", "2", "--docs-per-topic", "4", "--clique-size", "2", "--seed", "5"]
        assert run(capsys, "synth", a, *flags)[0] == 0
        assert run(capsys, "synth", b, *flags)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_fixture_corpus_matches_generator(self, tmp_path, capsys):
        # guards the checked-in file against silent edits
        out = tmp_path / "regen.tsv"
        code, _, _ = run(
            capsys, "synth", out,
            "--n-topics", "2", "--docs-per-topic", "6", "--clique-size", "3",
            "--vocab-per-topic", "12", "--noise-rate", "0.1", "--seed", "41",
        )
        assert code == 0
        assert out.read_bytes() == FIXTURE_TSV.read_bytes()

    def test_manifest_written(self, tmp_path, capsys):
        out = tmp_path / "c.tsv"
        run(capsys, "synth", out, "--seed", "3")
        manifest = json.loads((tmp_path / "c.tsv.manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["seed"] == 3
        assert manifest["config"]["n_topics"] == 2
        assert manifest["finished_at"] is not None


class TestTrain:
    def test_progress_records_on_stdout(self, tmp_path, capsys):
        out = tmp_path / "m.dcv"
        code, stdout, stderr = run(
            capsys, "train", FIXTURE_TSV, out,
            "--dim", "4", "--iterations", "3", "--negative", "2", "--window", "6",
        )
        assert code == 0
        lines = stdout.strip().splitlines()
        assert len(lines) == 3
        assert all(line.startswith("epoch=") and " loss=" in line for line in lines)
        assert out.exists()

    def test_identical_flags_identical_model_bytes(self, tmp_path, capsys):
        a, b = tmp_path / "a.dcv", tmp_path / "b.dcv"
        for path in (a, b):
            code, _, _ = run(capsys, "train", FIXTURE_TSV, path, *TRAIN_FLAGS)
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_manifest_checksum_matches_corpus(self, tmp_path, capsys):
        import hashlib
        out = tmp_path / "m.dcv"
        run(capsys, "train", FIXTURE_TSV, out, "--dim", "4", "--iterations", "1")
        manifest = json.loads((tmp_path / "m.dcv.manifest.json").read_text())
        assert manifest["input_checksum"] == hashlib.sha256(FIXTURE_TSV.read_bytes()).hexdigest()
        assert manifest["config"]["dim"] == 4
        assert manifest["config"]["negative"] == 5  # desk-scale default
        assert manifest["config"]["iterations"] == 1

    def test_config_error_exits_nonzero(self, tmp_path, capsys):
        code, stdout, stderr = run(capsys, "train", FIXTURE_TSV, tmp_path / "m.dcv", "--dim", "0")
        assert code == 1
        assert "error" in stderr
        assert stdout == ""

    def test_parse_error_exits_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "bad.tsv"
        bad.write_text("only-an-id-no-tab\n")
        code, _, stderr = run(capsys, "train", bad, tmp_path / "m.dcv")
        assert code == 1
        assert "error" in stderr

    def test_split_holdout_reported(self, tmp_path, capsys):
        out = tmp_path / "m.dcv"
        code, _, stderr = run(
            capsys, "train", FIXTURE_TSV, out,
            "--dim", "4", "--iterations", "1", *SPLIT_FLAGS,
        )
        assert code == 0
        assert "holding out 3 docs" in stderr


class TestRecommend:
    def test_markers_never_recommended(self, trained, tmp_path, capsys):
        text = tmp_path / "q.txt"
        text.write_text("w0t2 w0t5 w0t1 [[t0c0]] [[t0c1]]")
        code, stdout, _ = run(capsys, "recommend", trained, "--text-file", text, "--k", "10")
        assert code == 0
        ids = [line.split("\t")[1] for line in stdout.strip().splitlines()]
        assert "t0c0" not in ids and "t0c1" not in ids

    def test_output_format(self, trained, tmp_path, capsys):
        text = tmp_path / "q.txt"
        text.write_text("w0t2 w0t5 [[t0c0]]")
        code, stdout, _ = run(capsys, "recommend", trained, "--text-file", text, "--k", "3")
        lines = stdout.strip().splitlines()
        assert len(lines) == 3
        for rank, line in enumerate(lines, start=1):
            fields = line.split("\t")
            assert fields[0] == str(rank)
            float(fields[2])  # parses

    def test_k_one_gives_one_line(self, trained, tmp_path, capsys):
        text = tmp_path / "q.txt"
        text.write_text("w0t2 [[t0c0]]")
        _, stdout, _ = run(capsys, "recommend", trained, "--text-file", text, "--k", "1")
        assert len(stdout.strip().splitlines()) == 1

    def test_case_three_ignores_markers(self, trained, tmp_path, capsys):
        plain = tmp_path / "plain.txt"
        marked = tmp_path / "marked.txt"
        plain.write_text("w0t2 w0t5 w0t1")
        marked.write_text("w0t2 w0t5 [[t0c0]] w0t1 [[t1c0]]")
        _, out_plain, _ = run(
            capsys, "recommend", trained, "--text-file", plain, "--case", "3", "--no-exclude"
        )
        _, out_marked, _ = run(
            capsys, "recommend", trained, "--text-file", marked, "--case", "3", "--no-exclude"
        )
        assert out_plain == out_marked

    def test_unknown_tokens_only_is_an_error(self, trained, tmp_path, capsys):
        text = tmp_path / "q.txt"
        text.write_text("zzz qqq xxx")
        code, stdout, stderr = run(capsys, "recommend", trained, "--text-file", text)
        assert code == 1
        assert "unknown" in stderr
        assert stdout == ""

    def test_empty_input_is_an_error(self, trained, tmp_path, capsys):
        text = tmp_path / "q.txt"
        text.write_text("   \n")
        code, _, stderr = run(capsys, "recommend", trained, "--text-file", text)
        assert code == 1

    def test_missing_model_exits_nonzero(self, tmp_path, capsys):
        text = tmp_path / "q.txt"
        text.write_text("w0t2")
        code, _, stderr = run(capsys, "recommend", tmp_path / "nope.dcv", "--text-file", text)
        assert code == 1


class TestEvaluate:
    def test_regression_baseline_exact(self, trained, capsys):
        # recorded from the first verified run of the pinned flag set
        code, stdout, _ = run(
            capsys, "evaluate", trained, FIXTURE_TSV, *SPLIT_FLAGS, "--case", "1", "--k", "3"
        )
        assert code == 0
        assert stdout == (
            "case=1 metric=recall value=0.8888888888888888 n=9\n"
            "case=1 metric=map value=0.8888888888888888 n=9\n"
            "case=1 metric=ndcg value=0.8888888888888888 n=9\n"
        )

    def test_case_two_keep_prob_one_equals_case_one(self, trained, capsys):
        _, base, _ = run(
            capsys, "evaluate", trained, FIXTURE_TSV, *SPLIT_FLAGS, "--case", "1"
        )
        _, degenerate, _ = run(
            capsys, "evaluate", trained, FIXTURE_TSV, *SPLIT_FLAGS,
            "--case", "2", "--keep-prob", "1.0",
        )
        assert degenerate.replace("case=2", "case=1") == base

    def test_bad_fraction_exits_nonzero(self, trained, capsys):
        code, _, stderr = run(
            capsys, "evaluate", trained, FIXTURE_TSV, "--test-fraction", "1.5"
        )
        assert code == 1
        assert "fraction" in stderr

    def test_split_spec_required(self, trained, capsys):
        code, _, stderr = run(capsys, "evaluate", trained, FIXTURE_TSV)
        assert code == 1

    def test_explicit_test_ids(self, trained, capsys):
        code, stdout, _ = run(
            capsys, "evaluate", trained, FIXTURE_TSV,
            "--test-ids", "t0d0,t1d0", "--case", "1",
        )
        assert code == 0
        assert "n=6" in stdout  # two held-out docs, three citations each


class TestExport:
    def test_line_count_and_prefix(self, trained, tmp_path, capsys):
        out = tmp_path / "vecs.txt"
        code, _, _ = run(capsys, "export", trained, out, "--which", "doc-in")
        assert code == 0
        lines = out.read_text().splitlines()
        n, dim = lines[0].split()
        assert int(dim) == 8
        assert len(lines) == int(n) + 1
        assert all(line.startswith("doc:") for line in lines[1:])

    def test_missing_model_exits_nonzero(self, tmp_path, capsys):
        code, _, stderr = run(capsys, "export", tmp_path / "nope.dcv", tmp_path / "v.txt")
        assert code == 1

    def test_export_manifest(self, trained, tmp_path, capsys):
        out = tmp_path / "vecs.txt"
        run(capsys, "export", trained, out, "--which", "word-in")
        manifest = json.loads((tmp_path / "vecs.txt.manifest.json").read_text())
        assert manifest["config"] == {"which": "word_in"}
        assert manifest["output_checksum"] is not None


class TestModelFile:
    def test_trained_model_round_trips(self, trained):
        model = load_model(trained)
        assert model.config.dim == 8
        assert model.config.negative == 3
        assert model.trained_epochs == 10
