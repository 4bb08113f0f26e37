import numpy as np
import pytest

from driftvec.cli import main, parse_boundaries
from driftvec.runs import read_manifest
from driftvec.sgns import load_embedding_text


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """synth -> build-vocab -> slice, shared by the command tests."""
    root = tmp_path_factory.mktemp("pipeline")
    corpus_dir = root / "corpus"
    assert run(["synth", "--out", corpus_dir, "--vocab-size", "30",
                "--slices", "3", "--tokens-per-slice", "1200",
                "--doc-length", "10", "--seed", "1",
                "--change", "w0029:1:0:1:abrupt"]) == 0
    vocab_path = root / "vocab.tsv"
    assert run(["build-vocab", "--manifest", corpus_dir / "manifest.tsv",
                "--boundaries", "2000:2003", "--max-size", "30",
                "--out", vocab_path]) == 0
    assert run(["slice", "--manifest", corpus_dir / "manifest.tsv",
                "--vocab", vocab_path, "--boundaries", "2000:2003",
                "--holdout", "0.2", "--seed", "0",
                "--out-prefix", root / "data"]) == 0
    return root


def train_args(root, outdir, model="isg", extra=()):
    return ["train", "--model", model, "--out", outdir,
            "--vocab", root / "vocab.tsv",
            "--train", root / "data.train.json",
            "--valid", root / "data.valid.json",
            "--test", root / "data.test.json",
            "--dim", "4", "--epochs", "2", "--batch-size", "256",
            "--window", "2", "--seed", "3", *extra]


def test_parse_boundaries_year_range():
    bounds = parse_boundaries("1987:2007")
    assert len(bounds) == 21
    assert bounds[0].year == 1987 and bounds[-1].year == 2007


def test_parse_boundaries_comma_list():
    bounds = parse_boundaries("2000-01-01,2000-06-01,2001-01-01")
    assert len(bounds) == 3 and bounds[1].month == 6


def test_pipeline_files_exist(pipeline):
    assert (pipeline / "vocab.tsv").exists()
    for part in ("train", "valid", "test"):
        assert (pipeline / f"data.{part}.json").exists()


def test_missing_manifest_is_data_error(tmp_path, capsys):
    code = run(["build-vocab", "--manifest", tmp_path / "nope.tsv",
                "--boundaries", "2000:2002", "--out", tmp_path / "v.tsv"])
    assert code == 2
    err = capsys.readouterr().err
    assert "nope.tsv" in err


def test_missing_document_named_in_error(tmp_path, capsys):
    manifest = tmp_path / "m.tsv"
    manifest.write_text("2000-01-01\tmissing_doc.txt\n")
    code = run(["build-vocab", "--manifest", manifest,
                "--boundaries", "2000:2002", "--out", tmp_path / "v.tsv"])
    assert code == 2
    assert "missing_doc.txt" in capsys.readouterr().err


def test_usage_error_exits_one(capsys):
    assert run(["train"]) == 1  # missing required data arguments
    assert "vocabulary file" in capsys.readouterr().err


def test_unknown_subcommand_exits_one():
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 1


def test_build_vocab_warns_when_max_size_exceeds_distinct(pipeline, tmp_path):
    with pytest.warns(UserWarning, match="exceeds"):
        code = run(["build-vocab",
                    "--manifest", pipeline / "corpus" / "manifest.tsv",
                    "--boundaries", "2000:2003", "--max-size", "50000",
                    "--out", tmp_path / "v.tsv"])
    assert code == 0


class TestTrainEvalDrift:
    def test_isg_run_and_artifacts(self, pipeline, tmp_path):
        outdir = tmp_path / "run_isg"
        assert run(train_args(pipeline, outdir)) == 0
        manifest = read_manifest(outdir)
        assert manifest["model"] == "isg"
        assert manifest["direction"] == "forward"
        assert manifest["T"] == 3
        assert set(manifest["inputs"]) == {"vocab", "train", "valid", "test"}
        for t in range(3):
            assert (outdir / "isg" / f"t{t}.vec").exists()
            assert (outdir / "isg" / f"t{t}.ctx.vec").exists()
            assert len(manifest["traces"][str(t)]["lpos"]) == 2
            assert len(manifest["traces"][str(t)]["holdout_lpos"]) == 2

    def test_rerun_bitwise_identical(self, pipeline, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert run(train_args(pipeline, a)) == 0
        assert run(train_args(pipeline, b)) == 0
        for t in range(3):
            assert (a / "isg" / f"t{t}.vec").read_bytes() == \
                (b / "isg" / f"t{t}.vec").read_bytes()

    def test_eval_prints_report(self, pipeline, tmp_path, capsys):
        outdir = tmp_path / "run_eval"
        assert run(train_args(pipeline, outdir)) == 0
        capsys.readouterr()
        assert run(["eval", "--run", outdir, "--split", "valid"]) == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0] == "slice\tlpos"
        assert lines[-1].startswith("mean\t-")
        assert len(lines) == 1 + 3 + 1

    def test_eval_missing_checkpoints(self, pipeline, tmp_path, capsys):
        outdir = tmp_path / "run_broken"
        assert run(train_args(pipeline, outdir)) == 0
        (outdir / "isg" / "t1.vec").unlink()
        assert run(["eval", "--run", outdir, "--split", "valid"]) == 2

    def test_drift_outputs(self, pipeline, tmp_path, capsys):
        outdir = tmp_path / "run_drift"
        assert run(train_args(pipeline, outdir)) == 0
        drift_dir = tmp_path / "drift_out"
        assert run(["drift", "--run", outdir, "--t0", "0", "--bins", "5",
                    "--out", drift_dir]) == 0
        drift_lines = (drift_dir / "drift.csv").read_text().splitlines()
        assert drift_lines[0] == "word,t,drift"
        # reference-slice rows are identically zero
        zero_rows = [l for l in drift_lines[1:] if l.split(",")[1] == "0"]
        assert zero_rows and all(float(l.split(",")[2]) == 0.0 for l in zero_rows)
        assert (drift_dir / "histogram.csv").exists()
        report = (drift_dir / "drift_report.txt").read_text()
        assert "directedness" in report and "stability_fraction" in report

    def test_single_bin_histogram_counts_vocabulary(self, pipeline, tmp_path):
        outdir = tmp_path / "run_bins"
        assert run(train_args(pipeline, outdir)) == 0
        drift_dir = tmp_path / "bins_out"
        assert run(["drift", "--run", outdir, "--bins", "1",
                    "--out", drift_dir]) == 0
        words, _ = load_embedding_text(outdir / "isg" / "t0.vec")
        lines = (drift_dir / "histogram.csv").read_text().splitlines()[1:]
        assert len(lines) == 2  # one bin, two target slices
        for line in lines:
            assert int(line.split(",")[-1]) == len(words)

    def test_export_round_trip(self, pipeline, tmp_path):
        outdir = tmp_path / "run_export"
        assert run(train_args(pipeline, outdir)) == 0
        dest = tmp_path / "slice2.vec"
        assert run(["export", "--run", outdir, "--slice", "2",
                    "--role", "word", "--out", dest]) == 0
        assert dest.read_bytes() == (outdir / "isg" / "t2.vec").read_bytes()

    def test_dsg_run_writes_posteriors(self, pipeline, tmp_path):
        outdir = tmp_path / "run_dsg"
        assert run(train_args(pipeline, outdir, model="dsg")) == 0
        for t in range(3):
            for suffix in ("mean.vec", "var.vec", "ctx.mean.vec", "ctx.var.vec"):
                assert (outdir / "dsg" / f"t{t}.{suffix}").exists()
        _, var = load_embedding_text(outdir / "dsg" / "t0.var.vec")
        assert (var > 0).all()

    def test_dbe_run_with_regularizer_records_beta(self, pipeline, tmp_path):
        outdir = tmp_path / "run_dbe"
        assert run(train_args(pipeline, outdir, model="dbe",
                              extra=["--reg-alpha", "0.5", "--reg-beta", "mean"])) == 0
        manifest = read_manifest(outdir)
        assert manifest["config"]["reg"]["enabled"] is True
        assert len(manifest["reg_beta"]) == 2          # one row per epoch
        assert len(manifest["reg_beta"][0]) == 3       # one beta per slice
        assert (outdir / "dbe" / "context.vec").exists()
        assert (outdir / "dbe" / "adam_ctx.txt").exists()

    def test_backward_external_direction(self, pipeline, tmp_path):
        from driftvec.corpus import load_vocabulary
        from driftvec.sgns import save_embedding_text
        vocab = load_vocabulary(pipeline / "vocab.tsv")
        pre = tmp_path / "pre.vec"
        rng = np.random.default_rng(0)
        save_embedding_text(pre, list(vocab.words),
                            rng.normal(size=(vocab.size, 4)))
        outdir = tmp_path / "run_back"
        assert run(train_args(pipeline, outdir, model="dsg",
                              extra=["--init", "backward-external",
                                     "--pretrained", pre])) == 0
        manifest = read_manifest(outdir)
        assert manifest["direction"] == "backward"
        assert manifest["trained_order"] == [2, 1, 0]
        assert "pretrained" in manifest["inputs"]


def test_subsample_command(pipeline, tmp_path, capsys):
    out = tmp_path / "sub.json"
    assert run(["subsample", "--corpus", pipeline / "data.train.json",
                "--fraction", "0.5", "--seed", "1", "--out", out]) == 0
    assert out.exists()
    assert "kept" in capsys.readouterr().out


def test_config_file_with_flag_override(pipeline, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(f"""
[run]
model = isg
out = {tmp_path / 'cfg_run'}
[data]
vocab = {pipeline / 'vocab.tsv'}
train = {pipeline / 'data.train.json'}
[train]
dim = 4
epochs = 1
window = 2
batch_size = 256
seed = 5
""")
    assert run(["train", "--config", cfg, "--epochs", "2"]) == 0
    manifest = read_manifest(tmp_path / "cfg_run")
    assert manifest["config"]["train"]["epochs"] == 2   # flag wins
    assert manifest["config"]["train"]["seed"] == 5     # file value kept
