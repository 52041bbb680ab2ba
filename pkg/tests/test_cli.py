"""Command-line flows: config parsing, exit codes, artifact round trips."""

import re

import pytest
import yaml

from alzdetect.cli import UsageError, load_run_config, main

MODEL_SECTION = {
    "seq_len": 20, "embed_dim": 8, "pos_dim": 37, "conv_filters": 2,
    "conv_kernel": 3, "lstm_hidden": 3, "attention_dim": 3, "dense_units": 4,
    "dropout_rate": 0.0, "batch_size": 16, "max_epochs": 2, "patience": 5,
}

SYNTH_SECTION = {
    "n_participants": 24, "ad_fraction": 0.5, "embed_dim": 8, "seed": 0,
    "mean_length_ad": 14.0, "mean_length_ct": 22.0, "length_sd": 4.0,
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One synth-generated corpus shared by the flow tests."""
    root = tmp_path_factory.mktemp("cli")
    config = {
        "corpus_dir": str(root),
        "embeddings": str(root / "embeddings.txt"),
        "lexicons": str(root / "lexicons"),
        "output_dir": str(root),
        "seeds": [0],
        "split": {"seed": 0},
        "model": MODEL_SECTION,
        "synth": SYNTH_SECTION,
    }
    cfg_path = root / "run.yaml"
    cfg_path.write_text(yaml.safe_dump(config))
    assert main(["synth", str(cfg_path)]) == 0
    return root, cfg_path


def _write_config(path, **overrides):
    config = {
        "corpus_dir": ".", "embeddings": "e.txt", "lexicons": "lex",
        "seeds": [0], "model": dict(MODEL_SECTION), "synth": dict(SYNTH_SECTION),
    }
    config.update(overrides)
    path.write_text(yaml.safe_dump(config))
    return path


# ---------------------------------------------------------------------------
# config loading


def test_load_run_config_round_trip(tmp_path, workspace):
    _, cfg_path = workspace
    cfg = load_run_config(cfg_path)
    assert cfg.seeds == (0,)
    assert cfg.model.seq_len == 20
    assert cfg.synth.n_participants == 24
    assert cfg.split.seed == 0


def test_unknown_top_level_key_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("corpus_dir: x\nbogus: 1\n")
    with pytest.raises(UsageError):
        load_run_config(path)


def test_unknown_model_key_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("model:\n  hidden_size: 9\n")
    with pytest.raises(UsageError):
        load_run_config(path)


def test_unknown_split_and_synth_keys_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("split:\n  ratio: 0.8\n")
    with pytest.raises(UsageError):
        load_run_config(path)
    path.write_text("synth:\n  n_speakers: 5\n")
    with pytest.raises(UsageError):
        load_run_config(path)


def test_bad_model_value_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("model:\n  conv_kernel: 2\n")
    with pytest.raises(UsageError):
        load_run_config(path)


def test_empty_seed_list_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("seeds: []\n")
    with pytest.raises(UsageError):
        load_run_config(path)


def test_unknown_variant_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("variant: SUPER-LSTM\n")
    with pytest.raises(UsageError):
        load_run_config(path)


def test_empty_config_uses_defaults(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("")
    cfg = load_run_config(path)
    assert cfg.seeds == (0, 1, 2)
    assert cfg.model.seq_len == 73


# ---------------------------------------------------------------------------
# exit codes


def test_no_arguments_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_help_exits_zero():
    for command in ("stats", "ingest", "synth", "train", "eval",
                    "compare", "ablate", "predict"):
        with pytest.raises(SystemExit) as exc:
            main([command, "--help"])
        assert exc.value.code == 0


def test_config_error_exits_one(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    path.write_text("bogus: 1\n")
    assert main(["train", str(path)]) == 1
    assert "bogus" in capsys.readouterr().err


def test_missing_corpus_is_data_error(tmp_path, capsys):
    assert main(["stats", str(tmp_path / "nowhere")]) == 2
    assert "error:" in capsys.readouterr().err


def test_missing_embeddings_fails_fast(tmp_path, workspace):
    root, _ = workspace
    path = _write_config(tmp_path / "c.yaml",
                         corpus_dir=str(root),
                         embeddings=str(tmp_path / "missing.txt"),
                         lexicons=str(root / "lexicons"),
                         output_dir=str(tmp_path))
    assert main(["train", str(path)]) == 2
    assert not (tmp_path / "model.bin").exists()


def test_corrupt_model_file_is_data_error(tmp_path, workspace):
    root, cfg_path = workspace
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"not a model")
    assert main(["eval", str(cfg_path), "--model", str(bad)]) == 2


def test_divergent_training_exits_three(tmp_path, workspace):
    root, _ = workspace
    model = dict(MODEL_SECTION, optimizer="sgd", learning_rate=1e200)
    path = _write_config(tmp_path / "c.yaml",
                         corpus_dir=str(root),
                         embeddings=str(root / "embeddings.txt"),
                         lexicons=str(root / "lexicons"),
                         output_dir=str(tmp_path), model=model)
    assert main(["train", str(path)]) == 3


# ---------------------------------------------------------------------------
# command flows on the shared synthetic corpus


def test_synth_wrote_parseable_corpus(workspace, capsys):
    root, _ = workspace
    assert (root / "ad").is_dir() and (root / "ct").is_dir()
    assert main(["stats", str(root)]) == 0
    out = capsys.readouterr().out
    assert "participants" in out and "median words" in out


def test_ingest_writes_manifest(tmp_path, workspace, capsys):
    root, _ = workspace
    assert main(["ingest", str(root), "--output-dir", str(tmp_path)]) == 0
    manifest = tmp_path / "manifest.jsonl"
    assert manifest.exists()
    assert len(manifest.read_text().splitlines()) == 24


def test_output_dir_env_var_is_honored(tmp_path, workspace, monkeypatch, capsys):
    root, _ = workspace
    target = tmp_path / "from_env"
    monkeypatch.setenv("ALZDETECT_OUTPUT_DIR", str(target))
    assert main(["ingest", str(root)]) == 0
    assert (target / "manifest.jsonl").exists()


def test_train_eval_predict_flow(workspace, capsys):
    root, cfg_path = workspace
    assert main(["train", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "model ->" in out

    model_path = root / "model.bin"
    log_path = root / "training_log.csv"
    assert model_path.exists() and log_path.exists()
    log_lines = log_path.read_text().splitlines()
    assert log_lines[0] == "epoch,train_loss,val_loss,val_auc"
    assert 2 <= len(log_lines) <= MODEL_SECTION["max_epochs"] + 1

    assert main(["eval", str(cfg_path), "--model", str(model_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("Variant")
    assert (root / "eval.csv").exists()

    transcript = sorted((root / "ct").glob("*.cha"))[0]
    assert main(["predict", str(cfg_path), "--model", str(model_path),
                 str(transcript)]) == 0
    line = capsys.readouterr().out.strip()
    assert re.fullmatch(rf"{transcript.stem}\t0\.\d{{4}}\t(AD|CT)", line)


def test_compare_is_byte_deterministic(tmp_path, workspace, capsys):
    root, _ = workspace
    texts = []
    for run in ("x", "y"):
        out_dir = tmp_path / run
        path = _write_config(tmp_path / f"{run}.yaml",
                             corpus_dir=str(root),
                             embeddings=str(root / "embeddings.txt"),
                             lexicons=str(root / "lexicons"),
                             output_dir=str(out_dir))
        assert main(["compare", str(path)]) == 0
        texts.append((out_dir / "compare.csv").read_bytes())
    capsys.readouterr()
    assert texts[0] == texts[1]
    header = texts[0].decode().splitlines()[0]
    assert header.startswith("variant,seed,accuracy")
    rows = texts[0].decode().splitlines()
    assert len(rows) == 1 + 6 * 2   # header + (1 seed + mean) per variant


def test_ablate_writes_three_rows(tmp_path, workspace, capsys):
    root, _ = workspace
    out_dir = tmp_path / "ab"
    path = _write_config(tmp_path / "ab.yaml",
                         corpus_dir=str(root),
                         embeddings=str(root / "embeddings.txt"),
                         lexicons=str(root / "lexicons"),
                         output_dir=str(out_dir))
    assert main(["ablate", str(path)]) == 0
    capsys.readouterr()
    rows = (out_dir / "ablate.csv").read_text().splitlines()
    assert len(rows) == 1 + 3 * 2
    assert rows[1].startswith("No Psych.,")
