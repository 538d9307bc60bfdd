import json

import numpy as np
import pytest

from app.layers import QuantizedNetwork
from app.main import main
from app.models import PruneSchedule, TopologySpec, TrainConfig
from app.services import (
    generate_tables,
    init_model,
    load_csv,
    load_model,
    load_normalization,
    load_tables,
    save_config,
    save_model,
)

from conftest import conv_first_spec, sparse_layer


def run_json(capsys, *argv) -> dict:
    assert main([*argv, "--json"]) == 0
    return json.loads(capsys.readouterr().out)


def test_verify_three_neuron_model(capsys, three_neuron_path):
    assert main(["verify", "--model", str(three_neuron_path), "--samples", "64"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("OK: 64 samples agree over 1 of 1 layers")

    summary = run_json(capsys, "verify", "--model", str(three_neuron_path), "--style", "pipelined", "--seed", "5")
    assert summary["samples"] == 1000
    assert summary["style"] == "pipelined"
    assert summary["latency"] == 2
    assert summary["seed"] == 5


def test_verify_conv_first_model(capsys, tmp_path):
    path = save_model(init_model(conv_first_spec(), 1), tmp_path / "model.json")
    assert main(["verify", "--model", str(path), "--samples", "40"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("OK: 40 samples agree over 0 of 2 layers")
    assert lines[1] == "2 further layers agree with their truth tables"


def test_cost_report(capsys, config_dir):
    assert main(["cost", "--config", str(config_dir / "model_e.json")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].split()[:2] == ["0", "sparse_linear"]
    assert lines[1].split()[-1] == "640"
    assert lines[-1].startswith("total")

    cost = run_json(capsys, "cost", "--config", str(config_dir / "model_e.json"))
    assert [layer["luts"] for layer in cost["layers"][:3]] == [640, 640, 640]
    assert cost["total"] == pytest.approx(sum(layer["luts"] for layer in cost["layers"]))


def test_cost_from_model(capsys, three_neuron_path):
    cost = run_json(capsys, "cost", "--model", str(three_neuron_path))
    assert len(cost["layers"]) == 1
    assert cost["layers"][0]["neurons"] == 3


def test_emit_is_deterministic(capsys, tmp_path, three_neuron_path):
    first, second = tmp_path / "a", tmp_path / "b"
    summary = run_json(capsys, "emit", "--model", str(three_neuron_path), "--out", str(first))
    assert summary["files"][-2:] == ["LogicNetModule.v", "files.f"]
    assert summary["latency"] == 0
    assert main(["emit", "--model", str(three_neuron_path), "--out", str(second)]) == 0
    for name in summary["files"]:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_emit_pipelined(capsys, tmp_path, three_neuron_path):
    summary = run_json(
        capsys, "emit", "--model", str(three_neuron_path), "--out", str(tmp_path), "--style", "pipelined"
    )
    assert summary["style"] == "pipelined"
    assert summary["latency"] == 2
    assert "always @ (posedge clk)" in (tmp_path / "LogicNetModule.v").read_text()


def test_tables_command(capsys, tmp_path, three_neuron_path):
    summary = run_json(capsys, "tables", "--model", str(three_neuron_path), "--out", str(tmp_path))
    assert summary["layers"] == [
        {"layer": 0, "kind": "sparse_linear", "fan_in_bits": 3, "file": str(tmp_path / "layer0.json")}
    ]
    (tables,) = load_tables(tmp_path, 1)
    (expected,) = generate_tables(QuantizedNetwork(load_model(three_neuron_path)))
    assert tables.neurons == expected.neurons


@pytest.mark.parametrize(
    "argv",
    [
        ["verify"],
        ["cost"],
        ["tables", "--samples", "0"],
        ["train", "--seed", "1"],
    ],
)
def test_usage_errors(capsys, argv):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_argparse_errors_exit_with_one(capsys):
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["verify", "--style", "async"])
    assert info.value.code == 1


def test_bad_model_exits_with_two(tmp_path):
    broken = tmp_path / "model.json"
    broken.write_text('{"version": "1", "topology": ')
    assert main(["verify", "--model", str(broken)]) == 2
    assert main(["emit", "--model", str(tmp_path / "missing.json")]) == 2
    assert main(["cost", "--config", str(tmp_path / "missing.json")]) == 2


def write_rows(path, x, labels):
    lines = [",".join([f"f{i}" for i in range(x.shape[1])] + ["label"])]
    lines += [",".join([f"{v:.6f}" for v in row] + [str(label)]) for row, label in zip(x, labels)]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_train_then_verify_on_csv(capsys, tmp_path):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(120, 8))
    labels = (x[:, 0] > 0).astype(int) + (x[:, 1] > 0).astype(int)
    raw_train = x * 2.0 + 5.0
    data = write_rows(tmp_path / "rows.csv", raw_train, labels)
    spec = TopologySpec(
        layers=[sparse_layer(6, 3, 2, 2), sparse_layer(3, 2, 2, 2)], input_features=8, input_bit_width=2
    )
    config = save_config(
        spec,
        tmp_path / "config.json",
        TrainConfig(epochs=2, batch_size=16, test_fraction=0.25, schedule=PruneSchedule(strategy="apriori")),
    )
    out = tmp_path / "run"
    summary = run_json(capsys, "train", "--config", str(config), "--data-dir", str(data), "--out", str(out))
    assert summary["epochs"] == 2
    assert (out / "metrics.csv").read_text().count("\n") == 3
    assert load_model(out / "model.json").topology == spec
    assert (out / "normalization.json").exists()

    checked = run_json(capsys, "verify", "--model", str(out / "model.json"), "--data-dir", str(data), "--samples", "50")
    assert checked["samples"] == 100
    assert 0.0 <= checked["dataset_accuracy"] <= 1.0

    # a held-out file with a shifted mean is mapped with the training statistics
    held_out = write_rows(tmp_path / "held_out.csv", raw_train[:50] + 3.0, labels[:50])
    shifted = run_json(
        capsys, "verify", "--model", str(out / "model.json"), "--data-dir", str(held_out), "--samples", "50"
    )
    record = load_normalization(out / "normalization.json")
    raw = load_csv(held_out, "label", standardize=False)
    network = QuantizedNetwork(load_model(out / "model.json"))
    expected = float((network.predict(record.apply(raw.features)) == raw.labels).mean())
    assert shifted["dataset_accuracy"] == pytest.approx(expected)
    # the record undoes the training file's offset and scale, not only the min-max step
    assert 0.5 < record.apply(raw_train).mean() < 1.5
