import json

import numpy as np
import pytest
from pydantic import ValidationError

from app.errors import InvalidSpecError, ModelFormatError
from app.models import LayerSpec, ModelFile, TopologySpec, TrainConfig, conv_output_size
from app.quant import QuantizerParams
from app.services import (
    DegenerateWidthWarning,
    ensemble_ratio,
    erdos_renyi_allocation,
    erdos_renyi_fan_ins,
    init_model,
    init_random_masks,
    load_config,
    load_model,
    sample_mask,
    save_config,
    save_model,
    uniform_allocation,
)

from conftest import sparse_layer


def test_full_fan_in_has_a_single_mask():
    spec = TopologySpec(layers=[sparse_layer(4, 3, 1, 1)], input_features=3, input_bit_width=1)
    (masks,) = init_random_masks(spec, seed=17)
    assert masks.primary.as_lists() == [[0, 1, 2]] * 4


def test_masks_are_deterministic():
    spec = TopologySpec(layers=[sparse_layer(8, 3, 1, 1)], input_features=5, input_bit_width=1)
    assert init_random_masks(spec, 4) == init_random_masks(spec, 4)
    assert init_random_masks(spec, 4) != init_random_masks(spec, 5)


def test_mnist_sized_masks():
    mask = sample_mask(512, 784, 6, 0, 0)
    assert len(mask.rows) == 512
    for row in mask.rows:
        assert len(row) == 6
        assert list(row) == sorted(set(row))
        assert row[-1] < 784


def test_fan_in_wider_than_input_is_rejected():
    with pytest.raises(InvalidSpecError):
        TopologySpec(layers=[sparse_layer(2, 4, 1, 1)], input_features=3, input_bit_width=1)
    with pytest.raises(InvalidSpecError):
        sample_mask(2, 3, 4, 0)


def test_spec_validation():
    with pytest.raises(InvalidSpecError):
        LayerSpec(kind="sparse_linear", neurons=2, in_bit_width=1, out_bit_width=1, max_val_in=1.0, max_val_out=1.0)
    with pytest.raises(InvalidSpecError):
        LayerSpec(
            kind="dense_quant_linear", neurons=2, in_bit_width=1, out_bit_width=1, max_val_in=1.0, max_val_out=1.0
        )
    with pytest.raises(ValidationError):
        LayerSpec(
            kind="sparse_linear", neurons=2, fan_in=1, in_bit_width=1, out_bit_width=1, max_val_in=0.0, max_val_out=1.0
        )
    # layer 1 reads 2-bit codes but layer 0 writes 1-bit codes
    with pytest.raises(InvalidSpecError):
        TopologySpec(layers=[sparse_layer(4, 2, 1, 1), sparse_layer(2, 2, 2, 1)], input_features=4, input_bit_width=1)
    with pytest.raises(InvalidSpecError):
        TopologySpec(layers=[sparse_layer(4, 2, 2, 1)], input_features=4, input_bit_width=1)


def test_specs_are_frozen_and_closed():
    layer = sparse_layer(4, 2, 2, 2)
    with pytest.raises(ValidationError):
        layer.neurons = 8
    with pytest.raises(ValidationError):
        sparse_layer(4, 2, 2, 2, dropout=0.5)
    with pytest.raises(ValidationError):
        TrainConfig(epochs=1, warmup=3)
    spec = TopologySpec(layers=[layer], input_features=4, input_bit_width=2)
    with pytest.raises(ValidationError):
        spec.seed = 1
    assert hash(spec.layers[0].input_quantizer) == hash(QuantizerParams(bit_width=2, max_val=2.0))


def test_skip_links_widen_input_not_fan_in():
    layers = [sparse_layer(8, 3, 2, 2), sparse_layer(6, 3, 2, 2), sparse_layer(4, 3, 2, 2)]
    spec = TopologySpec(layers=layers, input_features=10, input_bit_width=2, skip_links=[(0, 2)])
    assert spec.producers(2) == [1, 0]
    assert spec.input_width(2) == 14
    assert spec.fan_in(2) == 3
    masks = init_random_masks(spec, 0)
    assert masks[2].primary.width == 14
    assert masks[2].primary.fan_in == 3
    adjacent = TopologySpec(layers=layers, input_features=10, input_bit_width=2, skip_links=[(0, 1)])
    assert adjacent.producers(1) == [0, 0]
    assert adjacent.input_width(1) == 16
    for backward in [(1, 1), (2, 1)]:
        with pytest.raises(InvalidSpecError, match="must point forward"):
            TopologySpec(layers=layers, input_features=10, input_bit_width=2, skip_links=[backward])
    with pytest.raises(InvalidSpecError):
        TopologySpec(layers=layers, input_features=10, input_bit_width=2, skip_links=[(1, 5)])


def test_conv_geometry():
    assert conv_output_size(28, 3, 2) == 13
    assert conv_output_size(6, 3, 3) == 2
    conv = LayerSpec(
        kind="sparse_conv", neurons=4, in_bit_width=2, out_bit_width=2, max_val_in=1.0, max_val_out=2.0,
        kernel_size=3, stride=2, kernel_fan_in=4, pointwise_fan_in=2, intermediate_bit_width=2, first_layer=True,
    )
    spec = TopologySpec(layers=[conv], input_features=784, input_bit_width=2, input_shape=(28, 28, 1))
    assert spec.output_geometry(0) == (13, 13, 4)
    assert spec.output_width(0) == 13 * 13 * 4
    assert spec.depthwise_channels(0) == 4
    with pytest.raises(InvalidSpecError):
        TopologySpec(layers=[conv], input_features=784, input_bit_width=2)
    with pytest.raises(InvalidSpecError):
        TopologySpec(layers=[conv], input_features=4, input_bit_width=2, input_shape=(2, 2, 1))


def test_erdos_renyi_allocation():
    assert erdos_renyi_allocation([4, 4]) == [0.5]
    assert erdos_renyi_allocation([64, 32]) == [0.953125]
    with pytest.warns(DegenerateWidthWarning):
        assert erdos_renyi_allocation([1, 1]) == [0.0]
    with pytest.raises(InvalidSpecError):
        erdos_renyi_allocation([4, 0])
    with pytest.raises(InvalidSpecError):
        erdos_renyi_allocation([4])


def test_erdos_renyi_fan_ins_and_uniform():
    assert erdos_renyi_fan_ins(4, [4]) == [2]
    assert erdos_renyi_fan_ins(64, [32]) == [3]
    assert uniform_allocation(3, 0.75) == [0.75, 0.75, 0.75]
    with pytest.raises(InvalidSpecError):
        uniform_allocation(2, 1.5)


def test_ensemble_ratio():
    assert ensemble_ratio(16, 4, 16, 4) == 1.0
    assert ensemble_ratio(64, 6, 32, 8) == 2.0
    assert ensemble_ratio(128, 10, 64, 6) == 0.03125
    with pytest.raises(InvalidSpecError):
        ensemble_ratio(0, 1, 1, 1)


def test_model_round_trip(tmp_path, make_random_model):
    model = make_random_model(8)
    path = save_model(model, tmp_path / "model.json")
    loaded = load_model(path)
    assert loaded == model
    assert loaded.layers[0].weights == model.layers[0].weights


def test_conv_model_round_trip(tmp_path):
    conv = LayerSpec(
        kind="sparse_conv", neurons=3, in_bit_width=2, out_bit_width=2, max_val_in=1.0, max_val_out=2.0,
        kernel_size=2, stride=1, kernel_fan_in=2, pointwise_fan_in=2, intermediate_bit_width=2, first_layer=True,
    )
    spec = TopologySpec(layers=[conv], input_features=16, input_bit_width=2, input_shape=(4, 4, 1))
    model = init_model(spec, 1)
    assert load_model(save_model(model, tmp_path / "conv.json")) == model


def test_weight_outside_mask_is_rejected(tmp_path, three_neuron_path):
    doc = json.loads(three_neuron_path.read_text())
    doc["layers"][0]["weights"][0][1] = 0.5
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="masked input 1"):
        load_model(path)


def test_version_and_truncation(tmp_path, three_neuron_path):
    text = three_neuron_path.read_text()
    doc = json.loads(text)
    doc["version"] = "7"
    path = tmp_path / "future.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="version"):
        load_model(path)
    truncated = tmp_path / "truncated.json"
    truncated.write_text(text[: len(text) // 2])
    with pytest.raises(ModelFormatError):
        load_model(truncated)
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "missing.json")


def test_fan_in_change_is_rejected(three_neuron_model):
    layer = three_neuron_model.layers[0]
    with pytest.raises(ModelFormatError):
        ModelFile(
            topology=three_neuron_model.topology,
            layers=[layer.model_copy(update={"mask": [[0, 2], [1, 2, 3], [0, 1, 2]]})],
        )


def test_config_round_trip(tmp_path, config_dir):
    spec, training = load_config(config_dir / "model_e.json")
    assert training.schedule.strategy == "momentum"
    path = save_config(spec, tmp_path / "e.json", training)
    assert load_config(path) == (spec, training)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"layers": [], "input_features": 4, "input_bit_width": 1}))
    with pytest.raises(InvalidSpecError):
        load_config(bad)


def test_init_model_masks_are_zero_elsewhere(make_random_model):
    model = make_random_model(31)
    for state in model.layers:
        weights = np.array(state.weights)
        for n, support in enumerate(state.mask):
            off = np.setdiff1d(np.arange(weights.shape[1]), support)
            assert np.all(weights[n, off] == 0.0)
