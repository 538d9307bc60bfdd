import pytest

from app.errors import InvalidSpecError
from app.models import LayerSpec, TopologySpec
from app.services import (
    conv_costs,
    dense_quant_linear_cost,
    load_config,
    lut_cost_closed,
    lut_cost_recursive,
    report,
    sparse_layer_cost,
    static_6lut_map,
)


def test_static_mapping_table():
    rows = {
        6: (1, 64, 64, 1.0),
        7: (3, 128, 192, 0.6667),
        8: (5, 256, 320, 0.8),
        9: (11, 512, 704, 0.7273),
        10: (21, 1024, 1344, 0.7619),
        11: (43, 2048, 2752, 0.7442),
    }
    for fan_in, (luts, table_bits, config_bits, utilization) in rows.items():
        m = static_6lut_map(fan_in)
        assert (m.lut_count, m.truth_table_bits, m.config_bits) == (luts, table_bits, config_bits)
        assert m.utilization == pytest.approx(utilization, abs=5e-5)


def test_closed_form_examples():
    assert lut_cost_closed(6, 1) == 1
    assert lut_cost_closed(7, 1) == 3
    assert lut_cost_closed(11, 1) == 43
    assert lut_cost_closed(9, 3) == 33
    assert 64 * lut_cost_closed(9, 3) == 2112
    assert 1024 * lut_cost_closed(10, 2) == 43008
    assert lut_cost_closed(12, 1) == 85


def test_below_six_inputs_costs_one_lut_per_bit():
    for n in range(1, 6):
        assert lut_cost_closed(n, 1) == 1
        assert lut_cost_closed(n, 4) == 4
        assert lut_cost_recursive(n, 4) == 4


def test_closed_matches_recursive():
    for n in range(6, 25):
        for m in range(1, 9):
            closed = lut_cost_closed(n, m)
            assert isinstance(closed, int)
            assert closed == lut_cost_recursive(n, m, "two_step")
            assert closed == lut_cost_recursive(n, m, "one_step")
            assert closed == m * lut_cost_closed(n, 1)


def test_recursive_examples():
    assert lut_cost_recursive(8, 1) == 5
    assert lut_cost_recursive(12, 1) == 85


def test_cost_arguments_must_be_positive():
    with pytest.raises(InvalidSpecError):
        lut_cost_closed(0, 1)
    with pytest.raises(InvalidSpecError):
        lut_cost_closed(6, 0)
    with pytest.raises(InvalidSpecError):
        lut_cost_recursive(6, 1, "three_step")
    with pytest.raises(InvalidSpecError):
        conv_costs(0, 2, 16, 1, 3, 2, 5, 3)


def test_dense_quant_linear_cost():
    assert dense_quant_linear_cost(1, 1, 1, 1) == pytest.approx(11.8489)
    assert dense_quant_linear_cost(10, 512, 2, 2) == pytest.approx(10 * (512 * 4 * 1.0699 + 10.779))
    assert dense_quant_linear_cost(0, 512, 2, 2) == 0


def test_conv_costs():
    costs = conv_costs(outpix=169, o_bits=2, n_ofm=16, n_ifm=1, k=3, i_bits=2, x_k=5, x_s=3)
    assert costs.depthwise == 113568
    assert costs.pointwise == 169 * 2 * 16
    assert costs.dense == 169 * 2 * 16 * lut_cost_closed(18, 1)
    # a kernel sparsity equal to the full window reproduces the dense cost
    full = conv_costs(outpix=4, o_bits=1, n_ofm=2, n_ifm=1, k=3, i_bits=2, x_k=9, x_s=1)
    assert full.dense == full.depthwise
    base = conv_costs(outpix=1, o_bits=1, n_ofm=1, n_ifm=1, k=3, i_bits=2, x_k=3, x_s=1)
    assert base.depthwise == 1


@pytest.mark.parametrize(
    "name, hidden",
    [
        ("model_a", (2112, 2112, 2112)),
        ("model_b", (4224, 2112, 1056)),
        ("model_c", (128, 64, 64)),
        ("model_d", (2688, 1344, 1344)),
        ("model_e", (640, 640, 640)),
    ],
)
def test_model_hidden_layer_costs(config_dir, name, hidden):
    spec, _ = load_config(config_dir / f"{name}.json")
    cost = report(spec)
    assert tuple(layer.luts for layer in cost.layers[:3]) == hidden
    assert cost.total == pytest.approx(sum(layer.luts for layer in cost.layers))


def test_mnist_cost(config_dir):
    spec, _ = load_config(config_dir / "mnist_512.json")
    cost = report(spec)
    assert cost.layers[0].luts == 87040
    assert cost.layers[0].fan_in_bits == 12
    assert cost.layers[1].kind == "dense_quant_linear"
    assert cost.layers[1].luts == pytest.approx(43930.9, abs=0.05)


def test_cost_depends_only_on_fan_in_bits_and_outputs():
    def layer(neurons, fan_in):
        return LayerSpec(
            kind="sparse_linear", neurons=neurons, fan_in=fan_in,
            in_bit_width=2, out_bit_width=2, max_val_in=2.0, max_val_out=2.0,
        )

    plain = TopologySpec(layers=[layer(8, 3), layer(8, 3), layer(4, 3)], input_features=8, input_bit_width=2)
    skipped = TopologySpec(
        layers=[layer(8, 3), layer(8, 3), layer(4, 3)], input_features=8, input_bit_width=2, skip_links=[(0, 2)]
    )
    assert skipped.input_width(2) == 16
    assert report(plain).total == report(skipped).total
    assert report(plain).layers[2].luts == sparse_layer_cost(4, 3, 2, 2)


def test_conv_layer_report():
    spec = TopologySpec(
        layers=[
            LayerSpec(
                kind="sparse_conv", neurons=16, in_bit_width=2, out_bit_width=2, max_val_in=1.0, max_val_out=2.0,
                kernel_size=3, stride=2, kernel_fan_in=5, pointwise_fan_in=3, intermediate_bit_width=2,
                first_layer=True,
            ),
        ],
        input_features=28 * 28,
        input_bit_width=2,
        input_shape=(28, 28, 1),
    )
    cost = report(spec)
    (layer,) = cost.layers
    assert layer.breakdown["depthwise"] == 113568
    assert layer.luts == layer.breakdown["depthwise"] + layer.breakdown["pointwise"]
