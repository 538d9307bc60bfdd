from .costmodel import (
    ConvCosts,
    StaticMapping,
    conv_costs,
    dense_quant_linear_cost,
    layer_cost,
    lut_cost_closed,
    lut_cost_recursive,
    report,
    sparse_layer_cost,
    static_6lut_map,
)
from .data import (
    Dataset,
    Normalization,
    apply_normalization,
    fit_to_quantizer,
    load_csv,
    load_idx,
    load_mnist_dir,
    stored_normalization,
    train_test_split,
)
from .masks import (
    ConnectivityMask,
    DegenerateWidthWarning,
    LayerMasks,
    ensemble_ratio,
    erdos_renyi_allocation,
    erdos_renyi_fan_ins,
    init_random_masks,
    sample_mask,
    uniform_allocation,
)
from .model_init import init_model, layer_quantizers, masked_rows
from .netlist import NetlistIR, NetlistLayer, NeuronNode, Style, STYLES, build_netlist, compilable_prefix
from .simulate import bits_to_codes, codes_to_bits, evaluate, simulate, simulate_stream
from .storage import (
    load_config,
    load_model,
    load_normalization,
    save_config,
    save_model,
    save_normalization,
)
from .tablegen import (
    ConvTables,
    LayerTables,
    Tables,
    TruthTable,
    fits_table_limit,
    generate_neuron_table,
    generate_tables,
    generate_truth_table,
    load_tables,
    save_tables,
    table_forward,
)
from .verify import VerificationReport, check_equivalence, check_tables, verify
from .verilog import emit_verilog, write_verilog

__all__ = [
    "ConvCosts",
    "StaticMapping",
    "conv_costs",
    "dense_quant_linear_cost",
    "layer_cost",
    "lut_cost_closed",
    "lut_cost_recursive",
    "report",
    "sparse_layer_cost",
    "static_6lut_map",
    "Dataset",
    "Normalization",
    "apply_normalization",
    "fit_to_quantizer",
    "load_csv",
    "load_idx",
    "load_mnist_dir",
    "stored_normalization",
    "train_test_split",
    "ConnectivityMask",
    "DegenerateWidthWarning",
    "LayerMasks",
    "ensemble_ratio",
    "erdos_renyi_allocation",
    "erdos_renyi_fan_ins",
    "init_random_masks",
    "sample_mask",
    "uniform_allocation",
    "init_model",
    "layer_quantizers",
    "masked_rows",
    "NetlistIR",
    "NetlistLayer",
    "NeuronNode",
    "Style",
    "STYLES",
    "build_netlist",
    "compilable_prefix",
    "bits_to_codes",
    "codes_to_bits",
    "evaluate",
    "simulate",
    "simulate_stream",
    "load_config",
    "load_model",
    "load_normalization",
    "save_config",
    "save_model",
    "save_normalization",
    "ConvTables",
    "LayerTables",
    "Tables",
    "TruthTable",
    "fits_table_limit",
    "generate_neuron_table",
    "generate_tables",
    "generate_truth_table",
    "load_tables",
    "save_tables",
    "table_forward",
    "VerificationReport",
    "check_equivalence",
    "check_tables",
    "verify",
    "emit_verilog",
    "write_verilog",
]
