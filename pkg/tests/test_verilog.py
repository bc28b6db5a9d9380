"""Verilog emission: syntax shape and the emit/parse/simulate round trip."""

import numpy as np

from firlock.decoys import DecoyMethod, assign_decoys
from firlock.netlist import PackedEvaluator, lower_to_gates, pack_value_bits
from firlock.tmcm import build_tmcm
from firlock.verilog import emit_verilog, parse_verilog

from conftest import make_quantized


def test_round_trip_behavior(built):
    b = built(1, DecoyMethod.HDRD)
    nl = b.netlist
    text = emit_verilog(nl)
    again = parse_verilog(text)
    rng = np.random.default_rng(17)
    n = 1000
    masks = {
        "i": pack_value_bits(rng.integers(0, b.tmcm.N, size=n), len(nl.inputs["i"])),
        "k": pack_value_bits(
            rng.integers(0, 1 << b.tmcm.p, size=n, dtype=np.uint64), len(nl.inputs["k"])
        ),
        "x": pack_value_bits(
            rng.integers(0, 1 << b.tmcm.ibw, size=n, dtype=np.uint64), len(nl.inputs["x"])
        ),
    }
    assert PackedEvaluator(again).run(masks, n) == PackedEvaluator(nl).run(masks, n)


def test_port_widths_in_emission(built):
    b = built(1, DecoyMethod.HDRD)
    text = emit_verilog(b.netlist)
    assert "input [4:0] i;" in text          # ceil(log2 29)
    assert "input [31:0] k;" in text         # p = 32
    assert "input [31:0] x;" in text
    assert f"output [{b.tmcm.cbw + 32 - 1}:0] y;" in text
    assert text.startswith("//")
    assert text.rstrip().endswith("endmodule")


def test_single_tap_module_is_valid_and_round_trips():
    qf = make_quantized([5], [4], [6], Q=4)
    da = assign_decoys(qf, 1, DecoyMethod.HD, seed=0)
    tmcm, key = build_tmcm(qf, da, ibw=4, seed=1)
    nl = lower_to_gates(tmcm)
    text = emit_verilog(nl)
    # Zero-width select port still emitted one bit wide.
    assert "input [0:0] i;" in text
    again = parse_verilog(text)
    masks = {
        "i": [],
        "k": [0b01],
        "x": pack_value_bits(np.array([3, 3]), 4),
    }
    assert PackedEvaluator(again).run(masks, 2) == PackedEvaluator(nl).run(masks, 2)


def test_header_comment_passthrough(built):
    text = emit_verilog(built(1, DecoyMethod.HDRD).netlist, header="alpha\nbeta")
    lines = text.splitlines()
    assert lines[1] == "// alpha" and lines[2] == "// beta"


def test_module_name_override(built):
    text = emit_verilog(built(1, DecoyMethod.HDRD).netlist, module_name="core")
    assert "module core (i, k, x, y);" in text
