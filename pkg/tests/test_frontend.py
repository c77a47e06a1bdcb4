"""Parsing, validation, linking and the parse/print round-trip."""

import pytest

from wasmsym.errors import LinkError, ParseError, ValidationError
from wasmsym.wat import link, parse_module, print_module, validate
from wasmsym.wat.ast import Instr
from wasmsym.wat.link import find_main


class TestParse:
    def test_swap_module_structure(self, test_swap_src):
        m = parse_module(test_swap_src)
        assert len(m.imports) == 1
        assert m.imports[0].module == "owi"
        assert len(m.funcs) == 2
        swap = m.funcs[0]
        assert swap.name == "test_swap"
        assert m.types[swap.type_idx].params == ("i32", "i32")
        # outer if nests another if in its then-branch
        outer = [i for i in swap.body if i.op == "if"]
        assert len(outer) == 1
        then_body = outer[0].args[1]
        inner_ifs = [i for i in then_body if i.op == "if"]
        assert len(inner_ifs) == 1
        assert any(i.op == "unreachable" for i in inner_ifs[0].args[1])
        assert any(i.op in ("i32.add", "i32.sub") for i in then_body)

    def test_empty_module(self):
        m = parse_module("(module)")
        assert m.funcs == ()
        assert m.memory is None

    def test_f32_is_unsupported_feature(self):
        with pytest.raises(ParseError) as e:
            parse_module("(module (func (f32.const 1)))")
        assert e.value.feature == "f32"

    def test_f64_param_rejected(self):
        with pytest.raises(ParseError) as e:
            parse_module("(module (func (param f64)))")
        assert e.value.feature == "f64"

    def test_unknown_opcode_has_position(self):
        with pytest.raises(ParseError) as e:
            parse_module("(module (func\n  i32.bogus))")
        assert e.value.line == 2

    def test_comments_skipped(self):
        m = parse_module("(module ;; line\n (; block (; nested ;) ;) (func))")
        assert len(m.funcs) == 1

    def test_flat_and_folded_equivalent(self):
        folded = parse_module(
            "(module (func (result i32) (i32.add (i32.const 1) (i32.const 2))))"
        )
        flat = parse_module(
            "(module (func (result i32) i32.const 1 i32.const 2 i32.add))"
        )
        assert folded.funcs[0].body == flat.funcs[0].body

    def test_symbolic_names_resolved(self):
        m = parse_module(
            """(module
                 (global $g (mut i32) (i32.const 3))
                 (func $f (param $a i32) (result i32)
                   local.get $a global.get $g i32.add)
                 (export "f" (func $f)))"""
        )
        body = m.funcs[0].body
        assert body[0] == Instr("local.get", (0,))
        assert body[1] == Instr("global.get", (0,))
        assert m.exports[0].func_idx == 0

    def test_memarg_offset(self):
        m = parse_module(
            "(module (memory 1) (func (i32.store offset=4 (i32.const 0) (i32.const 7))))"
        )
        stores = [i for i in m.funcs[0].body if i.op == "i32.store"]
        assert stores[0].args == (4,)

    def test_table_and_elem(self):
        m = parse_module(
            """(module
                 (table 3 funcref)
                 (elem (i32.const 1) $a $b)
                 (func $a) (func $b))"""
        )
        assert m.table.size == 3
        assert m.table.elems == (None, 0, 1)

    def test_data_segment_unsupported(self):
        with pytest.raises(ParseError) as e:
            parse_module('(module (memory 1) (data (i32.const 0) "x"))')
        assert e.value.feature == "data"

    def test_br_table_unsupported(self):
        with pytest.raises(ParseError) as e:
            parse_module("(module (func (block br_table 0 end)))")
        assert e.value.feature == "br_table"

    def test_multivalue_unsupported(self):
        with pytest.raises(ParseError) as e:
            parse_module("(module (func (result i32 i32) i32.const 1 i32.const 2))")
        assert e.value.feature == "multi-value"

    def test_label_name_resolution(self):
        m = parse_module(
            """(module (func
                 (block $out
                   (block $in
                     br $out
                     br $in)
                   br $out)))"""
        )
        outer = m.funcs[0].body[0]
        inner = outer.args[1][0]
        assert inner.args[1][0] == Instr("br", (1,))
        assert inner.args[1][1] == Instr("br", (0,))
        assert outer.args[1][1] == Instr("br", (0,))


class TestRoundTrip:
    SOURCES = [
        "(module)",
        "(module (func $f (param i32 i64) (result i32) local.get 0))",
        """(module
             (import "owi" "i32_symbol" (func $s (result i32)))
             (global $g (mut i64) (i64.const -5))
             (memory 1 4)
             (table 2 funcref)
             (elem (i32.const 0) $f $f)
             (func $f (local i32)
               (block $b (result i32) (i32.const 3))
               drop
               (loop $l (br_if $l (i32.const 0))))
             (export "main" (func $f)))""",
    ]

    @pytest.mark.parametrize("src", SOURCES)
    def test_print_parse_identity(self, src):
        m1 = parse_module(src)
        m2 = parse_module(print_module(m1))
        assert m1 == m2

    def test_swap_round_trip(self, test_swap_src):
        m1 = parse_module(test_swap_src)
        assert parse_module(print_module(m1)) == m1


class TestValidate:
    def test_swap_validates(self, test_swap_src):
        vm = validate(parse_module(test_swap_src))
        assert vm.module is parse_module(test_swap_src) or vm.module == parse_module(test_swap_src)

    def test_deterministic(self, test_swap_src):
        m = parse_module(test_swap_src)
        assert validate(m) == validate(m)

    def test_stack_underflow(self):
        m = parse_module("(module (func i32.add))")
        with pytest.raises(ValidationError) as e:
            validate(m)
        assert "underflow" in str(e.value)

    def test_branch_depth_out_of_range(self):
        m = parse_module("(module (func (block br 3)))")
        with pytest.raises(ValidationError) as e:
            validate(m)
        assert "depth" in str(e.value)

    def test_type_mismatch(self):
        m = parse_module("(module (func (result i32) i64.const 1))")
        with pytest.raises(ValidationError):
            validate(m)

    def test_immutable_global_set(self):
        m = parse_module(
            "(module (global $g i32 (i32.const 0)) (func (global.set $g (i32.const 1))))"
        )
        with pytest.raises(ValidationError) as e:
            validate(m)
        assert "immutable" in str(e.value)

    def test_memory_required_for_load(self):
        m = parse_module("(module (func (result i32) (i32.load (i32.const 0))))")
        with pytest.raises(ValidationError):
            validate(m)

    def test_if_result_needs_else(self):
        m = parse_module(
            "(module (func (result i32) (if (result i32) (i32.const 1) (then (i32.const 2)))))"
        )
        with pytest.raises(ValidationError):
            validate(m)

    def test_unreachable_polymorphism(self):
        m = parse_module("(module (func (result i32) unreachable i32.add))")
        validate(m)  # dead code is polymorphic, this is legal Wasm


class TestLink:
    def test_intrinsic_bound(self):
        m = parse_module(
            '(module (import "owi" "i32_symbol" (func $s (result i32))))'
        )
        inst = link(validate(m))
        assert inst.intrinsics == {0: "i32_symbol"}

    def test_unknown_import(self):
        m = parse_module('(module (import "env" "puts" (func (param i32))))')
        with pytest.raises(LinkError) as e:
            link(validate(m))
        assert "unknown import" in str(e.value)

    def test_signature_mismatch(self):
        m = parse_module('(module (import "owi" "assert" (func (result i32))))')
        with pytest.raises(LinkError) as e:
            link(validate(m))
        assert "signature" in str(e.value)

    def test_memory_size_bytes(self):
        m = parse_module('(module (memory 1))')
        inst = link(validate(m))
        assert inst.memory_min_bytes == 65536

    def test_find_main(self):
        m = parse_module('(module (func $main) (export "main" (func $main)))')
        inst = link(validate(m))
        assert find_main(inst) == 0

    def test_main_with_params_rejected(self):
        m = parse_module('(module (func $main (param i32)) (export "main" (func $main)))')
        inst = link(validate(m))
        with pytest.raises(LinkError):
            find_main(inst)
