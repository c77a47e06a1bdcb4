"""Interpreter behavior: concrete runs, symbolic exploration, replay.

Running the whole corpus through both instantiations doubles as the
stack-discipline harness: any underflow a validated module could cause
would crash the evaluator loop here.
"""

import pathlib
from collections import Counter

import pytest

from wasmsym.errors import ConfigError
from wasmsym.interp import run_concrete, run_symbolic
from wasmsym.interp.outcomes import OUTCOME_OK, OUTCOME_TRAP
from wasmsym.wat import link, parse_module, validate

from conftest import CORPUS

U32 = lambda v: v & 0xFFFFFFFF
U64 = lambda v: v & 0xFFFFFFFFFFFFFFFF


def load(path: pathlib.Path):
    return link(validate(parse_module(path.read_text())))


def load_src(src: str):
    return link(validate(parse_module(src)))


def run_sym(inst, **kw):
    results = []
    stats = run_symbolic(inst, on_result=results.append, **kw)
    return results, stats


# expected concrete outcomes, computed by hand from Wasm semantics
CONCRETE_EXPECTED = {
    "arith_chain": ("ok", (84,)),
    "wrap_extend": ("ok", (U64(-458752) & 0xFFFFFFFF,)),
    "div_signed": ("ok", (U32(-4),)),
    "div_trap": ("trap", "integer-divide-by-zero"),
    "overflow_div_trap": ("trap", "integer-overflow"),
    "rem_edge": ("ok", (0,)),
    "factorial_loop": ("ok", (3628800,)),
    "fib_iter": ("ok", (6765,)),
    "nested_blocks": ("ok", (11,)),
    "if_else_chain": ("ok", (0,)),
    "memory_rw": ("ok", (772,)),
    "memory_oob_trap": ("trap", "out-of-bounds-memory"),
    "memory_grow": ("ok", (6,)),
    "globals": ("ok", (1042,)),
    "call_chain": ("ok", (4,)),
    "call_indirect": ("ok", (29,)),
    "call_indirect_trap": ("trap", "undefined-table-element"),
    "call_type_mismatch": ("trap", "indirect-call-type-mismatch"),
    "select_drop": ("ok", (20,)),
    "shifts": ("ok", (13,)),
    "compare_matrix": ("ok", (7,)),
    "tee_local": ("ok", (42,)),
    "unreachable_in_block": ("trap", "unreachable"),
    "loop_sum_memory": ("ok", (480,)),
    "eqz_chain": ("ok", (2,)),
    "i64_arith": ("ok", (12884901885,)),
    "block_result": ("ok", (5,)),
    "early_return": ("ok", (92,)),
    "flat_style": ("ok", (105,)),
    "void_main": ("ok", ()),
}


class TestConcrete:
    @pytest.mark.parametrize("name", sorted(CONCRETE_EXPECTED))
    def test_corpus_program(self, name):
        inst = load(CORPUS / "concrete" / f"{name}.wat")
        out = run_concrete(inst)
        want_kind, want_payload = CONCRETE_EXPECTED[name]
        if want_kind == "ok":
            assert out.kind == OUTCOME_OK
            assert out.results == want_payload
        else:
            assert out.kind == OUTCOME_TRAP
            assert out.trap_kind == want_payload

    def test_fuel_exhaustion(self):
        inst = load(CORPUS / "concrete" / "factorial_loop.wat")
        out = run_concrete(inst, fuel=50)
        assert out.kind == OUTCOME_TRAP
        assert out.trap_kind == "fuel-exhausted"
        assert out.message() == "Trap: fuel exhausted"

    def test_intrinsics_rejected_without_model(self, test_swap_src):
        inst = load_src(test_swap_src)
        with pytest.raises(ConfigError):
            run_concrete(inst)


class TestCoincidence:
    """Symbol-free programs: symbolic mode is one leaf equal to concrete,
    with zero solver traffic and zero forks."""

    @pytest.mark.parametrize("name", sorted(CONCRETE_EXPECTED))
    def test_single_identical_leaf(self, name):
        inst = load(CORPUS / "concrete" / f"{name}.wat")
        concrete_out = run_concrete(inst)
        results, stats = run_sym(inst)
        assert len(results) == 1
        sym_out = results[0].outcome
        assert sym_out.kind == concrete_out.kind
        assert sym_out.trap_kind == concrete_out.trap_kind
        assert sym_out.results == concrete_out.results
        assert stats.solver_queries == 0
        assert stats.scheduler.forks == 0


class TestConcreteModeIsolation:
    def test_no_coroutines_no_queue_no_solver(self):
        import wasmsym.choice.core as chc
        import wasmsym.choice.queue as chq
        import wasmsym.solver.backends as sb

        counters = {"cor": 0, "push": 0, "check": 0}
        orig_cor, orig_push, orig_check = (
            chc.Coroutine.__init__, chq.WorkQueue.push, sb.SolverHandle.check)

        def count_cor(self, step):
            counters["cor"] += 1
            return orig_cor(self, step)

        def count_push(self, item):
            counters["push"] += 1
            return orig_push(self, item)

        def count_check(self, pc):
            counters["check"] += 1
            return orig_check(self, pc)

        chc.Coroutine.__init__ = count_cor
        chq.WorkQueue.push = count_push
        sb.SolverHandle.check = count_check
        try:
            for name in ("factorial_loop", "memory_rw", "call_indirect"):
                run_concrete(load(CORPUS / "concrete" / f"{name}.wat"))
        finally:
            chc.Coroutine.__init__ = orig_cor
            chq.WorkQueue.push = orig_push
            sb.SolverHandle.check = orig_check
        assert counters == {"cor": 0, "push": 0, "check": 0}


class TestSymbolicExploration:
    def test_swap_three_paths(self, test_swap_src):
        inst = load_src(test_swap_src)
        results, stats = run_sym(inst)
        kinds = Counter((r.outcome.kind, r.outcome.trap_kind) for r in results)
        assert kinds == Counter({("ok", None): 2, ("trap", "unreachable"): 1})
        # path conditions: one conjunct on the not-taken branch, two on the
        # taken-then-inner branches
        assert sorted(r.pc_len for r in results) == [1, 2, 2]
        finding = next(r for r in results if r.outcome.is_problem)
        assert set(finding.model) == {0, 1}

    def test_two_selects_four_leaves(self):
        inst = load(CORPUS / "sym" / "sym_two_selects.wat")
        results, stats = run_sym(inst)
        assert len(results) == 4
        assert all(r.outcome.kind == OUTCOME_OK for r in results)

    def test_leaf_count_power_of_k(self):
        # k independent feasible selects make exactly 2^k leaves
        k = 5
        lines = ['(module (import "owi" "i32_symbol" (func $s (result i32)))',
                 "(func $main"]
        for _ in range(k):
            lines.append("(if (i32.gt_s (call $s) (i32.const 0)) (then nop) (else nop))")
        lines.append(') (export "main" (func $main)))')
        inst = load_src("\n".join(lines))
        results, _ = run_sym(inst)
        assert len(results) == 2 ** k

    def test_assume_prunes_infeasible_arm(self):
        inst = load(CORPUS / "sym" / "sym_assume.wat")
        results, stats = run_sym(inst)
        assert len(results) == 1
        assert results[0].outcome.kind == OUTCOME_OK
        assert stats.pruned >= 1
        assert stats.findings == 0

    def test_contradictory_assumes_kill_path(self):
        inst = load_src(
            """(module (import "owi" "i32_symbol" (func $s (result i32)))
                 (import "owi" "assume" (func $assume (param i32)))
                 (func $main (local $n i32)
                   (local.set $n (call $s))
                   (call $assume (i32.gt_s (local.get $n) (i32.const 0)))
                   (call $assume (i32.lt_s (local.get $n) (i32.const 0))))
                 (export "main" (func $main)))"""
        )
        results, stats = run_sym(inst)
        assert results == []
        assert stats.pruned == 1

    def test_assume_const_true_noop(self):
        inst = load_src(
            """(module (import "owi" "assume" (func $assume (param i32)))
                 (func $main (call $assume (i32.const 1)))
                 (export "main" (func $main)))"""
        )
        results, _ = run_sym(inst)
        assert len(results) == 1
        assert results[0].outcome.kind == OUTCOME_OK

    def test_assert_const_false(self):
        inst = load_src(
            """(module (import "owi" "assert" (func $a (param i32)))
                 (func $main (call $a (i32.const 0)))
                 (export "main" (func $main)))"""
        )
        results, _ = run_sym(inst)
        assert len(results) == 1
        assert results[0].outcome.message() == "Assert failure: false"

    def test_assert_explores_both_continuations(self):
        # a failed assert does not consume the path: the success side
        # continues to the next select
        inst = load_src(
            """(module (import "owi" "i32_symbol" (func $s (result i32)))
                 (import "owi" "assert" (func $a (param i32)))
                 (func $main (local $x i32)
                   (local.set $x (call $s))
                   (call $a (i32.gt_s (local.get $x) (i32.const 0)))
                   (if (i32.gt_s (local.get $x) (i32.const 100))
                     (then nop) (else nop)))
                 (export "main" (func $main)))"""
        )
        results, _ = run_sym(inst)
        kinds = Counter(r.outcome.kind for r in results)
        assert kinds["assert-failure"] == 1
        assert kinds["ok"] == 2  # x in (0,100] and x > 100

    def test_div_symbolic_divisor(self):
        inst = load(CORPUS / "sym" / "sym_div.wat")
        results, _ = run_sym(inst)
        kinds = Counter((r.outcome.kind, r.outcome.trap_kind) for r in results)
        assert kinds == Counter({("trap", "integer-divide-by-zero"): 1, ("ok", None): 1})

    def test_div_s_overflow_fork(self):
        inst = load(CORPUS / "sym" / "sym_div_s.wat")
        results, _ = run_sym(inst)
        kinds = Counter((r.outcome.kind, r.outcome.trap_kind) for r in results)
        assert kinds == Counter({
            ("trap", "integer-divide-by-zero"): 1,
            ("trap", "integer-overflow"): 1,
            ("ok", None): 1,
        })

    def test_call_indirect_symbolic_index(self):
        inst = load(CORPUS / "sym" / "sym_callind.wat")
        results, _ = run_sym(inst)
        kinds = Counter((r.outcome.kind, r.outcome.trap_kind) for r in results)
        # indices 0 and 1 call; index 2 is an empty slot; >= 3 out of bounds
        assert kinds == Counter({("ok", None): 2, ("trap", "undefined-table-element"): 2})

    def test_symbolic_store_oob(self):
        inst = load(CORPUS / "sym" / "store_oob.wat")
        results, stats = run_sym(inst)
        kinds = Counter((r.outcome.kind, r.outcome.trap_kind) for r in results)
        assert kinds == Counter({("trap", "out-of-bounds-memory"): 1, ("ok", None): 1})
        ok_leaf = next(r for r in results if r.outcome.kind == OUTCOME_OK)
        assert ok_leaf.concretized == 1
        finding = next(r for r in results if r.outcome.is_problem)
        assert finding.outcome.message() == "Trap: memory heap buffer overflow"

    def test_mem_roundtrip_assert_holds(self):
        inst = load(CORPUS / "sym" / "sym_mem_roundtrip.wat")
        results, stats = run_sym(inst)
        kinds = Counter(r.outcome.kind for r in results)
        assert kinds["ok"] >= 1
        assert kinds.get("assert-failure", 0) == 0

    def test_i64_wrap_assert_fails(self):
        inst = load(CORPUS / "sym" / "sym_i64.wat")
        results, _ = run_sym(inst)
        kinds = Counter(r.outcome.kind for r in results)
        assert kinds["assert-failure"] == 1
        assert kinds["ok"] == 1

    def test_bounded_symbolic_loop(self):
        inst = load(CORPUS / "sym" / "sym_loop_bounded.wat")
        results, _ = run_sym(inst)
        # n < 4 assumed: the loop exit select forks per feasible iteration
        assert all(r.outcome.kind == OUTCOME_OK for r in results)
        assert len(results) == 4

    def test_memory_grow_symbolic_delta_concretized(self):
        inst = load_src(
            """(module (import "owi" "i32_symbol" (func $s (result i32)))
                 (import "owi" "assume" (func $assume (param i32)))
                 (memory 1 4)
                 (func $main (local $d i32)
                   (local.set $d (call $s))
                   (call $assume (i32.lt_u (local.get $d) (i32.const 3)))
                   (drop (memory.grow (local.get $d))))
                 (export "main" (func $main)))"""
        )
        results, stats = run_sym(inst)
        assert len(results) == 1
        assert results[0].outcome.kind == OUTCOME_OK
        assert results[0].concretized == 1

    def test_fuel_exhaustion_is_incomplete_not_finding(self):
        inst = load_src(
            """(module (import "owi" "i32_symbol" (func $s (result i32)))
                 (func $main (local $n i32)
                   (local.set $n (call $s))
                   (block $done (loop $top
                     (br_if $done (i32.eqz (local.get $n)))
                     (local.set $n (i32.add (local.get $n) (i32.const 1)))
                     (br $top))))
                 (export "main" (func $main)))"""
        )
        results, stats = run_sym(inst, fuel=600, yield_interval=200)
        assert stats.fuel_exhausted >= 1
        assert stats.findings == 0


class TestReplaySoundness:
    """Every reported finding, replayed concretely with its model, reaches
    an outcome of the same kind."""

    @pytest.mark.parametrize("path", sorted((CORPUS / "sym").glob("*.wat")),
                             ids=lambda p: p.stem)
    def test_replay_findings(self, path):
        inst = load(path)
        results, _ = run_sym(inst)
        findings = [r for r in results if r.outcome.is_problem]
        for f in findings:
            assert f.model is not None
            replayed = run_concrete(inst, model=f.model)
            assert replayed.kind == f.outcome.kind
            if f.outcome.kind == OUTCOME_TRAP:
                assert replayed.trap_kind == f.outcome.trap_kind

    def test_replay_false_path(self, test_swap_src):
        # a model taking the x <= y path replays without any problem
        inst = load_src(test_swap_src)
        out = run_concrete(inst, model={0: (32, 0), 1: (32, 1)})
        assert out.kind == OUTCOME_OK

    def test_replay_model_too_short(self, test_swap_src):
        inst = load_src(test_swap_src)
        with pytest.raises(ConfigError):
            run_concrete(inst, model={0: (32, 0)})

    def test_replay_wrong_width(self, test_swap_src):
        inst = load_src(test_swap_src)
        with pytest.raises(ConfigError):
            run_concrete(inst, model={0: (64, 0), 1: (32, 1)})


class TestWorkerEquivalence:
    @pytest.mark.parametrize("workers", [1, 2, 4, 8])
    def test_thread_findings_stable(self, workers, test_swap_src):
        inst = load_src(test_swap_src)
        want = Counter({("ok", None): 2, ("trap", "unreachable"): 1})
        results, _ = run_sym(inst, workers=workers)
        got = Counter((r.outcome.kind, r.outcome.trap_kind) for r in results)
        assert got == want

    @pytest.mark.parametrize("workers", [2, 4])
    def test_process_findings_stable(self, workers):
        inst = load(CORPUS / "sym" / "sym_div_s.wat")
        want = Counter({
            ("trap", "integer-divide-by-zero"): 1,
            ("trap", "integer-overflow"): 1,
            ("ok", None): 1,
        })
        results, _ = run_sym(inst, workers=workers, process_workers=True)
        got = Counter((r.outcome.kind, r.outcome.trap_kind) for r in results)
        assert got == want


class TestFailFast:
    def test_queue_closes_after_first_finding(self):
        # many findings available; fail-fast reports at least one and stops early
        lines = ['(module (import "owi" "i32_symbol" (func $s (result i32)))',
                 "(func $main"]
        for _ in range(8):
            lines.append(
                "(if (i32.gt_s (call $s) (i32.const 0)) (then unreachable) (else nop))")
        lines.append(') (export "main" (func $main)))')
        inst = load_src("\n".join(lines))
        results, stats = run_sym(inst, fail_fast=True)
        problems = [r for r in results if r.outcome.is_problem]
        assert len(problems) >= 1
        full_results, _ = run_sym(inst)
        assert len(full_results) > len(results)
