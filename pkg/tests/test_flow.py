import io
import os
import random
import subprocess

import pytest

from conftest import FIXTURES, load, write_tree
from dag_oracle import VARIANTS, counters, random_dag
from hbs_forge.flow import DepGraph, UnknownTarget, build_dir_for, emit_dot, file_kind


def tree(tmp_path, text, name="c.hbs"):
    return write_tree(tmp_path / "src", {name: text})


def run(tmp_path, text, target, argv=(), dry_run=False, **kw):
    ws, out = load(tree(tmp_path, text), tmp_path, **kw)
    status = ws.flow.run_target(target, list(argv), dry_run=dry_run)
    return ws, status, out.getvalue()


def test_print_target(tmp_path):
    ws, out = load(FIXTURES / "print", tmp_path)
    assert ws.flow.run_target("core::print") == 0
    assert out.getvalue() == "Hello!\n"


def test_target_parameter_default(tmp_path):
    ws, out = load(FIXTURES / "target", tmp_path)
    assert ws.flow.run_target("core::target") == 0
    assert ws.flow.run_target("core::target", ["synthesis"]) == 0
    assert out.getvalue() == "Running until bitstream\nRunning until synthesis\n"


def test_unknown_target(tmp_path):
    ws, _ = load(FIXTURES / "print", tmp_path)
    with pytest.raises(UnknownTarget):
        ws.flow.run_target("nosuch::tgt")
    with pytest.raises(UnknownTarget):
        ws.flow.run_target("core::_hidden")


def test_generator_runs_once_and_prints_in_order(tmp_path):
    ws, out = load(FIXTURES / "generator", tmp_path)
    assert ws.flow.run_target("core::top") == 0
    assert out.getvalue() == "Generating foo.vhd\nAdding file foo.vhd\nAdding file top.vhd\n"


DIAMOND = """
namespace eval d {
  proc a {} { hbs::AddDep d::b; hbs::AddDep d::c }
  proc b {} { hbs::AddDep d::d x }
  proc c {} { hbs::AddDep d::d %s }
  proc d {v} { incr ::hits }
  hbs::Register
}
"""


@pytest.mark.parametrize("c_arg,hits", [("x", 1), ("y", 2)])
def test_diamond_memoization(tmp_path, c_arg, hits):
    ws, status, _ = run(tmp_path, DIAMOND % c_arg, "d::a")
    assert status == 0
    assert ws.interp.get_var("::hits") == str(hits)


def test_memo_key_is_textual(tmp_path):
    text = """namespace eval m {
      proc a {} { hbs::AddDep m::d {a b}; hbs::AddDep m::d a b; hbs::AddDep m::d {a b} }
      proc d {args} { incr ::hits }
      hbs::Register
    }"""
    ws, status, _ = run(tmp_path, text, "m::a")
    assert status == 0
    assert ws.interp.get_var("::hits") == "2"


def test_direct_call_always_executes(tmp_path):
    text = """namespace eval m {
      proc a {} { hbs::AddDep m::d; hbs::AddDep m::d; d; m::d }
      proc d {} { incr ::hits }
      hbs::Register
    }"""
    ws, status, _ = run(tmp_path, text, "m::a")
    assert status == 0
    assert ws.interp.get_var("::hits") == "3"


@pytest.mark.parametrize("seed", range(25))
def test_random_dag_memoization(tmp_path, seed):
    dag = random_dag(random.Random(seed))
    ws, status, _ = run(tmp_path, dag.source(), "g::root")
    assert status == 0
    assert counters(ws.interp) == dag.expected_counts()


def test_this_target_path_tracks_innermost_target(tmp_path):
    text = """namespace eval p {
      proc a {} { puts "$hbs::ThisTargetPath $hbs::ThisCorePath"; hbs::AddDep q::b; _u; puts $hbs::ThisTargetPath }
      proc _u {} { puts "u $hbs::ThisTargetPath" }
      hbs::Register
    }
    namespace eval q {
      proc b {} { puts "$hbs::ThisTargetPath $hbs::ThisCore" }
      hbs::Register
    }"""
    _, status, out = run(tmp_path, text, "p::a")
    assert status == 0
    assert out == "p::a p\nq::b q\nu p::a\np::a\n"


def test_cycle_detection(tmp_path):
    ws, out = load(FIXTURES / "self-dep", tmp_path)
    assert ws.flow.run_target("loop::a") == 1
    assert "dependency cycle: loop::a -> loop::a" in out.getvalue()
    text = """namespace eval c {
      proc a {} { hbs::AddDep c::b 1 }
      proc b {n} { hbs::AddDep c::a }
      hbs::Register
    }"""
    ws, status, out = run(tmp_path, text, "c::a")
    assert status == 1
    assert "c::a -> c::b 1 -> c::a" in out


def test_graph_of_generator(tmp_path):
    ws, _ = load(FIXTURES / "generator", tmp_path)
    g = ws.flow.graph("core::top")
    assert g.nodes == [("core::top", ()), ("generator::gen", ("foo",))]
    assert g.edges == [(("core::top", ()), ("generator::gen", ("foo",)))]
    dot = emit_dot(g)
    assert '"core::top" -> "generator::gen foo";' in dot
    assert dot == emit_dot(ws.flow.graph("core::top"))


def test_graph_leaf_and_dot_of_single_node(tmp_path):
    ws, _ = load(FIXTURES / "print", tmp_path)
    g = ws.flow.graph("core::print")
    assert g.nodes == [("core::print", ())] and g.edges == []
    single = DepGraph(("a::b", ()))
    single.add_node(("a::b", ()))
    assert emit_dot(single) == 'digraph deps {\n  "a::b";\n}\n'


def test_graph_edges_are_the_add_dep_pairs(tmp_path):
    dag = random_dag(random.Random(7))
    ws, _ = load(tree(tmp_path, dag.source()), tmp_path)
    g = ws.flow.graph("g::root")

    def node(j, v):
        return (f"g::t{j}", tuple(VARIANTS[v]))

    root = ("g::root", ())
    expected = {(root, node(j, v)) for j, v in dag.roots}
    visited = set()
    stack = list(dag.roots)
    while stack:
        cur = stack.pop()
        if cur in visited:
            continue
        visited.add(cur)
        for dep in dag.deps[cur[0]]:
            expected.add((node(*cur), node(*dep)))
            stack.append(dep)
    assert set(g.edges) == expected
    assert len(g.edges) == len(expected)
    assert g.edges == ws.flow.graph("g::root").edges


def test_graph_does_not_print(tmp_path, capsys):
    ws, out = load(FIXTURES / "generator", tmp_path)
    ws.flow.graph("core::top")
    assert out.getvalue() == ""


def test_run_and_dry_run_traverse_same_graph(tmp_path):
    ws, _ = load(FIXTURES / "generator", tmp_path)
    ws.flow.run_target("core::top")
    live = ws.flow.last_ctx.graph
    ws.flow.run_target("core::top", dry_run=True)
    assert ws.flow.last_ctx.graph == live


def test_build_dir_layout(tmp_path):
    assert build_dir_for("/w", "a::b::c", ()) == "/w/build/a/b/c"
    hashed = build_dir_for("/w", "a::b", ("x",))
    assert hashed.startswith("/w/build/a/b/") and len(os.path.basename(hashed)) == 10
    assert hashed != build_dir_for("/w", "a::b", ("y",))
    text = 'namespace eval b { proc t {args} { puts $hbs::RunTargetBuildDir } ; hbs::Register }'
    _, status, out = run(tmp_path, text, "b::t")
    assert out.strip() == str(tmp_path / "build" / "b" / "t")
    assert (tmp_path / "build" / "b" / "t").is_dir()


def test_file_kinds():
    cases = {"a.vhd": "vhdl", "a.VHDL": "vhdl", "a.v": "verilog", "a.sv": "systemverilog",
             "a.xdc": "constraint-xdc", "a.sdc": "constraint-sdc", "a.tcl": "tcl", "a.txt": "other"}
    for path, kind in cases.items():
        assert file_kind(path) == kind


def test_add_file_resolution_library_and_duplicates(tmp_path):
    ws, out = load(FIXTURES / "edge-detector", tmp_path)
    assert ws.flow.run_target("vhdl::simple::edge-detector::tb-sync", dry_run=True) == 0
    files = ws.flow.last_ctx.files
    base = FIXTURES / "edge-detector"
    assert [(f.path, f.kind, f.lib) for f in files] == [
        (str(base / "src/edge_detector.vhd"), "vhdl", "simple"),
        (str(base / "tb/tb_sync.vhd"), "vhdl", ""),
    ]
    text = """namespace eval f { proc t {} { hbs::AddFile x.vhd; hbs::AddFile x.vhd ./x.vhd; hbs::SetLib l; hbs::AddFile x.vhd } ; hbs::Register }"""
    write_tree(tmp_path / "src", {"x.vhd": ""})
    ws, status, _ = run(tmp_path, text, "f::t")
    assert status == 0
    assert [(os.path.basename(f.path), f.lib) for f in ws.flow.last_ctx.files] == [("x.vhd", ""), ("x.vhd", "l")]


def test_add_file_missing(tmp_path):
    text = "namespace eval f { proc t {} { hbs::AddFile missing.vhd } ; hbs::Register }"
    _, status, out = run(tmp_path, text, "f::t")
    assert status == 1 and "file not found" in out and "missing.vhd" in out
    _, status, _ = run(tmp_path, text, "f::t", dry_run=True)
    assert status == 0


def test_add_file_relative_to_defining_file_of_dependency(tmp_path):
    ws, _ = load(FIXTURES / "apb-cdc", tmp_path)
    assert ws.flow.run_target("vhdl::amba5::apb::cdc::project", dry_run=True) == 0
    paths = [os.path.relpath(f.path, FIXTURES / "apb-cdc") for f in ws.flow.last_ctx.files]
    assert paths == ["pkg/apb-pkg.vhd", "cdc-bridge.vhd", "vivado/apb-cdc-bridge-ref.xdc",
                     "vivado/apb-cdc-bridge-cell.tcl"]
    assert ws.flow.last_ctx.files[2].kind == "constraint-xdc"


@pytest.mark.parametrize("body,message", [
    ("hbs::SetTool nosuch", 'unknown tool "nosuch"'),
    ("hbs::SetTool ghdl; hbs::SetTool mock-sim", "already set"),
    ("hbs::SetTool ghdl; hbs::SetTool ghdl; puts same", None),
    ("hbs::AddFile x.vhd; hbs::SetTool ghdl", "before any"),
    ("hbs::SetExitSeverity bogus", 'invalid exit severity "bogus"'),
    ("hbs::Run", "tool not set"),
    ("hbs::SetTool ghdl; hbs::Run", "top is not set"),
    ("hbs::SetTool mock-prj; hbs::Run nostage", 'unknown stage "nostage"'),
    ("hbs::SetTool mock-prj; hbs::AddPreCb nostage p", 'unknown stage "nostage"'),
    ("hbs::SetTool mock-prj; hbs::AddPreSimCb p", 'unknown stage "simulation"'),
    ("hbs::AddPreCb nostage p", 'unknown stage "nostage"'),
    ("hbs::panic {it broke}", "it broke"),
])
def test_state_errors(tmp_path, body, message):
    write_tree(tmp_path / "src", {"x.vhd": ""})
    text = "namespace eval s { proc t {} { %s } ; hbs::Register }" % body
    _, status, out = run(tmp_path, text, "s::t", dry_run=True)
    if message is None:
        assert status == 0
    else:
        assert status == 1
        assert message in out


def test_state_setters_visible_as_variables(tmp_path):
    text = """namespace eval s { proc t {} {
      hbs::SetTool ghdl; hbs::SetTop tb_edge_detector_sync; hbs::SetDevice xc7; hbs::SetLib simple
      hbs::SetStd 2019; hbs::SetGeneric WIDTH 8; hbs::SetExitSeverity error
      puts "$hbs::Tool $hbs::Top $hbs::Device $hbs::Lib $hbs::Std $hbs::ExitSeverity"
    } ; hbs::Register }"""
    ws, status, out = run(tmp_path, text, "s::t")
    assert status == 0
    assert out == "ghdl tb_edge_detector_sync xc7 simple 2019 error\n"
    ctx = ws.flow.last_ctx
    assert ctx.generics == {"WIDTH": "8"} and ctx.exit_severity == "error"


def test_callbacks_run_in_registration_order_with_arguments(tmp_path):
    text = """namespace eval s {
      proc tok {t} { lappend ::tokens $t }
      proc t {} {
        hbs::SetTool mock-sim
        hbs::AddPreElabCb s::tok a
        hbs::AddPreCb elaboration s::tok b
        hbs::AddPostElabCb s::tok post
        hbs::AddPreElabCb s::tok c
        hbs::AddPreAnalysisCb s::tok first
        hbs::Run elaboration
      }
      hbs::Register
    }"""
    ws, status, _ = run(tmp_path, text, "s::t")
    assert status == 0
    assert ws.interp.get_var("::tokens") == "first a b c post"
    assert [(e["stage"], e["phase"]) for e in ws.flow.last_ctx.trace] == [
        ("analysis", "pre"), ("analysis", "stage"), ("elaboration", "pre"), ("elaboration", "pre"),
        ("elaboration", "pre"), ("elaboration", "stage"), ("elaboration", "post")]


def test_run_default_stage_runs_everything(tmp_path):
    text = """namespace eval s { proc t {} { hbs::SetTool mock-sim; hbs::Run } ; hbs::Register }"""
    ws, status, _ = run(tmp_path, text, "s::t")
    assert status == 0
    assert [e["stage"] for e in ws.flow.last_ctx.trace] == ["analysis", "elaboration", "simulation"]
    assert (tmp_path / "build/s/t/trace.jsonl").read_text().count("\n") == 3


def test_exec_returns_exit_code_and_panic(tmp_path):
    text = """namespace eval s { proc t {} {
      puts [hbs::Exec true]
      set err [hbs::Exec sh -c {exit 3}]
      if {$err} { hbs::panic "failed with exit status $err" }
    } ; hbs::Register }"""
    _, status, out = run(tmp_path, text, "s::t")
    assert status == 1
    assert out.startswith("0\n")
    assert "failed with exit status 3" in out


def test_exec_spawn_failure(tmp_path):
    text = "namespace eval s { proc t {} { hbs::Exec /nonexistent/tool -x } ; hbs::Register }"
    _, status, out = run(tmp_path, text, "s::t")
    assert status == 1
    assert 'couldn\'t execute "/nonexistent/tool"' in out


def test_exec_in_dry_run_prints_only(tmp_path, monkeypatch):
    monkeypatch.setattr(subprocess, "run", lambda *a, **k: pytest.fail("spawned"))
    text = "namespace eval s { proc t {} { puts [hbs::Exec {ghdl -e --std=08 --workdir=work tb_top}] } ; hbs::Register }"
    _, status, out = run(tmp_path, text, "s::t", dry_run=True)
    assert status == 0
    assert out == "ghdl -e --std=08 --workdir=work tb_top\n0\n"


def test_exit_code_propagates(tmp_path):
    text = "namespace eval s { proc t {} { puts a; exit 4 } ; hbs::Register }"
    _, status, out = run(tmp_path, text, "s::t")
    assert status == 4 and out == "a\n"


def test_flow_commands_outside_a_run(tmp_path):
    text = "namespace eval s { hbs::SetTop x ; hbs::Register }"
    with pytest.raises(Exception, match="only be called while a target is running"):
        load(tree(tmp_path, text), tmp_path)


def test_each_run_gets_a_fresh_context(tmp_path):
    text = """namespace eval s {
      proc a {} { hbs::SetTool ghdl; hbs::AddDep s::d }
      proc b {} { puts "<$hbs::Tool>"; hbs::AddDep s::d }
      proc d {} { incr ::hits }
      hbs::Register
    }"""
    ws, out = load(tree(tmp_path, text), tmp_path)
    assert ws.flow.run_target("s::a") == 0
    assert ws.flow.run_target("s::b") == 0
    assert out.getvalue() == "<>\n"
    assert ws.interp.get_var("::hits") == "2"
