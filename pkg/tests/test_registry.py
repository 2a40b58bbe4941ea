import logging
import os
from itertools import combinations

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, load, write_tree
from hbs_forge.registry import (
    DuplicateCore,
    IoError,
    RegisterOutsideNamespace,
    SourceError,
    UnknownCore,
    classify_tb,
    discover,
)


def rel(root, paths):
    return [os.path.relpath(p, root).replace(os.sep, "/") for p in paths]


def test_discovery_order_shallow_first(tmp_path):
    write_tree(tmp_path, {"a/b/c/foo.hbs": "", "d/bar.hbs": "", "e/f/zaz.hbs": ""})
    assert rel(tmp_path, discover(tmp_path)) == ["d/bar.hbs", "e/f/zaz.hbs", "a/b/c/foo.hbs"]


def test_discovery_empty_and_tie_break(tmp_path):
    assert discover(tmp_path) == []
    write_tree(tmp_path, {"x/b.hbs": "", "x/a.hbs": "", "x/notes.txt": "", "x/c.hbs.bak": ""})
    assert rel(tmp_path, discover(tmp_path)) == ["x/a.hbs", "x/b.hbs"]


def test_discovery_skips_hidden_dirs(tmp_path):
    write_tree(tmp_path, {".git/x.hbs": "", "v/.cache/y.hbs": "", "ok.hbs": ""})
    assert rel(tmp_path, discover(tmp_path)) == ["ok.hbs"]


def test_discovery_follows_symlinks_and_survives_cycles(tmp_path, caplog):
    write_tree(tmp_path, {"real/core.hbs": ""})
    os.symlink(tmp_path / "real", tmp_path / "linked")
    os.symlink(tmp_path, tmp_path / "real" / "loop")
    with caplog.at_level(logging.WARNING):
        found = rel(tmp_path, discover(tmp_path))
    # the same directory reached twice is sourced once
    assert len(found) == 1 and found[0] in ("linked/core.hbs", "real/core.hbs")
    assert any("cycle" in r.message or "visited" in r.message for r in caplog.records)


def test_discovery_of_symlinked_external_tree(tmp_path):
    ext = tmp_path / "ext"
    write_tree(ext, {"lib/x.hbs": ""})
    root = tmp_path / "root"
    root.mkdir()
    os.symlink(ext, root / "vendor")
    assert rel(root, discover(root)) == ["vendor/lib/x.hbs"]


def test_discovery_missing_root(tmp_path):
    with pytest.raises(IoError):
        discover(tmp_path / "nope")


segment = st.sampled_from(["a", "b", "c", "ab", "B", "z-1", "x_y", "0"])
file_paths = st.lists(st.lists(segment, min_size=0, max_size=4), min_size=0, max_size=12)


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(dirs=file_paths, names=st.lists(st.sampled_from(["m.hbs", "n.hbs", "A.hbs", "q.txt"]), min_size=12, max_size=12))
def test_sourcing_order_property(tmp_path_factory, dirs, names):
    root = tmp_path_factory.mktemp("tree")
    expected = set()
    for parts, name in zip(dirs, names):
        path = "/".join([*parts, name])
        target = root / path
        if any((root / "/".join(parts[:i + 1])).is_file() for i in range(len(parts))):
            continue
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text("")
        if name.endswith(".hbs"):
            expected.add(path)
    got = rel(root, discover(root))
    assert sorted(got) == sorted(expected)  # each file exactly once
    # brute-force oracle: every pair respects depth, then lexicographic order
    for a, b in combinations(got, 2):
        da, db = a.count("/"), b.count("/")
        assert da < db or (da == db and a < b), (a, b)


def test_three_flip_flops_registry(tmp_path):
    ws, _ = load(FIXTURES / "flip-flops", tmp_path)
    assert ws.registry.list_cores() == [
        "lib::pkg1::d-flip-flop", "lib::pkg1::t-flip-flop", "lib::pkg2::jk-flip-flop"]
    assert ws.registry.list_cores("lib::pkg1::*") == ["lib::pkg1::d-flip-flop", "lib::pkg1::t-flip-flop"]
    assert ws.registry.where("lib::pkg2::*") == [("lib::pkg2::jk-flip-flop", "flip-flops.hbs")]
    assert ws.registry.where("nothing*") == []
    assert len(ws.registry.where("*")) == 3


@pytest.mark.parametrize("tree,path", [
    ("vlnv", "vendor::library::flip-flop::1.0"),
    ("deep-path", "a::b::c::d::e::f::flip-flop"),
])
def test_core_paths(tree, path, tmp_path):
    ws, _ = load(FIXTURES / tree, tmp_path)
    assert ws.registry.list_cores() == [path]
    assert ws.registry.list_targets(path) == ["src"]


def test_edge_detector_targets_and_testbenches(tmp_path):
    ws, _ = load(FIXTURES / "edge-detector", tmp_path)
    core = "vhdl::simple::edge-detector"
    assert ws.registry.list_targets(core) == ["src", "tb-comb", "tb-sync"]
    assert list(ws.registry.core(core).utility_procs) == ["_tb"]
    assert ws.registry.list_tb() == [f"{core}::tb-comb", f"{core}::tb-sync"]
    assert ws.registry.list_tb("*sync*") == [f"{core}::tb-sync"]


@pytest.mark.parametrize("name,expected", [
    ("tb-comb", True), ("tb-sync", True), ("tb", True), ("tb_x", True), ("x-tb", True),
    ("x_tb", True), ("stb", False), ("table", False), ("tbx", False), ("TB-x", False),
    ("src", False), ("tb-", True),
])
def test_classify_tb(name, expected):
    assert classify_tb(name) is expected


@given(st.text(alphabet="tb-_xs", max_size=8))
def test_classify_tb_matches_rule_set(name):
    rules = [name == "tb", name[:3] in ("tb-", "tb_"), name[-3:] in ("-tb", "_tb") and len(name) >= 3]
    assert classify_tb(name) == any(rules)


def test_targets_registered_after_register_call_and_child_namespaces_excluded(tmp_path):
    write_tree(tmp_path / "src", {"c.hbs": (
        "namespace eval outer {\n  hbs::Register\n  proc late {} {}\n"
        "  namespace eval inner { proc hidden {} {}\n hbs::Register }\n  proc _util {} {}\n}\n")})
    ws, _ = load(tmp_path / "src", tmp_path)
    assert ws.registry.list_targets("outer") == ["late"]
    assert ws.registry.list_targets("outer::inner") == ["hidden"]
    for core in ws.registry.list_cores():
        tbs = [t for t in ws.registry.list_tb() if t.rsplit("::", 1)[0] == core]
        assert set(tbs) <= {f"{core}::{t}" for t in ws.registry.list_targets(core)}


def test_register_outside_namespace(tmp_path):
    write_tree(tmp_path / "src", {"bad.hbs": "\nhbs::Register\n"})
    with pytest.raises(SourceError) as e:
        load(tmp_path / "src", tmp_path)
    assert e.value.line == 2
    assert "namespace eval" in e.value.message


def test_duplicate_core_is_an_error(tmp_path):
    write_tree(tmp_path / "src", {
        "a.hbs": "namespace eval x { hbs::Register }",
        "b/b.hbs": "namespace eval x { hbs::Register }",
    })
    with pytest.raises(SourceError, match="already registered"):
        load(tmp_path / "src", tmp_path)
    assert issubclass(DuplicateCore, Exception)


def test_shallow_file_symbols_visible_to_deeper_files(tmp_path):
    write_tree(tmp_path / "src", {
        "common.hbs": "proc shared_helper {} { return ok }",
        "ip/x/x.hbs": "namespace eval x { set v [shared_helper]; proc t {} {}; hbs::Register }",
    })
    ws, _ = load(tmp_path / "src", tmp_path)
    assert ws.registry.list_cores() == ["x"]


def test_error_reports_file_and_line(tmp_path):
    write_tree(tmp_path / "src", {"e.hbs": "namespace eval x {\n  proc a {} {}\n  nosuchcmd arg\n}\n"})
    with pytest.raises(SourceError) as e:
        load(tmp_path / "src", tmp_path)
    assert e.value.path.endswith("e.hbs")
    assert e.value.line == 3
    assert "nosuchcmd" in str(e.value)


def test_unbalanced_file_reports_line(tmp_path):
    write_tree(tmp_path / "src", {"u.hbs": "namespace eval x {\n  proc a {} {\n"})
    with pytest.raises(SourceError) as e:
        load(tmp_path / "src", tmp_path)
    assert e.value.line is not None


def test_doc_comments_harvested(tmp_path):
    write_tree(tmp_path / "src", {"d.hbs": (
        "# D-type flip-flop.\nnamespace eval dff {\n  # Source files.\n  proc src {} {}\n  hbs::Register\n}\n")})
    ws, _ = load(tmp_path / "src", tmp_path)
    core = ws.registry.core("dff")
    assert core.doc == "D-type flip-flop."
    assert core.targets["src"].doc == "Source files."
    assert core.defining_file.endswith("d.hbs")
    assert "namespace eval dff" in open(core.defining_file).read()


def test_unknown_core(tmp_path):
    ws, _ = load(FIXTURES / "print", tmp_path)
    with pytest.raises(UnknownCore):
        ws.registry.list_targets("nope")
