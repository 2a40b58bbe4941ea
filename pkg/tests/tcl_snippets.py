"""Tcl snippets exercising every interpreter construct the fixtures rely on."""

SNIPPETS: dict[str, str] = {
    "default_param": r'''
proc target {{stage "bitstream"}} { puts "Running until $stage" }
target
target synthesis
''',
    "several_defaults": r'''
proc f {a {b 2} {c "x y"}} { puts "$a|$b|$c" }
f 1
f 1 3
f 1 3 4
''',
    "args_rest": r'''
proc src {args} { puts [llength $args]; puts $args }
src
src -no-constr
src a {b c} d
''',
    "args_after_params": r'''
proc f {a args} { puts "$a:[llength $args]:[lindex $args end]" }
f x
f x y z
''',
    "wrong_arg_count": r'''
proc f {a {b 1}} { return $a }
f 1 2 3
''',
    "nested_namespaces": r'''
namespace eval lib {
  namespace eval pkg1 {
    namespace eval d-flip-flop {
      proc src {} { puts [namespace current] }
    }
  }
}
lib::pkg1::d-flip-flop::src
::lib::pkg1::d-flip-flop::src
''',
    "namespace_vars": r'''
namespace eval a { variable x 1 }
set a::y 2
namespace eval a { puts "$x $y" }
puts $::a::x
''',
    "namespace_relative_call": r'''
namespace eval core {
  proc _helper {v} { return "<$v>" }
  proc top {} { puts [_helper 5] }
}
core::top
''',
    "namespace_var_from_proc": r'''
namespace eval hbs { set Tool "ghdl" }
namespace eval core {
  proc t {} {
    if {$hbs::Tool eq "ghdl"} { puts yes } else { puts no }
  }
}
core::t
''',
    "braces_no_subst": r'''
set x 1
puts {$x [llength {a b}] \n}
set q {b [c]}
puts $q
''',
    "nested_braces": r'''
set a {x {y {z w}} v}
puts [llength $a]
puts [lindex $a 1]
''',
    "quotes_and_escapes": r'''
set name foo
puts "Generating $name.vhd"
puts "tab\there \"quoted\" \$literal"
puts "a\
  b"
''',
    "command_substitution": r'''
proc two {} { return 2 }
puts "[two][two] [expr {[two] * 3}]"
''',
    "llength_and_lindex": r'''
set args [list a {b c} "" d]
puts [llength $args]
puts [lindex $args 1]
puts [lindex $args end]
puts [lindex $args end-1]
puts "<[lindex $args 10]>"
''',
    "list_quoting": r'''
puts [list a {b c} {} {$x} "d\"e" \{ "f g\\"]
''',
    "string_match": r'''
puts [string match "Vivado*" "Vivado v2023.1"]
puts [string match "tb-*" "src"]
puts [string match {a?c} abc]
puts [string match {[ab]x} bx]
puts [string match -nocase "ABC*" "abcd"]
''',
    "string_ops": r'''
puts [string length "hello"]
puts [string toupper abc][string tolower DEF]
puts [string trim "  x  "]|
puts [string equal a a][string equal a b]
puts "[string first b abcb] [string last b abcb]"
puts "[string index hello 1] [string range hello 1 3]"
''',
    "exec_stdout": r'''
proc gen {name} {
  exec echo "Generating $name.vhd" >@ stdout
  puts "Adding file $name.vhd"
}
gen foo
''',
    "exec_result": r'''
set r [exec echo hi there]
puts "<$r>"
''',
    "catch_error": r'''
set code [catch {error "boom"} msg]
puts "$code $msg"
set code [catch {set x 5} msg]
puts "$code $msg"
''',
    "catch_exec_failure": r'''
set err [catch {exec false} output]
puts $err
set err [catch {eval exec "echo" "ok"} output]
puts "$err $output"
''',
    "catch_return_break": r'''
puts [catch {return 7} v]$v
puts [catch {break}][catch {continue}]
''',
    "error_uncaught": r'''
proc f {} { error "f failed: [llength {a b}]" }
puts before
f
puts after
''',
    "if_elseif_else": r'''
foreach argCount {0 1 3} {
  if {$argCount == 1} {
    puts one
  } elseif {$argCount > 1} {
    puts many
  } else {
    puts none
  }
}
''',
    "expr_arith": r'''
puts [expr {7 / 2}]
puts [expr {-7 / 2}]
puts [expr {7 % 3}]
puts [expr {2 ** 10}]
puts [expr {1.5 + 2}]
puts [expr {10 / 4.0}]
puts [expr {(1 + 2) * 3 - 4 << 1}]
''',
    "expr_logic": r'''
puts [expr {1 && 0 || 1}]
puts [expr {"abc" eq "abc"}]
puts [expr {"vivado-prj" == "vivado-prj"}]
puts [expr {3 > 2 ? "yes" : "no"}]
puts [expr {!0}]
puts [expr {0 && [error never]}]
''',
    "loops": r'''
set s 0
for {set i 0} {$i < 5} {incr i} {
  if {$i == 3} { continue }
  incr s $i
}
puts $s
set n 0
while {1} { incr n; if {$n >= 4} { break } }
puts $n
''',
    "foreach_lists": r'''
foreach {k v} {a 1 b 2} { puts "$k=$v" }
set out {}
foreach x {1 2 3} { lappend out [expr {$x * $x}] }
puts $out
''',
    "append_join_split": r'''
set s "a"
append s b c
puts $s
puts [join {x y z} ,]
puts [split "a:b::c" :]
puts [concat {a b} c {d e}]
''',
    "return_value_and_vars": r'''
proc counter {} {
  variable n
  if {![info exists n]} { set n 0 }
  incr n
  return $n
}
counter
counter
puts [counter]
set x 1
unset x
puts [info exists x]
''',
}
