"""Reference Tcl shell driven through the system libtcl (test-time oracle only).

Run as a script it evaluates the Tcl source read from stdin and prints
``error: <message>`` after any output when evaluation fails.
"""
from __future__ import annotations

import ctypes
import ctypes.util
import os
import subprocess
import sys

LIB_NAMES = ("libtcl8.6.so.0", "libtcl8.6.so", "libtcl8.6.dylib")


def _load():
    names = list(LIB_NAMES)
    found = ctypes.util.find_library("tcl8.6")
    if found:
        names.insert(0, found)
    for name in names:
        try:
            return ctypes.CDLL(name)
        except OSError:
            continue
    return None


def available() -> bool:
    lib = _load()
    if lib is None:
        return False
    # Tcl_Init needs the script library; probe in a child so a failure cannot hurt us
    probe = subprocess.run([sys.executable, __file__], input=b"puts ok", capture_output=True, timeout=30)
    return probe.returncode == 0 and probe.stdout == b"ok\n"


def run_reference(script: str, cwd: str | None = None) -> str:
    proc = subprocess.run([sys.executable, os.path.abspath(__file__)], input=script.encode(),
                          capture_output=True, timeout=30, cwd=cwd)
    if proc.returncode != 0:
        raise RuntimeError(proc.stderr.decode())
    return proc.stdout.decode()


def _main() -> int:
    lib = _load()
    if lib is None:
        print("libtcl not found", file=sys.stderr)
        return 3
    lib.Tcl_CreateInterp.restype = ctypes.c_void_p
    lib.Tcl_GetStringResult.restype = ctypes.c_char_p
    lib.Tcl_FindExecutable(None)
    interp = ctypes.c_void_p(lib.Tcl_CreateInterp())
    if lib.Tcl_Init(interp) != 0:
        print(lib.Tcl_GetStringResult(interp).decode(), file=sys.stderr)
        return 3
    code = lib.Tcl_Eval(interp, sys.stdin.read().encode())
    message = lib.Tcl_GetStringResult(interp).decode()
    lib.Tcl_Eval(interp, b"flush stdout")
    if code == 1:
        sys.stdout.write(f"error: {message}\n")
    return 0


if __name__ == "__main__":
    sys.exit(_main())
