"""Hardware build orchestration driven by Tcl-subset ``.hbs`` core descriptions."""

__version__ = "0.1.0"
