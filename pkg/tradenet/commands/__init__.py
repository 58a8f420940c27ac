from . import analyze, ingest, renorm, simulate, var

__all__ = ["simulate", "analyze", "ingest", "renorm", "var"]
