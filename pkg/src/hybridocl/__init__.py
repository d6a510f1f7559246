"""Instance-model generation under OCL invariants with search and SMT."""

__version__ = "0.1.0"
