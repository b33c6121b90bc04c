"""Pareto-archive optimization of monotone submodular functions under
multiple cost constraints, with a max-coverage experiment harness."""

__version__ = "0.1.0"
