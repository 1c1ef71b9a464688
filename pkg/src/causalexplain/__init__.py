"""Generate data from known causal graphs, fit regressors, explain them, and
check the explanations against what the graph implies."""

__version__ = "0.1.0"
