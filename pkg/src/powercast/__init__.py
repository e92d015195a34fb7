"""Joint multichannel mode decomposition, Bayesian-optimized tuning, and
per-mode LSTM forecasting for renewable power time series."""

__version__ = "0.1.0"
