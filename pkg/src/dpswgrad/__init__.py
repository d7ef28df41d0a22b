"""Differentially private (sliced) Wasserstein gradients and fair DP-SGD training.

The package is organized around one pipeline:

- :mod:`dpswgrad.ot_core` -- exact 1D squared Wasserstein distance between
  empirical measures and its closed-form gradient via quantile couplings.
- :mod:`dpswgrad.sliced` -- Monte-Carlo sliced extension over random unit
  directions.
- :mod:`dpswgrad.models` -- small analytic models with exact per-sample
  Jacobians (no autodiff framework).
- :mod:`dpswgrad.dp_gradient` -- inner-clipped Wasserstein gradient proxy and
  penalized fairness objective gradients.
- :mod:`dpswgrad.sensitivity` -- closed-form sensitivity bounds, an empirical
  sensitivity auditor, and the W_p counterexample.
- :mod:`dpswgrad.privacy` -- Gaussian mechanism, GDP accounting for
  subsampled compositions, and noise calibration.
- :mod:`dpswgrad.data` -- synthetic biased dataset generator and class
  partitioning.
- :mod:`dpswgrad.fairness_train` -- the DP-SGD training loop with fairness
  penalties and metrics.
- :mod:`dpswgrad.cli` -- reproducible command-line experiments.
"""

__version__ = "0.1.0"
