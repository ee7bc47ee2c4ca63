"""fracbd: time-changed birth-death processes with catastrophes.

Library layout (one module per concern):

* :mod:`fracbd.mlfunc` -- Mittag-Leffler and tempered Mittag-Leffler numerics.
* :mod:`fracbd.randgen` -- stable / tempered-stable / inverse-subordinator and
  Mittag-Leffler variate generation on counter-based streams.
* :mod:`fracbd.markov` -- truncated-chain oracle: uniformization, resolvents,
  subordinated probabilities, transformed-system residuals.
* :mod:`fracbd.laplace` -- Laplace-domain transform builders and fixed-Talbot /
  Gaver-Stehfest inversion.
* :mod:`fracbd.analytic` -- closed forms for the linear model: moments,
  extinction and state probabilities, holding-time laws, tempered first-passage
  and effective-catastrophe moments.
* :mod:`fracbd.simulate` -- modified-Gillespie path simulation and batch engines.
* :mod:`fracbd.mcstats` -- Monte Carlo estimates, KS and chi-square harness.
* :mod:`fracbd.cli` -- command-line frontend (``fracbd --help``).
"""

from .analytic import (
    LinearParams,
    catastrophe_time_survival,
    effective_catastrophe_moments,
    extinction_lbdpc,
    mean_lbdpc,
    sojourn_survival,
    state_prob_lbdpc,
    tempered_first_visit_moments,
    tempered_lbdpc,
    var_lbdpc,
)
from .errors import (
    DegenerateModelError,
    FracbdError,
    NonConvergenceError,
    RefinementError,
    RejectionCapError,
    TailMassError,
)
from .markov import ModelSpec, TimeChange, Truncation
from .mlfunc import MLArgs, SeriesControl, ml3, ml_cdf, tempered_ml_survival
from .randgen import RngStream, StableParams
from .simulate import SamplePath, simulate_general, simulate_tc_lbdpc, simulate_tempered_lbdpc

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "LinearParams",
    "ModelSpec",
    "TimeChange",
    "Truncation",
    "MLArgs",
    "SeriesControl",
    "RngStream",
    "StableParams",
    "SamplePath",
    "ml3",
    "ml_cdf",
    "tempered_ml_survival",
    "mean_lbdpc",
    "var_lbdpc",
    "extinction_lbdpc",
    "state_prob_lbdpc",
    "tempered_lbdpc",
    "sojourn_survival",
    "catastrophe_time_survival",
    "tempered_first_visit_moments",
    "effective_catastrophe_moments",
    "simulate_tc_lbdpc",
    "simulate_tempered_lbdpc",
    "simulate_general",
    "FracbdError",
    "NonConvergenceError",
    "TailMassError",
    "DegenerateModelError",
    "RejectionCapError",
    "RefinementError",
]
