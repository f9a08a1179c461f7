"""Approximate FKG inequalities in metastable phases, at testable scale.

Mean-field spin models (generalized Curie-Weiss) and exponential random
graphs share a failure mode: conditioning on a phase destroys the exact
FKG lattice property.  This package measures what survives -- local
lattice conditions near a phase, quantitative positive-association
defects, contraction of monotone couplings, and the CLT consequences --
with exact small-instance oracles backing every sampled estimate.

Submodules: ``lattice`` (partial order, regions, up-sets), ``graphs``
(small graphs and homomorphism counts), ``cutnorm`` (cut distances),
``engine`` (Glauber steps and couplings), ``gcwm`` and ``ergm`` (the two
model families), ``fkglab`` (lattice checks, defects, coupling bounds),
``cltstats`` (covariance bounds and normal-distance diagnostics),
``reporting`` and ``cli`` (deterministic artifacts and the runner).
"""

from . import cltstats, cutnorm, engine, ergm, fkglab, gcwm, graphs, lattice, reporting, rng
from .engine import ContractionEstimate, MeasureSpec, TiltSpec, estimate_contraction
from .ergm import (
    CutBall,
    ErgmSpec,
    edge_triangle_spec,
    ergm_rate_analysis,
    exact_enumeration,
    good_set,
    local_fkg_witness_ergm,
    phase_sampler,
    sigma_n_squared,
)
from .fkglab import (
    BoundInputs,
    check_lattice_condition,
    coupling_experiment_gcwm,
    coupling_rhs,
    exact_defect,
    master_bound,
    sampled_defect,
    threshold_defect,
)
from .gcwm import (
    GcwmParams,
    PhaseBand,
    contraction_alpha,
    exact_magnetization_law,
    find_maximizers,
    local_fkg_witness,
    phase_measure,
)
from .kernels import BACKEND
from .lattice import SpinConfig

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BoundInputs",
    "ContractionEstimate",
    "CutBall",
    "ErgmSpec",
    "GcwmParams",
    "MeasureSpec",
    "PhaseBand",
    "SpinConfig",
    "TiltSpec",
    "check_lattice_condition",
    "cltstats",
    "contraction_alpha",
    "coupling_experiment_gcwm",
    "coupling_rhs",
    "cutnorm",
    "edge_triangle_spec",
    "engine",
    "ergm",
    "ergm_rate_analysis",
    "estimate_contraction",
    "exact_defect",
    "exact_enumeration",
    "exact_magnetization_law",
    "find_maximizers",
    "fkglab",
    "gcwm",
    "good_set",
    "graphs",
    "lattice",
    "local_fkg_witness",
    "local_fkg_witness_ergm",
    "master_bound",
    "phase_measure",
    "phase_sampler",
    "reporting",
    "rng",
    "sampled_defect",
    "sigma_n_squared",
    "threshold_defect",
    "__version__",
]