"""Markov kernels, shrinking-ball posteriors and Dirichlet measures on finite and box-shaped spaces."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .bayes import (BayesianModel, Particles, PosteriorReport, RadiusSchedule, ball_posterior,
                    classical_bayes_posterior, consistency_check, exact_finite_posterior,
                    lopital_posterior, posterior_equivalence_check, posterior_kernel,
                    singular_set_probe)
from .dirichlet import (DirichletParam, DPSample, dir_density, dir_posterior, dir_sample,
                        dirichlet_suite, dp_posterior, dp_project, stick_breaking_sample)
from .errors import (MethodMismatchError, OutsideSpaceError, ProbmorphError, SpaceMismatchError,
                     ZeroMassError)
from .kernel import (Kernel, MeasureCloud, MeasureSpace, compose, delta, ev_p, graph, laws_check,
                     parametric, pullback, pushforward_p, pushforward_s)
from .measure import (LabelMap, Measure, PartitionMap, measure_from_spec, pushforward_measure,
                      total_variation)
from .rngstats import SeedLineage, as_lineage
from .spaces import Region, SampleSpace, SimpleFunction
from .statmodel import StatModel, check_sufficiency, fisher_neyman_check

__all__ = [
    "__version__", "BACKEND",
    "SampleSpace", "Region", "SimpleFunction",
    "Measure", "LabelMap", "PartitionMap", "measure_from_spec", "pushforward_measure", "total_variation",
    "Kernel", "MeasureSpace", "MeasureCloud", "delta", "parametric", "compose", "pushforward_p",
    "pushforward_s", "pullback", "ev_p", "graph", "laws_check",
    "StatModel", "check_sufficiency", "fisher_neyman_check",
    "BayesianModel", "Particles", "RadiusSchedule", "PosteriorReport", "exact_finite_posterior",
    "classical_bayes_posterior", "ball_posterior", "lopital_posterior", "singular_set_probe",
    "consistency_check", "posterior_kernel", "posterior_equivalence_check",
    "DirichletParam", "DPSample", "dir_density", "dir_sample", "dir_posterior", "dp_posterior",
    "stick_breaking_sample", "dp_project", "dirichlet_suite",
    "SeedLineage", "as_lineage",
    "ProbmorphError", "SpaceMismatchError", "OutsideSpaceError", "ZeroMassError", "MethodMismatchError",
]
