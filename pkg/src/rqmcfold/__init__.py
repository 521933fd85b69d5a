"""Randomized quasi-Monte Carlo with scrambled digital nets and local antithetic folds."""

__version__ = "0.1.0"

from rqmcfold.analysis import (
    anova_sigmas,
    check_net,
    gain_coefficients,
    gain_table,
    predicted_variance,
    star_discrepancy,
    wavelet_sigma,
)
from rqmcfold.digitspace import (
    DigitExpansion,
    DigitPoint,
    ElementaryInterval,
    PointSet,
    from_digits,
    interval_center,
    interval_index,
    read_point_set,
    to_digits,
    write_point_set,
)
from rqmcfold.fold import (
    balanced_rho,
    box_fold,
    fold_sequence,
    monomial_net,
    reflect,
    reflect_coordinate,
    reflection_net,
)
from rqmcfold.netgen import NetSpec, faure_matrices, generate_net, sequence_point
from rqmcfold.quadrature import ExperimentConfig, estimate, fit_rate, integrand_catalog, rmse_experiment
from rqmcfold.scramble import ScrambleKind, apply_scramble, make_scramble
