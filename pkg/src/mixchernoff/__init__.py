"""Chernoff-type tail bounds for weighted random walks on finite Markov chains.

The submodules follow the order of the computation: ``chain_core`` (chains,
stationary laws, pi-geometry), ``spectral`` (spectral expansion),
``mixing`` (mixing times), ``mgf_bounds`` (moment generating functions and
tail bounds), ``montecarlo`` (seeded simulation), ``constructions`` (example
chains) and ``chainfile``/``cli`` (documents and the command line).
"""

from .chain_core import (
    ChainModel,
    Generator,
    check_ergodic,
    decompose,
    matrix_exponential,
    pi_inner_product,
    pi_norm,
    stationary_distribution,
)
from .constructions import build_random_chain, build_split_chain, build_two_state
from .mgf_bounds import (
    WeightSchedule,
    bound_continuous,
    bound_mixing,
    bound_spectral,
    bound_union_variant,
    brute_force_mgf,
    choose_r,
    exact_mgf,
    mgf_recurrence,
)
from .mixing import mixing_time_continuous, mixing_time_discrete
from .montecarlo import empirical_tail
from .spectral import spectral_expansion

__version__ = "0.1.0"
