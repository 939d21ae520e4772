"""Quanto option pricing with stochastic volatility and empirical copulas."""

__version__ = "0.1.0"

from .blackscholes import BsQuote, bs_call, bs_implied_vol, bs_vega
from .copula import (ExpertMatrix, KernelCopula, calibrate_frank_alpha, copula_eval, copula_sample,
                     generate_expert_matrix, kernel_cdf, kernel_marginal_cdf)
from .errors import ConvergenceError, DomainError, NoSolutionError, QuantoError
from .experiments import CASES, CaseSpec, case_spec, emit_smile, run_case
from .heston import DswParams, SimGrid, simulate_dsw_joint, simulate_heston_terminal
from .marginals import EmpiricalMarginal, marginal_from_samples, quantile
from .market import REFERENCE_MARKET, ContractSpec, HestonParams, MarketConfig, quanto_payoff
from .pricing import PriceResult, price_copula, price_dsw, price_practitioner

__all__ = [
    "BsQuote", "bs_call", "bs_implied_vol", "bs_vega",
    "ExpertMatrix", "KernelCopula", "calibrate_frank_alpha", "copula_eval", "copula_sample",
    "generate_expert_matrix", "kernel_cdf", "kernel_marginal_cdf",
    "ConvergenceError", "DomainError", "NoSolutionError", "QuantoError",
    "CASES", "CaseSpec", "case_spec", "emit_smile", "run_case",
    "DswParams", "SimGrid", "simulate_dsw_joint", "simulate_heston_terminal",
    "EmpiricalMarginal", "marginal_from_samples", "quantile",
    "REFERENCE_MARKET", "ContractSpec", "HestonParams", "MarketConfig", "quanto_payoff",
    "PriceResult", "price_copula", "price_dsw", "price_practitioner",
]
