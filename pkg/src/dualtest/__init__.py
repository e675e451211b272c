"""Diverse multi-kernel two-sample and independence testing.

Learn a pool of kernels by maximizing a covariance-studentized multivariate
U-statistic on a training split, then test on held-out data with
sign-alignment selection and a wild-bootstrap threshold.
"""

from .bench import (TestConfig, Variant, VARIANTS, PowerReport, TrialResult,
                    ablation_suite, estimate_rate, run_trial, run_trials,
                    summarize, write_csv, write_json)
from .bootstrap import TestResult, run_test
from .data import (ALT, INDEPENDENCE, NULL, TWO_SAMPLE, DatasetSpec,
                   export_csv, gen_blob, gen_indep, generate,
                   split_train_test)
from .estimator import HSICDualTest, MMDDualTest
from .kernels import (FAMILIES, GAUSSIAN, LAPLACIAN, MAHALANOBIS, HStack,
                      IndepData, KernelSpec, TwoSampleData, build_h_stack,
                      gaussian, h_hsic, h_hsic_matrix, h_mmd, h_mmd_matrix,
                      laplacian, mahalanobis)
from .selection import alignment, selected_stat, signum
from .selfcheck import run_selfcheck
from .train import (TrainConfig, TrainedPool, grad_objective,
                    init_pool_median, learn_kernels, objective)
from .ustats import (MultiU, NullCov, SqrtInv, aggregated_stat,
                     default_lambda, estimate_null_cov, multi_u,
                     null_resample, relative_diversity, sqrt_inv, u_stat)

__version__ = "0.1.0"

__all__ = [
    "ALT", "FAMILIES", "GAUSSIAN", "HSICDualTest", "HStack", "INDEPENDENCE",
    "IndepData", "KernelSpec", "LAPLACIAN", "MAHALANOBIS", "MMDDualTest",
    "MultiU", "NULL", "NullCov", "PowerReport", "SqrtInv", "TWO_SAMPLE",
    "TestConfig", "TestResult", "TrainConfig", "TrainedPool", "TrialResult",
    "TwoSampleData", "VARIANTS", "Variant", "ablation_suite",
    "aggregated_stat", "alignment", "build_h_stack", "DatasetSpec",
    "default_lambda", "estimate_null_cov", "estimate_rate", "export_csv",
    "gaussian", "gen_blob", "gen_indep", "generate", "grad_objective",
    "h_hsic", "h_hsic_matrix", "h_mmd", "h_mmd_matrix", "init_pool_median",
    "laplacian", "learn_kernels", "mahalanobis", "multi_u", "null_resample",
    "objective", "relative_diversity", "run_selfcheck", "run_test",
    "run_trial", "run_trials", "selected_stat", "signum", "split_train_test",
    "sqrt_inv", "summarize", "u_stat", "write_csv", "write_json",
]
