"""Product expansion of multiple integrals of a compensated jump measure,
with exact pathwise verification on simulated compound-Poisson paths."""

from ._backend import BACKEND
from .combinatorics import (PairedMultiIndex, SubsetIndex, admissible_pairs, chi,
                            enumerate_upsilon, is_admissible, term_coefficient,
                            term_degree)
from .errors import DomainError, NonFiniteError, ResourceError
from .expansion import (Expansion, ExpansionTerm, expand_pair, expand_product,
                        expected_value, merge_terms)
from .kernelspace import (LevyMeasureSpec, StateSpace, SymmetricKernel, TimeGrid,
                          apply_contraction_pattern, contract_integrated,
                          identify_diagonal, inner, is_symmetric, kernel_from_json,
                          kernel_to_json, norm, pair_contraction, random_kernel,
                          symmetrize, tensor)
from .levy import (ExponentialSpec, IntegralEvaluator, JumpPath,
                   eval_exponential_functional, eval_multiple_integral,
                   eval_truncated_chaos, exponential_chaos_kernel, simulate_counts,
                   simulate_path)
from .verify import (VerificationConfig, VerificationReport, verify_exponential,
                     verify_isometry, verify_pair_vs_general,
                     verify_product_pathwise)

__version__ = "0.1.0"
