"""Exact Banzhaf power for flat and hierarchical voting games."""

__version__ = "0.1.0"

from hvg.counting import (
    CountPair,
    count_naive,
    count_recursive,
    is_balanced_exhaustive,
    is_balanced_local,
    majority_counts_closed_form,
)
from hvg.errors import CapExceededError, DocumentError, DomainError, GameValidationError, HVGError
from hvg.indices import (
    PowerReport,
    PowerValue,
    SampleEstimate,
    bpi_equal_weight_majority,
    bpi_naive,
    bpi_naive_all,
    bpi_sample,
    local_bpi,
    local_ebpi,
    mbpi,
    mbpi_all,
    mebpi,
    mebpi_all,
    power_report,
)
from hvg.model import (
    Coalition,
    GameTree,
    MajorityRule,
    QuotaRule,
    TableRule,
    ancestors,
    eval_implicit,
    eval_local,
    leaves_under,
    local_subgame,
    subgame,
    validate,
)

