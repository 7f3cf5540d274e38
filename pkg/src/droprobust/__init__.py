"""Worst-case data-dropping robustness audits for OLS regression.

Given a fitted regression whose conclusion rests on the sign of one
coefficient, this package asks: can deleting at most a small fraction of
the rows flip that sign? It implements fast additive audits driven by
per-row influence or exact single-deletion scores, greedy drop-and-refit
walks, an exhaustive subset oracle for small data, diagnostics that
explain when and why the fast audits fail, and seeded synthetic
constructions exhibiting each failure mode.
"""

from .core import (
    Dataset,
    DropSet,
    OlsFit,
    coefficient_after_drop,
    downdate_single,
    fit,
    indicator_weights,
    make_dataset,
    refit_without,
)
from .diagnostics import (
    MaskingReport,
    OutlierLimit,
    additive_error_decomposition,
    masking_report,
    outlier_score_sweep,
    prop1_limits,
)
from .errors import (
    BadParamsError,
    BudgetZeroError,
    DropRobustError,
    GroundTruthUnavailableError,
    LeverageOneError,
    NonFiniteError,
    OracleInfeasibleError,
    RankDeficientError,
    UnknownScenarioError,
    WrongDirectionError,
)
from .estimator import DropSensitivityAuditor
from .greedy import (
    GREEDY_AMIP,
    GREEDY_ONE_EXACT,
    GreedyComparison,
    GreedyTrace,
    greedy_audit,
    greedy_failure_check,
)
from .oracle import (
    FAILURE_WITH_RERUN,
    FAILURE_WITHOUT_RERUN,
    NO_FAILURE,
    ROBUST,
    OracleResult,
    brute_force_mip,
    failure_classify,
)
from .report import AuditReport
from .scenarios import SCENARIO_IDS, Scenario, generate
from .scores import (
    ADDITIVE_ONE_EXACT,
    AMIP,
    TO_NEGATIVE,
    TO_POSITIVE,
    AdditiveAudit,
    ScoreVector,
    additive_audit,
    additive_report,
    influence_scores,
    one_exact_scores,
)

__version__ = "0.1.0"
