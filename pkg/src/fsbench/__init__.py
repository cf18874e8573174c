"""fsbench: benchmark feature-selection methods on tabular classification data.

Evaluates configurable feature-selection methods against downstream
classifiers with bootstrap optimism correction, Nogueira subset stability,
per-feature selection reliability, and true/false-discovery recovery on a
semi-synthetic outcome with a known truth model.
"""

from .classifiers import ClassifierSpec, FittedModel, fit, predict_proba
from .data import (Dataset, FeatureMeta, PreprocessState, Resample,
                   apply_preprocess, fit_preprocess, load_csv, make_resamples)
from .embedded import (LassoFit, LambdaPath, adaptive_lasso_select, bolasso_select,
                       cv_lambda_path, fit_lasso_logistic, lasso_lambda_max,
                       lasso_select, stability_selection_select)
from .engine import (BenchmarkConfig, MethodConfig, ReportBundle, SimulationConfig,
                     run_benchmark)
from .errors import ConfigError, DataError, FsbenchError, ResampleError
from .filters import (FeatureScores, SelectionResult, bh_adjust, greedy_mi_select,
                      hcluster_select, mrmr_select, padjust_union_filter,
                      random_select, relieff_score, score_statistical, select_top_k)
from .metrics import (BinaryMetrics, PerformanceEstimate, RecoveryMetrics,
                      SelectionEnsemble, binary_metrics, dot632_correct,
                      dot632plus_correct, harrell_correct, high_confidence_counts,
                      instability_index, no_information_score, nogueira_stability,
                      rank_auc, recovery_metrics, selection_frequencies)
from .prefilter import VifReport, compute_vif, iterative_vif_filter
from .report import generate_report, render_markdown
from .simulation import (RecoverySummary, SimulationSpec, fit_truth_model,
                         run_recovery_experiment, simulate_outcome,
                         truth_from_top_features)
from .wrappers import forward_select, rfe_select

__version__ = "0.1.0"
