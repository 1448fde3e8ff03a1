"""Mixture-of-Gaussians testbed for preference-alignment pipeline ordering.

Compares distill-then-align against align-then-distill across PPO, GRPO,
and DPO trainers, with log-density precision/recall metrics and a seeded
sweep harness.
"""

from .align import AlignConfig, TrainLog, align, dpo_align, dpo_loss, grpo_align, ppo_align
from .distill import FitConfig, fit_mle, prune_components, run_kd, run_sft
from .metrics import (
    MetricsReport,
    evaluate_metrics,
    high_reward_fraction,
    normalization_check,
    starvation_factor,
)
from .models import (
    GroundTruthSpec,
    InvalidParameterError,
    MoGGrad,
    MoGParams,
    grad_log_density,
    log_density,
    make_ground_truth,
    make_target,
    sample,
    tempered_weights,
    weights_of,
)
from .numerics import (
    OptimizerState,
    ScalarBaseline,
    TrainingDiverged,
    baseline_update,
    finite_diff_check,
    random_check_instance,
    sgd_step,
)
from .pipeline import PipelineConfig, PipelineFailure, PipelineResult, run_pipeline
from .reward import (
    PreferencePair,
    RewardSpec,
    fold_reward,
    oracle_reward,
    prefer,
    shaped_reward,
)
from .sweep import (
    BoxStats,
    SweepResult,
    SweepRow,
    SweepSpec,
    boxplot_stats,
    emit_report,
    load_results_csv,
    run_sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
