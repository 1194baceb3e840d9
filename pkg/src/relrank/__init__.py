"""Rank-based relative reward shaping for group-based policy optimization,
plus a desk-scale simulator that reproduces the training dynamics the
shaping is designed around."""

from .core import (
    INFINITE,
    SENTINEL_MAX,
    Group,
    NormMode,
    RankVector,
    Response,
    ShapedGroup,
    ShapingConfig,
    ShapingMode,
    clip_advantages,
    group_advantage,
    hierarchical_rerank,
    length_bin,
    partition_subgroups,
    rank_pipeline,
    shape_group,
    shape_hrr,
    shape_prr,
)
from .engine import (
    Algorithm,
    Difficulty,
    RunLog,
    RunLogRecord,
    SyntheticTask,
    TabularPolicy,
    TrainerConfig,
    evaluate,
    grpo_update,
    make_task,
    rloo_advantage,
    run_training,
    sample_group,
)
from .metrics import (
    DispersionStats,
    EffectiveStats,
    dispersion_series,
    effective_ratio,
    popoviciu_check,
)
from .rankers import (
    BTModel,
    ExternalRanker,
    FixedRanker,
    LabelSource,
    NoisyScalarRanker,
    OracleRanker,
    RankLabel,
    bt_fit,
    bt_gradient,
    build_ranking_labels,
    make_ranker,
    oracle_rank,
    rank_by_scores,
    tournament_select,
)

__version__ = "0.1.0"
