"""From-scratch CNN classifier: layers, training, metrics, comparison."""

from swallowmon.classifier.compare import (  # noqa: F401
    ComparisonReport,
    ModelReport,
    compare_models,
    comparison_from_json,
    comparison_to_json,
)
from swallowmon.classifier.metrics import (  # noqa: F401
    HealthIndex,
    Metrics,
    evaluate,
    health_index,
    metrics_from_json,
    metrics_from_scores,
    metrics_to_json,
    roc_points,
)
from swallowmon.classifier.network import (  # noqa: F401
    Model2DConfig,
    ModelConfig,
    Network,
    Network2D,
    build_2d_network,
    build_network,
    fit_length,
    load_checkpoint,
    model_version,
    save_checkpoint,
)
from swallowmon.classifier.training import (  # noqa: F401
    TrainConfig,
    TrainLog,
    gradient_check,
    split_by_subject,
    train,
    trainlog_to_csv,
)
