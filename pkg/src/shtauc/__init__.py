"""Sparse AUC maximization by stochastic hard thresholding."""
from .data import (PlantedTruth, SyntheticSpec, generate_synthetic, load_libsvm,
                   save_libsvm, split_and_shuffle)
from .errors import (ArgumentError, ConfigError, DegenerateDataError, DimensionError,
                     DivergenceError, EmptyDatasetError, LabelError, ParseError,
                     ShtAucError, TheoryDomainError, UndefinedMetricError)
from .linalg import hard_threshold, project, select_kth_magnitude
from .metrics import (EvalReport, auc_score, related_ratio, support_f1,
                      support_jaccard)
from .objective import (BlockPartition, ClassMeans, Dataset, ErmProblem,
                        block_gradient, class_means, erm_objective, full_gradient,
                        hessian_quadratic_form, make_blocks, pairwise_objective)
from .optimizer import (OptimizerConfig, TrainTrace, sht_auc_train,
                        stoiht_logistic_train)

__version__ = "0.1.0"
