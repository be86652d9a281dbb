"""Zero-shot action classification toolkit.

Maps feature histograms into a word-embedding space with kernel support
vector regression, classifies unseen categories by nearest-prototype
matching with optional transductive self-training and cross-dataset
augmentation, and provides a conventional SVM path for supervised use.
"""

from .data import Codebook, Dataset, SplitSpec, generate_splits, kmeans_codebook, load_dataset, quantize
from .embedding import (
    EmbeddingStore,
    Label,
    cosine_distance,
    embed_label,
    l2_normalize,
    load_embeddings,
    save_embeddings,
    tokenize,
)
from .evaluate import (
    EvaluationReport,
    ExperimentConfig,
    run_multishot_evaluation,
    run_zsl_evaluation,
    simulate_random_guess,
)
from .kernels import KernelSpec, chi2_distance, gram_matrix, heuristic_gamma, kernel_value
from .model_io import load_model, save_model
from .smo import ConvergenceError
from .svc import SvcConfig, SvcModel, classify, decision_values, train_svc
from .svr import (
    SemanticRegressor,
    SvrConfig,
    SvrModel,
    predict,
    predict_batch,
    train_semantic_regressor,
    train_svr,
)
from .zsl import (
    Prediction,
    Prototype,
    SelfTrainConfig,
    ZslProblem,
    augment_training,
    build_prototypes,
    nn_classify,
    self_train,
    training_pair,
    zsl_predict,
)

__version__ = "0.1.0"
