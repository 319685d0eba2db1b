"""Symptom-text cardiovascular risk triage.

Free-text symptom narratives are embedded into fixed-length vectors
(mock, file-backed, or remote provider), classified high/low risk by a
from-scratch Random Forest, and audited by rule-based verification.
Includes the full evaluation and expert-review statistics toolkit plus a
reproducible CLI.
"""

from .corpus import (
    Dataset,
    DatasetSplit,
    SplitSpec,
    SymptomRecord,
    generate_synthetic,
    load_records,
    save_records,
    split,
)
from .embed import (
    EmbeddingStore,
    ProviderConfig,
    embed_text,
    make_provider,
    mock_embed,
    store_read,
    store_write,
)
from .forest import (
    ForestConfig,
    Prediction,
    RandomForestModel,
    fit,
    load_model,
    mdi_importances,
    predict,
    save_model,
    top_k_importances,
)
from .metrics import (
    ConfusionMatrix,
    EvaluationReport,
    accuracy,
    cohen_kappa,
    confusion,
    evaluate,
    f1,
    precision,
    recall,
    review_summary,
    roc_auc,
)
from .tokenizer import TokenSequence, Vocabulary, encode, normalize, wordpiece
from .verify import Lexicon, VerificationReport, verify_prediction

__version__ = "0.1.0"
