import numpy as np
import pytest

from cardiotriage.corpus import Dataset, SymptomRecord
from cardiotriage.tokenizer import Vocabulary

TOY_VOCAB_ENTRIES = (
    "[PAD]",
    "[UNK]",
    "[CLS]",
    "[SEP]",
    "short",
    "##ness",
    "of",
    "breath",
    "chest",
    "pain",
    "tight",
    "!",
    "-",
    ",",
    "fatigue",
    "palpitations",
    "denies",
    "no",
    "breathless",
    "##less",
    "the",
)


@pytest.fixture
def toy_vocab() -> Vocabulary:
    return Vocabulary(TOY_VOCAB_ENTRIES)


@pytest.fixture
def tiny_dataset() -> Dataset:
    return Dataset(
        (
            SymptomRecord(id="a", text="crushing chest pain since morning", label=1),
            SymptomRecord(id="b", text="sudden shortness of breath today", label=1),
            SymptomRecord(id="c", text="severe chest tightness tonight", label=1),
            SymptomRecord(id="d", text="mild fatigue after exercise yesterday", label=0),
            SymptomRecord(id="e", text="occasional palpitations after coffee today", label=0),
            SymptomRecord(id="f", text="feels well, no chest pain today", label=0),
        )
    )


@pytest.fixture
def separable_xy():
    """40 points in 6 dims, classes split cleanly by dimension 2."""
    rng = np.random.default_rng(7)
    X = rng.normal(size=(40, 6))
    y = np.array([1] * 20 + [0] * 20)
    X[:, 2] += np.where(y == 1, 4.0, -4.0)
    return X, y
