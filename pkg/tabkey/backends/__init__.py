from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from django.utils.module_loading import import_string

from tabkey.exceptions import PredictorError


class TopkEntry(NamedTuple):
    id: int
    text: str
    prob: float

    def to_dict(self):
        return {'id': self.id, 'text': self.text, 'prob': self.prob}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data['id']), data['text'], float(data['prob']))


@dataclass(frozen=True)
class PredictionResult:
    """Rank of the true next token plus the head of the ordering it came from."""
    target: int
    target_rank: int
    target_prob: float
    topk: Tuple[TopkEntry, ...]

    def validate(self, error_class=PredictorError, position=None):
        if self.target_rank < 1:
            raise error_class(f"Rank {self.target_rank} is not 1-based", position)
        if not 0.0 <= self.target_prob <= 1.0:
            raise error_class(f"Probability {self.target_prob} is outside [0, 1]", position)
        for before, after in zip(self.topk, self.topk[1:]):
            if after.prob > before.prob:
                raise error_class("Top-k probabilities are not non-increasing", position)
        for index, entry in enumerate(self.topk):
            if not 0.0 <= entry.prob <= 1.0:
                raise error_class(f"Top-k probability {entry.prob} is outside [0, 1]", position)
            if entry.id == self.target and index + 1 != self.target_rank:
                raise error_class(
                    f"Target listed at top-k slot {index + 1} but ranked {self.target_rank}",
                    position)
        if self.target_rank <= len(self.topk) and self.topk[self.target_rank - 1].id != self.target:
            raise error_class(
                f"Rank {self.target_rank} but top-k slot holds token {self.topk[self.target_rank - 1].id}",
                position)
        return self


def ordering(probs):
    """Token ids sorted by descending probability, ties by ascending id."""
    ids = np.arange(len(probs))
    return np.lexsort((ids, -probs))


def rank_from_distribution(probs, target, k, vocab):
    """Rank `target` against a full-vocabulary probability vector."""
    size = len(probs)
    if not 0 <= target < size:
        raise PredictorError(f"Target token {target} is outside the vocabulary")
    p_target = probs[target]
    rank = int(np.count_nonzero(probs > p_target)) + int(np.count_nonzero(probs[:target] == p_target)) + 1

    k = min(k, size)
    threshold = np.partition(probs, size - k)[size - k]
    candidates = np.flatnonzero(probs >= threshold)
    head = candidates[np.lexsort((candidates, -probs[candidates]))][:k]
    topk = tuple(
        TopkEntry(int(i), vocab.decode(int(i)), float(probs[i])) for i in head)
    return PredictionResult(target, rank, float(p_target), topk)


class PredictorSession:
    """Incremental context for one sequence. Sessions are single-owner."""

    def __init__(self, predictor, source_id=None):
        self.predictor = predictor
        self.source_id = source_id
        self._context = []

    @property
    def position(self):
        """Number of tokens appended so far."""
        return len(self._context)

    def append(self, token):
        self._context.append(token)

    def extend(self, tokens):
        for token in tokens:
            self.append(token)

    def context(self):
        return tuple(self._context)

    def rank_and_topk(self, target, k):
        if self.position == 0:
            raise PredictorError("Cannot rank without context", position=0)
        return self.predictor._rank(self.context(), target, k)


class BasePredictor:
    """Ranks the next token of a context against the whole vocabulary.

    Subclasses implement `distribution`; everything else is derived from it.
    Predictors are immutable once built and may be queried from several
    threads; per-sequence state lives in sessions.
    """
    session_class = PredictorSession

    def __init__(self, vocab):
        self.vocab = vocab

    def distribution(self, context):
        raise NotImplementedError

    def rank_and_topk(self, context, target, k):
        context = tuple(context)
        if not context:
            raise PredictorError("Cannot rank without context", position=0)
        if k < 1:
            raise ValueError("k must be at least 1")
        return self._rank(context, target, k)

    def _rank(self, context, target, k):
        return rank_from_distribution(self.distribution(context), target, k, self.vocab)

    def candidates(self, context):
        """(ids, probs) for sampling, most likely first."""
        probs = self.distribution(tuple(context))
        ids = ordering(probs)
        return ids, probs[ids]

    def session(self, source_id=None):
        return self.session_class(self, source_id=source_id)

    def close(self):
        pass


def get_predictor_class(label: str, backends: Optional[dict] = None):
    if backends is None:
        from tabkey.conf import TABKEY_PREDICTOR_BACKENDS as backends
    try:
        return import_string(backends[label])
    except KeyError:
        raise PredictorError(f"No predictor backend called {label!r}") from None
