import json
import logging
import math
from collections import Counter, defaultdict, deque
from functools import lru_cache

import numpy as np

from tabkey.exceptions import PredictorError, TabkeyError
from tabkey.vocab import Vocab

from . import BasePredictor, PredictorSession

logger = logging.getLogger(__name__)


class NgramModel:
    """Token n-gram counts queried with stupid backoff.

    A token seen after the longest available context scores its relative
    frequency there; every other token scores `backoff_factor` times its
    score under the next shorter context, down to add-one smoothed
    unigrams. Scores are normalised over the whole vocabulary.
    """

    def __init__(self, order, vocab_size, unigrams, tables, backoff_factor=0.4):
        if order < 1:
            raise ValueError("n-gram order must be at least 1")
        if not 0.0 < backoff_factor < 1.0:
            raise ValueError("backoff factor must lie strictly between 0 and 1")
        self.order = order
        self.vocab_size = vocab_size
        self.backoff_factor = backoff_factor
        self.unigrams = dict(unigrams)
        self.tables = {tuple(context): dict(nexts) for context, nexts in tables.items()}

        counts = np.zeros(vocab_size, dtype=np.float64)
        for token, count in self.unigrams.items():
            counts[token] = count
        self._unigram = (counts + 1.0) / (counts.sum() + vocab_size)
        self._seen = {}
        for context, nexts in self.tables.items():
            ids = np.fromiter(nexts.keys(), dtype=np.int64, count=len(nexts))
            freq = np.fromiter(nexts.values(), dtype=np.float64, count=len(nexts))
            self._seen[context] = (ids, freq / freq.sum())

    @classmethod
    def fit(cls, sequences, order, vocab_size, backoff_factor=0.4):
        if order < 1:
            raise ValueError("n-gram order must be at least 1")
        unigrams = Counter()
        tables = defaultdict(Counter)
        fitted = 0
        for sequence in sequences:
            sequence = tuple(sequence)
            if not sequence:
                continue
            fitted += 1
            for i, token in enumerate(sequence):
                if not 0 <= token < vocab_size:
                    raise TabkeyError(f"Token {token} is outside a vocabulary of {vocab_size}")
                unigrams[token] += 1
                for n in range(2, order + 1):
                    if i - (n - 1) < 0:
                        break
                    tables[sequence[i - (n - 1):i]][token] += 1
        if not fitted:
            raise TabkeyError("Cannot fit an n-gram model without a non-empty sequence")
        logger.info(
            f"Fitted order-{order} model on {fitted} sequences "
            f"({sum(unigrams.values())} tokens, {len(tables)} contexts)")
        return cls(order, vocab_size, unigrams, tables, backoff_factor)

    def scores(self, history):
        """Unnormalised backoff scores for the token after `history`."""
        history = tuple(history)
        usable = min(len(history), self.order - 1)
        scores = self._unigram.copy()
        for length in range(1, usable + 1):
            scores *= self.backoff_factor
            seen = self._seen.get(history[len(history) - length:])
            if seen is not None:
                ids, ratios = seen
                scores[ids] = ratios
        return scores

    def distribution(self, history):
        scores = self.scores(history)
        return scores / scores.sum()

    def perplexity(self, sequences):
        log_prob = 0.0
        events = 0
        for sequence in sequences:
            for i in range(1, len(sequence)):
                log_prob += math.log(self.distribution(sequence[max(0, i - self.order + 1):i])[sequence[i]])
                events += 1
        if not events:
            raise TabkeyError("Perplexity needs at least one sequence of two tokens")
        return math.exp(-log_prob / events)

    def to_dict(self):
        return {
            'order': self.order,
            'vocab_size': self.vocab_size,
            'backoff_factor': self.backoff_factor,
            'unigrams': sorted(self.unigrams.items()),
            'tables': [
                [list(context), sorted(nexts.items())]
                for context, nexts in sorted(self.tables.items())
            ],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            tables = {
                tuple(context): {int(t): int(c) for t, c in nexts}
                for context, nexts in data['tables']
            }
            unigrams = {int(t): int(c) for t, c in data['unigrams']}
            return cls(data['order'], data['vocab_size'], unigrams, tables,
                       data['backoff_factor'])
        except (KeyError, TypeError, ValueError) as exc:
            raise TabkeyError(f"Malformed n-gram model: {exc}") from exc


class NgramSession(PredictorSession):
    """Keeps only the last `order - 1` tokens, so `append` is O(order)."""

    def __init__(self, predictor, source_id=None):
        super().__init__(predictor, source_id=source_id)
        self._history = deque(maxlen=max(predictor.model.order - 1, 0))
        self._length = 0

    @property
    def position(self):
        return self._length

    def append(self, token):
        self._history.append(token)
        self._length += 1

    def context(self):
        return tuple(self._history)


class NgramPredictor(BasePredictor):
    session_class = NgramSession

    def __init__(self, vocab, model, cache_size=65536):
        if model.vocab_size != len(vocab):
            raise PredictorError(
                f"Model was fitted for {model.vocab_size} tokens, vocabulary has {len(vocab)}")
        super().__init__(vocab)
        self.model = model
        self._distribution = lru_cache(maxsize=cache_size)(model.distribution)

    @classmethod
    def fit(cls, vocab, sequences, order=4, backoff_factor=0.4):
        return cls(vocab, NgramModel.fit(sequences, order, len(vocab), backoff_factor))

    def distribution(self, context):
        context = tuple(context)
        if self.model.order > 1:
            context = context[-(self.model.order - 1):]
        else:
            context = ()
        # cached arrays are shared between callers and must not be mutated
        return self._distribution(context)

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump({'vocab': self.vocab.to_dict(), 'model': self.model.to_dict()},
                      f, ensure_ascii=False)
            f.write('\n')

    @classmethod
    def load(cls, path):
        with open(path, 'r', encoding='utf-8') as f:
            try:
                data = json.load(f)
            except ValueError as exc:
                raise TabkeyError(f"{path} is not an n-gram model file: {exc}") from exc
        try:
            return cls(Vocab.from_dict(data['vocab']), NgramModel.from_dict(data['model']))
        except KeyError as exc:
            raise TabkeyError(f"{path} lacks the {exc} section") from exc
