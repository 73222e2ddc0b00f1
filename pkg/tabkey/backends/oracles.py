"""Reference predictors with known answers, used to pin down the metric."""
import json
from collections import Counter, defaultdict

import numpy as np

from tabkey.exceptions import PredictorError, TabkeyError

from . import BasePredictor, PredictionResult, PredictorSession, TopkEntry


class UniformPredictor(BasePredictor):
    """Every token equally likely, so ranks follow token ids."""

    def distribution(self, context):
        size = len(self.vocab)
        return np.full(size, 1.0 / size)


class MemorizingPredictor(BasePredictor):
    """Puts all mass on the continuations seen after an exact prefix.

    Contexts that are not a prefix of any memorised sequence get a uniform
    distribution.
    """

    def __init__(self, vocab, sequences):
        super().__init__(vocab)
        self._next = defaultdict(Counter)
        for sequence in sequences:
            sequence = tuple(sequence)
            for i in range(1, len(sequence)):
                self._next[sequence[:i]][sequence[i]] += 1

    def distribution(self, context):
        size = len(self.vocab)
        seen = self._next.get(tuple(context))
        if not seen:
            return np.full(size, 1.0 / size)
        probs = np.zeros(size)
        total = sum(seen.values())
        for token, count in seen.items():
            probs[token] = count / total
        return probs


class ScriptedSession(PredictorSession):
    """Structural tags join the context without using up a scripted rank."""

    def __init__(self, predictor, source_id=None):
        super().__init__(predictor, source_id=source_id)
        self._typed = 0

    def append(self, token):
        super().append(token)
        if not self.predictor.vocab.is_special(token):
            self._typed += 1

    def rank_and_topk(self, target, k):
        if self._typed == 0:
            raise PredictorError("Cannot rank without context", position=self.position)
        rank = self.predictor.scripted_rank(self.source_id, self._typed, self.position)
        return self.predictor.result(target, rank, k)


class ScriptedPredictor(BasePredictor):
    """Answers with ranks given up front, one per ranked position.

    `ranks` is either a list (position 1 first) shared by every sequence or
    a mapping from source id to such a list. The implied ordering puts the
    target at its scripted rank and fills every other slot with the
    remaining ids in ascending order; the probability of rank r is
    proportional to 1/r. `vocab_size` may exceed the real vocabulary so
    deep ranks can be scripted.
    """
    session_class = ScriptedSession

    def __init__(self, vocab, ranks, vocab_size=None):
        super().__init__(vocab)
        self.ranks = ranks
        self.vocab_size = vocab_size or len(vocab)
        if self.vocab_size < len(vocab):
            raise PredictorError("Scripted vocabulary cannot be smaller than the real one")
        self._norm = float((1.0 / np.arange(1, self.vocab_size + 1)).sum())

    @classmethod
    def load(cls, vocab, path, vocab_size=None):
        with open(path, 'r', encoding='utf-8') as f:
            try:
                ranks = json.load(f)
            except ValueError as exc:
                raise TabkeyError(f"{path} is not a rank script: {exc}") from exc
        if not isinstance(ranks, (list, dict)):
            raise TabkeyError(f"{path} must hold a list of ranks or a mapping of lists")
        return cls(vocab, ranks, vocab_size=vocab_size)

    def _script_for(self, source_id):
        if isinstance(self.ranks, dict):
            try:
                return self.ranks[source_id]
            except KeyError:
                raise PredictorError(f"No scripted ranks for {source_id!r}") from None
        return self.ranks

    def distribution(self, context):
        raise PredictorError("Scripted predictors have no sampling distribution")

    def candidates(self, context):
        raise PredictorError("Scripted predictors have no sampling distribution")

    def scripted_rank(self, source_id, typed, position=None):
        """Rank scripted for the `typed`-th typed token; errors name `position`."""
        position = typed if position is None else position
        script = self._script_for(source_id)
        if not 1 <= typed <= len(script):
            raise PredictorError(
                f"Script for {source_id!r} has {len(script)} ranks", position=position)
        rank = int(script[typed - 1])
        if not 1 <= rank <= self.vocab_size:
            raise PredictorError(
                f"Scripted rank {rank} is outside 1..{self.vocab_size}", position=position)
        return rank

    def result(self, target, rank, k):
        k = min(k, self.vocab_size)
        fillers = (i for i in range(self.vocab_size) if i != target)
        head = []
        for slot in range(1, k + 1):
            token = target if slot == rank else next(fillers)
            head.append(TopkEntry(token, self.vocab.decode(token), (1.0 / slot) / self._norm))
        return PredictionResult(target, rank, (1.0 / rank) / self._norm, tuple(head))

    def _rank(self, context, target, k):
        typed = sum(1 for token in context if not self.vocab.is_special(token))
        return self.result(target, self.scripted_rank(None, typed, len(context)), k)
