"""Keystroke accounting for an emulated top-k autocomplete.

A user composes a text token by token. When the next token is the most
likely prediction, one tab accepts it. When it sits at rank 2..cutoff the
user presses down-arrow rank-1 times plus tab, unless typing the token is
shorter. Beyond the cutoff the token is typed by hand.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, List, Optional

from django.db import models
from django.utils.translation import gettext_lazy as _

from tabkey.backends import TopkEntry
from tabkey.exceptions import EvaluationError, PredictorError
from tabkey.sampling import sample_continuation
from tabkey.vocab import KeystrokeUnit

logger = logging.getLogger(__name__)

TRACE_SCHEMA = 1


class Bucket(models.TextChoices):
    FIRST_TOKEN = 'first_token', _('first token')
    TOP1 = 'top1', _('rank 1')
    TOP2_10 = 'top2_10', _('rank 2 to cutoff')
    OUT = 'out', _('out of top k')


class FirstTokenMode(models.TextChoices):
    MANUAL = 'manual', _('typed by hand')
    FREE = 'free', _('not charged')


def keystroke_charge(rank, text_len, cutoff=10):
    if rank < 1 or text_len < 1 or cutoff < 1:
        raise ValueError("rank, text_len and cutoff must all be at least 1")
    if rank == 1:
        return 1
    if rank <= cutoff:
        return min(rank, text_len)
    return text_len


def bucket_for(rank, cutoff=10):
    if rank == 1:
        return Bucket.TOP1
    if rank <= cutoff:
        return Bucket.TOP2_10
    return Bucket.OUT


def keystrokes_without(tokens, vocab, unit=KeystrokeUnit.CHAR):
    return sum(vocab.token_length(token, unit) for token in tokens)


def ae_ratio(total_with, total_without):
    if total_without <= 0:
        raise EvaluationError("AE ratio is undefined when nothing was typed")
    if not 0 <= total_with <= total_without:
        raise ValueError(f"{total_with} keystrokes with autocomplete exceeds {total_without} without")
    return (total_without - total_with) / total_without


def percent(ratio):
    """'56.8%': one decimal, halves rounded up."""
    value = (Decimal(repr(ratio)) * 100).quantize(Decimal('0.1'), rounding=ROUND_HALF_UP)
    return f"{value}%"


@dataclass(frozen=True)
class Capture:
    """What evaluate_sequence keeps besides ranks and charges."""
    topk: bool = False
    k: int = 10
    continuations: bool = False
    max_tokens: int = 128
    top_p: float = 0.9
    temperature: float = 0.75
    seed: int = 0
    greedy: bool = False


@dataclass(frozen=True)
class TokenOutcome:
    position: int
    token: int
    text: str
    text_len: int
    rank: Optional[int]
    bucket: str
    keystrokes: int
    prob: Optional[float] = None

    def to_dict(self):
        return {
            'position': self.position,
            'token': self.token,
            'text': self.text,
            'text_len': self.text_len,
            'rank': self.rank,
            'bucket': str(self.bucket),
            'keystrokes': self.keystrokes,
            'prob': self.prob,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            position=data['position'],
            token=data['token'],
            text=data['text'],
            text_len=data['text_len'],
            rank=data['rank'],
            bucket=Bucket(data['bucket']),
            keystrokes=data['keystrokes'],
            prob=data.get('prob'),
        )


@dataclass(frozen=True)
class Continuation:
    tokens: List[int]
    text: str
    first_rank: Optional[int]

    def to_dict(self):
        return {'tokens': self.tokens, 'text': self.text, 'first_rank': self.first_rank}

    @classmethod
    def from_dict(cls, data):
        return cls(list(data['tokens']), data['text'], data.get('first_rank'))


@dataclass
class SequenceTrace:
    """Per-token replay of one text under one predictor."""
    source_id: str
    outcomes: List[TokenOutcome]
    cutoff: int = 10
    first_token: str = FirstTokenMode.MANUAL
    unit: str = KeystrokeUnit.CHAR
    stored_topk: Optional[List[Optional[List[TopkEntry]]]] = None
    continuations: Optional[List[Optional[Continuation]]] = None

    @property
    def text(self):
        return ''.join(outcome.text for outcome in self.outcomes)

    @property
    def total_with(self):
        return sum(outcome.keystrokes for outcome in self.outcomes)

    @property
    def total_without(self):
        return sum(outcome.text_len for outcome in self.outcomes)

    @property
    def ranked(self):
        return [outcome for outcome in self.outcomes if outcome.rank is not None]

    @property
    def ae_ratio(self):
        return ae_ratio(self.total_with, self.total_without)

    def to_dict(self):
        data = {
            'schema': TRACE_SCHEMA,
            'source_id': self.source_id,
            'cutoff': self.cutoff,
            'first_token': str(self.first_token),
            'unit': str(self.unit),
            'outcomes': [outcome.to_dict() for outcome in self.outcomes],
            'topk': None,
            'continuations': None,
        }
        if self.stored_topk is not None:
            data['topk'] = [
                None if head is None else [entry.to_dict() for entry in head]
                for head in self.stored_topk
            ]
        if self.continuations is not None:
            data['continuations'] = [
                None if cont is None else cont.to_dict() for cont in self.continuations
            ]
        return data

    @classmethod
    def from_dict(cls, data):
        if data.get('schema') != TRACE_SCHEMA:
            raise EvaluationError(f"Unsupported trace schema {data.get('schema')!r}")
        stored_topk = data.get('topk')
        if stored_topk is not None:
            stored_topk = [
                None if head is None else [TopkEntry.from_dict(e) for e in head]
                for head in stored_topk
            ]
        continuations = data.get('continuations')
        if continuations is not None:
            continuations = [
                None if cont is None else Continuation.from_dict(cont) for cont in continuations
            ]
        return cls(
            source_id=data['source_id'],
            outcomes=[TokenOutcome.from_dict(o) for o in data['outcomes']],
            cutoff=data['cutoff'],
            first_token=FirstTokenMode(data['first_token']),
            unit=KeystrokeUnit(data['unit']),
            stored_topk=stored_topk,
            continuations=continuations,
        )


def _charge(rank, text_len, cutoff):
    # trailing bytes of a character split over tokens cost nothing
    return keystroke_charge(rank, text_len, cutoff) if text_len else 0


def evaluate_sequence(predictor, tokens, vocab, cutoff=10, capture=None,
                      first_token=FirstTokenMode.MANUAL, unit=KeystrokeUnit.CHAR,
                      source_id=''):
    """Replay `tokens` through the emulated autocomplete.

    Special tags are fed to the predictor as context but are never ranked
    or charged. The first typed token has nothing to be predicted from:
    under `manual` it is typed by hand, under `free` it costs nothing.
    Outcome positions count typed tokens only; a predictor failure reports
    its index in `tokens`.
    """
    capture = capture or Capture()
    first_token = FirstTokenMode(first_token)
    tokens = list(tokens)
    if all(vocab.is_special(token) for token in tokens):
        raise EvaluationError(f"{source_id or 'sequence'} has no typeable tokens")

    k = capture.k if capture.topk else 1
    session = predictor.session(source_id=source_id)
    pieces = vocab.decode_pieces(tokens)
    outcomes = []
    stored_topk = [] if capture.topk else None
    continuations = [] if capture.continuations else None

    for index, token in enumerate(tokens):
        if vocab.is_special(token):
            session.append(token)
            continue
        position = len(outcomes)
        text_len = vocab.token_length(token, unit)
        if position == 0:
            outcomes.append(TokenOutcome(
                position=0, token=token, text=pieces[index], text_len=text_len,
                rank=None, bucket=Bucket.FIRST_TOKEN,
                keystrokes=text_len if first_token == FirstTokenMode.MANUAL else 0,
            ))
            if stored_topk is not None:
                stored_topk.append(None)
            if continuations is not None:
                continuations.append(None)
            session.append(token)
            continue
        try:
            result = session.rank_and_topk(token, k)
            continuation = None
            if capture.continuations:
                continuation = _continue(predictor, tokens[:index], capture, position)
        except PredictorError as exc:
            if exc.position is None:
                raise PredictorError(str(exc), index) from exc
            raise
        outcomes.append(TokenOutcome(
            position=position, token=token, text=pieces[index], text_len=text_len,
            rank=result.target_rank, bucket=bucket_for(result.target_rank, cutoff),
            keystrokes=_charge(result.target_rank, text_len, cutoff),
            prob=result.target_prob,
        ))
        if stored_topk is not None:
            stored_topk.append(list(result.topk))
        if continuations is not None:
            continuations.append(continuation)
        session.append(token)

    trace = SequenceTrace(
        source_id=source_id, outcomes=outcomes, cutoff=cutoff,
        first_token=first_token, unit=KeystrokeUnit(unit),
        stored_topk=stored_topk, continuations=continuations,
    )
    logger.debug(
        f"{source_id or 'sequence'}: {trace.total_with} of {trace.total_without} keystrokes "
        f"over {len(outcomes)} tokens")
    return trace


def _continue(predictor, prompt, capture, position):
    generated = sample_continuation(
        predictor, prompt, max_tokens=capture.max_tokens, top_p=capture.top_p,
        temperature=capture.temperature, seed=capture.seed + position,
        greedy=capture.greedy)
    first_rank = None
    if generated:
        first_rank = predictor.rank_and_topk(prompt, generated[0], 1).target_rank
    return Continuation(generated, predictor.vocab.decode_sequence(generated), first_rank)


@dataclass
class KeystrokeBreakdown:
    """Totals in the column order of an evaluation table."""
    total_with: int
    total_without: int
    keys_top10: int
    keys_out: int
    keys_top1: int
    keys_first: int
    ae_ratio: float
    mrr: float
    ranked_positions: int
    bucket_counts: Dict[str, int] = field(default_factory=dict)

    @property
    def saved(self):
        return self.total_without - self.total_with

    def to_dict(self):
        return {
            'ae_ratio': self.ae_ratio,
            'ae_percent': percent(self.ae_ratio),
            'total_with': self.total_with,
            'keys_top10': self.keys_top10,
            'keys_out': self.keys_out,
            'keys_top1': self.keys_top1,
            'keys_first': self.keys_first,
            'total_without': self.total_without,
            'mrr': self.mrr,
            'ranked_positions': self.ranked_positions,
            'bucket_counts': dict(self.bucket_counts),
        }

    @classmethod
    def from_dict(cls, data):
        fields = dict(data)
        fields.pop('ae_percent', None)
        return cls(**fields)


def mrr(traces, cutoff=None):
    """Mean reciprocal rank over ranked positions; misses past the cutoff score 0."""
    if not traces:
        raise EvaluationError("MRR needs at least one trace")
    total = 0.0
    count = 0
    for trace in traces:
        limit = cutoff if cutoff is not None else trace.cutoff
        for outcome in trace.ranked:
            count += 1
            if outcome.rank <= limit:
                total += 1.0 / outcome.rank
    return total / count if count else 0.0


def aggregate(traces):
    if not traces:
        raise EvaluationError("Nothing to aggregate")
    keys = Counter()
    buckets = Counter({str(bucket): 0 for bucket in Bucket})
    ranked = 0
    for trace in traces:
        for outcome in trace.outcomes:
            buckets[str(outcome.bucket)] += 1
            keys[outcome.bucket] += outcome.keystrokes
            if outcome.rank is not None:
                ranked += 1

    keys_top10 = keys[Bucket.TOP1] + keys[Bucket.TOP2_10]
    total_with = keys_top10 + keys[Bucket.OUT] + keys[Bucket.FIRST_TOKEN]
    total_without = sum(trace.total_without for trace in traces)
    return KeystrokeBreakdown(
        total_with=total_with,
        total_without=total_without,
        keys_top10=keys_top10,
        keys_out=keys[Bucket.OUT],
        keys_top1=keys[Bucket.TOP1],
        keys_first=keys[Bucket.FIRST_TOKEN],
        ae_ratio=ae_ratio(total_with, total_without),
        mrr=mrr(traces),
        ranked_positions=ranked,
        bucket_counts=dict(buckets),
    )
