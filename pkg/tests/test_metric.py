import os
import tempfile

from django.test import SimpleTestCase
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from tabkey.backends.ngram import NgramPredictor
from tabkey.backends.oracles import MemorizingPredictor, ScriptedPredictor
from tabkey.exceptions import EvaluationError, PredictorError
from tabkey.metric import (
    Bucket, Capture, FirstTokenMode, KeystrokeBreakdown, aggregate, ae_ratio, bucket_for,
    evaluate_sequence, keystroke_charge, keystrokes_without, mrr, percent)
from tabkey.runner import evaluate_many, read_traces, write_traces
from tabkey.vocab import DEP_TAG, END_OF_CLAIM, KeystrokeUnit, train_tokenizer
from tests.utils import synthetic_claims, toy_vocab

# (label, total with autocomplete, total without, published AE)
PUBLISHED_TOTALS = [
    ('6B', 281789, 643646, '56.2%'),
    ('1.6B', 278948, 643646, '56.7%'),
    ('456M', 277800, 643646, '56.8%'),
    ('279M', 281619, 643646, '56.2%'),
    ('191M', 285843, 643646, '55.6%'),
    ('128M', 320907, 643646, '50.1%'),
    ('115M', 411884, 643646, '36.0%'),
    ('6B', 238845, 529900, '54.9%'),
    ('1.6B', 237015, 529900, '55.3%'),
    ('456M', 237650, 529900, '55.2%'),
    ('279M', 241708, 529900, '54.4%'),
    ('191M', 245713, 529900, '53.6%'),
    ('128M', 272636, 529900, '48.5%'),
    ('115M', 340012, 529900, '35.8%'),
    ('6B', 401, 490, '18.2%'),
    ('1.6B', 408, 490, '16.7%'),
    ('456M', 408, 490, '16.7%'),
    ('279M', 421, 490, '14.1%'),
    ('191M', 422, 490, '13.9%'),
    ('128M', 437, 490, '10.8%'),
    ('115M', 447, 490, '8.8%'),
]

# (total with autocomplete, top 10, out of top 10, top 1)
PUBLISHED_COLUMNS = [
    (281789, 167246, 114543, 72457),
    (278948, 168635, 110313, 73295),
    (277800, 168112, 109688, 73600),
    (281619, 169082, 112537, 72498),
    (285843, 169478, 116365, 71676),
    (320907, 172604, 148303, 64284),
    (411884, 177304, 234580, 44660),
    (401, 130, 271, 37),
    (408, 125, 283, 35),
    (408, 100, 308, 29),
    (421, 97, 324, 31),
    (422, 105, 317, 29),
    (437, 90, 347, 25),
    (447, 86, 361, 17),
]

LENGTHS = range(1, 16)


def length_vocab():
    """Toy vocabulary holding a token of every length 1..15 ('q' * n)."""
    vocab = toy_vocab(words=tuple('q' * n for n in range(2, 16)))
    return vocab, {n: vocab.token_id('q' * n) for n in LENGTHS}


def simulate(lengths, ranks, cutoff=10, first_token='manual'):
    """Key presses of a user who, for every token after the first, either
    types it out or presses down-arrow until it is selected and then tab,
    whichever is fewer presses. Tokens past the cutoff are never listed."""
    presses = lengths[0] if first_token == 'manual' else 0
    for length, rank in zip(lengths[1:], ranks):
        options = [length]
        if rank <= cutoff:
            options.append((rank - 1) + 1)
        presses += min(options)
    return presses


@st.composite
def scripts(draw, max_tokens=30, max_rank=10000):
    """Token lengths plus one rank per token after the first."""
    lengths = draw(st.lists(st.sampled_from(LENGTHS), min_size=2, max_size=max_tokens))
    ranks = draw(st.lists(
        st.integers(1, max_rank), min_size=len(lengths) - 1, max_size=len(lengths) - 1))
    return lengths, ranks


class TestKeystrokeCharge(SimpleTestCase):
    def test_charges(self):
        cases = [
            ((1, 5), 1),
            ((1, 1), 1),
            ((2, 5), 2),
            ((3, 2), 2),
            ((10, 15), 10),
            ((10, 3), 3),
            ((11, 4), 4),
            ((9999, 12), 12),
        ]
        for (rank, length), charge in cases:
            self.assertEqual(keystroke_charge(rank, length), charge, (rank, length))

    def test_cutoff(self):
        self.assertEqual(keystroke_charge(2, 5, cutoff=1), 5)
        self.assertEqual(bucket_for(2, cutoff=1), Bucket.OUT)
        self.assertEqual(bucket_for(1, cutoff=1), Bucket.TOP1)
        self.assertEqual(bucket_for(10), Bucket.TOP2_10)
        self.assertEqual(bucket_for(11), Bucket.OUT)

    def test_never_more_than_typing(self):
        for rank in range(1, 30):
            for length in LENGTHS:
                charge = keystroke_charge(rank, length)
                self.assertGreaterEqual(charge, 1)
                self.assertLessEqual(charge, max(length, 1))

    def test_invalid(self):
        with self.assertRaises(ValueError):
            keystroke_charge(0, 3)
        with self.assertRaises(ValueError):
            keystroke_charge(1, 0)


class TestRatio(SimpleTestCase):
    def test_published_totals(self):
        for label, total_with, total_without, published in PUBLISHED_TOTALS:
            ratio = ae_ratio(total_with, total_without)
            self.assertEqual(percent(ratio), published, label)
            self.assertLess(abs(100 * ratio - float(published[:-1])), 0.05 + 1e-9, label)

    def test_published_columns_add_up(self):
        for total_with, top10, out, top1 in PUBLISHED_COLUMNS:
            self.assertEqual(top10 + out, total_with)
            self.assertLessEqual(top1, top10)

    def test_half_up(self):
        self.assertEqual(percent(0.1235), '12.4%')
        self.assertEqual(percent(0.0), '0.0%')
        self.assertEqual(percent(1.0), '100.0%')
        self.assertEqual(percent(0.05), '5.0%')

    def test_bounds(self):
        self.assertEqual(ae_ratio(10, 10), 0.0)
        self.assertEqual(ae_ratio(0, 10), 1.0)
        with self.assertRaises(EvaluationError):
            ae_ratio(0, 0)
        with self.assertRaises(ValueError):
            ae_ratio(11, 10)


class TestEvaluateSequence(SimpleTestCase):
    def setUp(self):
        self.vocab, self.by_length = length_vocab()

    def tokens(self, lengths):
        return [self.by_length[n] for n in lengths]

    def test_three_buckets(self):
        predictor = ScriptedPredictor(self.vocab, [1, 2, 37])
        trace = evaluate_sequence(predictor, self.tokens([4, 5, 3, 7]), self.vocab)
        self.assertEqual(
            [o.bucket for o in trace.outcomes],
            [Bucket.FIRST_TOKEN, Bucket.TOP1, Bucket.TOP2_10, Bucket.OUT])
        self.assertEqual([o.keystrokes for o in trace.outcomes], [4, 1, 2, 7])
        self.assertEqual(trace.total_with, 14)
        self.assertEqual(trace.total_without, 19)
        self.assertEqual(mrr([trace]), 0.5)

    def test_worked_example(self):
        predictor = ScriptedPredictor(self.vocab, [1, 2, 3])
        trace = evaluate_sequence(predictor, self.tokens([1, 1, 2, 7]), self.vocab)
        self.assertEqual([o.keystrokes for o in trace.outcomes], [1, 1, 2, 3])
        self.assertEqual(trace.total_with, 7)
        self.assertEqual(trace.total_without, 11)
        self.assertEqual(percent(trace.ae_ratio), '36.4%')

    def test_breakdown_decomposes(self):
        predictor = ScriptedPredictor(self.vocab, [1, 2, 3])
        breakdown = aggregate([evaluate_sequence(predictor, self.tokens([4, 5, 3, 7]), self.vocab)])
        self.assertEqual(breakdown.keys_top10, 6)
        self.assertEqual(breakdown.keys_top1, 1)
        self.assertEqual(breakdown.keys_out, 0)
        self.assertEqual(breakdown.keys_first, 4)
        self.assertEqual(breakdown.total_with, 10)
        self.assertEqual(breakdown.saved, 9)
        self.assertEqual(breakdown.ranked_positions, 3)
        self.assertEqual(
            breakdown.total_with, breakdown.keys_top10 + breakdown.keys_out + breakdown.keys_first)

    def test_free_first_token(self):
        predictor = ScriptedPredictor(self.vocab, [11, 11])
        trace = evaluate_sequence(
            predictor, self.tokens([6, 2, 2]), self.vocab, first_token=FirstTokenMode.FREE)
        self.assertEqual(trace.outcomes[0].keystrokes, 0)
        self.assertEqual(trace.ae_ratio, 6 / 10)

    def test_never_helpful_saves_nothing(self):
        lengths = [3, 8, 1, 12, 5]
        predictor = ScriptedPredictor(self.vocab, [11] * 4)
        trace = evaluate_sequence(predictor, self.tokens(lengths), self.vocab)
        self.assertEqual(trace.ae_ratio, 0.0)

    def test_perfect_predictor(self):
        vocab = toy_vocab()
        tokens = vocab.encode("1. A method of claim 2, wherein the method comprising a claim")
        trace = evaluate_sequence(MemorizingPredictor(vocab, [tokens]), tokens, vocab)
        self.assertEqual(trace.total_with, vocab.token_length(tokens[0]) + len(tokens) - 1)
        self.assertEqual(mrr([trace]), 1.0)
        self.assertEqual(aggregate([trace]).mrr, 1.0)

    def test_special_tokens_are_skipped(self):
        vocab = toy_vocab()
        tokens = vocab.encode(f"ab{DEP_TAG}cd")
        trace = evaluate_sequence(ScriptedPredictor(vocab, [1, 1, 1]), tokens, vocab)
        self.assertEqual(trace.text, 'abcd')
        self.assertEqual(len(trace.outcomes), 4)
        self.assertEqual(keystrokes_without(tokens, vocab), trace.total_without + len(DEP_TAG))

    def test_tags_stay_in_the_context(self):
        vocab = toy_vocab()
        x, y, z = (vocab.token_id(c) for c in 'xyz')
        dep = vocab.token_id(DEP_TAG)
        predictor = NgramPredictor.fit(vocab, [[x, dep, y]] * 5 + [[x, z]] * 5, order=2)
        trace = evaluate_sequence(predictor, [x, dep, y], vocab)
        self.assertEqual(trace.text, 'xy')
        self.assertEqual([o.position for o in trace.outcomes], [0, 1])
        self.assertEqual(trace.outcomes[1].rank, 1)
        self.assertEqual(
            trace.outcomes[1].rank, predictor.rank_and_topk([x, dep], y, 1).target_rank)

    def test_failure_position_counts_tags(self):
        vocab = toy_vocab()
        tokens = vocab.encode(f"a{DEP_TAG}bc")
        with self.assertRaises(PredictorError) as cm:
            evaluate_sequence(ScriptedPredictor(vocab, [1]), tokens, vocab)
        self.assertEqual(cm.exception.position, 3)

    def test_keystrokes_without(self):
        vocab = toy_vocab(words=(' A',))
        self.assertEqual(keystrokes_without(vocab.encode('1. A'), vocab), 4)
        self.assertEqual(keystrokes_without([], vocab), 0)

    def test_nothing_to_type(self):
        vocab = toy_vocab()
        with self.assertRaises(EvaluationError):
            evaluate_sequence(ScriptedPredictor(vocab, []), vocab.encode(DEP_TAG), vocab)

    def test_single_token(self):
        trace = evaluate_sequence(ScriptedPredictor(self.vocab, []), self.tokens([5]), self.vocab)
        self.assertEqual(trace.total_with, 5)
        self.assertEqual(trace.ranked, [])

    def test_byte_keystrokes(self):
        vocab = toy_vocab(words=('é',))
        tokens = [vocab.token_id('é'), vocab.token_id('é')]
        trace = evaluate_sequence(
            ScriptedPredictor(vocab, [20]), tokens, vocab, unit=KeystrokeUnit.BYTE)
        self.assertEqual(trace.total_without, 4)

    def test_split_character(self):
        vocab = toy_vocab()
        tokens = vocab.encode('éé')
        self.assertEqual(len(tokens), 4)
        trace = evaluate_sequence(ScriptedPredictor(vocab, [20, 20, 20]), tokens, vocab)
        self.assertEqual(trace.text, 'éé')
        self.assertEqual([o.text for o in trace.outcomes], ['é', '', 'é', ''])
        self.assertEqual([o.keystrokes for o in trace.outcomes], [1, 0, 1, 0])
        self.assertEqual(trace.total_without, 2)
        self.assertEqual(trace.total_with, 2)

    def test_capture(self):
        vocab = toy_vocab()
        end = vocab.token_id(END_OF_CLAIM)
        tokens = vocab.encode("the method of claim")
        predictor = MemorizingPredictor(vocab, [tokens + [end]])
        capture = Capture(topk=True, continuations=True, greedy=True)
        trace = evaluate_sequence(predictor, tokens, vocab, capture=capture)
        self.assertIsNone(trace.stored_topk[0])
        self.assertEqual(len(trace.stored_topk), len(tokens))
        for outcome in trace.ranked:
            head = trace.stored_topk[outcome.position]
            self.assertEqual(len(head), 10)
            self.assertEqual(head[0].id, outcome.token)
            continuation = trace.continuations[outcome.position]
            self.assertEqual(continuation.tokens, tokens[outcome.position:])
            self.assertEqual(continuation.first_rank, 1)

    def test_trace_files(self):
        vocab = toy_vocab()
        tokens = vocab.encode("the method of claim")
        predictor = MemorizingPredictor(vocab, [tokens])
        trace = evaluate_sequence(
            predictor, tokens, vocab, capture=Capture(topk=True, continuations=True, max_tokens=4),
            source_id='US1#1')
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'traces.jsonl')
            write_traces([trace, trace], path)
            loaded = read_traces(path)
        self.assertEqual(loaded, [trace, trace])

    def test_unreadable_trace_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'traces.jsonl')
            with open(path, 'w') as f:
                f.write('{"schema": 2}\n')
            with self.assertRaises(EvaluationError):
                read_traces(path)


class TestOracleEquivalence(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.vocab, cls.by_length = length_vocab()

    @settings(max_examples=1000, deadline=None)
    @given(scripts(), st.sampled_from(FirstTokenMode.values))
    def test_matches_brute_force(self, script, first_token):
        lengths, ranks = script
        predictor = ScriptedPredictor(self.vocab, ranks, vocab_size=10000)
        tokens = [self.by_length[n] for n in lengths]
        trace = evaluate_sequence(predictor, tokens, self.vocab, first_token=first_token)
        self.assertEqual(trace.total_with, simulate(lengths, ranks, first_token=first_token))
        self.assertEqual(trace.total_without, sum(lengths))
        self.assertEqual([o.rank for o in trace.ranked], ranks)


class TestMonotonicity(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.vocab, cls.by_length = length_vocab()

    @settings(max_examples=10000, deadline=None)
    @given(scripts(max_tokens=12, max_rank=40), st.data())
    def test_better_rank_never_costs_more(self, script, data):
        lengths, ranks = script
        position = data.draw(st.integers(0, len(ranks) - 1))
        assume(ranks[position] > 1)
        improved = list(ranks)
        improved[position] = data.draw(st.integers(1, ranks[position] - 1))
        tokens = [self.by_length[n] for n in lengths]
        base = evaluate_sequence(ScriptedPredictor(self.vocab, ranks), tokens, self.vocab)
        better = evaluate_sequence(ScriptedPredictor(self.vocab, improved), tokens, self.vocab)
        self.assertLessEqual(better.total_with, base.total_with)


class TestAggregate(SimpleTestCase):
    def setUp(self):
        self.vocab, self.by_length = length_vocab()

    def test_sums_over_traces(self):
        predictor = ScriptedPredictor(self.vocab, {'a': [1, 37], 'b': [2]})
        traces = [
            evaluate_sequence(predictor, [self.by_length[n] for n in (3, 4, 5)], self.vocab, source_id='a'),
            evaluate_sequence(predictor, [self.by_length[n] for n in (2, 6)], self.vocab, source_id='b'),
        ]
        breakdown = aggregate(traces)
        self.assertEqual(breakdown.total_without, 20)
        self.assertEqual(breakdown.total_with, 3 + 1 + 5 + 2 + 2)
        self.assertEqual(breakdown.bucket_counts, {
            'first_token': 2, 'top1': 1, 'top2_10': 1, 'out': 1})
        self.assertAlmostEqual(breakdown.mrr, (1 + 0 + 0.5) / 3)
        self.assertEqual(KeystrokeBreakdown.from_dict(breakdown.to_dict()), breakdown)
        self.assertEqual(breakdown.to_dict()['ae_percent'], percent(breakdown.ae_ratio))

    def test_empty(self):
        with self.assertRaises(EvaluationError):
            aggregate([])


class TestEvaluateMany(SimpleTestCase):
    def setUp(self):
        corpus = synthetic_claims(40, seed=9)
        self.vocab = train_tokenizer(corpus, 330)
        self.sequences = [(f"claim-{i}", self.vocab.encode(text)) for i, text in enumerate(corpus)]
        self.predictor = NgramPredictor.fit(self.vocab, [tokens for _, tokens in self.sequences])

    def test_workers_keep_input_order(self):
        single = evaluate_many(self.predictor, self.sequences, self.vocab, workers=1)
        pooled = evaluate_many(self.predictor, self.sequences, self.vocab, workers=3)
        self.assertEqual([t.source_id for t in pooled], [s for s, _ in self.sequences])
        self.assertEqual([t.to_dict() for t in pooled], [t.to_dict() for t in single])

    def test_worker_failure_is_raised(self):
        predictor = ScriptedPredictor(self.vocab, {'claim-0': [1] * 500})
        with self.assertLogs('tabkey.runner', 'ERROR'):
            with self.assertRaises(PredictorError):
                evaluate_many(predictor, self.sequences[:4], self.vocab, workers=2)

    def test_nothing_to_evaluate(self):
        with self.assertRaises(EvaluationError):
            evaluate_many(self.predictor, [], self.vocab)
