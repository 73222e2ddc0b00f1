import time

from django.test import SimpleTestCase

from tabkey.backends.ngram import NgramPredictor
from tabkey.metric import aggregate
from tabkey.runner import evaluate_many
from tabkey.vocab import train_tokenizer
from tests.utils import read_fixture, synthetic_claims, toy_vocab


class TestDomainShift(SimpleTestCase):
    """An n-gram fitted on claims autocompletes claims far better than prose."""

    def test_claims_beat_prose(self):
        claims = synthetic_claims(200, seed=11)
        vocab = train_tokenizer(claims, 400)
        predictor = NgramPredictor.fit(vocab, [vocab.encode(text) for text in claims], order=4)

        held_in = evaluate_many(
            predictor, [(f"claim-{i}", vocab.encode(text)) for i, text in enumerate(claims[:20])],
            vocab)
        unicorn = evaluate_many(predictor, [('unicorn', vocab.encode(read_fixture('unicorn.txt')))], vocab)

        self.assertEqual(unicorn[0].total_without, 490)
        in_domain = aggregate(held_in).ae_ratio
        out_of_domain = aggregate(unicorn).ae_ratio
        self.assertGreaterEqual(in_domain - out_of_domain, 0.20)


class TestThroughput(SimpleTestCase):
    def test_five_hundred_claims(self):
        vocab = toy_vocab()
        texts = synthetic_claims(2000, seed=2)
        sequences = []
        tokens = []
        for text in texts:
            tokens.extend(vocab.encode(text + ' '))
            if len(tokens) >= 200:
                sequences.append((f"seq-{len(sequences)}", tokens[:200]))
                tokens = []
            if len(sequences) == 500:
                break
        self.assertEqual(len(sequences), 500)

        predictor = NgramPredictor.fit(vocab, [seq for _id, seq in sequences], order=4)
        started = time.perf_counter()
        traces = evaluate_many(predictor, sequences, vocab, workers=1)
        elapsed = time.perf_counter() - started
        self.assertEqual(sum(len(t.outcomes) for t in traces), 500 * 200)
        self.assertLess(elapsed, 60)
