import csv
import html
import io
import json
import os
import re
import tempfile
from dataclasses import replace

from django.test import SimpleTestCase

from tabkey.backends.oracles import MemorizingPredictor, ScriptedPredictor
from tabkey.exceptions import ReportError
from tabkey.metric import Bucket, Capture, KeystrokeBreakdown, ae_ratio, aggregate, evaluate_sequence
from tabkey.reporting import (
    INSPECTION_SCHEMA, compare_traces, dump_inspection, emit_tables, histogram_csv, inspection,
    rank_histogram, render_saliency_html, render_table, table_rows)
from tabkey.vocab import END_OF_CLAIM
from tests.utils import read_fixture, toy_vocab

SPAN = re.compile(r'<span class="token (\w+)" title="[^"]*">([^<]*)</span>')


def spans(page):
    return [[bucket, html.unescape(text)] for bucket, text in SPAN.findall(page)]


def breakdown(total_with, total_without):
    return KeystrokeBreakdown(
        total_with=total_with, total_without=total_without,
        keys_top10=total_with // 2, keys_out=total_with - total_with // 2, keys_top1=total_with // 4,
        keys_first=0, ae_ratio=ae_ratio(total_with, total_without), mrr=0.0, ranked_positions=0)


class TestSaliency(SimpleTestCase):
    def setUp(self):
        self.golden = json.loads(read_fixture('saliency_three_buckets.json'))
        self.vocab = toy_vocab()
        predictor = ScriptedPredictor(self.vocab, self.golden['ranks'])
        self.trace = evaluate_sequence(
            predictor, self.vocab.encode(self.golden['text']), self.vocab,
            source_id=self.golden['source_id'], capture=Capture(topk=True))

    def test_three_bucket_golden(self):
        page = render_saliency_html(self.trace)
        self.assertEqual(spans(page), self.golden['spans'])
        self.assertIn(f"AE ratio: {self.golden['ae']}", page)
        self.assertIn(f"<h2>{self.golden['source_id']}</h2>", page)

    def test_spans_spell_the_text(self):
        page = render_saliency_html(self.trace)
        self.assertEqual(''.join(text for _bucket, text in spans(page)), self.golden['text'])

    def test_tooltips(self):
        page = render_saliency_html(self.trace)
        titles = [html.unescape(title) for title in re.findall(r'title="([^"]*)"', page)]
        self.assertEqual(titles[0], 'first token, 1 keystrokes')
        self.assertTrue(titles[3].startswith('rank 37, 7 keystrokes\n1. '))

    def test_missing_text_filled_from_vocab(self):
        blank = replace(self.trace, outcomes=[replace(o, text='') for o in self.trace.outcomes])
        page = render_saliency_html(blank, self.vocab)
        self.assertEqual(spans(page), self.golden['spans'])

    def test_text_is_escaped(self):
        vocab = toy_vocab(words=('<b>',))
        tokens = [vocab.token_id('a'), vocab.token_id('<b>')]
        trace = evaluate_sequence(ScriptedPredictor(vocab, [1]), tokens, vocab)
        page = render_saliency_html(trace)
        self.assertIn('&lt;b&gt;', page)
        self.assertEqual(spans(page), [['first_token', 'a'], ['top1', '<b>']])

    def test_compare(self):
        other = evaluate_sequence(
            ScriptedPredictor(self.vocab, [1] * 5), self.vocab.encode(self.golden['text']),
            self.vocab, source_id=self.golden['source_id'])
        page = compare_traces([('scripted', self.trace), ('perfect', other)])
        self.assertIn('<h2>scripted: golden</h2>', page)
        self.assertIn('<h2>perfect: golden</h2>', page)
        self.assertEqual(len(spans(page)), 12)

    def test_compare_needs_same_text(self):
        other = evaluate_sequence(
            ScriptedPredictor(self.vocab, [1]), self.vocab.encode('ab'), self.vocab)
        with self.assertRaises(ReportError):
            compare_traces([('a', self.trace), ('b', other)])
        with self.assertRaises(ReportError):
            compare_traces([])


class TestTables(SimpleTestCase):
    def test_published_row(self):
        rows = table_rows({'345M': breakdown(277800, 643646)})
        self.assertEqual(rows[0]['AE ratio'], '56.8%')
        self.assertTrue(rows[0]['best'])

    def test_csv(self):
        breakdowns = {'small': breakdown(400, 1000), 'large': breakdown(300, 1000)}
        content = render_table(table_rows(breakdowns), 'csv')
        rows = list(csv.DictReader(io.StringIO(content)))
        self.assertEqual([row['size'] for row in rows], ['small', 'large'])
        self.assertEqual([row['AE ratio'] for row in rows], ['60.0%', '70.0%'])
        self.assertEqual([row['best'] for row in rows], ['', '*'])
        self.assertEqual(rows[1]['total w/o autocomplete'], '1000')

    def test_json_and_text(self):
        rows = table_rows([('only', breakdown(250, 1000))])
        self.assertEqual(json.loads(render_table(rows, 'json'))[0]['AE ratio'], '75.0%')
        text = render_table(rows, 'text')
        self.assertIn('75.0%', text)
        self.assertIn('1,000', text)
        with self.assertRaises(ReportError):
            render_table(rows, 'xml')

    def test_rows_must_type_the_same_text(self):
        with self.assertRaises(ReportError):
            table_rows({'a': breakdown(10, 100), 'b': breakdown(10, 200)})

    def test_inconsistent_ratio(self):
        with self.assertRaises(ReportError):
            table_rows({'a': replace(breakdown(10, 100), ae_ratio=0.5)})

    def test_emit(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'table.csv')
            content = emit_tables({'a': breakdown(10, 100)}, path)
            with open(path) as f:
                self.assertEqual(f.read(), content)


class TestHistogram(SimpleTestCase):
    def setUp(self):
        self.vocab = toy_vocab()
        predictor = ScriptedPredictor(self.vocab, {'a': [1, 2], 'b': [37]})
        self.traces = [
            evaluate_sequence(predictor, self.vocab.encode('xyz'), self.vocab, source_id='a'),
            evaluate_sequence(predictor, self.vocab.encode('xy'), self.vocab, source_id='b'),
        ]

    def test_counts(self):
        histogram = rank_histogram(self.traces)
        self.assertEqual(histogram.positions(), [1, 2])
        first, second = histogram.rows()
        self.assertEqual(first['reaching'], 2)
        self.assertEqual((first['top1'], first['top2_10'], first['out']), (1, 0, 1))
        self.assertEqual(first['top1_pct'], 50.0)
        self.assertEqual(second['reaching'], 1)
        self.assertEqual(second['top2_10_pct'], 100.0)

    def test_window(self):
        self.assertEqual(rank_histogram(self.traces, skip=1).positions(), [2])
        self.assertEqual(rank_histogram(self.traces, max_position=1).positions(), [1])
        self.assertEqual(rank_histogram(self.traces, max_position=50).positions(), [1, 2])

    def test_csv(self):
        rows = list(csv.DictReader(io.StringIO(histogram_csv(rank_histogram(self.traces)))))
        self.assertEqual(rows[0]['out'], '1')
        self.assertEqual(rows[1]['position'], '2')

    def test_empty(self):
        with self.assertRaises(ReportError):
            rank_histogram([])


class TestInspection(SimpleTestCase):
    def setUp(self):
        self.vocab = toy_vocab()
        self.tokens = self.vocab.encode('the method')
        self.predictor = MemorizingPredictor(self.vocab, [self.tokens])

    def test_positions(self):
        trace = evaluate_sequence(
            self.predictor, self.tokens, self.vocab, capture=Capture(topk=True), source_id='s')
        data = inspection(trace)
        self.assertEqual(data['schema'], INSPECTION_SCHEMA)
        self.assertEqual(data['text'], 'the method')
        first, *ranked = data['positions']
        self.assertEqual(first['bucket'], str(Bucket.FIRST_TOKEN))
        self.assertNotIn('rank', first)
        self.assertEqual(len(ranked), 3)
        for entry in ranked:
            self.assertEqual(entry['rank'], 1)
            self.assertEqual(entry['topk'][0]['text'], entry['text'])
            self.assertEqual(entry['prompt_length'], entry['position'])
            self.assertNotIn('continuation', entry)

    def test_continuations(self):
        end = self.vocab.token_id(END_OF_CLAIM)
        predictor = MemorizingPredictor(self.vocab, [self.tokens + [end]])
        capture = Capture(topk=True, continuations=True, greedy=True)
        trace = evaluate_sequence(predictor, self.tokens, self.vocab, capture=capture)
        last = inspection(trace)['positions'][-1]
        self.assertEqual(last['continuation']['text'], ' method')

    def test_dump(self):
        trace = evaluate_sequence(self.predictor, self.tokens, self.vocab, capture=Capture(topk=True))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'inspect.json')
            data = dump_inspection(trace, path)
            with open(path) as f:
                self.assertEqual(json.load(f), data)
        self.assertEqual(data['ae_ratio'], aggregate([trace]).ae_ratio)

    def test_needs_stored_predictions(self):
        trace = evaluate_sequence(self.predictor, self.tokens, self.vocab)
        with self.assertRaisesMessage(ReportError, '--capture-topk'):
            inspection(trace)
