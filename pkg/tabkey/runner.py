import json
import logging
from threading import Thread

from django.core.serializers.json import DjangoJSONEncoder

from tabkey.exceptions import EvaluationError
from tabkey.metric import SequenceTrace, evaluate_sequence

logger = logging.getLogger(__name__)


class EvaluationThread(Thread):
    """Evaluates every `workers`-th sequence, starting at `offset`."""

    def __init__(self, predictor, sequences, offset, step, options):
        super().__init__(name=f"tabkey-eval-{offset}")
        self.predictor = predictor
        self.sequences = sequences
        self.offset = offset
        self.step = step
        self.options = options
        self.traces = {}
        self.error = None

    def run(self):
        index = self.offset
        try:
            for index in range(self.offset, len(self.sequences), self.step):
                source_id, tokens = self.sequences[index]
                self.traces[index] = evaluate_sequence(
                    self.predictor, tokens, source_id=source_id, **self.options)
        except Exception as exc:  # re-raised on the calling thread
            logger.exception(f"Worker {self.name} stopped at sequence {index}")
            self.error = (index, exc)


def evaluate_many(predictor, sequences, vocab, workers=1, **options):
    """Evaluate (source_id, tokens) pairs; traces come back in input order."""
    sequences = list(sequences)
    if not sequences:
        raise EvaluationError("No sequences to evaluate")
    options['vocab'] = vocab
    workers = max(1, min(workers, len(sequences)))
    logger.info(f"Evaluating {len(sequences)} sequences with {workers} worker(s)")

    if workers == 1:
        traces = []
        for source_id, tokens in sequences:
            traces.append(evaluate_sequence(predictor, tokens, source_id=source_id, **options))
        return traces

    threads = [EvaluationThread(predictor, sequences, i, workers, options) for i in range(workers)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    failures = sorted((t.error for t in threads if t.error), key=lambda failure: failure[0])
    if failures:
        index, exc = failures[0]
        logger.error(f"Evaluation of {sequences[index][0]!r} failed")
        raise exc
    merged = {}
    for thread in threads:
        merged.update(thread.traces)
    return [merged[i] for i in range(len(sequences))]


def dumps(data):
    return json.dumps(data, cls=DjangoJSONEncoder, ensure_ascii=False)


def write_traces(traces, path):
    with open(path, 'w', encoding='utf-8') as f:
        for trace in traces:
            f.write(dumps(trace.to_dict()))
            f.write('\n')


def read_traces(path):
    traces = []
    with open(path, 'r', encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                traces.append(SequenceTrace.from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise EvaluationError(f"{path}:{number} is not a trace: {exc}") from exc
    if not traces:
        raise EvaluationError(f"{path} holds no traces")
    return traces
