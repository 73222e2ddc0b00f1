import json
from itertools import chain
from pathlib import Path

from tabkey import conf
from tabkey.backends import get_predictor_class
from tabkey.claims import iter_sources
from tabkey.management.base import TabkeyCommand
from tabkey.metric import Capture, FirstTokenMode, aggregate, percent
from tabkey.runner import evaluate_many, write_traces
from tabkey.vocab import KeystrokeUnit, Vocab


class Command(TabkeyCommand):
    help = "Replay texts through a predictor and measure the keystrokes autocomplete saves."
    input_options = ('claims', 'text', 'ngram', 'scripted', 'vocab')

    def add_arguments(self, parser):
        texts = parser.add_argument_group('texts')
        texts.add_argument('--claims', nargs='+', default=[], metavar='FILE',
                           help="Dataset or claim document files; every record is one sequence")
        texts.add_argument('--text', nargs='+', default=[], metavar='FILE',
                           help="Plain text files, each evaluated as one sequence")

        predictors = parser.add_mutually_exclusive_group()
        predictors.add_argument('--ngram', metavar='FILE', help="n-gram model from fit-ngram")
        predictors.add_argument('--predictor-url', metavar='URL',
                                help="Remote predictor endpoint (default: $AE_PREDICTOR_URL)")
        predictors.add_argument('--scripted', metavar='FILE',
                                help="JSON list of ranks, or a mapping of source id to ranks")
        parser.add_argument('--vocab', metavar='FILE',
                            help="Vocabulary; required unless the n-gram model carries it")
        parser.add_argument('--scripted-vocab-size', type=int,
                            help="Pretend vocabulary size so scripts may use deep ranks")

        parser.add_argument('--cutoff', type=int, default=conf.TABKEY_CUTOFF,
                            help=f"Longest suggestion list (default: {conf.TABKEY_CUTOFF})")
        parser.add_argument('--first-token', choices=FirstTokenMode.values,
                            default=conf.TABKEY_FIRST_TOKEN,
                            help=f"Charge for the first token (default: {conf.TABKEY_FIRST_TOKEN})")
        parser.add_argument('--keystroke-unit', choices=KeystrokeUnit.values,
                            default=conf.TABKEY_KEYSTROKE_UNIT,
                            help=f"What one keystroke types (default: {conf.TABKEY_KEYSTROKE_UNIT})")
        parser.add_argument('--workers', type=int, default=conf.TABKEY_WORKERS,
                            help=f"Worker threads (default: {conf.TABKEY_WORKERS})")

        capture = parser.add_argument_group('stored predictions')
        capture.add_argument('--capture-topk', action='store_true',
                             help="Store the top-k list of every position for report and dump")
        capture.add_argument('--continuations', action='store_true',
                             help="Sample and store a continuation at every position")
        capture.add_argument('--top-p', type=float, default=conf.TABKEY_TOP_P,
                             help=f"Nucleus mass (default: {conf.TABKEY_TOP_P})")
        capture.add_argument('--temperature', type=float, default=conf.TABKEY_TEMPERATURE,
                             help=f"Sampling temperature (default: {conf.TABKEY_TEMPERATURE})")
        capture.add_argument('--max-tokens', type=int, default=conf.TABKEY_MAX_TOKENS,
                             help=f"Continuation length limit (default: {conf.TABKEY_MAX_TOKENS})")
        capture.add_argument('--seed', type=int, default=conf.TABKEY_SEED,
                             help=f"Sampling seed (default: {conf.TABKEY_SEED})")
        capture.add_argument('--greedy', action='store_true', help="Continue with the top token")

        remote = parser.add_argument_group('remote predictor')
        remote.add_argument('--timeout', type=float, default=conf.TABKEY_REMOTE_TIMEOUT,
                            help=f"Seconds per request (default: {conf.TABKEY_REMOTE_TIMEOUT})")
        remote.add_argument('--retries', type=int, default=conf.TABKEY_REMOTE_RETRIES,
                            help=f"Retries per request (default: {conf.TABKEY_REMOTE_RETRIES})")

        parser.add_argument('--out', required=True, metavar='FILE', help="Traces to write (JSON Lines)")
        parser.add_argument('--breakdown', metavar='FILE', help="Keystroke breakdown JSON to write")
        parser.add_argument('--label', default='', help="Model label stored in the breakdown")

    def check_options(self, options):
        if not options['claims'] and not options['text']:
            raise self.usage_error("Give texts to evaluate with --claims or --text")
        if options['cutoff'] < 1:
            raise self.usage_error("--cutoff must be at least 1")
        if options['workers'] < 1:
            raise self.usage_error("--workers must be at least 1")
        if not 0.0 < options['top_p'] <= 1.0:
            raise self.usage_error("--top-p must lie in (0, 1]")
        if options['temperature'] <= 0.0:
            raise self.usage_error("--temperature must be positive")
        if options['max_tokens'] < 1:
            raise self.usage_error("--max-tokens must be at least 1")
        if options['scripted'] and options['continuations']:
            raise self.usage_error("Scripted predictors cannot sample continuations")
        if not options['ngram'] and not options['vocab']:
            raise self.usage_error("--vocab is required unless --ngram is given")

    def get_predictor(self, options):
        if options['ngram']:
            predictor = get_predictor_class('ngram').load(options['ngram'])
            if options['vocab'] and Vocab.load(options['vocab']) != predictor.vocab:
                raise self.usage_error("--vocab differs from the vocabulary of the n-gram model")
            return predictor
        vocab = Vocab.load(options['vocab'])
        if options['scripted']:
            return get_predictor_class('scripted').load(
                vocab, options['scripted'], vocab_size=options['scripted_vocab_size'])
        url = options['predictor_url'] or conf.TABKEY_PREDICTOR_URL
        if not url:
            raise self.usage_error(
                "Choose a predictor: --ngram, --scripted, --predictor-url or $AE_PREDICTOR_URL")
        return get_predictor_class('remote')(
            vocab, url, timeout=options['timeout'], retries=options['retries'])

    def run(self, **options):
        self.check_options(options)
        predictor = self.get_predictor(options)
        vocab = predictor.vocab
        sources = chain(
            chain.from_iterable(iter_sources(path) for path in options['claims']),
            ((Path(path).stem, Path(path).read_text(encoding='utf-8'), None)
             for path in options['text']),
        )
        sequences = [
            (source_id, list(tokens) if tokens else vocab.encode(text))
            for source_id, text, tokens in sources
        ]
        capture = Capture(
            topk=options['capture_topk'],
            k=options['cutoff'],
            continuations=options['continuations'],
            max_tokens=options['max_tokens'],
            top_p=options['top_p'],
            temperature=options['temperature'],
            seed=options['seed'],
            greedy=options['greedy'],
        )
        try:
            traces = evaluate_many(
                predictor, sequences, vocab,
                workers=options['workers'],
                cutoff=options['cutoff'],
                capture=capture,
                first_token=options['first_token'],
                unit=options['keystroke_unit'],
            )
        finally:
            predictor.close()

        write_traces(traces, options['out'])
        breakdown = aggregate(traces)
        if options['breakdown']:
            with open(options['breakdown'], 'w', encoding='utf-8') as f:
                json.dump({'label': options['label'], **breakdown.to_dict()}, f, indent=2)
                f.write('\n')
        self.stdout.write(
            f"AE ratio: {percent(breakdown.ae_ratio)} "
            f"({breakdown.total_with} of {breakdown.total_without} keystrokes, "
            f"{len(traces)} sequences)")
