from tabkey.backends.ngram import NgramPredictor
from tabkey.claims import iter_sources
from tabkey.conf import TABKEY_BACKOFF_FACTOR, TABKEY_NGRAM_ORDER
from tabkey.management.base import TabkeyCommand
from tabkey.vocab import Vocab


class Command(TabkeyCommand):
    help = "Fit a stupid-backoff n-gram predictor over a tokenized corpus."
    input_options = ('corpus', 'vocab')

    def add_arguments(self, parser):
        parser.add_argument('--corpus', nargs='+', required=True, metavar='FILE')
        parser.add_argument('--vocab', required=True, metavar='FILE',
                            help="Vocabulary written by train-tokenizer")
        parser.add_argument('--order', type=int, default=TABKEY_NGRAM_ORDER,
                            help=f"n-gram order (default: {TABKEY_NGRAM_ORDER})")
        parser.add_argument('--backoff', type=float, default=TABKEY_BACKOFF_FACTOR,
                            help=f"Backoff factor (default: {TABKEY_BACKOFF_FACTOR})")
        parser.add_argument('--out', required=True, metavar='FILE', help="Model JSON to write")

    def run(self, **options):
        if options['order'] < 1:
            raise self.usage_error("--order must be at least 1")
        if not 0.0 < options['backoff'] < 1.0:
            raise self.usage_error("--backoff must lie strictly between 0 and 1")
        vocab = Vocab.load(options['vocab'])
        sequences = [
            list(tokens) if tokens else vocab.encode(text)
            for path in options['corpus']
            for _source_id, text, tokens in iter_sources(path)
        ]
        predictor = NgramPredictor.fit(vocab, sequences, options['order'], options['backoff'])
        predictor.save(options['out'])
        message = f"Fitted order-{options['order']} model on {len(sequences)} sequences"
        if any(len(sequence) > 1 for sequence in sequences):
            message += f", training perplexity {predictor.model.perplexity(sequences):.2f}"
        self.stdout.write(message)
