from itertools import chain

from tabkey.claims import iter_texts
from tabkey.conf import TABKEY_SPECIAL_TAGS
from tabkey.management.base import TabkeyCommand
from tabkey.vocab import train_tokenizer


class Command(TabkeyCommand):
    help = "Learn a byte-pair vocabulary from corpus files and save it as JSON."
    input_options = ('corpus',)

    def add_arguments(self, parser):
        parser.add_argument('--corpus', nargs='+', required=True, metavar='FILE',
                            help="Plain text, claim document or dataset (.jsonl) files")
        parser.add_argument('--vocab-size', type=int, required=True,
                            help="Target number of tokens, alphabet and special tags included")
        parser.add_argument('--out', required=True, metavar='FILE', help="Vocabulary JSON to write")

    def run(self, **options):
        corpus = chain.from_iterable(iter_texts(path) for path in options['corpus'])
        vocab = train_tokenizer(corpus, options['vocab_size'], special_tags=TABKEY_SPECIAL_TAGS)
        vocab.save(options['out'])
        self.stdout.write(f"Wrote {len(vocab)} tokens to {options['out']}")
