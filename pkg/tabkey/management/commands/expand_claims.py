from pathlib import Path

from tabkey.claims import MultipleDependentPolicy, ReverseUnit, assemble_dataset
from tabkey.management.base import TabkeyCommand
from tabkey.vocab import Vocab


class Command(TabkeyCommand):
    help = "Expand patent claims into dependent-claim pairs and write a JSON Lines dataset."
    input_options = ('inputs', 'vocab')

    def add_arguments(self, parser):
        parser.add_argument('--in', dest='inputs', nargs='+', required=True, metavar='FILE',
                            help="Claim documents: plain text listings or .jsonl files")
        parser.add_argument('--out', required=True, metavar='FILE', help="Dataset to write")
        parser.add_argument('--manifest', metavar='FILE',
                            help="Manifest to write (default: OUT with .manifest.json suffix)")
        parser.add_argument('--no-expand', dest='expand', action='store_false',
                            help="Emit claims one by one instead of dependent pairs")
        parser.add_argument('--reverse', action='store_true',
                            help="Also emit every record in reverse order")
        parser.add_argument('--reverse-unit', choices=ReverseUnit.values, default=ReverseUnit.TOKEN,
                            help="Reverse tokens or characters (default: token)")
        parser.add_argument('--tags', action='store_true',
                            help="Wrap records in start/end of claim tags")
        parser.add_argument('--md-policy', choices=MultipleDependentPolicy.values,
                            default=MultipleDependentPolicy.SKIP,
                            help="What to do with multiple-dependent claims (default: skip)")
        parser.add_argument('--sections', action='store_true',
                            help="Also emit title, abstract and description sections")
        parser.add_argument('--vocab', metavar='FILE', help="Vocabulary for token reversal")

    def run(self, **options):
        if (options['reverse'] and options['reverse_unit'] == ReverseUnit.TOKEN
                and not options['vocab']):
            raise self.usage_error("--reverse-unit token needs --vocab")
        vocab = Vocab.load(options['vocab']) if options['vocab'] else None
        out = Path(options['out'])
        manifest_path = options['manifest'] or out.with_suffix('.manifest.json')

        manifest = assemble_dataset(
            options['inputs'], out, manifest_path,
            expand=options['expand'],
            reverse=options['reverse'],
            tags=options['tags'],
            policy=options['md_policy'],
            vocab=vocab,
            reverse_unit=options['reverse_unit'],
            sections=options['sections'],
        )
        self.stdout.write(
            f"{manifest['records']} records from {manifest['documents']} document(s), "
            f"{len(manifest['skipped_multiple_dependent'])} multiple-dependent claim(s) skipped, "
            f"{manifest['documents_failed']} failed")
