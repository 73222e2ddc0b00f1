from pathlib import Path

from django.utils.text import slugify

from tabkey.management.base import TabkeyCommand, unique_name
from tabkey.reporting import dump_inspection
from tabkey.runner import read_traces


class Command(TabkeyCommand):
    help = "Write the per-position inspection data of stored predictions as JSON."
    input_options = ('traces',)

    def add_arguments(self, parser):
        parser.add_argument('--traces', required=True, metavar='FILE',
                            help="Traces from evaluate --capture-topk")
        parser.add_argument('--out', required=True, metavar='DIR')
        parser.add_argument('--source', nargs='+', metavar='ID',
                            help="Only dump these source ids (default: all)")

    def run(self, **options):
        traces = read_traces(options['traces'])
        if options['source']:
            wanted = set(options['source'])
            traces = [trace for trace in traces if trace.source_id in wanted]
            missing = wanted - {trace.source_id for trace in traces}
            if missing:
                raise self.usage_error(f"No traces for {', '.join(sorted(missing))}")
        directory = Path(options['out'])
        directory.mkdir(parents=True, exist_ok=True)
        taken = set()
        for trace in traces:
            dump_inspection(trace, directory / f"{unique_name(slugify(trace.source_id), taken)}.json")
        self.stdout.write(f"Dumped {len(traces)} trace(s) to {directory}")
