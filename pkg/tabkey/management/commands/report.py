from pathlib import Path

from django.utils.text import slugify

from tabkey.management.base import TabkeyCommand, unique_name
from tabkey.metric import aggregate
from tabkey.reporting import (
    compare_traces, emit_tables, histogram_csv, rank_histogram, render_saliency_html)
from tabkey.runner import read_traces


class Command(TabkeyCommand):
    help = "Turn evaluation traces into tables, rank histograms and saliency pages."
    input_options = ('traces',)

    def add_arguments(self, parser):
        parser.add_argument('--traces', nargs='+', required=True, metavar='FILE',
                            help="Trace files from evaluate, one per model")
        parser.add_argument('--labels', nargs='+', metavar='LABEL',
                            help="Model labels, one per trace file (default: file names)")
        parser.add_argument('--html', metavar='DIR', help="Write one saliency page per trace")
        parser.add_argument('--compare', metavar='DIR',
                            help="Write one page per text comparing every trace file")
        parser.add_argument('--tables', metavar='FILE', help="Write the model comparison table")
        parser.add_argument('--format', choices=('csv', 'json', 'text'), default='csv',
                            help="Table format (default: csv)")
        parser.add_argument('--histogram', metavar='FILE',
                            help="Write per-position rank counts as CSV")
        parser.add_argument('--max-position', type=int, help="Last histogram position (default: all)")
        parser.add_argument('--skip', type=int, default=0,
                            help="Leave out the first N ranked positions (default: 0)")

    def run(self, **options):
        if not any(options[name] for name in ('html', 'compare', 'tables', 'histogram')):
            raise self.usage_error("Nothing to do: give --html, --compare, --tables or --histogram")
        paths = options['traces']
        labels = options['labels'] or [Path(path).stem for path in paths]
        if len(labels) != len(paths):
            raise self.usage_error(f"{len(labels)} labels given for {len(paths)} trace files")
        if options['max_position'] is not None and options['max_position'] < 1:
            raise self.usage_error("--max-position must be at least 1")
        if options['skip'] < 0:
            raise self.usage_error("--skip cannot be negative")
        runs = [(label, read_traces(path)) for label, path in zip(labels, paths)]

        if options['tables']:
            emit_tables([(label, aggregate(traces)) for label, traces in runs],
                        options['tables'], options['format'])
            self.stdout.write(f"Wrote table of {len(runs)} model(s) to {options['tables']}")

        if options['histogram']:
            target = Path(options['histogram'])
            for label, traces in runs:
                path = target
                if len(runs) > 1:
                    path = target.with_name(f"{target.stem}-{slugify(label)}{target.suffix}")
                histogram = rank_histogram(traces, options['max_position'], options['skip'])
                path.write_text(histogram_csv(histogram), encoding='utf-8')
                self.stdout.write(f"Wrote {len(histogram.positions())} positions to {path}")

        if options['html']:
            self.write_pages(runs, Path(options['html']))

        if options['compare']:
            self.write_comparisons(runs, Path(options['compare']))

    def write_pages(self, runs, directory):
        directory.mkdir(parents=True, exist_ok=True)
        taken = set()
        for label, traces in runs:
            for trace in traces:
                name = slugify(trace.source_id)
                if len(runs) > 1:
                    name = f"{slugify(label)}-{name}"
                path = directory / f"{unique_name(name, taken)}.html"
                path.write_text(render_saliency_html(trace), encoding='utf-8')
        self.stdout.write(f"Wrote {len(taken)} page(s) to {directory}")

    def write_comparisons(self, runs, directory):
        if len(runs) < 2:
            raise self.usage_error("--compare needs at least two trace files")
        directory.mkdir(parents=True, exist_ok=True)
        by_source = [{trace.source_id: trace for trace in traces} for _label, traces in runs]
        shared = [source_id for source_id in by_source[0]
                  if all(source_id in traces for traces in by_source[1:])]
        taken = set()
        for source_id in shared:
            page = compare_traces(
                (label, traces[source_id]) for (label, _), traces in zip(runs, by_source))
            path = directory / f"{unique_name(slugify(source_id), taken)}.html"
            path.write_text(page, encoding='utf-8')
        self.stdout.write(f"Wrote {len(shared)} comparison page(s) to {directory}")
