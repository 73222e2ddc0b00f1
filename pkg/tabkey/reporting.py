import csv
import io
import json
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Dict

from django.template.loader import render_to_string

from tabkey.exceptions import ReportError
from tabkey.metric import Bucket, aggregate, ae_ratio, percent

logger = logging.getLogger(__name__)

INSPECTION_SCHEMA = 1

TABLE_COLUMNS = (
    'size',
    'AE ratio',
    'total w/ autocomplete',
    'top 10',
    'out of top 10',
    'top 1',
    'total w/o autocomplete',
    'best',
)

HISTOGRAM_BUCKETS = (Bucket.TOP1, Bucket.TOP2_10, Bucket.OUT)

HISTOGRAM_COLUMNS = (
    'position', 'top1', 'top2_10', 'out', 'reaching', 'top1_pct', 'top2_10_pct', 'out_pct',
)


def table_rows(breakdowns):
    """Rows of a model comparison table, one per (label, breakdown)."""
    breakdowns = list(breakdowns.items() if isinstance(breakdowns, dict) else breakdowns)
    if not breakdowns:
        raise ReportError("No breakdowns to tabulate")
    totals = {breakdown.total_without for _label, breakdown in breakdowns}
    if len(totals) != 1:
        raise ReportError(
            f"Rows typed different texts (total w/o autocomplete: {sorted(totals)})")

    rows = []
    for label, breakdown in breakdowns:
        ratio = ae_ratio(breakdown.total_with, breakdown.total_without)
        if abs(ratio - breakdown.ae_ratio) > 1e-12:
            raise ReportError(f"Row {label!r} has an AE ratio inconsistent with its totals")
        rows.append({
            'size': str(label),
            'AE ratio': percent(ratio),
            'total w/ autocomplete': breakdown.total_with,
            'top 10': breakdown.keys_top10,
            'out of top 10': breakdown.keys_out,
            'top 1': breakdown.keys_top1,
            'total w/o autocomplete': breakdown.total_without,
            'best': False,
            '_ratio': ratio,
        })
    best = max(rows, key=lambda row: row['_ratio'])
    best['best'] = True
    for row in rows:
        del row['_ratio']
    return rows


def render_table(rows, fmt='csv'):
    if fmt == 'csv':
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=TABLE_COLUMNS, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({**row, 'best': '*' if row['best'] else ''})
        return out.getvalue()
    if fmt == 'json':
        return json.dumps(rows, indent=2, ensure_ascii=False) + '\n'
    if fmt == 'text':
        cells = [list(TABLE_COLUMNS)]
        for row in rows:
            cells.append([
                f"{row[column]:,}" if isinstance(row[column], int) and not isinstance(row[column], bool)
                else ('*' if row[column] is True else '' if row[column] is False else str(row[column]))
                for column in TABLE_COLUMNS
            ])
        widths = [max(len(line[i]) for line in cells) for i in range(len(TABLE_COLUMNS))]
        lines = ['  '.join(cell.rjust(width) for cell, width in zip(line, widths)).rstrip()
                 for line in cells]
        return '\n'.join(lines) + '\n'
    raise ReportError(f"Unknown table format {fmt!r}")


def emit_tables(breakdowns, path, fmt='csv'):
    content = render_table(table_rows(breakdowns), fmt)
    logger.info(f"Writing {fmt} table to {path}")
    with open(path, 'w', encoding='utf-8') as f:
        f.write(content)
    return content


@dataclass
class PositionHistogram:
    """Bucket counts per token position over a set of traces."""
    counts: Dict[int, Counter] = field(default_factory=dict)

    def reaching(self, position):
        return sum(self.counts[position].values())

    def positions(self):
        return sorted(self.counts)

    def rows(self):
        for position in self.positions():
            counts = self.counts[position]
            reaching = self.reaching(position)
            row = {'position': position, 'reaching': reaching}
            for bucket in HISTOGRAM_BUCKETS:
                row[str(bucket)] = counts[bucket]
                row[f"{bucket}_pct"] = round(100.0 * counts[bucket] / reaching, 2)
            yield row


def rank_histogram(traces, max_position=None, skip=0):
    """Count TOP1 / TOP2_10 / OUT outcomes per ranked position.

    Positions start at 1 (the first token is never ranked); the first
    `skip` of them are left out. Positions no trace reaches are absent.
    """
    if not traces:
        raise ReportError("No traces to count")
    histogram = PositionHistogram()
    for trace in traces:
        for outcome in trace.ranked:
            if outcome.position <= skip:
                continue
            if max_position is not None and outcome.position > max_position:
                break
            histogram.counts.setdefault(outcome.position, Counter())[outcome.bucket] += 1
    return histogram


def histogram_csv(histogram):
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=HISTOGRAM_COLUMNS, lineterminator='\n')
    writer.writeheader()
    for row in histogram.rows():
        writer.writerow(row)
    return out.getvalue()


def _tooltip(trace, outcome):
    if outcome.rank is None:
        lines = [f"first token, {outcome.keystrokes} keystrokes"]
    else:
        lines = [f"rank {outcome.rank}, {outcome.keystrokes} keystrokes"]
    if trace.stored_topk is not None and trace.stored_topk[outcome.position]:
        for slot, entry in enumerate(trace.stored_topk[outcome.position], start=1):
            lines.append(f"{slot}. {entry.text!r} {entry.prob:.4f}")
    return '\n'.join(lines)


def _panel(trace, label=None):
    breakdown = aggregate([trace])
    return {
        'label': label,
        'source_id': trace.source_id,
        'ae': percent(breakdown.ae_ratio),
        'breakdown': breakdown,
        'tokens': [
            {'text': outcome.text, 'bucket': str(outcome.bucket), 'title': _tooltip(trace, outcome)}
            for outcome in trace.outcomes
        ],
    }


def render_saliency_html(trace, vocab=None):
    """Self-contained page colouring each token by how it was entered.

    Token text is stored in the trace; `vocab` is only used to fill it in for
    traces written without it.
    """
    if vocab is not None:
        trace = replace(trace, outcomes=[
            o if o.text or not o.text_len else replace(o, text=vocab.decode(o.token))
            for o in trace.outcomes
        ])
    return render_to_string('tabkey/saliency.html', {
        'title': trace.source_id,
        'panels': [_panel(trace)],
    })


def compare_traces(labelled_traces):
    """One page showing several predictors' traces of the same text."""
    labelled_traces = list(labelled_traces)
    if not labelled_traces:
        raise ReportError("Nothing to compare")
    texts = {trace.text for _label, trace in labelled_traces}
    if len(texts) != 1:
        raise ReportError("Compared traces replay different texts")
    return render_to_string('tabkey/saliency.html', {
        'title': labelled_traces[0][1].source_id,
        'panels': [_panel(trace, label) for label, trace in labelled_traces],
    })


def inspection(trace):
    """Everything an interactive viewer needs, per token position."""
    if trace.stored_topk is None:
        raise ReportError(
            f"{trace.source_id!r} has no stored predictions; re-run evaluate with --capture-topk")
    positions = []
    for outcome in trace.outcomes:
        entry = {
            'position': outcome.position,
            'prompt_length': outcome.position,
            'token': outcome.token,
            'text': outcome.text,
            'bucket': str(outcome.bucket),
            'keystrokes': outcome.keystrokes,
        }
        if outcome.rank is not None:
            entry['rank'] = outcome.rank
            entry['prob'] = outcome.prob
            entry['topk'] = [e.to_dict() for e in trace.stored_topk[outcome.position]]
            if trace.continuations is not None and trace.continuations[outcome.position]:
                entry['continuation'] = trace.continuations[outcome.position].to_dict()
        positions.append(entry)
    return {
        'schema': INSPECTION_SCHEMA,
        'source_id': trace.source_id,
        'text': trace.text,
        'cutoff': trace.cutoff,
        'ae_ratio': trace.ae_ratio,
        'positions': positions,
    }


def dump_inspection(trace, path):
    data = inspection(trace)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
        f.write('\n')
    return data
