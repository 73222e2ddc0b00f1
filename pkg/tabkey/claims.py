"""Patent claim parsing, dependency pairing and dataset assembly."""
import json
import logging
import re
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

from django.db import models
from django.utils.translation import gettext_lazy as _

from tabkey.exceptions import ClaimParseError, MultipleDependentClaimError, TabkeyError
from tabkey.vocab import DEP_TAG, END_OF_CLAIM, START_OF_CLAIM

logger = logging.getLogger(__name__)

CLAIM_START = re.compile(r'^[ \t]*(\d+)[ \t]*\.[ \t]+', re.MULTILINE)

FIRST_SENTENCE = re.compile(r'\.(?:\s|$)')

RANGE_REFERENCE = re.compile(
    r'\bany(?:\s+one)?\s+of\s+claims\s+(\d+)\s*(?:-|–|—|to|through)\s*(\d+)', re.IGNORECASE)

LIST_REFERENCE = re.compile(
    r'\b(?:of|to|in)\s+claims?\s+(\d+(?:\s*,\s*\d+)*)\s*,?\s*(?:or|and)\s+(?:claims?\s+)?(\d+)', re.IGNORECASE)

SINGLE_REFERENCE = re.compile(
    r'\b(?:of|according\s+to|as\s+claimed\s+in|as\s+recited\s+in|as\s+defined\s+in)'
    r'\s+claim\s+(\d+)', re.IGNORECASE)

LOOSE_REFERENCE = re.compile(r'\bclaims?\s+\d', re.IGNORECASE)

SECTIONS = ('title', 'abstract', 'description')


class MultipleDependentPolicy(models.TextChoices):
    SKIP = 'skip', _('skip with a warning')
    STRICT = 'strict', _('fail')


class ReverseUnit(models.TextChoices):
    TOKEN = 'token', _('token')
    CHAR = 'char', _('character')


@dataclass(frozen=True)
class ClaimRecord:
    number: int
    text: str
    depends_on: Tuple[int, ...] = ()

    @property
    def independent(self):
        return not self.depends_on

    @property
    def multiple_dependent(self):
        return len(self.depends_on) > 1

    def render(self):
        return f"{self.number}. {self.text}"


@dataclass(frozen=True)
class Provenance:
    patent_id: str
    claims: Tuple[int, ...] = ()
    section: str = 'claims'

    def to_dict(self):
        return {'patent_id': self.patent_id, 'claims': list(self.claims), 'section': self.section}


@dataclass(frozen=True)
class TrainingRecord:
    """One dataset line. Token-reversed records keep their token ids, since
    re-encoding a reversed text need not give back the reversed tokens."""
    text: str
    provenance: Provenance
    reversed: bool = False
    tokens: Optional[Tuple[int, ...]] = None

    def to_dict(self):
        data = {'text': self.text, 'reversed': self.reversed, 'provenance': self.provenance.to_dict()}
        if self.tokens is not None:
            data['tokens'] = list(self.tokens)
        return data


@dataclass
class ClaimDocument:
    patent_id: str
    claims: list
    sections: Dict[str, str] = field(default_factory=dict)


def find_references(text):
    """Claim numbers referenced in the first sentence of a claim body."""
    first = FIRST_SENTENCE.split(text, maxsplit=1)[0]
    found = set()
    for match in RANGE_REFERENCE.finditer(first):
        low, high = int(match.group(1)), int(match.group(2))
        found.update(range(min(low, high), max(low, high) + 1))
    for match in LIST_REFERENCE.finditer(first):
        found.update(int(n) for n in re.findall(r'\d+', match.group(1)))
        found.add(int(match.group(2)))
    for match in SINGLE_REFERENCE.finditer(first):
        found.add(int(match.group(1)))
    return tuple(sorted(found)), first


def _check_references(number, depends_on):
    for parent in depends_on:
        if parent < 1 or parent >= number:
            raise ClaimParseError(
                f"Claim {number} refers to claim {parent}, which does not precede it",
                claim=number)


def parse_claims(document):
    """Split a numbered claim listing into ClaimRecords.

    Claims are lines starting with "N." numbered 1, 2, 3... in order.
    Text before claim 1 (e.g. "What is claimed is:") is ignored.
    """
    starts = list(CLAIM_START.finditer(document))
    if not starts:
        raise ClaimParseError("No numbered claims found")

    claims = []
    for index, match in enumerate(starts):
        number = int(match.group(1))
        expected = index + 1
        if number != expected:
            raise ClaimParseError(
                f"Claim {number} found where claim {expected} was expected", claim=number)
        end = starts[index + 1].start() if index + 1 < len(starts) else len(document)
        text = document[match.end():end].strip()
        depends_on, first = find_references(text)
        if not depends_on and LOOSE_REFERENCE.search(first):
            logger.warning(
                f"Claim {number} mentions a claim but matches no reference pattern; "
                f"treating it as independent")
        _check_references(number, depends_on)
        claims.append(ClaimRecord(number, text, depends_on))
    return claims


def render_claims(claims):
    return '\n'.join(claim.render() for claim in claims)


def multiple_dependent_claims(claims):
    return [claim for claim in claims if claim.multiple_dependent]


def expand_pairs(claims, policy=MultipleDependentPolicy.SKIP, patent_id=''):
    """Independent claims become singleton records; each single-parent
    dependent claim is paired with its direct parent as "parent<|dep|>child".
    """
    policy = MultipleDependentPolicy(policy)
    by_number = {claim.number: claim for claim in claims}
    records = []
    for claim in claims:
        if claim.independent:
            records.append(TrainingRecord(
                claim.render(), Provenance(patent_id, (claim.number,))))
            continue
        if claim.multiple_dependent:
            parents = ', '.join(str(n) for n in claim.depends_on)
            if policy == MultipleDependentPolicy.STRICT:
                raise MultipleDependentClaimError(
                    f"Claim {claim.number} depends on claims {parents}", claim=claim.number)
            logger.warning(
                f"Skipping multiple-dependent claim {claim.number} of {patent_id or 'document'} "
                f"(depends on {parents})")
            continue
        parent = by_number.get(claim.depends_on[0])
        if parent is None:
            raise ClaimParseError(
                f"Claim {claim.number} depends on missing claim {claim.depends_on[0]}",
                claim=claim.number)
        records.append(TrainingRecord(
            f"{parent.render()}{DEP_TAG}{claim.render()}",
            Provenance(patent_id, (parent.number, claim.number))))
    return records


def reverse_augment(records, vocab=None, unit=ReverseUnit.TOKEN):
    """Originals followed by a reversed copy of each.

    Token reversal keeps special tags atomic; character reversal spells
    them backwards.
    """
    unit = ReverseUnit(unit)
    if unit == ReverseUnit.TOKEN and vocab is None:
        raise TabkeyError("Token-level reversal needs a vocabulary")
    reversed_records = []
    for record in records:
        if unit == ReverseUnit.TOKEN:
            tokens = record.tokens if record.tokens is not None else tuple(vocab.encode(record.text))
            tokens = tokens[::-1]
            text = vocab.decode_sequence(tokens)
        else:
            tokens = None
            text = record.text[::-1]
        reversed_records.append(TrainingRecord(
            text, record.provenance, reversed=not record.reversed, tokens=tokens))
    return list(records) + reversed_records


def wrap_record(record, vocab=None):
    tokens = record.tokens
    if tokens is not None:
        tokens = (vocab.token_id(START_OF_CLAIM),) + tokens + (vocab.token_id(END_OF_CLAIM),)
    return TrainingRecord(
        f"{START_OF_CLAIM}{record.text}{END_OF_CLAIM}", record.provenance,
        reversed=record.reversed, tokens=tokens)


def _claims_from_json(patent_id, items):
    claims = []
    for index, item in enumerate(items, start=1):
        try:
            number = int(item['num'])
            text = str(item['text']).strip()
        except (KeyError, TypeError, ValueError) as exc:
            raise ClaimParseError(f"Claim entry {index} is malformed: {exc}") from exc
        if number != index:
            raise ClaimParseError(
                f"Claim {number} found where claim {index} was expected", claim=number)
        if item.get('deps') is None:
            depends_on, _first = find_references(text)
        else:
            depends_on = tuple(sorted({int(n) for n in item['deps']}))
        _check_references(number, depends_on)
        claims.append(ClaimRecord(number, text, depends_on))
    if not claims:
        raise ClaimParseError(f"{patent_id} has no claims")
    return claims


def read_documents(path):
    """Yield (ClaimDocument | None, error | None) for each document in a file.

    `.jsonl` files hold one {"patent_id", "claims": [{"num", "text",
    "deps"}]} object per line; any other file is one plain-text claim
    listing named after the file.
    """
    path = Path(path)
    if path.suffix != '.jsonl':
        try:
            yield ClaimDocument(path.stem, parse_claims(path.read_text(encoding='utf-8'))), None
        except (ClaimParseError, OSError, UnicodeDecodeError) as exc:
            yield None, f"{path}: {exc}"
        return

    try:
        lines = path.read_text(encoding='utf-8').splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        yield None, f"{path}: {exc}"
        return
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
            patent_id = str(data.get('patent_id') or f"{path.stem}:{number}")
            sections = {name: data[name] for name in SECTIONS if data.get(name)}
            yield ClaimDocument(patent_id, _claims_from_json(patent_id, data['claims']), sections), None
        except (ValueError, KeyError, TypeError, AttributeError, ClaimParseError) as exc:
            yield None, f"{path}:{number}: {exc}"


def _source_id(data, path, number):
    provenance = data.get('provenance') or {}
    if not provenance.get('patent_id'):
        return f"{path.stem}:{number}"
    source_id = str(provenance['patent_id'])
    if provenance.get('claims'):
        source_id += '#' + '-'.join(str(n) for n in provenance['claims'])
    elif provenance.get('section', 'claims') != 'claims':
        source_id += '#' + provenance['section']
    if data.get('reversed'):
        source_id += ':reversed'
    return source_id


def iter_sources(path):
    """(source_id, text, tokens) for every text of a corpus file.

    Dataset files (`.jsonl` lines with "text") give their records, with
    stored token ids when present; claim document files give their rendered
    claims; anything else is one text named after the file.
    """
    path = Path(path)
    if path.suffix != '.jsonl':
        yield path.stem, path.read_text(encoding='utf-8'), None
        return
    with open(path, 'r', encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except ValueError as exc:
                raise TabkeyError(f"{path}:{number} is not JSON: {exc}") from exc
            if 'text' in data:
                tokens = data.get('tokens')
                yield _source_id(data, path, number), data['text'], tokens and tuple(tokens)
            elif 'claims' in data:
                patent_id = str(data.get('patent_id') or f"{path.stem}:{number}")
                for claim in _claims_from_json(patent_id, data['claims']):
                    yield f"{patent_id}#{claim.number}", claim.render(), None
            else:
                raise TabkeyError(f"{path}:{number} has neither 'text' nor 'claims'")


def iter_texts(path):
    for _source_id, text, _tokens in iter_sources(path):
        yield text


def _size_stats(records):
    lengths = [len(record.text) for record in records]
    if not lengths:
        return {'characters': 0, 'min': 0, 'max': 0, 'mean': 0.0}
    return {
        'characters': sum(lengths),
        'min': min(lengths),
        'max': max(lengths),
        'mean': round(statistics.mean(lengths), 3),
    }


def assemble_dataset(inputs, out_path, manifest_path, expand=True, reverse=False,
                     tags=False, policy=MultipleDependentPolicy.SKIP, vocab=None,
                     reverse_unit=ReverseUnit.TOKEN, sections=False):
    """Write a JSON Lines training set plus a manifest; returns the manifest.

    Documents that fail to read or parse are listed in the manifest and
    skipped. Raises ClaimParseError when no document could be used.
    """
    records = []
    errors = []
    skipped = []
    documents = 0
    for path in inputs:
        for document, error in read_documents(path):
            if error:
                logger.error(f"Cannot use {error}")
                errors.append(error)
                continue
            documents += 1
            if sections:
                for name, text in document.sections.items():
                    records.append(TrainingRecord(text, Provenance(document.patent_id, section=name)))
            if expand:
                records.extend(expand_pairs(document.claims, policy, document.patent_id))
                skipped.extend(
                    {'patent_id': document.patent_id, 'claim': claim.number,
                     'depends_on': list(claim.depends_on)}
                    for claim in multiple_dependent_claims(document.claims))
            else:
                records.extend(
                    TrainingRecord(claim.render(), Provenance(document.patent_id, (claim.number,)))
                    for claim in document.claims)

    if not documents:
        raise ClaimParseError(f"None of the {len(errors)} input document(s) could be used")

    forward = len(records)
    if reverse:
        records = reverse_augment(records, vocab=vocab, unit=reverse_unit)
    if tags:
        records = [wrap_record(record, vocab) for record in records]

    with open(out_path, 'w', encoding='utf-8') as f:
        for record in records:
            f.write(json.dumps(record.to_dict(), ensure_ascii=False))
            f.write('\n')

    manifest = {
        'documents': documents,
        'documents_failed': len(errors),
        'records': len(records),
        'forward_records': forward,
        'reversed_records': len(records) - forward,
        'pair_records': sum(DEP_TAG in r.text for r in records[:forward]),
        'skipped_multiple_dependent': skipped,
        'errors': errors,
        'size': _size_stats(records),
        'options': {
            'expand': expand,
            'reverse': reverse,
            'reverse_unit': str(ReverseUnit(reverse_unit)),
            'tags': tags,
            'md_policy': str(MultipleDependentPolicy(policy)),
            'sections': sections,
        },
    }
    with open(manifest_path, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, ensure_ascii=False)
        f.write('\n')
    logger.info(
        f"Wrote {len(records)} records from {documents} document(s) to {out_path} "
        f"({len(skipped)} multiple-dependent claims skipped, {len(errors)} failures)")
    return manifest
