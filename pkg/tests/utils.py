import json
import os
import random

from django.conf import settings

from tabkey.claims import ClaimRecord, render_claims
from tabkey.vocab import BASE_ALPHABET, SPECIAL_TAGS, Vocab, to_byte_level

WORDS = (' the', ' method', ' claim', ' of', ' wherein', ' comprising', ' a')


def toy_vocab(words=WORDS):
    """Byte alphabet, the structural tags (ids 256-258), then `words`.

    Without merges the vocabulary encodes by longest match.
    """
    tokens = list(BASE_ALPHABET) + list(SPECIAL_TAGS) + [to_byte_level(w) for w in words]
    special = range(len(BASE_ALPHABET), len(BASE_ALPHABET) + len(SPECIAL_TAGS))
    return Vocab(tokens, special)


def fixture_path(name):
    return os.path.join(settings.FIXTURES_DIR, name)


def read_fixture(name):
    with open(fixture_path(name), 'r', encoding='utf-8') as f:
        return f.read()


SUBJECTS = ('method', 'system', 'apparatus', 'device')
NOUNS = (
    'signal', 'data packet', 'sensor', 'controller', 'memory unit', 'processor',
    'display', 'user input', 'network node', 'battery', 'housing', 'antenna',
)
ACTIONS = (
    'receiving', 'transmitting', 'storing', 'determining', 'generating',
    'processing', 'comparing', 'detecting',
)
ADJECTIVES = ('wireless', 'first', 'second', 'configurable', 'predetermined', 'encrypted')


def claim_set(rng, size=None):
    """One patent's worth of ClaimRecords: claim 1 independent, the rest
    depending on a single earlier claim."""
    size = size or rng.randint(3, 6)
    subject = rng.choice(SUBJECTS)
    steps = [
        f"{rng.choice(ACTIONS)} a {rng.choice(ADJECTIVES)} {rng.choice(NOUNS)}"
        for _ in range(rng.randint(2, 4))
    ]
    first = (f"A {subject} for {rng.choice(ACTIONS)} a {rng.choice(NOUNS)}, comprising: "
             f"{'; '.join(steps[:-1])}; and {steps[-1]}.")
    claims = [ClaimRecord(1, first)]
    for number in range(2, size + 1):
        parent = rng.randint(1, number - 1)
        if rng.random() < 0.5:
            body = f"wherein the {rng.choice(NOUNS)} is {rng.choice(ADJECTIVES)}"
        else:
            body = f"further comprising {rng.choice(ACTIONS)} the {rng.choice(NOUNS)}"
        claims.append(ClaimRecord(number, f"The {subject} of claim {parent}, {body}.", (parent,)))
    return claims


def synthetic_claims(count, seed=0):
    """`count` rendered claims ("N. text") drawn from seeded claim sets."""
    rng = random.Random(seed)
    texts = []
    while len(texts) < count:
        texts.extend(claim.render() for claim in claim_set(rng))
    return texts[:count]


def synthetic_documents(count, seed=0):
    """Claim documents in the JSON Lines input layout."""
    rng = random.Random(seed)
    return [
        {
            'patent_id': f"US{9000000 + index}",
            'claims': [{'num': c.number, 'text': c.text} for c in claim_set(rng)],
        }
        for index in range(count)
    ]


def write_jsonl(path, rows):
    with open(path, 'w', encoding='utf-8') as f:
        for row in rows:
            f.write(json.dumps(row))
            f.write('\n')


def claim_listing(claims):
    return 'What is claimed is:\n' + render_claims(claims) + '\n'
