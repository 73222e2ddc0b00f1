"""Vocabulary, byte-level BPE training and encoding."""
import json
import logging
import re
from bisect import bisect_left

from django.db import models
from django.utils.translation import gettext_lazy as _
from tokenizers import Tokenizer, pre_tokenizers
from tokenizers.models import BPE, WordPiece
from tokenizers.trainers import BpeTrainer

from tabkey.exceptions import TokenizerTrainingError, VocabError

logger = logging.getLogger(__name__)

DEP_TAG = '<|dep|>'
START_OF_CLAIM = '<|start_of_claim|>'
END_OF_CLAIM = '<|end_of_claim|>'

SPECIAL_TAGS = (DEP_TAG, START_OF_CLAIM, END_OF_CLAIM)

UNKNOWN = '[UNK]'


def _byte_alphabet():
    # printable bytes stand for themselves, the rest take the shifted
    # characters in ascending order
    alphabet = pre_tokenizers.ByteLevel.alphabet()
    table = {ord(c): c for c in alphabet if ord(c) < 256}
    shifted = sorted(c for c in alphabet if ord(c) >= 256)
    table.update(zip(sorted(set(range(256)) - set(table)), shifted))
    return tuple(table[b] for b in range(256))


# Token i of every vocabulary is byte i, spelled the way byte-level BPE spells it.
BASE_ALPHABET = _byte_alphabet()
BYTE_OF = {c: b for b, c in enumerate(BASE_ALPHABET)}


def to_byte_level(text):
    """Spell `text` in the byte alphabet vocabulary entries are stored in."""
    return ''.join(BASE_ALPHABET[b] for b in text.encode('utf-8'))


def _tag_pattern(tags):
    ordered = sorted(tags, key=len, reverse=True)
    return re.compile('|'.join(re.escape(tag) for tag in ordered))


def _is_lead(byte):
    return byte & 0xC0 != 0x80


class KeystrokeUnit(models.TextChoices):
    CHAR = 'char', _('Unicode scalar values')
    BYTE = 'byte', _('UTF-8 bytes')


class Vocab:
    """Immutable mapping between token ids and the bytes they stand for.

    Ordinary entries are byte-level strings (" method" is stored as
    "Ġmethod") and the 256 single-byte entries must all be present, so
    every text is encodable. Ids listed in `special` are structural tags:
    stored literally, matched atomically by `encode`, never typed.

    With `merges` the vocabulary encodes as byte-pair merges; without them
    (vocabularies supplied as a bare token list) every word is split
    greedily into its longest known pieces.
    """

    def __init__(self, tokens, special=(), merges=None):
        self._tokens = tuple(tokens)
        self.special = frozenset(special)
        self.merges = None if merges is None else tuple(tuple(pair) for pair in merges)

        for index in self.special:
            if not 0 <= index < len(self._tokens):
                raise VocabError(f"Special index {index} is outside the vocabulary")

        self._ids = {}
        raw = []
        for index, text in enumerate(self._tokens):
            if not isinstance(text, str):
                raise VocabError(f"Token {index} is not a string")
            if not text:
                raise VocabError(f"Token {index} has empty surface text")
            if text in self._ids:
                raise VocabError(f"Token {text!r} appears twice in the vocabulary")
            self._ids[text] = index
            if index in self.special:
                raw.append(text.encode('utf-8'))
            else:
                try:
                    raw.append(bytes(BYTE_OF[c] for c in text))
                except KeyError:
                    raise VocabError(f"Token {index} ({text!r}) is not byte-level text") from None
        self._bytes = tuple(raw)

        missing = [tag for tag in SPECIAL_TAGS if self._special_id(tag) is None]
        if missing:
            raise VocabError(
                f"Vocabulary lacks the structural tags {', '.join(missing)}")
        absent = [b for b, c in enumerate(BASE_ALPHABET) if self._ids.get(c) in (None, *self.special)]
        if absent:
            raise VocabError(f"Vocabulary lacks single-byte tokens for {len(absent)} byte values")

        self._lengths = {
            KeystrokeUnit.CHAR: tuple(sum(map(_is_lead, b)) for b in self._bytes),
            KeystrokeUnit.BYTE: tuple(len(b) for b in self._bytes),
        }
        self._tokenizer = self._build_tokenizer()

    def _special_id(self, tag):
        index = self._ids.get(tag)
        return index if index in self.special else None

    def _build_tokenizer(self):
        if self.merges is not None:
            model = BPE(vocab=dict(self._ids), merges=list(self.merges))
        else:
            model = WordPiece(
                vocab=dict(self._ids), unk_token=UNKNOWN, continuing_subword_prefix='',
                max_input_chars_per_word=1_000_000)
        tokenizer = Tokenizer(model)
        tokenizer.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
        tokenizer.add_special_tokens([self._tokens[i] for i in sorted(self.special)])
        return tokenizer

    def __len__(self):
        return len(self._tokens)

    def __eq__(self, other):
        if not isinstance(other, Vocab):
            return NotImplemented
        return (self._tokens, self.special, self.merges) == (other._tokens, other.special, other.merges)

    def __hash__(self):
        return hash((self._tokens, self.special))

    @property
    def tokens(self):
        return self._tokens

    def token_id(self, text):
        """Id of a token given its surface text (special tags included)."""
        index = self._special_id(text)
        if index is not None:
            return index
        index = self._ids.get(to_byte_level(text))
        if index is None or index in self.special:
            raise VocabError(f"{text!r} is not a token")
        return index

    def is_special(self, token):
        return token in self.special

    def _check(self, token):
        if not isinstance(token, int) or not 0 <= token < len(self._tokens):
            raise VocabError(f"Unknown token id {token!r}")
        return token

    def decode(self, token):
        """Surface text of one token; bytes of a split character show as U+FFFD."""
        return self._bytes[self._check(token)].decode('utf-8', errors='replace')

    def decode_sequence(self, tokens):
        return b''.join(self._bytes[self._check(t)] for t in tokens).decode('utf-8', errors='replace')

    def decode_pieces(self, tokens):
        """Surface text per token, concatenating to `decode_sequence`.

        A character whose bytes are split over several tokens belongs to
        the token holding its first byte; the others get ''.
        """
        spans = [self._bytes[self._check(t)] for t in tokens]
        data = b''.join(spans)
        starts = [i for i, byte in enumerate(data) if _is_lead(byte)] + [len(data)]
        pieces = []
        offset = 0
        for span in spans:
            low = starts[bisect_left(starts, offset)]
            offset += len(span)
            high = starts[bisect_left(starts, offset)]
            pieces.append(data[low:high].decode('utf-8', errors='replace'))
        return pieces

    def token_length(self, token, unit=KeystrokeUnit.CHAR):
        """Manual typing cost of a token in `unit`.

        Characters are counted by their first byte, so the lengths of a
        sequence add up to the length of its decoded text.
        """
        return self._lengths[KeystrokeUnit(unit)][self._check(token)]

    def encode(self, text):
        try:
            return self._tokenizer.encode(text, add_special_tokens=False).ids
        except Exception as exc:
            raise VocabError(f"Cannot encode {text[:40]!r}: {exc}") from exc

    def to_dict(self):
        data = {
            'tokens': list(self._tokens),
            'special': sorted(self.special),
        }
        if self.merges is not None:
            data['merges'] = [list(pair) for pair in self.merges]
        return data

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data['tokens'], data.get('special', ()), data.get('merges'))
        except (KeyError, TypeError) as exc:
            raise VocabError(f"Malformed vocabulary: {exc}") from exc

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, ensure_ascii=False)
            f.write('\n')

    @classmethod
    def load(cls, path):
        with open(path, 'r', encoding='utf-8') as f:
            try:
                data = json.load(f)
            except ValueError as exc:
                raise VocabError(f"{path} is not a vocabulary file: {exc}") from exc
        return cls.from_dict(data)


def _merge_pair(merge):
    # older tokenizers releases serialise merges as "a b"
    return tuple(merge.split(' ', 1)) if isinstance(merge, str) else tuple(merge)


def train_tokenizer(corpus, target_vocab_size, special_tags=SPECIAL_TAGS):
    """Learn a byte-level BPE vocabulary of at most `target_vocab_size` entries.

    Ids 0-255 are the bytes, then the special tags, then merged tokens in
    the order they were learned. Literal tags in the corpus are cut out
    before training so they never take part in merges.
    """
    tags = tuple(dict.fromkeys(tuple(SPECIAL_TAGS) + tuple(special_tags)))
    minimum = len(BASE_ALPHABET) + len(tags)
    if target_vocab_size < minimum:
        raise TokenizerTrainingError(
            f"Target size {target_vocab_size} cannot hold the {len(BASE_ALPHABET)} "
            f"byte tokens and {len(tags)} special tags")

    splitter = _tag_pattern(tags)
    pieces = [piece for text in corpus for piece in splitter.split(text) if piece]
    if not pieces:
        raise TokenizerTrainingError("Cannot train a tokenizer on an empty corpus")

    tokenizer = Tokenizer(BPE())
    tokenizer.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    trainer = BpeTrainer(
        vocab_size=target_vocab_size,
        show_progress=False,
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
        special_tokens=list(tags),
    )
    tokenizer.train_from_iterator(pieces, trainer=trainer)

    model = json.loads(tokenizer.to_str())['model']
    known = set(BASE_ALPHABET) | set(tags)
    learned = sorted((index, token) for token, index in model['vocab'].items() if token not in known)
    tokens = list(BASE_ALPHABET) + list(tags) + [token for _index, token in learned]
    merges = [_merge_pair(merge) for merge in model['merges']]

    logger.info(f"Trained vocabulary of {len(tokens)} tokens ({len(merges)} merges)")
    return Vocab(tokens, range(len(BASE_ALPHABET), minimum), merges)
