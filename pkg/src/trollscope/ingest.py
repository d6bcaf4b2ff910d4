"""Dataset loading and the tweet preprocessing chain.

The chain mirrors the usual tweet-corpus recipe: strip URLs / mentions /
hashtags / retweet markers / emoji / smileys / punctuation / digits,
lemmatize with a rule table, drop function words, then deduplicate and
prune tweets shorter than two lemmas.  Every stage is deterministic; the
stopword list and the irregular-lemma table ship as pinned data files and
their hashes are recorded for provenance.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import ConfigError, DataError

TROLL = 0
GENUINE = 1
UNLABELED = -1

_VALID_LABELS = (TROLL, GENUINE, UNLABELED)


@dataclass(frozen=True)
class RawRecord:
    """One raw tweet as loaded, before any cleaning."""

    text: str
    label: int
    origin: str = ""

    def __post_init__(self):
        if self.label not in _VALID_LABELS:
            raise DataError(f"label must be one of {_VALID_LABELS}, got {self.label!r}")


@dataclass(frozen=True)
class CleanTweet:
    """A fully preprocessed tweet: ordered lemmas plus its class label."""

    lemmas: tuple[str, ...]
    label: int

    def __post_init__(self):
        if self.label not in _VALID_LABELS:
            raise DataError(f"label must be one of {_VALID_LABELS}, got {self.label!r}")


@dataclass(frozen=True)
class DatasetFormat:
    """Describes how to pull text and labels out of a CSV or JSON-lines file.

    ``label_field`` names a column/field holding per-row labels (mapped
    through ``label_map`` when given); when it is None every row gets
    ``default_label``.
    """

    kind: str  # "csv" or "jsonl"
    text_field: str
    label_field: str | None = None
    label_map: dict[str, int] | None = None
    default_label: int = UNLABELED
    encoding: str = "utf-8"

    def __post_init__(self):
        if self.kind not in ("csv", "jsonl"):
            raise ConfigError(f"unknown dataset kind {self.kind!r}")


def _resolve_label(fmt: DatasetFormat, raw) -> int | None:
    """Map a raw label cell to 0/1/-1, or None if unmappable."""
    if raw is None:
        return None
    key = str(raw).strip()
    if fmt.label_map is not None:
        if key in fmt.label_map:
            return fmt.label_map[key]
        return None
    try:
        value = int(key)
    except ValueError:
        return None
    return value if value in _VALID_LABELS else None


def load_dataset(path: str | Path, fmt: DatasetFormat) -> tuple[list[RawRecord], int]:
    """Load raw records from ``path``; returns (records, skipped_row_count).

    Rows missing the text field, with empty text, or with an unmappable
    label are counted and skipped.  A missing *column* (CSV header without
    the configured field) is a configuration error, not a data error.
    """
    path = Path(path)
    origin = path.name
    records: list[RawRecord] = []
    skipped = 0

    if fmt.kind == "csv":
        with open(path, newline="", encoding=fmt.encoding) as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            if header:
                if fmt.text_field not in header:
                    raise ConfigError(
                        f"text column {fmt.text_field!r} not in {origin} header {header}"
                    )
                if fmt.label_field is not None and fmt.label_field not in header:
                    raise ConfigError(
                        f"label column {fmt.label_field!r} not in {origin} header {header}"
                    )
            for row in reader:
                rec, ok = _row_to_record(row, fmt, origin)
                if ok:
                    records.append(rec)
                else:
                    skipped += 1
    else:
        with open(path, encoding=fmt.encoding) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError:
                    skipped += 1
                    continue
                if not isinstance(row, dict):
                    skipped += 1
                    continue
                rec, ok = _row_to_record(row, fmt, origin)
                if ok:
                    records.append(rec)
                else:
                    skipped += 1
    return records, skipped


def _field(row: dict, path: str):
    """Fetch a field by name, or by dotted path into nested objects.

    A literal key always wins, so CSV columns containing dots stay
    addressable."""
    if path in row:
        return row[path]
    value = row
    for part in path.split("."):
        if not isinstance(value, dict):
            return None
        value = value.get(part)
        if value is None:
            return None
    return value


def _row_to_record(row: dict, fmt: DatasetFormat, origin: str) -> tuple[RawRecord | None, bool]:
    text = _field(row, fmt.text_field)
    if text is None or not str(text).strip():
        return None, False
    if fmt.label_field is None:
        label = fmt.default_label
    else:
        label = _resolve_label(fmt, _field(row, fmt.label_field))
        if label is None:
            return None, False
    return RawRecord(text=str(text), label=label, origin=origin), True


# ---------------------------------------------------------------------------
# language filter
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LanguageFilterConfig:
    """Heuristic english-ness score: letter_weight * (ASCII-letter ratio)
    + stopword_weight * (fraction of tokens on the English stopword list).
    Records scoring below ``threshold`` are dropped."""

    letter_weight: float = 0.5
    stopword_weight: float = 0.5
    threshold: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.threshold <= 1.0):
            raise ConfigError("language threshold must lie in [0, 1]")


def english_score(text: str, stopwords: frozenset[str], config: LanguageFilterConfig) -> float:
    non_space = [c for c in text if not c.isspace()]
    if not non_space:
        return 0.0
    ascii_letters = sum(1 for c in non_space if ("a" <= c <= "z") or ("A" <= c <= "Z"))
    letter_ratio = ascii_letters / len(non_space)
    tokens = text.lower().split()
    if tokens:
        stop_ratio = sum(1 for t in tokens if t.strip("'\".,!?;:()[]") in stopwords) / len(tokens)
    else:
        stop_ratio = 0.0
    return config.letter_weight * letter_ratio + config.stopword_weight * stop_ratio


def filter_language(
    records: Iterable[RawRecord],
    config: LanguageFilterConfig | None = None,
    stopwords: frozenset[str] | None = None,
) -> tuple[list[RawRecord], int]:
    """Keep records whose english-ness score reaches the threshold."""
    config = config or LanguageFilterConfig()
    stopwords = stopwords if stopwords is not None else default_stopwords()
    kept: list[RawRecord] = []
    dropped = 0
    for rec in records:
        if english_score(rec.text, stopwords, config) >= config.threshold:
            kept.append(rec)
        else:
            dropped += 1
    return kept, dropped


# ---------------------------------------------------------------------------
# text cleaning
# ---------------------------------------------------------------------------

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#\w+")
_RESERVED_RE = re.compile(r"\b(?:rt|fav)\b")
# core emoji / pictograph blocks plus variation selectors and ZWJ
_EMOJI_RE = re.compile(
    "[\U0001f000-\U0001faff☀-➿⬀-⯿︀-️‍⃣]+"
)
_SMILEY_RE = re.compile(
    r"""(?<![a-z0-9])
        (?:
          [:;=8x][-~'^o*]?[)(\[\]{}dp/\\|3os*]+
        | [)(\[\]{}dp/\\|3os]+[-~'^o*]?[:;=8]
        | <+/?3+
        | \^_*\^
        | xd+
        )
        (?![a-z0-9])""",
    re.VERBOSE,
)
_APOSTROPHE_RE = re.compile(r"[’']")
_NON_ALPHA_RE = re.compile(r"[^a-z\s]")


def clean_text(text: str) -> list[str]:
    """Lowercase and strip tweet noise, returning plain alphabetic tokens.

    Removal order matters: URLs, mentions and hashtags go first (they
    contain digits/punctuation that would otherwise leave fragments),
    then reserved markers, emoji and ASCII smileys; apostrophes split
    contractions into their pieces; finally every remaining non-letter
    becomes a separator.  Idempotent on its own (re-joined) output.
    """
    t = text.lower()
    t = _URL_RE.sub(" ", t)
    t = _MENTION_RE.sub(" ", t)
    t = _HASHTAG_RE.sub(" ", t)
    t = _RESERVED_RE.sub(" ", t)
    t = _EMOJI_RE.sub(" ", t)
    t = _SMILEY_RE.sub(" ", t)
    t = _APOSTROPHE_RE.sub(" ", t)
    t = _NON_ALPHA_RE.sub(" ", t)
    return t.split()


# ---------------------------------------------------------------------------
# lemmatizer
# ---------------------------------------------------------------------------

_VOWELS = "aeiou"


class RuleLemmatizer:
    """Deterministic suffix-rule lemmatizer with an irregular-form table.

    Handles plural/3rd-person -s, -ed and -ing with undoubling and
    e-restoration heuristics; everything irregular lives in the exception
    table.  Idempotent: outputs are fixed points of the rules.
    """

    def __init__(self, exceptions: dict[str, str]):
        self.exceptions = dict(exceptions)
        self._cache: dict[str, str] = {}

    def lemma(self, word: str) -> str:
        cached = self._cache.get(word)
        if cached is None:
            cached = self._cache[word] = self._apply(word)
        return cached

    def __call__(self, tokens: Sequence[str]) -> list[str]:
        return [self.lemma(t) for t in tokens]

    def _apply(self, word: str) -> str:
        exc = self.exceptions.get(word)
        if exc is not None:
            return exc
        if word.endswith("ing") and len(word) >= 5:
            stem = word[:-3]
            return self._fix_stem(stem) if len(stem) >= 3 else word
        if word.endswith("ied"):
            return word[:-3] + "y" if len(word) >= 5 else word[:-1]
        if word.endswith("eed"):
            return word[:-1] if len(word) >= 5 else word
        if word.endswith("ed") and len(word) >= 4:
            stem = word[:-2]
            return self._fix_stem(stem) if len(stem) >= 3 else word[:-1]
        if word.endswith("sses"):
            return word[:-2]
        if word.endswith("ies"):
            return word[:-3] + "y" if len(word) >= 5 else word[:-1]
        if word.endswith(("ches", "shes", "xes")):
            return word[:-2]
        if word.endswith("s") and len(word) >= 4 and not word.endswith(("ss", "us", "is")):
            return word[:-1]
        return word

    @staticmethod
    def _fix_stem(stem: str) -> str:
        """Repair a stem left by stripping -ed/-ing."""
        c1, c2 = stem[-1], stem[-2]
        if c1 == c2 and c1 in "bdgkmnprt":
            return stem[:-1]  # running -> run, stopped -> stop
        if c1 in "vu":
            return stem + "e"  # believ -> believe, argu -> argue
        if c1 in "cg" and c2 not in _VOWELS and len(stem) >= 4:
            return stem + "e"  # chang -> change, danc -> dance
        if (
            c1 not in _VOWELS + "wxy"
            and c2 in _VOWELS
            and len(stem) >= 3
            and stem[-3] not in _VOWELS
        ):
            return stem + "e"  # mak -> make, vot -> vote
        return stem


def lemmatize(tokens: Sequence[str], lemmatizer: RuleLemmatizer | None = None) -> list[str]:
    """Map each token to its lemma; same length and order as the input."""
    return (lemmatizer or default_lemmatizer())(tokens)


def remove_stopwords(lemmas: Sequence[str], stopwords: frozenset[str] | None = None) -> list[str]:
    stopwords = stopwords if stopwords is not None else default_stopwords()
    return [w for w in lemmas if w not in stopwords]


def dedupe_and_prune(tweets: Iterable[CleanTweet], min_len: int = 2) -> list[CleanTweet]:
    """Drop exact lemma-sequence duplicates (first occurrence wins) and
    tweets shorter than ``min_len`` lemmas."""
    seen: set[tuple[str, ...]] = set()
    out: list[CleanTweet] = []
    for tw in tweets:
        if len(tw.lemmas) < min_len:
            continue
        if tw.lemmas in seen:
            continue
        seen.add(tw.lemmas)
        out.append(tw)
    return out


# ---------------------------------------------------------------------------
# pinned resources
# ---------------------------------------------------------------------------

def _read_resource(name: str) -> str:
    return resources.files("trollscope.data").joinpath(name).read_text(encoding="utf-8")


def _parse_wordlist(text: str) -> list[str]:
    words = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line)
    return words


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    text = Path(path).read_text(encoding="utf-8") if path else _read_resource("stopwords.txt")
    return frozenset(_parse_wordlist(text))


def load_lemma_exceptions(path: str | Path | None = None) -> dict[str, str]:
    text = (
        Path(path).read_text(encoding="utf-8")
        if path
        else _read_resource("lemma_exceptions.txt")
    )
    table: dict[str, str] = {}
    for entry in _parse_wordlist(text):
        parts = entry.split()
        if len(parts) != 2:
            raise ConfigError(f"bad lemma-exception entry: {entry!r}")
        table[parts[0]] = parts[1]
    return table


def stopword_list_hash(path: str | Path | None = None) -> str:
    """SHA-256 of the pinned stopword file, recorded in reports."""
    text = Path(path).read_text(encoding="utf-8") if path else _read_resource("stopwords.txt")
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


_DEFAULT_STOPWORDS: frozenset[str] | None = None
_DEFAULT_LEMMATIZER: RuleLemmatizer | None = None


def default_stopwords() -> frozenset[str]:
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        _DEFAULT_STOPWORDS = load_stopwords()
    return _DEFAULT_STOPWORDS


def default_lemmatizer() -> RuleLemmatizer:
    global _DEFAULT_LEMMATIZER
    if _DEFAULT_LEMMATIZER is None:
        _DEFAULT_LEMMATIZER = RuleLemmatizer(load_lemma_exceptions())
    return _DEFAULT_LEMMATIZER


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------

@dataclass
class PreprocessStats:
    loaded: int = 0
    skipped_rows: int = 0
    dropped_language: int = 0
    dropped_short: int = 0
    dropped_duplicate: int = 0
    kept: int = 0
    per_label_kept: dict[int, int] = field(default_factory=dict)
    stopword_hash: str = ""

    def as_dict(self) -> dict:
        d = self.__dict__.copy()
        d["per_label_kept"] = {str(k): v for k, v in self.per_label_kept.items()}
        return d


@dataclass
class PreprocessConfig:
    stopword_path: str | None = None
    exception_path: str | None = None
    language: LanguageFilterConfig = field(default_factory=LanguageFilterConfig)
    min_len: int = 2


class Preprocessor:
    """Applies the full cleaning chain to raw records."""

    def __init__(self, config: PreprocessConfig | None = None):
        self.config = config or PreprocessConfig()
        self.stopwords = load_stopwords(self.config.stopword_path)
        self.lemmatizer = RuleLemmatizer(load_lemma_exceptions(self.config.exception_path))
        self.stopword_hash = stopword_list_hash(self.config.stopword_path)

    def clean_record(self, record: RawRecord) -> CleanTweet:
        tokens = clean_text(record.text)
        lemmas = remove_stopwords(self.lemmatizer(tokens), self.stopwords)
        return CleanTweet(lemmas=tuple(lemmas), label=record.label)

    def run(self, records: Iterable[RawRecord]) -> tuple[list[CleanTweet], PreprocessStats]:
        stats = PreprocessStats(stopword_hash=self.stopword_hash)
        records = list(records)
        stats.loaded = len(records)
        kept_records, stats.dropped_language = filter_language(
            records, self.config.language, self.stopwords
        )
        candidates = [self.clean_record(r) for r in kept_records]
        long_enough = [t for t in candidates if len(t.lemmas) >= self.config.min_len]
        stats.dropped_short = len(candidates) - len(long_enough)
        corpus = dedupe_and_prune(long_enough, self.config.min_len)
        stats.dropped_duplicate = len(long_enough) - len(corpus)
        stats.kept = len(corpus)
        for tw in corpus:
            stats.per_label_kept[tw.label] = stats.per_label_kept.get(tw.label, 0) + 1
        return corpus, stats


# ---------------------------------------------------------------------------
# corpus file format: one tweet per line, "label<TAB>lemma lemma ..."
# ---------------------------------------------------------------------------

def write_corpus(path: str | Path, tweets: Iterable[CleanTweet]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tw in tweets:
            fh.write(f"{tw.label}\t{' '.join(tw.lemmas)}\n")


def read_corpus(path: str | Path) -> list[CleanTweet]:
    tweets: list[CleanTweet] = []
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                label_str, lemma_str = line.split("\t", 1)
                label = int(label_str)
            except ValueError as exc:
                raise DataError(f"{path}:{ln}: malformed corpus line") from exc
            tweets.append(CleanTweet(lemmas=tuple(lemma_str.split()), label=label))
    return tweets


def iter_corpus_lemmas(tweets: Iterable[CleanTweet]) -> Iterator[list[str]]:
    for tw in tweets:
        yield list(tw.lemmas)
