"""Readers for 1000-Genomes style inputs: VCF genotype files and the sample panel.

Both readers work on any iterable of text lines, so they compose with
:func:`open_text` (which decompresses gzip transparently) or with in-memory
lists in tests.  VCF parsing is streaming: records are produced one at a time
and nothing but the current line is held.
"""

from __future__ import annotations

import gzip
import io
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import (
    BadGenotypeToken,
    BadPosition,
    ColumnCountMismatch,
    CountExceedsNumber,
    DuplicateSample,
    MalformedPanelLine,
    MissingAllele,
    MissingHeader,
    ValueOutOfRange,
    ZeroAlleleNumber,
)

SUPER_POPULATIONS = ("AFR", "AMR", "EAS", "EUR", "SAS")

_GZIP_MAGIC = b"\x1f\x8b"


def open_text(path: str | os.PathLike) -> io.TextIOBase:
    """Open ``path`` for reading text, gunzipping if the file is gzip data."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == _GZIP_MAGIC:
        return gzip.open(path, "rt", encoding="utf-8", newline="")
    return open(path, "r", encoding="utf-8", newline="")


@dataclass(frozen=True)
class GenotypeCall:
    # None marks a missing allele ('.')
    alleles: tuple[int | None, ...]
    phased: bool = False

    @property
    def is_missing(self) -> bool:
        return any(a is None for a in self.alleles)

    def to_token(self) -> str:
        sep = "|" if self.phased else "/"
        return sep.join("." if a is None else str(a) for a in self.alleles)


@dataclass(frozen=True)
class VariantRecord:
    chrom: str
    pos: int
    id: str
    ref_allele: str
    alt_alleles: tuple[str, ...]
    info: dict[str, str] = field(default_factory=dict, hash=False, compare=True)
    calls: tuple[GenotypeCall, ...] = ()
    qual: str = "."
    filter: str = "."

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.chrom, self.pos, self.id)


@dataclass(frozen=True)
class PanelEntry:
    sample_id: str
    population: str
    super_population: str
    gender: str


def parse_panel(lines: Iterable[str], validate_super_population: bool = False) -> list[PanelEntry]:
    entries: list[PanelEntry] = []
    seen: set[str] = set()
    first = True
    for lineno, raw in enumerate(lines, 1):
        tokens = raw.split()
        if not tokens:
            continue
        if first and tokens[0].lower() == "sample":
            first = False
            continue
        first = False
        if len(tokens) < 4:
            raise MalformedPanelLine(f"panel line {lineno}: expected at least 4 columns, got {len(tokens)}")
        sample_id, population, super_pop, gender = tokens[:4]
        if validate_super_population and super_pop not in SUPER_POPULATIONS:
            raise MalformedPanelLine(f"panel line {lineno}: unknown super-population {super_pop!r}")
        if sample_id in seen:
            raise DuplicateSample(f"panel line {lineno}: duplicate sample {sample_id!r}")
        seen.add(sample_id)
        entries.append(PanelEntry(sample_id, population, super_pop, gender))
    return entries


def parse_info(text: str) -> dict[str, str]:
    """Split an INFO column into a string map; flags map to ''."""
    out: dict[str, str] = {}
    if not text or text == ".":
        return out
    for item in text.split(";"):
        if not item:
            continue
        key, sep, value = item.partition("=")
        out[key] = value if sep else ""
    return out


def format_info(info: dict[str, str]) -> str:
    if not info:
        return "."
    return ";".join(f"{k}={v}" if v != "" else k for k, v in info.items())


def parse_genotype(token: str, n_alt: int) -> GenotypeCall:
    gt = token.split(":", 1)[0]
    if not gt:
        raise BadGenotypeToken(f"empty genotype {token!r}")
    phased = "|" in gt
    if phased and "/" in gt:
        # mixed separators: treat as unphased
        phased = False
    parts = gt.replace("|", "/").split("/")
    alleles: list[int | None] = []
    for part in parts:
        if part == ".":
            alleles.append(None)
            continue
        if not part.isdigit():
            raise BadGenotypeToken(f"unparseable genotype {gt!r}")
        idx = int(part)
        if idx > n_alt:
            raise BadGenotypeToken(f"allele index {idx} in {gt!r} exceeds {n_alt} alternate allele(s)")
        alleles.append(idx)
    return GenotypeCall(tuple(alleles), phased and len(alleles) > 1)


def _parse_data_line(line: str, n_samples: int, lineno: int, cache: dict) -> VariantRecord:
    cols = line.split("\t")
    if n_samples:
        if len(cols) != 9 + n_samples:
            raise ColumnCountMismatch(
                f"VCF line {lineno}: expected {9 + n_samples} columns, got {len(cols)}")
    elif len(cols) < 8:
        raise ColumnCountMismatch(f"VCF line {lineno}: expected at least 8 columns, got {len(cols)}")
    chrom, pos_s, vid, ref, alt, qual, filt, info = cols[:8]
    try:
        pos = int(pos_s)
    except ValueError:
        raise BadPosition(f"VCF line {lineno}: position {pos_s!r} is not an integer") from None
    if pos < 1:
        raise BadPosition(f"VCF line {lineno}: position {pos} < 1")
    alts = tuple(alt.split(","))
    calls: tuple[GenotypeCall, ...] = ()
    if n_samples:
        fmt = cols[8]
        if fmt.split(":", 1)[0] != "GT":
            raise BadGenotypeToken(f"VCF line {lineno}: FORMAT {fmt!r} does not start with GT")
        n_alt = len(alts)
        out = []
        for token in cols[9:]:
            gt = token.split(":", 1)[0]
            ck = (gt, n_alt)
            call = cache.get(ck)
            if call is None:
                try:
                    call = parse_genotype(gt, n_alt)
                except BadGenotypeToken as exc:
                    raise BadGenotypeToken(f"VCF line {lineno}: {exc}") from None
                cache[ck] = call
            out.append(call)
        calls = tuple(out)
    return VariantRecord(chrom, pos, vid, ref, alts, parse_info(info), calls, qual, filt)


def parse_vcf(lines: Iterable[str]) -> tuple[list[str], Iterator[VariantRecord]]:
    """Read the header eagerly, then return the sample names and a lazy record iterator.

    The iterator is single-consumer; it shares the underlying line source.
    """
    it = iter(lines)
    lineno = 0
    samples: list[str] | None = None
    for raw in it:
        lineno += 1
        line = raw.rstrip("\r\n")
        if line.startswith("##"):
            continue
        if line.startswith("#CHROM"):
            header = line.split("\t")
            if len(header) < 8:
                raise MissingHeader(f"VCF line {lineno}: malformed #CHROM header")
            samples = header[9:]
            break
        if not line.strip():
            continue
        raise MissingHeader(f"VCF line {lineno}: data before #CHROM header")
    if samples is None:
        raise MissingHeader("no #CHROM header line found")

    n_samples = len(samples)
    start = lineno

    def records() -> Iterator[VariantRecord]:
        cache: dict = {}
        for offset, raw in enumerate(it, 1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            if line.startswith("#"):
                raise MissingHeader(f"VCF line {start + offset}: header line after data start")
            yield _parse_data_line(line, n_samples, start + offset, cache)

    return samples, records()


def format_record(record: VariantRecord) -> str:
    """Render a record as a VCF data line (GT-only FORMAT)."""
    cols = [
        record.chrom,
        str(record.pos),
        record.id,
        record.ref_allele,
        ",".join(record.alt_alleles),
        record.qual,
        record.filter,
        format_info(record.info),
    ]
    if record.calls:
        cols.append("GT")
        cols.extend(c.to_token() for c in record.calls)
    return "\t".join(cols)


def alt_allele_count(call: GenotypeCall) -> int:
    """Number of non-reference alleles in ``call``; any alternate index counts."""
    if call.is_missing:
        raise MissingAllele(f"genotype {call.to_token()!r} has missing alleles")
    return sum(1 for a in call.alleles if a >= 1)


def allele_frequency(ac: int, an: int) -> float:
    if an <= 0:
        raise ZeroAlleleNumber(f"allele number must be positive, got {an}")
    if ac < 0:
        raise ValueOutOfRange(f"allele count must be non-negative, got {ac}")
    if ac > an:
        raise CountExceedsNumber(f"allele count {ac} exceeds allele number {an}")
    return float(ac) / float(an)
