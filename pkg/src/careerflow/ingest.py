"""Employment-record ingestion: parsing, name canonicalization, sector rules.

Input is a CSV with header
``person_id,phd_school,grad_year,employer,start_year,end_year,title,is_postdoc``
(empty ``end_year`` = ongoing). Bad rows become line-numbered diagnostics,
never silent drops; only an unreadable stream or a bad header is fatal.
"""

from __future__ import annotations

import csv
import io
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from careerflow.model import (
    CareerTrajectory,
    Corpus,
    EmploymentSpell,
    Organization,
    Sector,
)

RECORD_COLUMNS = (
    "person_id",
    "phd_school",
    "grad_year",
    "employer",
    "start_year",
    "end_year",
    "title",
    "is_postdoc",
)

RULE_COLUMNS = ("kind", "pattern", "target")

_WHITESPACE = re.compile(r"\s+")


class IngestError(Exception):
    """Fatal ingestion failure (unreadable stream, bad header, bad rules)."""


class UnclassifiedOrganizationError(Exception):
    """No sector rule matched; carries the organization name."""

    def __init__(self, name: str):
        super().__init__(f"no sector rule matches organization {name!r}")
        self.name = name


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass(frozen=True)
class RawRecord:
    person_id: str
    phd_school: str
    grad_year: int
    employer: str
    start_year: int
    end_year: int | None
    title: str
    is_postdoc: bool


@dataclass(frozen=True)
class RuleSet:
    """Alias map plus an ordered list of sector rules (first match wins).

    Sector rule kinds: ``exact`` matches the whole canonical name,
    ``keyword`` matches a substring; both compare case-insensitively.
    Every alias target is implicitly self-aliased so canonicalization is
    idempotent even when a target is not in normalized form.
    """

    alias_map: dict[str, str] = field(default_factory=dict)
    sector_rules: tuple[tuple[str, str, Sector], ...] = ()

    def __post_init__(self) -> None:
        for kind, pattern, _ in self.sector_rules:
            if kind not in ("exact", "keyword"):
                raise IngestError(f"unknown sector rule kind: {kind!r}")
            if not pattern:
                raise IngestError("empty sector rule pattern")
        amended = dict(self.alias_map)
        for target in list(self.alias_map.values()):
            amended.setdefault(target, target)
        object.__setattr__(self, "alias_map", amended)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, str, str]]) -> "RuleSet":
        aliases: dict[str, str] = {}
        sector_rules: list[tuple[str, str, Sector]] = []
        for kind, pattern, target in rows:
            kind = kind.strip().lower()
            pattern = pattern.strip()
            target = target.strip()
            if kind == "alias":
                aliases[pattern] = target
            elif kind in ("exact", "keyword"):
                sector_rules.append((kind, pattern, Sector.parse(target)))
            else:
                raise IngestError(f"unknown rule kind: {kind!r}")
        return cls(aliases, tuple(sector_rules))


def read_rules(stream: IO[str]) -> RuleSet:
    """Load a RuleSet from CSV with columns ``kind,pattern,target``."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != RULE_COLUMNS:
        raise IngestError(f"rules file must start with header {','.join(RULE_COLUMNS)}")
    rows = []
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise IngestError(f"rules row has {len(row)} fields, expected 3: {row!r}")
        rows.append((row[0], row[1], row[2]))
    return RuleSet.from_rows(rows)


def write_rules(rules: RuleSet, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RULE_COLUMNS)
    for raw, canonical in sorted(rules.alias_map.items()):
        writer.writerow(("alias", raw, canonical))
    for kind, pattern, sector in rules.sector_rules:
        writer.writerow((kind, pattern, sector.value.capitalize()))


def default_rules() -> RuleSet:
    """Keyword defaults for sector classification.

    Government and academia patterns come first so e.g. "National
    Laboratory LLC" or "University Corp" resolve by the earlier, more
    specific rule. Users are expected to extend these via their own rules
    file; unmatched names raise so they can be triaged.
    """
    rows = [
        ("keyword", "national laboratory", "Government"),
        ("keyword", "air force", "Government"),
        ("keyword", "navy", "Government"),
        ("keyword", "army", "Government"),
        ("keyword", "nasa", "Government"),
        ("keyword", "federal", "Government"),
        ("keyword", "census bureau", "Government"),
        ("keyword", "university", "Academia"),
        ("keyword", "college", "Academia"),
        ("keyword", "institute of technology", "Academia"),
        ("keyword", "polytechnic", "Academia"),
        ("keyword", "llc", "Industry"),
        ("keyword", "inc", "Industry"),
        ("keyword", "corp", "Industry"),
        ("keyword", "ltd", "Industry"),
        ("keyword", "gmbh", "Industry"),
        ("keyword", "technologies", "Industry"),
        ("keyword", "software", "Industry"),
        ("keyword", "labs", "Industry"),
    ]
    return RuleSet.from_rows(rows)


def canonicalize(raw_name: str, rules: RuleSet) -> str:
    """Resolve a raw employer name to its canonical organization id.

    Alias hits return the mapped id verbatim; anything else normalizes to
    its own id (trimmed, case-folded, internal whitespace collapsed).
    """
    trimmed = raw_name.strip()
    if not trimmed:
        raise ValueError("organization name is empty")
    hit = rules.alias_map.get(trimmed)
    if hit is not None:
        return hit
    return _WHITESPACE.sub(" ", trimmed).casefold()


def classify_sector(canonical_id: str, rules: RuleSet) -> Sector:
    """First matching sector rule wins; no match raises Unclassified."""
    folded = canonical_id.casefold()
    for kind, pattern, sector in rules.sector_rules:
        p = pattern.casefold()
        if kind == "exact" and folded == p:
            return sector
        if kind == "keyword" and p in folded:
            return sector
    raise UnclassifiedOrganizationError(canonical_id)


def _parse_year(value: str, label: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise ValueError(f"{label} is not an integer year: {value!r}") from None


def parse_records(stream: IO[str]) -> tuple[list[RawRecord], list[Diagnostic]]:
    """Read the records CSV, validating each row independently.

    Returns the valid records and one diagnostic per rejected row. A
    missing or wrong header is fatal.
    """
    try:
        reader = csv.reader(stream)
        header = next(reader, None)
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"cannot read records stream: {exc}") from exc
    if header is None or tuple(h.strip() for h in header) != RECORD_COLUMNS:
        raise IngestError(f"records file must start with header {','.join(RECORD_COLUMNS)}")

    records: list[RawRecord] = []
    diagnostics: list[Diagnostic] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            records.append(_parse_row(row))
        except ValueError as exc:
            diagnostics.append(Diagnostic(lineno, str(exc)))
    return records, diagnostics


def _parse_row(row: Sequence[str]) -> RawRecord:
    if len(row) != len(RECORD_COLUMNS):
        raise ValueError(f"expected {len(RECORD_COLUMNS)} fields, got {len(row)}")
    person_id, phd_school, grad_year, employer, start_year, end_year, title, is_postdoc = (
        cell.strip() for cell in row
    )
    if not person_id:
        raise ValueError("missing person_id")
    if not phd_school:
        raise ValueError("missing phd_school")
    if not employer:
        raise ValueError("missing employer")
    grad = _parse_year(grad_year, "grad_year")
    start = _parse_year(start_year, "start_year")
    end = None if end_year == "" else _parse_year(end_year, "end_year")
    if end is not None and end < start:
        raise ValueError(f"end_year {end} precedes start_year {start}")
    if start < grad - 1:
        raise ValueError(f"start_year {start} predates graduation {grad} by more than a year")
    if is_postdoc not in ("0", "1"):
        raise ValueError(f"is_postdoc must be 0 or 1, got {is_postdoc!r}")
    return RawRecord(person_id, phd_school, grad, employer, start, end, title, is_postdoc == "1")


@dataclass(frozen=True)
class IngestReport:
    n_persons: int
    n_spells: int
    excluded_persons: tuple[str, ...]
    sector_org_counts: dict[Sector, int]

    @property
    def sector_shares(self) -> dict[Sector, float]:
        total = sum(self.sector_org_counts.values())
        if total == 0:
            return {s: 0.0 for s in Sector}
        return {s: self.sector_org_counts.get(s, 0) / total for s in Sector}


def build_trajectories(
    records: Iterable[RawRecord],
    rules: RuleSet,
    horizon_year: int,
) -> tuple[Corpus, IngestReport, list[Diagnostic]]:
    """Assemble a validated corpus from parsed records.

    Employer and school names are canonicalized and sector-tagged; spells
    at the same org that touch (one ends the year the next starts) are
    merged, while a rehire after a gap stays two spells. Spells at
    organizations no sector rule covers are dropped with a diagnostic, and
    persons ending up with no valid spells are excluded and reported.
    """
    diagnostics: list[Diagnostic] = []
    orgs: dict[str, Organization] = {}
    alias_seen: dict[str, set[str]] = defaultdict(set)

    def resolve(raw: str) -> str | None:
        canonical = canonicalize(raw, rules)
        if canonical not in orgs:
            try:
                sector = classify_sector(canonical, rules)
            except UnclassifiedOrganizationError as exc:
                diagnostics.append(Diagnostic(0, str(exc)))
                return None
            orgs[canonical] = Organization(canonical, sector)
        alias_seen[canonical].add(raw.strip())
        return canonical

    by_person: dict[str, list[RawRecord]] = defaultdict(list)
    for rec in records:
        by_person[rec.person_id].append(rec)

    trajectories: list[CareerTrajectory] = []
    excluded: list[str] = []
    for person in sorted(by_person):
        recs = by_person[person]
        grad_year = recs[0].grad_year
        school_raw = recs[0].phd_school
        for rec in recs[1:]:
            if rec.grad_year != grad_year or rec.phd_school != school_raw:
                diagnostics.append(
                    Diagnostic(0, f"{person}: conflicting grad_year/phd_school; keeping first seen")
                )
                break
        school = resolve(school_raw)
        spells: list[EmploymentSpell] = []
        for rec in recs:
            org = resolve(rec.employer)
            if org is None:
                continue
            spells.append(EmploymentSpell(org, rec.start_year, rec.end_year, rec.title, rec.is_postdoc))
        if not spells or school is None:
            excluded.append(person)
            continue
        trajectories.append(
            CareerTrajectory(person, school, grad_year, _merge_touching(spells))
        )

    final_orgs = {
        oid: Organization(oid, org.sector, frozenset(alias_seen[oid]))
        for oid, org in orgs.items()
    }
    corpus = Corpus(tuple(trajectories), final_orgs, horizon_year)
    sector_counts: dict[Sector, int] = defaultdict(int)
    for org in final_orgs.values():
        sector_counts[org.sector] += 1
    report = IngestReport(
        n_persons=len(trajectories),
        n_spells=sum(len(t.spells) for t in trajectories),
        excluded_persons=tuple(excluded),
        sector_org_counts=dict(sector_counts),
    )
    return corpus, report, diagnostics


def _merge_touching(spells: list[EmploymentSpell]) -> tuple[EmploymentSpell, ...]:
    """Merge same-org spells where one ends exactly when the next starts."""
    ordered = sorted(spells, key=lambda s: (s.start_year, float("inf") if s.end_year is None else s.end_year, s.org))
    merged: list[EmploymentSpell] = []
    for spell in ordered:
        if merged:
            prev = merged[-1]
            if prev.org == spell.org and prev.end_year is not None and prev.end_year == spell.start_year:
                merged[-1] = EmploymentSpell(
                    prev.org,
                    prev.start_year,
                    spell.end_year,
                    prev.title or spell.title,
                    prev.is_postdoc or spell.is_postdoc,
                )
                continue
        merged.append(spell)
    return tuple(merged)


def load_corpus(
    records_stream: IO[str],
    rules: RuleSet,
    horizon_year: int,
) -> tuple[Corpus, IngestReport, list[Diagnostic]]:
    """parse_records + build_trajectories in one call."""
    records, parse_diags = parse_records(records_stream)
    corpus, report, build_diags = build_trajectories(records, rules, horizon_year)
    return corpus, report, parse_diags + build_diags


def write_records(corpus: Corpus, stream: IO[str]) -> None:
    """Serialize a corpus back to the records CSV schema (one row per spell)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for traj in corpus.trajectories:
        for spell in traj.spells:
            writer.writerow(
                (
                    traj.person,
                    traj.phd_school,
                    traj.grad_year,
                    spell.org,
                    spell.start_year,
                    "" if spell.end_year is None else spell.end_year,
                    spell.title,
                    int(spell.is_postdoc),
                )
            )


def corpus_to_csv(corpus: Corpus) -> str:
    buf = io.StringIO()
    write_records(corpus, buf)
    return buf.getvalue()
