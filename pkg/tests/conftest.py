from __future__ import annotations

import pytest

from careerflow.model import (
    CareerTrajectory,
    Corpus,
    EmploymentSpell,
    Organization,
    Sector,
)


def org_map(sectors: dict[str, Sector]) -> dict[str, Organization]:
    return {oid: Organization(oid, sector, frozenset({oid})) for oid, sector in sectors.items()}


def corpus_of(trajectories, sectors: dict[str, Sector], horizon: int) -> Corpus:
    return Corpus(tuple(trajectories), org_map(sectors), horizon)


SECTORS_FIG2 = {
    "Oracle": Sector.INDUSTRY,
    "Google": Sector.INDUSTRY,
    "State University": Sector.ACADEMIA,
    "Acme Research": Sector.INDUSTRY,
    "BigCo": Sector.INDUSTRY,
    "Tech University": Sector.ACADEMIA,
}


@pytest.fixture
def fig2_corpus() -> Corpus:
    """Two plausible sample careers: a one-move industry person and a
    postdoc-first person with three employers."""
    person_a = CareerTrajectory(
        "person-a",
        "Tech University",
        1996,
        (
            EmploymentSpell("Oracle", 1996, 2001, "Software Engineer"),
            EmploymentSpell("Google", 2001, None, "Senior Software Engineer"),
        ),
    )
    person_b = CareerTrajectory(
        "person-b",
        "Tech University",
        2008,
        (
            EmploymentSpell("State University", 2008, 2010, "Postdoc", is_postdoc=True),
            EmploymentSpell("Acme Research", 2010, 2013, "Research Scientist"),
            EmploymentSpell("BigCo", 2013, None, "Staff Engineer"),
        ),
    )
    return corpus_of([person_a, person_b], SECTORS_FIG2, horizon=2015)
