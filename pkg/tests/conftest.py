from __future__ import annotations

import pytest

from namegraph.corpus import (AuthorRef, Corpus, Labeling, LoadReport,
                              Publication)


def corpus_from(records: dict[str, list[tuple[str, str]]],
                **fields) -> Corpus:
    """Build an in-memory corpus from {paper_id: [(name, org), ...]}.

    Extra per-paper fields can be passed as fields[pid] = {...}.
    """
    pubs = {}
    for pid, authors in records.items():
        extra = fields.get(pid, {})
        pubs[pid] = Publication(
            id=pid,
            authors=tuple(AuthorRef(name=n, org=o) for n, o in authors),
            **extra)
    return Corpus(pubs, LoadReport(n_records=len(pubs)))


@pytest.fixture
def giffels_corpus() -> Corpus:
    """One name split across two affiliations, bridged by a shared coauthor."""
    return corpus_from({
        "g1": [("M. Giffels", "CERN"), ("A. Kole", "Inst A")],
        "g2": [("M. Giffels", "RWTH Aachen"), ("A. Kole", "Inst A")],
        "g3": [("M. Giffels", "CERN"), ("B. Roland", "Inst B")],
        "g4": [("X. Chen", "MIT"), ("B. Roland", "Inst B")],
    })


@pytest.fixture
def giffels_truth() -> Labeling:
    return Labeling({
        "m_giffels": {"mg0": ("g1", "g2", "g3")},
        "x_chen": {"xc0": ("g4",)},
    })
