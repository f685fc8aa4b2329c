"""Publication corpus: loading, normalization, labels, stats, and a
synthetic benchmark generator.

Input layout is a JSON object mapping paper id to a record with title,
authors (name/org pairs), venue, year, keywords, and abstract.  Ground-truth
labels map an ambiguous author name to profiles, each profile listing the
paper ids written by one real person.  Predicted clusterings are emitted in
the same shape, so labels and predictions are interchangeable on disk.
"""

from __future__ import annotations

import json
import random
import re
import unicodedata
from dataclasses import dataclass, field

from namegraph.errors import ConfigError, DataError

_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def _fold(raw: str) -> str:
    """Lowercased, ASCII-folded key with non-alphanumeric runs collapsed to
    single underscores.  Idempotent."""
    text = unicodedata.normalize("NFKD", raw)
    text = "".join(ch for ch in text if not unicodedata.combining(ch))
    text = text.encode("ascii", "ignore").decode("ascii").lower()
    return _NON_ALNUM.sub("_", text).strip("_")


def normalize_name(raw: str) -> str:
    """Normalize an author name to its comparison key.

    Raises DataError if nothing survives normalization, since a node with an
    empty name key would silently merge unrelated people.
    """
    key = _fold(raw)
    if not key:
        raise DataError(f"author name {raw!r} is empty after normalization")
    return key


def normalize_org(raw: str) -> str:
    """Normalize an affiliation string; empty input maps to the empty key."""
    return _fold(raw)


@dataclass(frozen=True)
class AuthorRef:
    """One authorship entry as it appears on a publication."""

    name: str
    org: str = ""


@dataclass(frozen=True)
class Publication:
    id: str
    title: str = ""
    authors: tuple[AuthorRef, ...] = ()
    venue: str = ""
    year: int | None = None
    keywords: tuple[str, ...] = ()
    abstract: str = ""


@dataclass
class LoadReport:
    """Counts of records kept despite problems, keyed by reason."""

    n_records: int = 0
    flagged: dict[str, list[str]] = field(default_factory=dict)

    def flag(self, reason: str, paper_id: str) -> None:
        self.flagged.setdefault(reason, []).append(paper_id)

    def count(self, reason: str) -> int:
        return len(self.flagged.get(reason, []))

    @property
    def n_flagged(self) -> int:
        return len({pid for ids in self.flagged.values() for pid in ids})


class Corpus:
    """Immutable collection of publications keyed by paper id."""

    def __init__(self, publications: dict[str, Publication],
                 report: LoadReport | None = None) -> None:
        self.publications = dict(sorted(publications.items()))
        self.report = report if report is not None else LoadReport(
            n_records=len(publications))

    def __len__(self) -> int:
        return len(self.publications)

    def __contains__(self, paper_id: str) -> bool:
        return paper_id in self.publications

    def ids(self) -> list[str]:
        return list(self.publications)

    def get(self, paper_id: str) -> Publication:
        try:
            return self.publications[paper_id]
        except KeyError:
            raise DataError(f"unknown paper id {paper_id!r}") from None

    def year_range(self) -> tuple[int, int] | None:
        """Min and max publication year, or None if no record has one."""
        years = [p.year for p in self.publications.values() if p.year is not None]
        if not years:
            return None
        return min(years), max(years)


def _clean_str(value: object) -> str:
    return value if isinstance(value, str) else ""


def _clean_year(value: object) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, str):
        try:
            value = int(value.strip())
        except ValueError:
            return None
    if isinstance(value, int) and 1000 <= value <= 3000:
        return value
    return None


def _check_unique_keys(pairs: list[tuple[str, object]]) -> dict:
    obj: dict = {}
    for key, value in pairs:
        if key in obj:
            raise DataError(f"duplicate key {key!r} in JSON object")
        obj[key] = value
    return obj


def _parse_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh, object_pairs_hook=_check_unique_keys)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise DataError(f"{path}: top level must be a JSON object")
    return data


def load_publications(path: str) -> Corpus:
    """Load a publications file.

    Structural problems (duplicate or mismatched ids, unparseable JSON) raise
    DataError.  Field-level problems keep the record and flag it in the load
    report: empty titles, missing author lists, unnamed authors, and years
    outside [1000, 3000].
    """
    data = _parse_json(path)
    report = LoadReport(n_records=len(data))
    pubs: dict[str, Publication] = {}
    for pid, rec in data.items():
        if not isinstance(rec, dict):
            raise DataError(f"paper {pid!r}: record must be an object")
        rec_id = rec.get("id", pid)
        if rec_id != pid:
            raise DataError(f"paper {pid!r}: id field says {rec_id!r}")

        title = _clean_str(rec.get("title"))
        if not title:
            report.flag("empty_title", pid)

        authors = []
        raw_authors = rec.get("authors")
        if not isinstance(raw_authors, list) or not raw_authors:
            report.flag("no_authors", pid)
            raw_authors = []
        for entry in raw_authors:
            if not isinstance(entry, dict):
                report.flag("malformed_author", pid)
                continue
            name = _clean_str(entry.get("name"))
            org = _clean_str(entry.get("org"))
            if not _fold(name):
                report.flag("unnamed_author", pid)
            authors.append(AuthorRef(name=name, org=org))

        year = _clean_year(rec.get("year"))
        if rec.get("year") not in (None, "") and year is None:
            report.flag("bad_year", pid)

        keywords = tuple(k for k in rec.get("keywords") or []
                         if isinstance(k, str) and k)

        pubs[pid] = Publication(
            id=pid,
            title=title,
            authors=tuple(authors),
            venue=_clean_str(rec.get("venue")),
            year=year,
            keywords=keywords,
            abstract=_clean_str(rec.get("abstract")),
        )
    return Corpus(pubs, report)


class Labeling:
    """Ground-truth profiles (or a predicted clustering in the same shape).

    Maps a normalized author name to profiles; each profile is a sorted
    tuple of paper ids.  Within one name a paper may belong to exactly one
    profile.
    """

    def __init__(self, profiles: dict[str, dict[str, tuple[str, ...]]]) -> None:
        self.profiles: dict[str, dict[str, tuple[str, ...]]] = {}
        for name in sorted(profiles):
            entry = {pid: tuple(sorted(papers))
                     for pid, papers in sorted(profiles[name].items())}
            seen: dict[str, str] = {}
            for prof_id, papers in entry.items():
                for paper in papers:
                    if paper in seen:
                        raise DataError(
                            f"name {name!r}: paper {paper!r} appears in "
                            f"profiles {seen[paper]!r} and {prof_id!r}")
                    seen[paper] = prof_id
            self.profiles[name] = entry

    def names(self) -> list[str]:
        return list(self.profiles)

    def n_profiles(self) -> int:
        return sum(len(v) for v in self.profiles.values())

    def papers_of(self, name: str) -> list[str]:
        merged = [p for papers in self.profiles[name].values() for p in papers]
        return sorted(merged)

    def profile_of(self, name: str) -> dict[str, str]:
        """Paper id -> profile id map for one name."""
        out = {}
        for prof_id, papers in self.profiles[name].items():
            for paper in papers:
                out[paper] = prof_id
        return out

    def to_dict(self) -> dict:
        return {name: {pid: list(papers) for pid, papers in profs.items()}
                for name, profs in self.profiles.items()}

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_ground_truth(path: str, corpus: Corpus | None = None,
                      strict: bool = False) -> Labeling:
    """Load a label file; also reads predicted clusterings (same shape).

    Raw name keys are normalized; if two raw names collide their profiles are
    merged under the shared key.  Paper ids missing from `corpus` raise in
    strict mode and are kept otherwise.
    """
    data = _parse_json(path)
    profiles: dict[str, dict[str, tuple[str, ...]]] = {}
    for raw_name, entry in data.items():
        name = normalize_name(raw_name)
        if not isinstance(entry, dict):
            raise DataError(f"name {raw_name!r}: expected profile object")
        bucket = profiles.setdefault(name, {})
        for prof_id, papers in entry.items():
            if not isinstance(papers, list):
                raise DataError(f"profile {prof_id!r}: expected paper id list")
            key = str(prof_id)
            while key in bucket:  # collision after name normalization
                key += "+"
            bucket[key] = tuple(sorted(str(p) for p in papers))
    if corpus is not None and strict:
        for name, entry in profiles.items():
            for prof_id, papers in entry.items():
                for paper in papers:
                    if paper not in corpus:
                        raise DataError(
                            f"profile {prof_id!r} of {name!r} lists unknown "
                            f"paper {paper!r}")
    return Labeling(profiles)


@dataclass
class StatsReport:
    """Descriptive statistics of a corpus, its labels, and its graph."""

    distinct_names: int = 0
    distinct_profiles: int = 0
    n_publications: int = 0
    n_components: int = 0
    largest_component_size: int = 0
    name_profile_hist: dict[int, int] = field(default_factory=dict)
    profile_pub_hist: dict[int, int] = field(default_factory=dict)
    profile_org_hist: dict[int, int] = field(default_factory=dict)
    venue_freq: dict[str, int] = field(default_factory=dict)
    keyword_freq: dict[str, int] = field(default_factory=dict)
    year_hist: dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "distinct_names": self.distinct_names,
            "distinct_profiles": self.distinct_profiles,
            "n_publications": self.n_publications,
            "n_components": self.n_components,
            "largest_component_size": self.largest_component_size,
            "name_profile_hist": {str(k): v for k, v in sorted(self.name_profile_hist.items())},
            "profile_pub_hist": {str(k): v for k, v in sorted(self.profile_pub_hist.items())},
            "profile_org_hist": {str(k): v for k, v in sorted(self.profile_org_hist.items())},
            "venue_freq": dict(sorted(self.venue_freq.items())),
            "keyword_freq": dict(sorted(self.keyword_freq.items())),
            "year_hist": {str(k): v for k, v in sorted(self.year_hist.items())},
        }


def corpus_stats(corpus: Corpus, labeling: Labeling | None = None,
                 graph=None) -> StatsReport:
    """Compute descriptive stats.  Histogram totals are conserved: the
    name-profile histogram sums to the number of names and the profile-pub
    histogram sums to the number of profiles."""
    report = StatsReport(n_publications=len(corpus))

    for pub in corpus.publications.values():
        if pub.venue:
            report.venue_freq[pub.venue] = report.venue_freq.get(pub.venue, 0) + 1
        for kw in pub.keywords:
            report.keyword_freq[kw] = report.keyword_freq.get(kw, 0) + 1
        if pub.year is not None:
            report.year_hist[pub.year] = report.year_hist.get(pub.year, 0) + 1

    if labeling is not None:
        report.distinct_names = len(labeling.names())
        report.distinct_profiles = labeling.n_profiles()
        for name in labeling.names():
            k = len(labeling.profiles[name])
            report.name_profile_hist[k] = report.name_profile_hist.get(k, 0) + 1
            for papers in labeling.profiles[name].values():
                n = len(papers)
                report.profile_pub_hist[n] = report.profile_pub_hist.get(n, 0) + 1
                orgs = set()
                for paper in papers:
                    if paper not in corpus:
                        continue
                    for ref in corpus.get(paper).authors:
                        if _fold(ref.name) == name:
                            org = normalize_org(ref.org)
                            if org:
                                orgs.add(org)
                no = len(orgs)
                report.profile_org_hist[no] = report.profile_org_hist.get(no, 0) + 1
    else:
        names = set()
        for pub in corpus.publications.values():
            for ref in pub.authors:
                key = _fold(ref.name)
                if key:
                    names.add(key)
        report.distinct_names = len(names)

    if graph is not None:
        sizes = graph.component_sizes()
        report.n_components = len(sizes)
        report.largest_component_size = sizes[0] if sizes else 0
    return report


_SYLLABLES = [
    "ba", "be", "bi", "bo", "da", "de", "di", "do", "fa", "fe", "ga", "go",
    "ka", "ke", "ki", "ko", "la", "le", "li", "lo", "ma", "me", "mi", "mo",
    "na", "ne", "ni", "no", "pa", "pe", "ra", "re", "ri", "ro", "sa", "se",
    "si", "so", "ta", "te", "ti", "to", "va", "ve", "za", "zo",
]

_COMMON_WORDS = [
    "analysis", "approach", "based", "data", "design", "evaluation",
    "framework", "method", "model", "novel", "performance", "results",
    "study", "system", "techniques", "towards", "using",
]


@dataclass
class SynthConfig:
    """Knobs for the synthetic benchmark generator.

    Each ambiguous name gets several profiles (distinct people).  A profile
    has its own coauthor pool, affiliations, and topic vocabulary, so with
    contamination 0 the papers of different profiles under one name share no
    coauthors.  Contamination turns a paper into a visiting collaboration
    with the given per-paper probability: it borrows a coauthor from a
    sibling profile and the focal author signs with the sibling's
    affiliation.
    """

    n_names: int = 20
    profiles_per_name: int = 3
    papers_per_profile: int = 15
    coauthor_pool: int = 8
    coauthors_per_paper: int = 3
    orgs_per_profile: int = 2
    contamination: float = 0.0
    org_typo_rate: float = 0.0
    missing_org_rate: float = 0.0
    missing_abstract_rate: float = 0.0
    year_min: int = 1995
    year_max: int = 2019

    def validate(self) -> None:
        for attr in ("n_names", "profiles_per_name", "papers_per_profile",
                     "coauthor_pool", "coauthors_per_paper", "orgs_per_profile"):
            if getattr(self, attr) < 1:
                raise ConfigError(f"{attr} must be >= 1")
        for attr in ("contamination", "org_typo_rate", "missing_org_rate",
                     "missing_abstract_rate"):
            rate = getattr(self, attr)
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"{attr} must be in [0, 1]")
        if self.coauthors_per_paper > self.coauthor_pool:
            raise ConfigError("coauthors_per_paper exceeds coauthor_pool")
        if self.year_min > self.year_max:
            raise ConfigError("year_min exceeds year_max")


def _fresh_word(rng: random.Random, n_syl: int, used: set[str]) -> str:
    # the n-syllable space is finite; grow the word when draws keep colliding
    # so large corpora cannot stall
    misses = 0
    while True:
        word = "".join(rng.choice(_SYLLABLES) for _ in range(n_syl))
        if word not in used:
            used.add(word)
            return word
        misses += 1
        if misses % 40 == 0:
            n_syl += 1


def _typo(rng: random.Random, text: str) -> str:
    """Swap two adjacent characters somewhere in the string."""
    if len(text) < 2:
        return text
    i = rng.randrange(len(text) - 1)
    return text[:i] + text[i + 1] + text[i] + text[i + 2:]


def synth_generate(config: SynthConfig, seed: int) -> tuple[Corpus, Labeling]:
    """Generate a labeled synthetic corpus.  Pure function of (config, seed)."""
    config.validate()
    rng = random.Random(seed)
    used_words: set[str] = set()

    pubs: dict[str, Publication] = {}
    profiles: dict[str, dict[str, tuple[str, ...]]] = {}
    counter = 0

    for name_i in range(config.n_names):
        surname = _fresh_word(rng, 3, used_words)
        initial = rng.choice("abcdefghijklmnoprstv")
        name_key = f"{initial}_{surname}"
        raw_forms = [f"{initial.upper()}. {surname.capitalize()}",
                     f"{initial} {surname}",
                     f"{initial.upper()} {surname.upper()}"]

        # Build every profile of this name before emitting papers so
        # contamination can borrow coauthors from a sibling profile.
        profile_specs = []
        for prof_i in range(config.profiles_per_name):
            coauthors = []
            for _ in range(config.coauthor_pool):
                co_name = (f"{_fresh_word(rng, 2, used_words).capitalize()} "
                           f"{_fresh_word(rng, 3, used_words).capitalize()}")
                co_org = f"{_fresh_word(rng, 2, used_words)} institute"
                coauthors.append(AuthorRef(name=co_name, org=co_org))
            orgs = [f"{_fresh_word(rng, 2, used_words)} university "
                    f"department of {_fresh_word(rng, 3, used_words)}"
                    for _ in range(config.orgs_per_profile)]
            topic = [_fresh_word(rng, 2, used_words) for _ in range(30)]
            venues = [f"journal of {_fresh_word(rng, 3, used_words)}",
                      f"conference on {_fresh_word(rng, 3, used_words)}"]
            profile_specs.append((coauthors, orgs, topic, venues))

        for prof_i, (coauthors, orgs, topic, venues) in enumerate(profile_specs):
            prof_id = f"{name_key}-{prof_i}"
            paper_ids = []
            for _ in range(config.papers_per_profile):
                pid = f"p{counter:05d}"
                counter += 1
                paper_ids.append(pid)

                # A contaminated paper is a visiting collaboration: the
                # focal author picks up a sibling profile's coauthor AND
                # signs with that profile's affiliation.
                org_pool, borrowed = orgs, None
                if (config.contamination > 0 and len(profile_specs) > 1
                        and rng.random() < config.contamination):
                    sibling = rng.randrange(len(profile_specs) - 1)
                    if sibling >= prof_i:
                        sibling += 1
                    borrowed = rng.choice(profile_specs[sibling][0])
                    org_pool = profile_specs[sibling][1]

                org = rng.choice(org_pool)
                if rng.random() < config.org_typo_rate:
                    org = _typo(rng, org)
                if rng.random() < config.missing_org_rate:
                    org = ""
                focal = AuthorRef(name=rng.choice(raw_forms), org=org)

                others = rng.sample(coauthors, config.coauthors_per_paper)
                if borrowed is not None:
                    others.append(borrowed)
                authors = [focal] + others
                rng.shuffle(authors)

                title_words = rng.sample(topic, rng.randint(5, 8))
                abstract_words = [rng.choice(topic) if rng.random() < 0.7
                                  else rng.choice(_COMMON_WORDS)
                                  for _ in range(rng.randint(30, 50))]
                abstract = " ".join(abstract_words)
                if rng.random() < config.missing_abstract_rate:
                    abstract = ""

                pubs[pid] = Publication(
                    id=pid,
                    title=" ".join(title_words).capitalize(),
                    authors=tuple(authors),
                    venue=rng.choice(venues),
                    year=rng.randint(config.year_min, config.year_max),
                    keywords=tuple(rng.sample(topic, 3)),
                    abstract=abstract,
                )
            profiles.setdefault(name_key, {})[prof_id] = tuple(sorted(paper_ids))

    corpus = Corpus(pubs, LoadReport(n_records=len(pubs)))
    return corpus, Labeling(profiles)


def save_publications(corpus: Corpus, path: str) -> None:
    """Write a corpus in the standard publications JSON layout."""
    data = {}
    for pid, pub in corpus.publications.items():
        data[pid] = {
            "id": pub.id,
            "title": pub.title,
            "authors": [{"name": a.name, "org": a.org} for a in pub.authors],
            "venue": pub.venue,
            "year": pub.year,
            "keywords": list(pub.keywords),
            "abstract": pub.abstract,
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
