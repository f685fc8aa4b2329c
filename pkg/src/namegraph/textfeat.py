"""Text features for graph nodes.

Three document-embedding models (titles, abstracts, affiliations) plus a
standardized year scalar make up the node feature vector:

    title(dim) | abstract(dim) | org(dim) | year(1)

Paper rows fill every block; author rows carry only the org block and leave
the rest zero.  Affiliations are embedded as character-bigram documents over
their normalized keys, which lets unseen orgs fall back to averaging the
bigram vectors they share with known ones.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from collections.abc import Mapping, Sequence

import numpy as np

from namegraph import kernels
from namegraph.corpus import Corpus, Publication, normalize_org
from namegraph.errors import ConfigError, DataError, ModelError
from namegraph.graph import AuthorNode, BipartiteGraph
from namegraph.kernels import derive_seed
from namegraph.walks import init_embedding_matrix, negative_table

_SPLIT = re.compile(r"[^a-z0-9]+")

DEFAULT_DIM = 100


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop single-char tokens."""
    return [t for t in _SPLIT.split(text.lower()) if len(t) > 1]


def char_bigrams(key: str) -> list[str]:
    """Overlapping character bigrams of a normalized org key."""
    return [key[i:i + 2] for i in range(len(key) - 1)]


class DocEmbeddingModel:
    """Distributed bag-of-words document embeddings.

    Each document vector is trained to predict its own tokens against
    negative samples; token (output) vectors double as the fallback space
    for inferring documents unseen at training time.
    """

    def __init__(self, vocab: dict[str, int], doc_index: dict[str, int],
                 doc_vectors: np.ndarray, token_vectors: np.ndarray,
                 hyper: dict, losses: list[float]) -> None:
        self.vocab = vocab
        self.doc_index = doc_index
        self.doc_vectors = doc_vectors
        self.token_vectors = token_vectors
        self.hyper = hyper
        self.losses = losses

    @property
    def dim(self) -> int:
        return self.doc_vectors.shape[1]

    def has_doc(self, doc_id: str) -> bool:
        return doc_id in self.doc_index

    def doc_vector(self, doc_id: str) -> np.ndarray:
        try:
            return self.doc_vectors[self.doc_index[doc_id]]
        except KeyError:
            raise ModelError(f"unknown document {doc_id!r}") from None

    def infer(self, tokens: Sequence[str]) -> np.ndarray:
        """Mean of the known tokens' output vectors; zeros if none known."""
        rows = [self.vocab[t] for t in tokens if t in self.vocab]
        if not rows:
            return np.zeros(self.dim, dtype=np.float64)
        return self.token_vectors[rows].mean(axis=0)

    def save(self, path: str) -> None:
        meta = {"format": "namegraph-docs", "version": 1,
                "vocab": sorted(self.vocab, key=self.vocab.get),
                "doc_ids": sorted(self.doc_index, key=self.doc_index.get),
                "hyper": self.hyper, "losses": self.losses}
        np.savez(path, meta=json.dumps(meta, sort_keys=True),
                 doc_vectors=self.doc_vectors,
                 token_vectors=self.token_vectors)

    @staticmethod
    def load(path: str) -> "DocEmbeddingModel":
        try:
            with np.load(path, allow_pickle=False) as data:
                meta = json.loads(str(data["meta"]))
                if meta.get("format") != "namegraph-docs":
                    raise DataError(f"{path}: not a document embedding file")
                return DocEmbeddingModel(
                    {t: i for i, t in enumerate(meta["vocab"])},
                    {d: i for i, d in enumerate(meta["doc_ids"])},
                    data["doc_vectors"], data["token_vectors"],
                    meta["hyper"], meta["losses"])
        except (OSError, KeyError, ValueError) as exc:
            raise DataError(f"{path}: cannot load model ({exc})") from exc


def train_doc_embeddings(documents, dim: int = DEFAULT_DIM, window: int = 5,
                         negatives: int = 5, epochs: int = 20,
                         lr: float = 0.025, seed: int = 0) -> DocEmbeddingModel:
    """Train document embeddings from token lists.

    `documents` is either a mapping doc id -> tokens (trained in sorted id
    order) or a plain sequence of token lists (trained in given order under
    positional string ids).  The window size is recorded but plays no role,
    since a bag-of-words document predicts each token independently.
    Documents without tokens keep their initialization.
    """
    if dim < 1 or negatives < 1 or epochs < 1:
        raise ConfigError("dim, negatives, and epochs must be >= 1")
    if lr <= 0:
        raise ConfigError("learning rate must be positive")
    if isinstance(documents, Mapping):
        items = sorted(documents.items())
    else:
        items = [(str(i), list(toks)) for i, toks in enumerate(documents)]
    counts: Counter[str] = Counter()
    for _, toks in items:
        counts.update(toks)
    if not counts:
        raise ModelError("all documents are empty")
    vocab = {t: i for i, t in enumerate(sorted(counts))}
    doc_index = {doc_id: i for i, (doc_id, _) in enumerate(items)}
    offsets = np.zeros(len(items) + 1, dtype=np.int64)
    flat: list[int] = []
    for i, (_, toks) in enumerate(items):
        flat.extend(vocab[t] for t in toks)
        offsets[i + 1] = len(flat)
    tokens = np.array(flat, dtype=np.int32)
    vocab_counts = np.zeros(len(vocab), dtype=np.int64)
    for t, c in counts.items():
        vocab_counts[vocab[t]] = c
    neg_cum = negative_table(vocab_counts)
    doc_vectors = init_embedding_matrix(len(items), dim,
                                        derive_seed(seed, "dbow-init"))
    token_vectors = np.zeros((len(vocab), dim), dtype=np.float64)
    losses = kernels.sgns_train_docs(offsets, tokens, doc_vectors,
                                     token_vectors, negatives, epochs, lr,
                                     neg_cum, derive_seed(seed, "dbow-train"))
    hyper = {"dim": dim, "window": window, "negatives": negatives,
             "epochs": epochs, "lr": lr, "seed": seed}
    return DocEmbeddingModel(vocab, doc_index, doc_vectors, token_vectors,
                             hyper, [float(x) for x in losses])


def org_embedding(model: DocEmbeddingModel | None, org_key: str) -> np.ndarray:
    """Affiliation vector: trained if known, bigram average if unseen,
    zeros for the empty key (or when no org model exists)."""
    if model is None:
        raise ModelError("no affiliation model was trained")
    if org_key == "":
        return np.zeros(model.dim, dtype=np.float64)
    if model.has_doc(org_key):
        return model.doc_vector(org_key)
    return model.infer(char_bigrams(org_key))


def standardize_year(year: int | None, min_year: int, max_year: int) -> float:
    """Scale a year into [0, 1] over the corpus range; absent years and
    degenerate ranges sit at the midpoint."""
    if year is None or max_year <= min_year:
        return 0.5
    v = (year - min_year) / (max_year - min_year)
    return min(1.0, max(0.0, v))


class CorpusFeatures:
    """Trained feature models plus assembly into fixed-width node vectors."""

    def __init__(self, title_model: DocEmbeddingModel | None,
                 abstract_model: DocEmbeddingModel | None,
                 org_model: DocEmbeddingModel | None,
                 year_min: int, year_max: int, dim: int) -> None:
        self.title_model = title_model
        self.abstract_model = abstract_model
        self.org_model = org_model
        self.year_min = year_min
        self.year_max = year_max
        self.dim = dim

    @property
    def feature_dim(self) -> int:
        return 3 * self.dim + 1

    @classmethod
    def train(cls, corpus: Corpus, dim: int = DEFAULT_DIM, window: int = 5,
              negatives: int = 5, epochs: int = 20, lr: float = 0.025,
              seed: int = 0) -> "CorpusFeatures":
        """Train title, abstract, and org models over one corpus.

        A field that is empty across the whole corpus gets no model and its
        block stays zero, so partially populated corpora still featurize.
        """
        pubs = list(corpus.publications.values())
        titles = {p.id: tokenize(p.title) for p in pubs}
        abstracts = {p.id: tokenize(p.abstract) for p in pubs}
        org_keys = sorted({normalize_org(a.org) for p in pubs
                           for a in p.authors} - {""})
        orgs = {k: char_bigrams(k) for k in org_keys}

        def fit(documents, label):
            if not any(documents.values()):
                return None
            return train_doc_embeddings(documents, dim=dim, window=window,
                                        negatives=negatives, epochs=epochs,
                                        lr=lr, seed=derive_seed(seed, label))

        years = corpus.year_range()
        year_min, year_max = years if years is not None else (0, 0)
        return cls(fit(titles, "titles"), fit(abstracts, "abstracts"),
                   fit(orgs, "orgs"), year_min, year_max, dim)

    def _block(self, model: DocEmbeddingModel | None, doc_id: str,
               tokens: list[str]) -> np.ndarray:
        if model is None:
            return np.zeros(self.dim, dtype=np.float64)
        if model.has_doc(doc_id):
            return model.doc_vector(doc_id)
        return model.infer(tokens)

    def org_vector(self, org_key: str) -> np.ndarray:
        if self.org_model is None or org_key == "":
            return np.zeros(self.dim, dtype=np.float64)
        return org_embedding(self.org_model, org_key)

    def paper_vector(self, pub: Publication) -> np.ndarray:
        """Full feature vector of a publication."""
        out = np.zeros(self.feature_dim, dtype=np.float64)
        d = self.dim
        out[:d] = self._block(self.title_model, pub.id, tokenize(pub.title))
        out[d:2 * d] = self._block(self.abstract_model, pub.id,
                                   tokenize(pub.abstract))
        org_keys = sorted({normalize_org(a.org) for a in pub.authors} - {""})
        if org_keys:
            out[2 * d:3 * d] = np.mean([self.org_vector(k) for k in org_keys],
                                       axis=0)
        out[3 * d] = standardize_year(pub.year, self.year_min, self.year_max)
        return out

    def author_vector(self, node: AuthorNode) -> np.ndarray:
        """Author feature vector: org block only, everything else zero."""
        out = np.zeros(self.feature_dim, dtype=np.float64)
        out[2 * self.dim:3 * self.dim] = self.org_vector(node.org)
        return out

    def feature_matrix(self, graph: BipartiteGraph,
                       corpus: Corpus) -> np.ndarray:
        """Features for every slot of the flat id space.

        Author slots first (merged-away slots stay zero), then papers in
        graph order.
        """
        n_a = len(graph.authors)
        out = np.zeros((n_a + len(graph.paper_ids), self.feature_dim),
                       dtype=np.float64)
        for a in graph.live_authors():
            out[a] = self.author_vector(graph.authors[a])
        for p, pid in enumerate(graph.paper_ids):
            out[n_a + p] = self.paper_vector(corpus.get(pid))
        return out

    def save(self, path: str) -> None:
        arrays: dict[str, np.ndarray] = {}
        meta: dict = {"format": "namegraph-features", "version": 1,
                      "year_min": self.year_min, "year_max": self.year_max,
                      "dim": self.dim, "models": {}}
        for label, model in (("title", self.title_model),
                             ("abstract", self.abstract_model),
                             ("org", self.org_model)):
            if model is None:
                meta["models"][label] = None
                continue
            meta["models"][label] = {
                "vocab": sorted(model.vocab, key=model.vocab.get),
                "doc_ids": sorted(model.doc_index, key=model.doc_index.get),
                "hyper": model.hyper, "losses": model.losses}
            arrays[f"{label}_doc"] = model.doc_vectors
            arrays[f"{label}_tok"] = model.token_vectors
        np.savez(path, meta=json.dumps(meta, sort_keys=True), **arrays)

    @staticmethod
    def load(path: str) -> "CorpusFeatures":
        try:
            with np.load(path, allow_pickle=False) as data:
                meta = json.loads(str(data["meta"]))
                if meta.get("format") != "namegraph-features":
                    raise DataError(f"{path}: not a feature model file")
                models: dict[str, DocEmbeddingModel | None] = {}
                for label in ("title", "abstract", "org"):
                    spec = meta["models"][label]
                    if spec is None:
                        models[label] = None
                        continue
                    models[label] = DocEmbeddingModel(
                        {t: i for i, t in enumerate(spec["vocab"])},
                        {d: i for i, d in enumerate(spec["doc_ids"])},
                        data[f"{label}_doc"], data[f"{label}_tok"],
                        spec["hyper"], spec["losses"])
                return CorpusFeatures(models["title"], models["abstract"],
                                      models["org"], meta["year_min"],
                                      meta["year_max"], meta["dim"])
        except (OSError, KeyError, ValueError) as exc:
            raise DataError(f"{path}: cannot load feature models ({exc})") from exc
