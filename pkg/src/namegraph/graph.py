"""Bipartite author-publication graph.

One side holds author nodes keyed by (normalized name, normalized org); the
other holds publications.  An edge is an authorship incidence.  Merging two
author nodes of the same name folds their adjacency together under the lower
node id; lookups of a merged-away id keep resolving to the canonical node, so
ids stay stable across merges.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from namegraph.corpus import Corpus, normalize_name, normalize_org
from namegraph.errors import DataError, GraphError


@dataclass(frozen=True)
class AuthorNode:
    name: str
    org: str
    dedup_key: str = ""  # paper id when empty-org nodes are kept distinct


@dataclass(frozen=True)
class MergeRecord:
    source: int
    other: int
    canonical: int
    epoch: int | None = None
    trigger: int | None = None
    self_merge: bool = False


class BipartiteGraph:
    """Author-publication graph with union-find author merging."""

    def __init__(self, authors: list[AuthorNode], paper_ids: list[str],
                 edges: list[tuple[int, int]]) -> None:
        self.authors = authors
        self.paper_ids = paper_ids
        self.paper_index = {pid: i for i, pid in enumerate(paper_ids)}
        self._parent = list(range(len(authors)))
        self.author_adj: list[set[int]] = [set() for _ in authors]
        self.paper_adj: list[set[int]] = [set() for _ in paper_ids]
        self.n_edges = 0
        for a, p in edges:
            if not (0 <= a < len(authors) and 0 <= p < len(paper_ids)):
                raise GraphError(f"edge ({a}, {p}) out of range")
            if p not in self.author_adj[a]:
                self.author_adj[a].add(p)
                self.paper_adj[p].add(a)
                self.n_edges += 1
        self.name_index: dict[str, set[int]] = {}
        for i, node in enumerate(authors):
            self.name_index.setdefault(node.name, set()).add(i)
        self.merge_log: list[MergeRecord] = []
        self._author_csr = None
        self._unified_csr = None

    # -- identity ---------------------------------------------------------

    @property
    def n_authors(self) -> int:
        """Author slots ever created, merged-away ones included."""
        return len(self.authors)

    @property
    def n_papers(self) -> int:
        return len(self.paper_ids)

    def resolve(self, author_id: int) -> int:
        """Canonical id for an author slot, with path compression."""
        root = author_id
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[author_id] != root:
            self._parent[author_id], author_id = root, self._parent[author_id]
        return root

    def is_live(self, author_id: int) -> bool:
        return self.resolve(author_id) == author_id

    def live_authors(self) -> list[int]:
        return [a for a in range(len(self.authors)) if self._parent[a] == a]

    @property
    def n_live_authors(self) -> int:
        return sum(1 for a in range(len(self.authors)) if self._parent[a] == a)

    def degree(self, author_id: int) -> int:
        return len(self.author_adj[self.resolve(author_id)])

    def name_nodes(self, name: str) -> list[int]:
        """Live author nodes carrying the given normalized name."""
        return sorted(self.name_index.get(name, ()))

    def papers_of(self, author_id: int) -> list[int]:
        return sorted(self.author_adj[self.resolve(author_id)])

    def authors_of(self, paper_idx: int) -> list[int]:
        return sorted(self.paper_adj[paper_idx])

    # -- merging ----------------------------------------------------------

    def merge(self, a: int, b: int, epoch: int | None = None,
              trigger: int | None = None) -> int:
        """Merge two same-name author nodes; returns the canonical id.

        The lower canonical id wins.  Merging a node with itself is a logged
        no-op.  Nodes with different names refuse to merge.
        """
        ra, rb = self.resolve(a), self.resolve(b)
        if self.authors[ra].name != self.authors[rb].name:
            raise GraphError(
                f"cannot merge {self.authors[ra].name!r} with "
                f"{self.authors[rb].name!r}")
        if ra == rb:
            self.merge_log.append(MergeRecord(
                source=a, other=b, canonical=ra, epoch=epoch,
                trigger=trigger, self_merge=True))
            return ra
        winner, loser = (ra, rb) if ra < rb else (rb, ra)
        for p in self.author_adj[loser]:
            self.paper_adj[p].discard(loser)
            if winner in self.paper_adj[p]:
                self.n_edges -= 1  # parallel incidence collapses
            else:
                self.paper_adj[p].add(winner)
        self.author_adj[winner] |= self.author_adj[loser]
        self.author_adj[loser] = set()
        self._parent[loser] = winner
        self.name_index[self.authors[loser].name].discard(loser)
        self.merge_log.append(MergeRecord(
            source=a, other=b, canonical=winner, epoch=epoch, trigger=trigger))
        self._author_csr = None
        self._unified_csr = None
        return winner

    # -- snapshots for kernels ---------------------------------------------

    def author_paper_csr(self):
        """CSR adjacency in both directions over author slots and papers.

        Merged-away author rows are empty; paper rows list canonical author
        ids.  Cached until the next merge.
        """
        if self._author_csr is None:
            n_a, n_p = len(self.authors), len(self.paper_ids)
            a_indptr = np.zeros(n_a + 1, dtype=np.int64)
            for a in range(n_a):
                a_indptr[a + 1] = a_indptr[a] + len(self.author_adj[a])
            a_indices = np.empty(int(a_indptr[-1]), dtype=np.int32)
            for a in range(n_a):
                row = sorted(self.author_adj[a])
                a_indices[a_indptr[a]:a_indptr[a + 1]] = row
            p_indptr = np.zeros(n_p + 1, dtype=np.int64)
            for p in range(n_p):
                p_indptr[p + 1] = p_indptr[p] + len(self.paper_adj[p])
            p_indices = np.empty(int(p_indptr[-1]), dtype=np.int32)
            for p in range(n_p):
                row = sorted(self.paper_adj[p])
                p_indices[p_indptr[p]:p_indptr[p + 1]] = row
            self._author_csr = (a_indptr, a_indices, p_indptr, p_indices)
        return self._author_csr

    def unified_csr(self):
        """CSR over a flat id space: author a -> a, paper p -> n_authors + p."""
        if self._unified_csr is None:
            n_a, n_p = len(self.authors), len(self.paper_ids)
            n = n_a + n_p
            indptr = np.zeros(n + 1, dtype=np.int64)
            for a in range(n_a):
                indptr[a + 1] = indptr[a] + len(self.author_adj[a])
            for p in range(n_p):
                indptr[n_a + p + 1] = indptr[n_a + p] + len(self.paper_adj[p])
            indices = np.empty(int(indptr[-1]), dtype=np.int32)
            for a in range(n_a):
                row = sorted(n_a + p for p in self.author_adj[a])
                indices[indptr[a]:indptr[a + 1]] = row
            for p in range(n_p):
                row = sorted(self.paper_adj[p])
                indices[indptr[n_a + p]:indptr[n_a + p + 1]] = row
            self._unified_csr = (indptr, indices)
        return self._unified_csr

    def live_unified_ids(self) -> list[int]:
        """Live author ids followed by all paper ids in the flat space."""
        n_a = len(self.authors)
        return self.live_authors() + [n_a + p for p in range(len(self.paper_ids))]

    # -- components ---------------------------------------------------------

    def components(self) -> list[set[int]]:
        """Connected components over the flat id space, largest first."""
        n_a = len(self.authors)
        seen: set[int] = set()
        out: list[set[int]] = []
        for start in self.live_unified_ids():
            if start in seen:
                continue
            comp = {start}
            queue = deque([start])
            while queue:
                node = queue.popleft()
                if node < n_a:
                    neighbors = (n_a + p for p in self.author_adj[node])
                else:
                    neighbors = iter(self.paper_adj[node - n_a])
                for nxt in neighbors:
                    if nxt not in comp:
                        comp.add(nxt)
                        queue.append(nxt)
            seen |= comp
            out.append(comp)
        out.sort(key=lambda c: (-len(c), min(c)))
        return out

    def component_sizes(self) -> list[int]:
        return [len(c) for c in self.components()]

    def component_id_of_author(self) -> dict[int, int]:
        """Live author id -> index of its component."""
        mapping = {}
        n_a = len(self.authors)
        for i, comp in enumerate(self.components()):
            for node in comp:
                if node < n_a:
                    mapping[node] = i
        return mapping

    # -- name-level views ---------------------------------------------------

    def name_author_of(self, name: str,
                       paper_ids: list[str] | None = None) -> dict[str, int]:
        """Map each paper of a name to its author node for that name.

        A paper touched by several same-name nodes maps to the lowest id.
        With `paper_ids` given, the map is restricted to that universe and
        papers without a node of the name are simply absent.
        """
        out: dict[str, int] = {}
        for node in self.name_nodes(name):
            for p in sorted(self.author_adj[node]):
                pid = self.paper_ids[p]
                if pid not in out:
                    out[pid] = node
        if paper_ids is not None:
            out = {pid: out[pid] for pid in paper_ids if pid in out}
        return out

    def clustering_for_name(self, name: str,
                            paper_ids: list[str] | None = None) -> list[list[str]]:
        """Group a name's papers by canonical author node.

        Papers from `paper_ids` that touch no node of the name become
        singleton clusters at the end.
        """
        author_of = self.name_author_of(name, paper_ids)
        universe = paper_ids if paper_ids is not None else sorted(author_of)
        by_node: dict[int, list[str]] = {}
        leftovers = []
        for pid in universe:
            node = author_of.get(pid)
            if node is None:
                leftovers.append(pid)
            else:
                by_node.setdefault(node, []).append(pid)
        clusters = [sorted(by_node[node]) for node in sorted(by_node)]
        clusters.extend([pid] for pid in sorted(leftovers))
        return clusters

    # -- persistence ---------------------------------------------------------

    def export_text(self, path: str) -> None:
        """Write the graph, merge state included, as tab-separated text."""
        for pid in self.paper_ids:
            if "\t" in pid or "\n" in pid:
                raise DataError(f"paper id {pid!r} contains a separator")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("namegraph-graph\t1\n")
            fh.write(f"counts\t{len(self.authors)}\t{len(self.paper_ids)}\n")
            for i, node in enumerate(self.authors):
                org = node.org if node.org else "-"
                key = node.dedup_key if node.dedup_key else "-"
                fh.write(f"author\t{i}\t{node.name}\t{org}\t{key}\n")
            for i, pid in enumerate(self.paper_ids):
                fh.write(f"paper\t{i}\t{pid}\n")
            for a in range(len(self.authors)):
                if self._parent[a] != a:
                    fh.write(f"parent\t{a}\t{self.resolve(a)}\n")
            for a in range(len(self.authors)):
                for p in sorted(self.author_adj[a]):
                    fh.write(f"edge\t{a}\t{p}\n")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BipartiteGraph):
            return NotImplemented
        return (self.authors == other.authors
                and self.paper_ids == other.paper_ids
                and [self.resolve(a) for a in range(len(self.authors))]
                == [other.resolve(a) for a in range(len(other.authors))]
                and self.author_adj == other.author_adj)

    def copy(self) -> "BipartiteGraph":
        clone = BipartiteGraph.__new__(BipartiteGraph)
        clone.authors = list(self.authors)
        clone.paper_ids = list(self.paper_ids)
        clone.paper_index = dict(self.paper_index)
        clone._parent = list(self._parent)
        clone.author_adj = [set(s) for s in self.author_adj]
        clone.paper_adj = [set(s) for s in self.paper_adj]
        clone.n_edges = self.n_edges
        clone.name_index = {k: set(v) for k, v in self.name_index.items()}
        clone.merge_log = list(self.merge_log)
        clone._author_csr = self._author_csr
        clone._unified_csr = self._unified_csr
        return clone


def build_graph(corpus: Corpus, distinct_empty_org: bool = False) -> BipartiteGraph:
    """Build the bipartite graph for a corpus.

    Author nodes are keyed by (name, org); every same-keyed incidence lands
    on one node.  With distinct_empty_org=True an empty-org incidence gets a
    per-paper node instead of pooling all unknown affiliations of a name.
    Authors whose names normalize to nothing yield no node.  Node ids follow
    sorted key order, so rebuilding the same corpus gives identical ids.
    """
    keys: set[tuple[str, str, str]] = set()
    incidences: list[tuple[tuple[str, str, str], str]] = []
    for pid, pub in corpus.publications.items():
        for ref in pub.authors:
            try:
                name = normalize_name(ref.name)
            except DataError:
                continue  # flagged at load time; no node for unnamed authors
            org = normalize_org(ref.org)
            dedup = pid if (distinct_empty_org and not org) else ""
            key = (name, org, dedup)
            keys.add(key)
            incidences.append((key, pid))

    ordered = sorted(keys)
    key_to_id = {key: i for i, key in enumerate(ordered)}
    authors = [AuthorNode(name=k[0], org=k[1], dedup_key=k[2]) for k in ordered]
    paper_ids = list(corpus.publications)
    paper_index = {pid: i for i, pid in enumerate(paper_ids)}
    edges = [(key_to_id[key], paper_index[pid]) for key, pid in incidences]
    return BipartiteGraph(authors, paper_ids, edges)


def load_graph(path: str) -> BipartiteGraph:
    """Read a graph written by export_text, merge state included."""
    authors: list[AuthorNode] = []
    paper_ids: list[str] = []
    parents: list[tuple[int, int]] = []
    edges: list[tuple[int, int]] = []
    n_a = n_p = -1
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            if header[:1] != ["namegraph-graph"]:
                raise DataError(f"{path}: not a graph file")
            if header[1:] != ["1"]:
                raise DataError(f"{path}: unsupported graph version {header[1:]}")
            for line_no, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split("\t")
                kind = parts[0]
                if kind == "counts":
                    n_a, n_p = int(parts[1]), int(parts[2])
                elif kind == "author":
                    idx = int(parts[1])
                    if idx != len(authors):
                        raise DataError(f"{path}:{line_no}: author ids not dense")
                    org = parts[3] if parts[3] != "-" else ""
                    key = parts[4] if parts[4] != "-" else ""
                    authors.append(AuthorNode(name=parts[2], org=org, dedup_key=key))
                elif kind == "paper":
                    idx = int(parts[1])
                    if idx != len(paper_ids):
                        raise DataError(f"{path}:{line_no}: paper ids not dense")
                    paper_ids.append(parts[2])
                elif kind == "parent":
                    parents.append((int(parts[1]), int(parts[2])))
                elif kind == "edge":
                    edges.append((int(parts[1]), int(parts[2])))
                else:
                    raise DataError(f"{path}:{line_no}: unknown record {kind!r}")
    except (IndexError, ValueError) as exc:
        raise DataError(f"{path}: malformed graph file ({exc})") from exc
    if len(authors) != n_a or len(paper_ids) != n_p:
        raise DataError(f"{path}: counts disagree with records")
    graph = BipartiteGraph(authors, paper_ids, edges)
    for loser, winner in parents:
        if not (0 <= loser < n_a and 0 <= winner < n_a) or graph.author_adj[loser]:
            raise DataError(f"{path}: bad parent record {loser} -> {winner}")
        graph._parent[loser] = winner
        graph.name_index[authors[loser].name].discard(loser)
    return graph
