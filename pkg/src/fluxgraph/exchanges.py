"""Exchange cluster detection via deposit-address reuse.

Custodial services make customers pay into throwaway deposit addresses
that immediately forward to a central wallet. That pass-through shape is
the fingerprint: a high-traffic account whose neighborhood is dominated
by such forwarders is an exchange main wallet, and the forwarders are
its deposit addresses. Detection only ever looks at the candidate's
1-neighborhood edge aggregates.

Thresholds arrive as decimal floats but every comparison is done with
exact fractions over integer flux, so "strictly more than 90%" means
exactly that: 90 passing neighbors out of 100 fails.
"""

from __future__ import annotations

import csv
import hashlib
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .errors import (
    ClusterOverlapError,
    ConfigError,
    LabelFileError,
    UnknownAccountError,
)
from .graph import AggregatedGraph, degree_centrality_ranking


@dataclass(frozen=True)
class DetectionParams:
    """Knobs for the deposit-reuse heuristic (defaults are the production
    values: scan the 60 most central accounts, require a strict majority
    above 90% deposit-pattern neighbors, at least 10 neighbors, and a
    99% forward fraction for a deposit address)."""

    top_k: int = 60
    deposit_neighbor_threshold: float = 0.90
    min_neighbors: int = 10
    deposit_forward_fraction: float = 0.99
    min_deposit_inflows: int = 1

    def __post_init__(self):
        if self.top_k < 1:
            raise ConfigError("top_k must be at least 1")
        if self.min_neighbors < 1:
            raise ConfigError("min_neighbors must be at least 1")
        if self.min_deposit_inflows < 1:
            raise ConfigError("min_deposit_inflows must be at least 1")
        if not 0.0 < self.deposit_neighbor_threshold < 1.0:
            raise ConfigError("deposit_neighbor_threshold must be in (0, 1)")
        if not 0.0 < self.deposit_forward_fraction <= 1.0:
            raise ConfigError("deposit_forward_fraction must be in (0, 1]")


def _exact(value: float) -> Fraction:
    # Fraction(str(x)) reads the decimal the caller wrote, not the binary
    # float underneath, so 0.90 is exactly 9/10 in comparisons.
    return Fraction(str(value))


@dataclass
class ExchangeCluster:
    cluster_id: int
    label: str
    main_addresses: set[str] = field(default_factory=set)
    deposit_addresses: set[str] = field(default_factory=set)

    @property
    def size(self) -> int:
        return len(self.main_addresses) + len(self.deposit_addresses)

    def members(self) -> set[str]:
        return self.main_addresses | self.deposit_addresses


@dataclass
class Coloring:
    """Total account -> color map. 0 marks users; colors 1..K are the
    detected exchange clusters, matching their cluster ids."""

    colors: dict[str, int]

    def color_of(self, account: str) -> int:
        return self.colors[account]

    @property
    def max_color(self) -> int:
        return max(self.colors.values(), default=0)

    @classmethod
    def all_users(cls, graph: AggregatedGraph) -> "Coloring":
        return cls({account: 0 for account in graph.nodes})


def is_deposit_address(
    graph: AggregatedGraph, candidate: str, main: str, params: DetectionParams
) -> bool:
    """Does candidate behave as a deposit address feeding main?

    Requires: enough inflow from accounts other than main, at least the
    forward fraction of its out-flux sent to main, and no other outflow
    target receiving a non-negligible share. Raises UnknownAccountError
    when either account is not in the graph.
    """
    if not graph.has_node(main):
        raise UnknownAccountError(main)
    out_edges = graph.out_edges(candidate)  # raises for unknown candidate

    inflows = 0
    for source in graph.in_edges(candidate):
        if source != main:
            inflows += 1
            if inflows >= params.min_deposit_inflows:
                break
    if inflows < params.min_deposit_inflows:
        return False

    out_flux = sum(agg.flux for agg in out_edges.values())
    if out_flux == 0:
        return False
    to_main = out_edges.get(main)
    if to_main is None:
        return False
    forward = _exact(params.deposit_forward_fraction)
    if Fraction(to_main.flux, out_flux) < forward:
        return False
    residue = 1 - forward
    for target, agg in out_edges.items():
        if target == main:
            continue
        if Fraction(agg.flux, out_flux) >= residue:
            return False
    return True


def classify_exchange(
    graph: AggregatedGraph, account: str, params: DetectionParams
) -> Optional[ExchangeCluster]:
    """Test one account as an exchange main wallet.

    Neighbors are the distinct accounts adjacent in either direction,
    excluding the account itself. Classification needs at least
    min_neighbors of them and strictly more than the threshold fraction
    passing the deposit test. Returns an unlabeled, unnumbered cluster
    (main plus its deposits) or None.
    """
    neighbors = graph.neighbors(account)
    if len(neighbors) < params.min_neighbors:
        return None
    passing = {
        nb for nb in neighbors if is_deposit_address(graph, nb, account, params)
    }
    if Fraction(len(passing), len(neighbors)) <= _exact(params.deposit_neighbor_threshold):
        return None
    return ExchangeCluster(
        cluster_id=0, label="", main_addresses={account}, deposit_addresses=passing
    )


def _unknown_label(mains: set[str]) -> str:
    anchor = min(mains)
    digest = hashlib.sha256(anchor.encode("utf-8")).hexdigest()
    return f"unknown-{digest[:6]}"


def merge_clusters(
    raw: list[ExchangeCluster], labels: Mapping[str, str] | None = None
) -> list[ExchangeCluster]:
    """Merge candidate clusters into final ones and assign ids and labels.

    Two candidates merge when their mains share a label, or when they
    claim any account in common (a shared deposit address is the usual
    case). Merging is transitive. Within a merged cluster the main role
    wins: an account that is a main anywhere is dropped from deposit
    sets, which keeps cluster membership unambiguous. Final ids count
    1..K in descending order of cluster size, ties by label.
    """
    label_map = dict(labels or {})
    parent = list(range(len(raw)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    by_member: dict[str, int] = {}
    by_label: dict[str, int] = {}
    for i, cluster in enumerate(raw):
        for member in cluster.members():
            if member in by_member:
                union(i, by_member[member])
            else:
                by_member[member] = i
        for main in cluster.main_addresses:
            tag = label_map.get(main)
            if tag is None:
                continue
            if tag in by_label:
                union(i, by_label[tag])
            else:
                by_label[tag] = i

    groups: dict[int, list[ExchangeCluster]] = {}
    for i, cluster in enumerate(raw):
        groups.setdefault(find(i), []).append(cluster)

    merged: list[ExchangeCluster] = []
    for parts in groups.values():
        mains: set[str] = set()
        deposits: set[str] = set()
        for part in parts:
            mains |= part.main_addresses
            deposits |= part.deposit_addresses
        deposits -= mains
        named = sorted({label_map[m] for m in mains if m in label_map})
        label = named[0] if named else _unknown_label(mains)
        merged.append(
            ExchangeCluster(
                cluster_id=0, label=label, main_addresses=mains, deposit_addresses=deposits
            )
        )

    merged.sort(key=lambda c: (-c.size, c.label))
    for idx, cluster in enumerate(merged, start=1):
        cluster.cluster_id = idx
    return merged


def detect_exchanges(
    graph: AggregatedGraph,
    params: DetectionParams | None = None,
    labels: Mapping[str, str] | None = None,
) -> list[ExchangeCluster]:
    """Scan the top-k central accounts and return the exchange clusters,
    merged, labeled and numbered. Clusters are pairwise disjoint."""
    params = params or DetectionParams()
    raw = []
    for account, _degree in degree_centrality_ranking(graph, params.top_k):
        cluster = classify_exchange(graph, account, params)
        if cluster is not None:
            raw.append(cluster)
    return merge_clusters(raw, labels)


def build_coloring(
    graph: AggregatedGraph, clusters: Iterable[ExchangeCluster]
) -> Coloring:
    """Color every graph node: cluster members get their cluster id,
    everyone else 0. Raises ClusterOverlapError when two clusters claim
    the same account, UnknownAccountError for members outside the graph."""
    colors = {account: 0 for account in graph.nodes}
    seen: dict[str, int] = {}
    for cluster in clusters:
        for member in cluster.members():
            if member in seen:
                raise ClusterOverlapError(
                    f"account {member} belongs to clusters "
                    f"{seen[member]} and {cluster.cluster_id}"
                )
            if member not in colors:
                raise UnknownAccountError(member)
            seen[member] = cluster.cluster_id
            colors[member] = cluster.cluster_id
    return Coloring(colors)


# -- CSV formats ------------------------------------------------------

LABELS_HEADER = ["address", "label"]
CLUSTERS_HEADER = ["cluster_id", "label", "address", "role"]
COLORING_HEADER = ["address", "color"]

ROLE_MAIN = "main"
ROLE_DEPOSIT = "deposit"


def load_labels(path: str) -> dict[str, str]:
    """Read an address,label CSV (header required) into a dict."""
    labels: dict[str, str] = {}
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise LabelFileError(f"cannot read label file {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LABELS_HEADER:
            raise LabelFileError(f"label file {path} must start with 'address,label'")
        for row in reader:
            if len(row) != 2 or not row[0] or not row[1]:
                raise LabelFileError(f"bad label row {row!r} in {path}")
            labels[row[0]] = row[1]
    return labels


def save_clusters(path: str, clusters: Iterable[ExchangeCluster]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CLUSTERS_HEADER)
        for cluster in sorted(clusters, key=lambda c: c.cluster_id):
            for address in sorted(cluster.main_addresses):
                writer.writerow([cluster.cluster_id, cluster.label, address, ROLE_MAIN])
            for address in sorted(cluster.deposit_addresses):
                writer.writerow([cluster.cluster_id, cluster.label, address, ROLE_DEPOSIT])


def load_clusters(path: str) -> list[ExchangeCluster]:
    found: dict[int, ExchangeCluster] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CLUSTERS_HEADER:
            raise LabelFileError(f"cluster file {path} has unexpected header {header!r}")
        for row in reader:
            if len(row) != 4 or row[3] not in (ROLE_MAIN, ROLE_DEPOSIT):
                raise LabelFileError(f"bad cluster row {row!r} in {path}")
            cid = int(row[0])
            cluster = found.get(cid)
            if cluster is None:
                cluster = ExchangeCluster(cluster_id=cid, label=row[1])
                found[cid] = cluster
            if row[3] == ROLE_MAIN:
                cluster.main_addresses.add(row[2])
            else:
                cluster.deposit_addresses.add(row[2])
    return [found[cid] for cid in sorted(found)]


def save_coloring(path: str, coloring: Coloring) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLORING_HEADER)
        for address in sorted(coloring.colors):
            writer.writerow([address, coloring.colors[address]])


def load_coloring(path: str) -> Coloring:
    colors: dict[str, int] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != COLORING_HEADER:
            raise LabelFileError(f"coloring file {path} has unexpected header {header!r}")
        for row in reader:
            if len(row) != 2:
                raise LabelFileError(f"bad coloring row {row!r} in {path}")
            colors[row[0]] = int(row[1])
    return Coloring(colors)
