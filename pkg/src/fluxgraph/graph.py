"""Aggregated directed transaction graph.

Transfers between the same ordered account pair collapse into one edge
carrying flux (sum of amounts, Planck) and multiplicity (transfer
count). Self-loops are kept. The structure is two nested dicts (out-
and in-adjacency) sharing EdgeAggregate instances, so per-node
neighborhood scans used by the exchange heuristics are O(degree).
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .errors import MalformedRecordError, UnknownAccountError
from .records import TransferRecord


@dataclass(slots=True)
class EdgeAggregate:
    flux: int = 0
    multiplicity: int = 0


@dataclass(slots=True)
class GraphStats:
    order: int
    aggregated_size: int
    transaction_count: int
    total_flux: int

    def as_dict(self) -> dict:
        return {
            "order": self.order,
            "aggregated_size": self.aggregated_size,
            "transaction_count": self.transaction_count,
            "total_flux": self.total_flux,
        }


class AggregatedGraph:
    """Directed graph of accounts with flux/multiplicity edge weights."""

    def __init__(self, track_block_range: bool = False):
        self._out: dict[str, dict[str, EdgeAggregate]] = {}
        self._in: dict[str, dict[str, EdgeAggregate]] = {}
        self._nodes: set[str] = set()
        self._edge_count = 0
        self._tx_count = 0
        self._flux = 0
        self.block_range: Optional[dict[tuple[str, str], list[int]]] = (
            {} if track_block_range else None
        )

    # -- construction -------------------------------------------------

    def add_node(self, account: str) -> None:
        if account not in self._nodes:
            self._nodes.add(account)
            self._out[account] = {}
            self._in[account] = {}

    def add_transfer(
        self, sender: str, recipient: str, amount: int, block: int | None = None
    ) -> None:
        """Fold one transfer into the aggregate. amount must be positive."""
        if amount <= 0:
            raise ValueError("transfer amount must be positive")
        self._bump(sender, recipient, amount, 1)
        if self.block_range is not None and block is not None:
            span = self.block_range.get((sender, recipient))
            if span is None:
                self.block_range[(sender, recipient)] = [block, block]
            else:
                if block < span[0]:
                    span[0] = block
                if block > span[1]:
                    span[1] = block

    def add_edge(self, sender: str, recipient: str, flux: int, multiplicity: int) -> None:
        """Fold a pre-aggregated edge in (used when loading from disk)."""
        if flux <= 0 or multiplicity <= 0:
            raise ValueError("edge flux and multiplicity must be positive")
        self._bump(sender, recipient, flux, multiplicity)

    def _bump(self, sender: str, recipient: str, flux: int, mult: int) -> None:
        self.add_node(sender)
        self.add_node(recipient)
        agg = self._out[sender].get(recipient)
        if agg is None:
            agg = EdgeAggregate(0, 0)
            self._out[sender][recipient] = agg
            self._in[recipient][sender] = agg
            self._edge_count += 1
        agg.flux += flux
        agg.multiplicity += mult
        self._tx_count += mult
        self._flux += flux

    # -- inspection ----------------------------------------------------

    @property
    def nodes(self) -> set[str]:
        return self._nodes

    @property
    def order(self) -> int:
        return len(self._nodes)

    @property
    def aggregated_size(self) -> int:
        return self._edge_count

    @property
    def transaction_count(self) -> int:
        return self._tx_count

    @property
    def total_flux(self) -> int:
        return self._flux

    def edges(self) -> Iterator[tuple[str, str, EdgeAggregate]]:
        for sender, targets in self._out.items():
            for recipient, agg in targets.items():
                yield sender, recipient, agg

    def edge(self, sender: str, recipient: str) -> Optional[EdgeAggregate]:
        targets = self._out.get(sender)
        return None if targets is None else targets.get(recipient)

    def out_edges(self, account: str) -> dict[str, EdgeAggregate]:
        try:
            return self._out[account]
        except KeyError:
            raise UnknownAccountError(account) from None

    def in_edges(self, account: str) -> dict[str, EdgeAggregate]:
        try:
            return self._in[account]
        except KeyError:
            raise UnknownAccountError(account) from None

    def has_node(self, account: str) -> bool:
        return account in self._nodes

    def neighbors(self, account: str) -> set[str]:
        """Distinct accounts adjacent in either direction, excluding self."""
        near = set(self.out_edges(account))
        near.update(self.in_edges(account))
        near.discard(account)
        return near

    def neighbor_count(self, account: str) -> int:
        return len(self.neighbors(account))

    def degree(self, account: str) -> int:
        """Transaction-count degree: in plus out multiplicities, with a
        self-loop's transfers counted once, not twice."""
        out_e = self.out_edges(account)
        in_e = self.in_edges(account)
        total = sum(a.multiplicity for a in out_e.values())
        total += sum(a.multiplicity for a in in_e.values())
        loop = out_e.get(account)
        if loop is not None:
            total -= loop.multiplicity
        return total

    def out_flux(self, account: str) -> int:
        return sum(a.flux for a in self.out_edges(account).values())


def build_graph(
    transfers: Iterable[TransferRecord], track_block_range: bool = False
) -> AggregatedGraph:
    """Aggregate a transfer stream; the result is independent of input order."""
    g = AggregatedGraph(track_block_range=track_block_range)
    for t in transfers:
        g.add_transfer(t.sender, t.recipient, t.amount_planck, block=t.block_number)
    return g


def degree_centrality_ranking(graph: AggregatedGraph, k: int) -> list[tuple[str, int]]:
    """Top-k accounts by transaction-count degree.

    Ties break by ascending account id so the ranking is reproducible.
    Returns min(k, order) entries.
    """
    if k <= 0:
        return []
    ranked = sorted(
        ((account, graph.degree(account)) for account in graph.nodes),
        key=lambda item: (-item[1], item[0]),
    )
    return ranked[:k]


def graph_stats(graph: AggregatedGraph) -> GraphStats:
    return GraphStats(
        order=graph.order,
        aggregated_size=graph.aggregated_size,
        transaction_count=graph.transaction_count,
        total_flux=graph.total_flux,
    )


# -- persistence: a graph directory holds nodes.csv + edges.csv --------

NODES_FILE = "nodes.csv"
EDGES_FILE = "edges.csv"


def save_graph(graph: AggregatedGraph, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, NODES_FILE), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["account"])
        for account in sorted(graph.nodes):
            writer.writerow([account])
    with open(os.path.join(directory, EDGES_FILE), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sender", "recipient", "flux_planck", "multiplicity"])
        for sender, recipient, agg in sorted(graph.edges(), key=lambda e: (e[0], e[1])):
            writer.writerow([sender, recipient, agg.flux, agg.multiplicity])


def load_graph(directory: str) -> AggregatedGraph:
    """Rebuild a graph saved by save_graph; totals are recomputed exactly."""
    g = AggregatedGraph()
    edges_path = os.path.join(directory, EDGES_FILE)
    nodes_path = os.path.join(directory, NODES_FILE)
    with open(edges_path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sender", "recipient", "flux_planck", "multiplicity"]:
            raise MalformedRecordError(f"unexpected edge file header in {edges_path}")
        for row in reader:
            if len(row) != 4:
                raise MalformedRecordError(f"bad edge row {row!r} in {edges_path}")
            g.add_edge(row[0], row[1], int(row[2]), int(row[3]))
    with open(nodes_path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["account"]:
            raise MalformedRecordError(f"unexpected node file header in {nodes_path}")
        for row in reader:
            if len(row) != 1:
                raise MalformedRecordError(f"bad node row {row!r} in {nodes_path}")
            g.add_node(row[0])
    return g
