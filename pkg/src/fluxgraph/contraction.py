"""Color contraction: collapse connected same-color account sets.

Given a graph and a total node coloring, every maximal set of nodes
joined by monochromatic edges (direction ignored) becomes one node of
the quotient. Flux and transfer counts on edges that end up inside a
cluster move to per-node intra statistics; cross-cluster edges are
aggregated per ordered cluster pair. The result is properly colored by
construction: an edge between two same-colored clusters is impossible,
because that edge would have merged them.

Two independent routes compute the quotient. contract() discovers
clusters by breadth-first search over the monochromatic adjacency and
is the production path. oracle_contract() re-derives everything from a
plain disjoint-set forest and a full edge re-scan; it exists for tests
and for the --verify pipeline flag, and stays deliberately naive. Both
feed the same deterministic numbering rule, and canonical_form() keys
clusters by their sorted member sets so outputs can be compared across
processing orders, byte for byte.

Accounting is conserved exactly: member counts sum to the original
order, intra plus cross transfer counts to the original transaction
count, intra plus cross flux to the original total flux.
"""

from __future__ import annotations

import csv
import json
import os
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Optional
from xml.etree import ElementTree

from .errors import ConfigError, MalformedRecordError, PartialColoringError
from .exchanges import Coloring
from .graph import AggregatedGraph, EdgeAggregate

ClusterAssignment = dict[str, int]


@dataclass(slots=True)
class ContractedNode:
    cluster_id: int
    color: int
    member_count: int
    intra_flux: int
    intra_tx_count: int


class ContractedGraph:
    """Quotient graph: numbered cluster nodes plus aggregated cross edges."""

    def __init__(self):
        self.nodes: dict[int, ContractedNode] = {}
        self.edges: dict[tuple[int, int], EdgeAggregate] = {}

    @property
    def order(self) -> int:
        return len(self.nodes)

    @property
    def size(self) -> int:
        return len(self.edges)

    def total_member_count(self) -> int:
        return sum(n.member_count for n in self.nodes.values())

    def total_intra_tx(self) -> int:
        return sum(n.intra_tx_count for n in self.nodes.values())

    def total_intra_flux(self) -> int:
        return sum(n.intra_flux for n in self.nodes.values())

    def total_edge_multiplicity(self) -> int:
        return sum(e.multiplicity for e in self.edges.values())

    def total_edge_flux(self) -> int:
        return sum(e.flux for e in self.edges.values())


def _checked_colors(graph: AggregatedGraph, coloring: Coloring) -> dict[str, int]:
    colors = coloring.colors
    missing = 0
    example = None
    for node in graph.nodes:
        if node not in colors:
            missing += 1
            if example is None:
                example = node
    if missing:
        raise PartialColoringError(
            f"{missing} node(s) lack a color, e.g. {example!r}"
        )
    return colors


def _assign_cluster_ids(
    components: list[list[str]], colors: Mapping[str, int]
) -> list[int]:
    """Deterministic cluster numbering, independent of discovery order.

    The dominant component of each exchange color keeps that color as
    its id (dominant: most members, ties by smallest member). Everything
    else, user components included, is numbered after the largest color
    in use, ordered by descending member count with ties by smallest
    member.
    """
    max_color = 0
    info = []
    for idx, members in enumerate(components):
        color = colors[members[0]]
        if color < 0:
            raise ConfigError(f"negative color {color} on account {members[0]!r}")
        if color > max_color:
            max_color = color
        info.append((idx, color, len(members), min(members)))

    ids = [0] * len(components)
    leftovers = []
    by_color: dict[int, list[tuple[int, int, str]]] = {}
    for idx, color, size, anchor in info:
        if color == 0:
            leftovers.append((idx, size, anchor))
        else:
            by_color.setdefault(color, []).append((idx, size, anchor))
    for color, group in by_color.items():
        group.sort(key=lambda t: (-t[1], t[2]))
        ids[group[0][0]] = color
        leftovers.extend(group[1:])
    leftovers.sort(key=lambda t: (-t[1], t[2]))
    next_id = max_color + 1
    for idx, _size, _anchor in leftovers:
        ids[idx] = next_id
        next_id += 1
    return ids


def _build_quotient(
    graph: AggregatedGraph,
    component_of: Mapping[str, int],
    components: list[list[str]],
    colors: Mapping[str, int],
) -> tuple[ContractedGraph, ClusterAssignment]:
    ids = _assign_cluster_ids(components, colors)
    contracted = ContractedGraph()
    for idx, members in enumerate(components):
        contracted.nodes[ids[idx]] = ContractedNode(
            cluster_id=ids[idx],
            color=colors[members[0]],
            member_count=len(members),
            intra_flux=0,
            intra_tx_count=0,
        )
    nodes = contracted.nodes
    edges = contracted.edges
    for sender, recipient, agg in graph.edges():
        cu = ids[component_of[sender]]
        cv = ids[component_of[recipient]]
        if cu == cv:
            node = nodes[cu]
            node.intra_flux += agg.flux
            node.intra_tx_count += agg.multiplicity
        else:
            cross = edges.get((cu, cv))
            if cross is None:
                edges[(cu, cv)] = EdgeAggregate(agg.flux, agg.multiplicity)
            else:
                cross.flux += agg.flux
                cross.multiplicity += agg.multiplicity
    assignment: ClusterAssignment = {}
    for idx, members in enumerate(components):
        cid = ids[idx]
        for member in members:
            assignment[member] = cid
    return contracted, assignment


def contract(
    graph: AggregatedGraph, coloring: Coloring
) -> tuple[ContractedGraph, ClusterAssignment]:
    """Contract the graph under the coloring.

    Clusters are the connected components of the subgraph formed by
    monochromatic edges, ignoring direction; two same-colored nodes with
    no such path stay apart. Raises PartialColoringError when the
    coloring does not cover every node.
    """
    colors = _checked_colors(graph, coloring)

    mono_adj: dict[str, list[str]] = {}
    for sender, recipient, _agg in graph.edges():
        if sender != recipient and colors[sender] == colors[recipient]:
            lst = mono_adj.get(sender)
            if lst is None:
                mono_adj[sender] = [recipient]
            else:
                lst.append(recipient)
            lst = mono_adj.get(recipient)
            if lst is None:
                mono_adj[recipient] = [sender]
            else:
                lst.append(sender)

    component_of: dict[str, int] = {}
    components: list[list[str]] = []
    for seed in graph.nodes:
        if seed in component_of:
            continue
        idx = len(components)
        if seed not in mono_adj:
            component_of[seed] = idx
            components.append([seed])
            continue
        members = [seed]
        component_of[seed] = idx
        queue = deque((seed,))
        while queue:
            for nxt in mono_adj[queue.popleft()]:
                if nxt not in component_of:
                    component_of[nxt] = idx
                    members.append(nxt)
                    queue.append(nxt)
        components.append(members)

    return _build_quotient(graph, component_of, components, colors)


def oracle_contract(
    graph: AggregatedGraph, coloring: Coloring
) -> tuple[ContractedGraph, ClusterAssignment]:
    """Reference implementation: disjoint-set forest over monochromatic
    edges, then a full re-scan. Slower, kept maximally simple; used to
    cross-check contract()."""
    colors = _checked_colors(graph, coloring)

    parent: dict[str, str] = {node: node for node in graph.nodes}

    def find(x: str) -> str:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for sender, recipient, _agg in graph.edges():
        if colors[sender] == colors[recipient]:
            ra, rb = find(sender), find(recipient)
            if ra != rb:
                parent[rb] = ra

    roots: dict[str, int] = {}
    components: list[list[str]] = []
    component_of: dict[str, int] = {}
    for node in graph.nodes:
        root = find(node)
        idx = roots.get(root)
        if idx is None:
            idx = len(components)
            roots[root] = idx
            components.append([])
        components[idx].append(node)
        component_of[node] = idx

    return _build_quotient(graph, component_of, components, colors)


def verify_contraction(contracted: ContractedGraph) -> bool:
    """True iff the quotient is properly colored: no self-edges and no
    edge joining two clusters of the same color."""
    for (src, dst), _agg in contracted.edges.items():
        if src == dst:
            return False
        if contracted.nodes[src].color == contracted.nodes[dst].color:
            return False
    return True


_CANONICAL_HEADER = b"contracted-v1"
_SEP = "\x1f"


def canonical_form(contracted: ContractedGraph, assignment: ClusterAssignment) -> bytes:
    """Deterministic byte serialization keyed by sorted member sets.

    Cluster ids are deliberately left out so forms from different
    numbering or processing orders compare equal when the underlying
    partition, colors, statistics and edges agree. The empty graph maps
    to a fixed constant.
    """
    members_of: dict[int, list[str]] = {}
    for account, cid in assignment.items():
        members_of.setdefault(cid, []).append(account)
    keyed = []
    for cid, members in members_of.items():
        members.sort()
        keyed.append((tuple(members), cid))
    keyed.sort()
    index_of = {cid: i for i, (_members, cid) in enumerate(keyed)}

    lines = [_CANONICAL_HEADER.decode()]
    for i, (members, cid) in enumerate(keyed):
        node = contracted.nodes[cid]
        lines.append(
            f"C{_SEP}{i}{_SEP}{','.join(members)}{_SEP}{node.color}"
            f"{_SEP}{node.intra_flux}{_SEP}{node.intra_tx_count}"
        )
    edge_lines = []
    for (src, dst), agg in contracted.edges.items():
        edge_lines.append(
            (index_of[src], index_of[dst], agg.flux, agg.multiplicity)
        )
    edge_lines.sort()
    for src_i, dst_i, flux, mult in edge_lines:
        lines.append(f"E{_SEP}{src_i}{_SEP}{dst_i}{_SEP}{flux}{_SEP}{mult}")
    return "\n".join(lines).encode("utf-8")


def as_aggregated(contracted: ContractedGraph) -> tuple[AggregatedGraph, Coloring]:
    """View a quotient as a plain graph whose nodes are the cluster ids.

    Intra statistics become self-loops, so contracting the view under
    its own colors reproduces the original canonical form exactly.
    """
    g = AggregatedGraph()
    colors: dict[str, int] = {}
    for cid, node in contracted.nodes.items():
        account = str(cid)
        g.add_node(account)
        colors[account] = node.color
        if node.intra_tx_count:
            g.add_edge(account, account, node.intra_flux, node.intra_tx_count)
    for (src, dst), agg in contracted.edges.items():
        g.add_edge(str(src), str(dst), agg.flux, agg.multiplicity)
    return g, Coloring(colors)


def identity_assignment(contracted: ContractedGraph) -> ClusterAssignment:
    """Assignment for the as_aggregated() view: each cluster is itself."""
    return {str(cid): cid for cid in contracted.nodes}


# -- persistence ------------------------------------------------------

CONTRACTED_NODES_FILE = "nodes.csv"
CONTRACTED_EDGES_FILE = "edges.csv"
ASSIGNMENT_FILE = "assignment.csv"
GRAPHML_FILE = "contracted.graphml"
DOT_FILE = "contracted.dot"
META_FILE = "meta.json"

_NODES_HEADER = [
    "cluster_id",
    "color",
    "label",
    "member_count",
    "intra_flux_planck",
    "intra_tx_count",
]
_EDGES_HEADER = ["src_cluster", "dst_cluster", "flux_planck", "multiplicity"]
_ASSIGNMENT_HEADER = ["address", "cluster_id"]


def _write_graphml(
    path: str, contracted: ContractedGraph, labels: Mapping[int, str]
) -> None:
    ns = "http://graphml.graphdrawing.org/xmlns"
    ElementTree.register_namespace("", ns)
    root = ElementTree.Element(f"{{{ns}}}graphml")
    keys = [
        ("d_color", "node", "color", "long"),
        ("d_label", "node", "label", "string"),
        ("d_size", "node", "size", "long"),
        ("d_intra_flux", "node", "intra_flux_planck", "long"),
        ("d_intra_tx", "node", "intra_tx_count", "long"),
        ("d_weight", "edge", "weight", "long"),
        ("d_mult", "edge", "multiplicity", "long"),
    ]
    for key_id, domain, name, kind in keys:
        ElementTree.SubElement(
            root,
            f"{{{ns}}}key",
            {"id": key_id, "for": domain, "attr.name": name, "attr.type": kind},
        )
    graph_el = ElementTree.SubElement(
        root, f"{{{ns}}}graph", {"id": "contracted", "edgedefault": "directed"}
    )

    def data(parent, key_id, value):
        el = ElementTree.SubElement(parent, f"{{{ns}}}data", {"key": key_id})
        el.text = str(value)

    for cid in sorted(contracted.nodes):
        node = contracted.nodes[cid]
        el = ElementTree.SubElement(graph_el, f"{{{ns}}}node", {"id": str(cid)})
        data(el, "d_color", node.color)
        data(el, "d_label", labels.get(cid, ""))
        data(el, "d_size", node.member_count)
        data(el, "d_intra_flux", node.intra_flux)
        data(el, "d_intra_tx", node.intra_tx_count)
    for (src, dst) in sorted(contracted.edges):
        agg = contracted.edges[(src, dst)]
        el = ElementTree.SubElement(
            graph_el, f"{{{ns}}}edge", {"source": str(src), "target": str(dst)}
        )
        data(el, "d_weight", agg.flux)
        data(el, "d_mult", agg.multiplicity)
    tree = ElementTree.ElementTree(root)
    ElementTree.indent(tree)
    tree.write(path, encoding="utf-8", xml_declaration=True)


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _write_dot(path: str, contracted: ContractedGraph, labels: Mapping[int, str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("digraph contracted {\n")
        for cid in sorted(contracted.nodes):
            node = contracted.nodes[cid]
            label = labels.get(cid) or str(cid)
            fh.write(
                f"  {cid} [label={_dot_quote(label)} size={node.member_count} "
                f"color_index={node.color}];\n"
            )
        for (src, dst) in sorted(contracted.edges):
            agg = contracted.edges[(src, dst)]
            fh.write(
                f"  {src} -> {dst} [weight={agg.flux} multiplicity={agg.multiplicity}];\n"
            )
        fh.write("}\n")


def save_contracted(
    contracted: ContractedGraph,
    assignment: ClusterAssignment,
    directory: str,
    labels: Mapping[int, str] | None = None,
    meta: Mapping[str, object] | None = None,
) -> None:
    """Write node/edge/assignment CSVs, GraphML and DOT renderings, and a
    meta.json carrying whatever run context the caller passes (the
    pipeline stores pre-contraction graph statistics there)."""
    os.makedirs(directory, exist_ok=True)
    labels = dict(labels or {})
    with open(
        os.path.join(directory, CONTRACTED_NODES_FILE), "w", newline="", encoding="utf-8"
    ) as fh:
        writer = csv.writer(fh)
        writer.writerow(_NODES_HEADER)
        for cid in sorted(contracted.nodes):
            node = contracted.nodes[cid]
            writer.writerow(
                [cid, node.color, labels.get(cid, ""), node.member_count,
                 node.intra_flux, node.intra_tx_count]
            )
    with open(
        os.path.join(directory, CONTRACTED_EDGES_FILE), "w", newline="", encoding="utf-8"
    ) as fh:
        writer = csv.writer(fh)
        writer.writerow(_EDGES_HEADER)
        for (src, dst) in sorted(contracted.edges):
            agg = contracted.edges[(src, dst)]
            writer.writerow([src, dst, agg.flux, agg.multiplicity])
    with open(
        os.path.join(directory, ASSIGNMENT_FILE), "w", newline="", encoding="utf-8"
    ) as fh:
        writer = csv.writer(fh)
        writer.writerow(_ASSIGNMENT_HEADER)
        for address in sorted(assignment):
            writer.writerow([address, assignment[address]])
    _write_graphml(os.path.join(directory, GRAPHML_FILE), contracted, labels)
    _write_dot(os.path.join(directory, DOT_FILE), contracted, labels)
    with open(os.path.join(directory, META_FILE), "w", encoding="utf-8") as fh:
        json.dump(dict(meta or {}), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_contracted(
    directory: str,
) -> tuple[ContractedGraph, ClusterAssignment, dict, dict[int, str]]:
    """Read back a directory written by save_contracted. Returns the
    graph, the assignment, the meta dict and the cluster label map."""
    contracted = ContractedGraph()
    labels: dict[int, str] = {}
    path = os.path.join(directory, CONTRACTED_NODES_FILE)
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != _NODES_HEADER:
            raise MalformedRecordError(f"unexpected header in {path}")
        for row in reader:
            if len(row) != 6:
                raise MalformedRecordError(f"bad node row {row!r} in {path}")
            cid = int(row[0])
            contracted.nodes[cid] = ContractedNode(
                cluster_id=cid,
                color=int(row[1]),
                member_count=int(row[3]),
                intra_flux=int(row[4]),
                intra_tx_count=int(row[5]),
            )
            if row[2]:
                labels[cid] = row[2]
    path = os.path.join(directory, CONTRACTED_EDGES_FILE)
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != _EDGES_HEADER:
            raise MalformedRecordError(f"unexpected header in {path}")
        for row in reader:
            if len(row) != 4:
                raise MalformedRecordError(f"bad edge row {row!r} in {path}")
            contracted.edges[(int(row[0]), int(row[1]))] = EdgeAggregate(
                int(row[2]), int(row[3])
            )
    assignment: ClusterAssignment = {}
    path = os.path.join(directory, ASSIGNMENT_FILE)
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != _ASSIGNMENT_HEADER:
            raise MalformedRecordError(f"unexpected header in {path}")
        for row in reader:
            if len(row) != 2:
                raise MalformedRecordError(f"bad assignment row {row!r} in {path}")
            assignment[row[0]] = int(row[1])
    meta_path = os.path.join(directory, META_FILE)
    meta: dict = {}
    if os.path.exists(meta_path):
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    return contracted, assignment, meta, labels
