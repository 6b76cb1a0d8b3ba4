"""SCC condensation, liveness and the state-space report."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .engine import StateSpaceGraph, enabled
from .net import Net


@dataclass
class SccGraph:
    components: List[Tuple[int, ...]]      # sorted node ids per component
    component_of: Dict[int, int]           # node id -> component index
    arcs: List[Tuple[int, int]]            # between distinct components, with multiplicity

    @property
    def node_count(self) -> int:
        return len(self.components)

    @property
    def arc_count(self) -> int:
        return len(self.arcs)

    def terminal(self) -> List[int]:
        has_out = {a for a, _ in self.arcs}
        return [i for i in range(len(self.components)) if i not in has_out]


def tarjan(nodes, succ: Dict[int, List[int]]) -> List[List[int]]:
    """Iterative Tarjan; components come out in reverse topological order."""
    index: Dict[int, int] = {}
    low: Dict[int, int] = {}
    on_stack = set()
    stack: List[int] = []
    out: List[List[int]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


def scc(graph: StateSpaceGraph) -> SccGraph:
    comps = tarjan(list(graph.node_ids), graph.successors())
    comps.sort(key=lambda c: c[0])
    comp_of = {n: i for i, c in enumerate(comps) for n in c}
    arcs = [(comp_of[a], comp_of[b]) for a, _, b in graph.arcs if comp_of[a] != comp_of[b]]
    return SccGraph([tuple(c) for c in comps], comp_of, arcs)


class PartialGraphError(RuntimeError):
    """Liveness is undecidable on a truncated state space."""


@dataclass
class LivenessReport:
    dead_markings: List[int]
    dead_transitions: List[str]
    live_transitions: List[str]


def liveness(net: Net, graph: StateSpaceGraph, sccg: SccGraph = None) -> LivenessReport:
    if graph.status != "Full":
        raise PartialGraphError("state space is Partial; liveness cannot be decided")
    sccg = sccg or scc(graph)
    sources = {a for a, _, _ in graph.arcs}
    dead_markings = [n for n in graph.node_ids if n not in sources]
    fired = {label[0] for _, label, _ in graph.arcs}
    dead_transitions = [t.id for t in net.transitions if t.id not in fired]
    # live iff every terminal component contains an arc labelled by it
    inside: Dict[int, set] = {}
    for a, label, b in graph.arcs:
        ca = sccg.component_of[a]
        if ca == sccg.component_of[b]:
            inside.setdefault(ca, set()).add(label[0])
    terminal = sccg.terminal()
    live = [t.id for t in net.transitions
            if all(t.id in inside.get(c, ()) for c in terminal)]
    return LivenessReport(dead_markings, dead_transitions, live)


def check_dead_markings(net: Net, graph: StateSpaceGraph, report: LivenessReport) -> bool:
    """Cross-check: sinks are exactly the nodes where nothing is enabled."""
    direct = [n for n in graph.node_ids
              if not enabled(net, graph.node(n).marking, graph.node(n).time)]
    return direct == report.dead_markings


def _list(xs) -> str:
    return "[" + ", ".join(str(x) for x in xs) + "]"


def statespace_report(graph: StateSpaceGraph, sccg: SccGraph, live: LivenessReport | None,
                      elapsed_secs: float = 0, scc_secs: float = 0) -> str:
    lines = [
        " Statistics",
        "-----",
        " State Space",
        f"Nodes: {len(graph.nodes)}",
        f"Arcs: {len(graph.arcs)}",
        f"Secs: {int(elapsed_secs)}",
        f"Status: {graph.status}",
        "",
        " Scc Graph",
        f"Nodes: {sccg.node_count}",
        f"Arcs: {sccg.arc_count}",
        f"Secs: {int(scc_secs)}",
        "",
    ]
    if live is not None:
        lines += [
            f"Dead Markings: {_list(live.dead_markings)}",
            f"Dead Transition Instances: {_list(live.dead_transitions)}",
            f"Live Transition Instances: {_list(live.live_transitions)}",
        ]
    return "\n".join(lines) + "\n"
