"""Enabling, firing, simulation and state-space exploration."""
from __future__ import annotations

import itertools
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .net import Net, NetError, Value, instantiate, match, pattern_vars

Token = Tuple[Value, float]
Binding = Tuple[Tuple[str, Value], ...]


def _vkey(v) -> tuple:
    return (type(v).__name__, repr(v))


def _tkey(tok: Token) -> tuple:
    return (_vkey(tok[0]), tok[1])


class Marking:
    """Immutable, canonically ordered timed multiset per place."""

    __slots__ = ("_items", "_hash")

    def __init__(self, tokens: Mapping[str, Iterable[Token]]):
        items = []
        for place in sorted(tokens):
            toks = tuple(sorted(tokens[place], key=_tkey))
            if toks:
                items.append((place, toks))
        self._items: Tuple[Tuple[str, Tuple[Token, ...]], ...] = tuple(items)
        self._hash = hash(self._items)

    @classmethod
    def initial(cls, net: Net) -> "Marking":
        return cls({p.id: p.initial for p in net.places})

    def tokens(self, place: str) -> Tuple[Token, ...]:
        for p, toks in self._items:
            if p == place:
                return toks
        return ()

    def size(self, place: str) -> int:
        return len(self.tokens(place))

    def as_dict(self) -> Dict[str, Tuple[Token, ...]]:
        return dict(self._items)

    def timestamps(self) -> List[float]:
        return [t for _, toks in self._items for _, t in toks]

    def __eq__(self, other):
        return isinstance(other, Marking) and self._items == other._items

    def __hash__(self):
        return self._hash

    def __len__(self):
        return sum(len(t) for _, t in self._items)

    def __repr__(self):
        body = ", ".join(f"{p}: {list(t)}" for p, t in self._items)
        return f"Marking({{{body}}})"


@dataclass(frozen=True)
class State:
    marking: Marking
    time: float


@dataclass(frozen=True)
class Firing:
    step: int
    time: float
    transition: str
    binding: Binding

    def label(self) -> str:
        if not self.binding:
            return self.transition
        inner = ", ".join(f"{k}={v!r}" for k, v in self.binding)
        return f"{self.transition}<{inner}>"


# --------------------------------------------------------------------------
# enabling

def _ready(marking: Marking, now: float) -> Dict[str, Counter]:
    out: Dict[str, Counter] = {}
    for place, toks in marking.as_dict().items():
        c = Counter(v for v, t in toks if t <= now)
        if c:
            out[place] = c
    return out


def _bindings_for(net: Net, tid: str, ready: Dict[str, Counter]) -> List[Binding]:
    t = net.transition(tid)
    items = [(a.place, it) for a in net.inputs(tid) for it in a.items]
    plain = [x for x in items if not x[1].when]
    conditional = [x for x in items if x[1].when]
    ordered = plain + conditional
    names = [n for n, _ in t.choices]
    found: List[Binding] = []
    seen = set()

    def walk(i: int, binding: Dict[str, Value], used: Counter):
        if i == len(ordered):
            for v, _ in t.guard:
                if v not in binding:
                    raise NetError(f"guard of {tid} references unbound variable {v}")
            if t.guard_holds(binding):
                key = tuple(sorted(binding.items(), key=lambda kv: kv[0]))
                if key not in seen:
                    seen.add(key)
                    found.append(key)
            return
        place, item = ordered[i]
        for v in item.condition_vars():
            if v not in binding:
                raise NetError(f"condition in {tid} references unbound variable {v}")
        if not item.applies(binding):
            walk(i + 1, binding, used)
            return
        avail = ready.get(place, Counter())
        if not pattern_vars(item.pattern) or all(n in binding for n in pattern_vars(item.pattern)):
            value = instantiate(item.pattern, binding)
            candidates = [value] if value in avail else []
        else:
            candidates = sorted(avail, key=_vkey)
        for value in candidates:
            if avail[value] - used[(place, value)] <= 0:
                continue
            extended = match(item.pattern, value, binding)
            if extended is None:
                continue
            used[(place, value)] += 1
            walk(i + 1, extended, used)
            used[(place, value)] -= 1

    for combo in itertools.product(*(dom for _, dom in t.choices)):
        walk(0, dict(zip(names, combo)), Counter())
    return found


def enabled(net: Net, marking: Marking, now: float) -> List[Tuple[str, Binding]]:
    """Every (transition, binding) fireable at ``now``, in declaration order."""
    ready = _ready(marking, now)
    if not ready:
        return []
    out = []
    for t in net.transitions:
        for b in _bindings_for(net, t.id, ready):
            out.append((t.id, b))
    return out


def next_time(net: Net, marking: Marking, now: float) -> float:
    """Earliest time >= now at which something is enabled.

    A dead marking settles the clock at its latest token timestamp so the
    last produced token is counted as delivered.
    """
    stamps = sorted({t for t in marking.timestamps() if t > now})
    for candidate in [now] + stamps:
        if enabled(net, marking, candidate):
            return float(candidate)
    return float(max([now] + stamps))


def initial_state(net: Net) -> State:
    m = Marking.initial(net)
    return State(m, next_time(net, m, 0))


class FiringError(RuntimeError):
    """Attempt to fire a binding that is not enabled."""


def fire(net: Net, marking: Marking, transition: str, binding: Binding,
         now: float) -> Tuple[Marking, float]:
    if (transition, tuple(binding)) not in enabled(net, marking, now):
        raise FiringError(f"{transition} with {dict(binding)} is not enabled at {now}")
    env = dict(binding)
    t = net.transition(transition)
    toks = {p: list(v) for p, v in marking.as_dict().items()}
    for arc in net.inputs(transition):
        for item in arc.items:
            if not item.applies(env):
                continue
            value = instantiate(item.pattern, env)
            # consume the oldest ready token of that colour
            pool = toks[arc.place]
            idx = min((i for i, (v, ts) in enumerate(pool) if v == value and ts <= now),
                      key=lambda i: pool[i][1])
            pool.pop(idx)
    stamp = float(now + t.delay)
    for arc in net.outputs(transition):
        for item in arc.items:
            if not item.applies(env):
                continue
            value = instantiate(item.pattern, env)
            net.check_token(arc.place, value)
            toks.setdefault(arc.place, []).append((value, stamp))
    m2 = Marking(toks)
    return m2, next_time(net, m2, now)


def step(net: Net, state: State, transition: str, binding: Binding) -> State:
    m, t = fire(net, state.marking, transition, binding, state.time)
    return State(m, t)


# --------------------------------------------------------------------------
# simulation

@dataclass
class MonitorLog:
    """Marking-size samples of one place: (step, model time, value)."""

    name: str
    samples: List[Tuple[int, float, float]] = field(default_factory=list)
    total_time: float = 0.0

    def to_text(self) -> str:
        lines = [f"# {self.name} T={_num(self.total_time)}"]
        lines += [f"{s};{_num(t)};{_num(v)}" for s, t, v in self.samples]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MonitorLog":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise ValueError("monitor log must start with a '# <name> T=<time>' header")
        head = lines[0][1:].split()
        if not head:
            raise ValueError("monitor log header lacks a name")
        name, total = head[0], None
        for tok in head[1:]:
            if tok.startswith("T="):
                total = float(tok[2:])
        samples = []
        for ln in lines[1:]:
            s, t, v = ln.split(";")
            samples.append((int(s), float(t), float(v)))
        if total is None:
            total = samples[-1][1] if samples else 0.0
        for (_, a, _), (_, b, _) in zip(samples, samples[1:]):
            if b < a:
                raise ValueError("monitor sample times must be non-decreasing")
        return cls(name, samples, total)


def _num(x: float) -> str:
    return str(float(x)) if isinstance(x, float) and not float(x).is_integer() else f"{float(x):.1f}"


def monitor_name(net: Net, place: str) -> str:
    return f"Marking_size_{net.name}'{place}_1"


@dataclass
class SimulationResult:
    firings: List[Firing]
    steps: int
    model_time: float
    monitors: Dict[str, MonitorLog]
    final: State

    def summary(self) -> str:
        return (f"Simulation steps executed: {self.steps}\n"
                f"Model time: {float(self.model_time):.1f}\n")


def simulate(net: Net, max_steps: int = 1000,
             rng: Optional[random.Random | int] = None) -> SimulationResult:
    """Fire uniformly chosen enabled bindings until dead or ``max_steps``."""
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    if not isinstance(rng, random.Random):
        rng = random.Random(0 if rng is None else rng)
    state = initial_state(net)
    monitors = {p.id: MonitorLog(monitor_name(net, p.id), [(0, state.time, state.marking.size(p.id))])
                for p in net.places}
    firings: List[Firing] = []
    while len(firings) < max_steps:
        options = enabled(net, state.marking, state.time)
        if not options:
            break
        tid, binding = options[rng.randrange(len(options))]
        at = state.time
        state = step(net, state, tid, binding)
        firings.append(Firing(len(firings) + 1, at, tid, binding))
        for place in net.adjacent_places(tid):
            monitors[place].samples.append((len(firings), at, state.marking.size(place)))
    for log in monitors.values():
        log.total_time = state.time
    return SimulationResult(firings, len(firings), state.time, monitors, state)


# --------------------------------------------------------------------------
# state space

@dataclass
class StateSpaceGraph:
    nodes: List[State]                      # index 0 is node 1
    arcs: List[Tuple[int, Tuple[str, Binding], int]]
    status: str                             # "Full" | "Partial"

    @property
    def node_ids(self) -> range:
        return range(1, len(self.nodes) + 1)

    def node(self, nid: int) -> State:
        return self.nodes[nid - 1]

    def successors(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {n: [] for n in self.node_ids}
        for a, _, b in self.arcs:
            out[a].append(b)
        return out


def explore(net: Net, limit: int = 100_000) -> StateSpaceGraph:
    """Breadth-first reachability graph over (marking, clock) states."""
    start = initial_state(net)
    index = {start: 1}
    nodes = [start]
    arcs = []
    queue = deque([start])
    status = "Full"
    while queue:
        s = queue.popleft()
        src = index[s]
        for tid, b in enabled(net, s.marking, s.time):
            nxt = step(net, s, tid, b)
            if nxt not in index:
                if len(nodes) >= limit:
                    status = "Partial"
                    continue
                index[nxt] = len(nodes) + 1
                nodes.append(nxt)
                queue.append(nxt)
            arcs.append((src, (tid, b), index[nxt]))
    return StateSpaceGraph(nodes, arcs, status)
