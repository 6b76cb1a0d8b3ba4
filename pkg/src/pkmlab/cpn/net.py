"""Timed coloured Petri nets with data-only arc inscriptions.

Arc inscriptions are plain data so nets round-trip through JSON:

* a *pattern* is a constant (str, int, bool), a :class:`Var`, or a tuple of
  patterns;
* an arc carries a multiset of :class:`ArcItem` (pattern plus an optional
  ``when`` condition restricting the item to some bindings).

A transition's variables are bound either by matching input patterns
against tokens or by its ``choices`` (finite free domains).  ``guard`` maps
variables to their allowed values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

Value = Any  # hashable token colour: str | int | bool | tuple thereof


@dataclass(frozen=True)
class Var:
    name: str


Pattern = Any


@dataclass(frozen=True)
class ArcItem:
    pattern: Pattern
    when: Tuple[Tuple[str, Tuple[Value, ...]], ...] = ()

    def applies(self, binding: Mapping[str, Value]) -> bool:
        return all(binding[v] in allowed for v, allowed in self.when)

    def condition_vars(self) -> List[str]:
        return [v for v, _ in self.when]


@dataclass(frozen=True)
class Place:
    id: str
    colorset: str = "ANY"
    initial: Tuple[Tuple[Value, float], ...] = ()


@dataclass(frozen=True)
class Transition:
    id: str
    delay: float = 5
    choices: Tuple[Tuple[str, Tuple[Value, ...]], ...] = ()
    guard: Tuple[Tuple[str, Tuple[Value, ...]], ...] = ()

    def guard_holds(self, binding: Mapping[str, Value]) -> bool:
        return all(binding[v] in allowed for v, allowed in self.guard)


@dataclass(frozen=True)
class Arc:
    place: str
    transition: str
    direction: str  # "in" (place -> transition) | "out"
    items: Tuple[ArcItem, ...]


class NetError(ValueError):
    pass


def pattern_vars(p: Pattern) -> List[str]:
    if isinstance(p, Var):
        return [p.name]
    if isinstance(p, tuple):
        return [v for x in p for v in pattern_vars(x)]
    return []


def instantiate(p: Pattern, binding: Mapping[str, Value]) -> Value:
    if isinstance(p, Var):
        return binding[p.name]
    if isinstance(p, tuple):
        return tuple(instantiate(x, binding) for x in p)
    return p


def match(p: Pattern, value: Value, binding: Dict[str, Value]) -> Optional[Dict[str, Value]]:
    """Extend ``binding`` so ``p`` instantiates to ``value``, or return None."""
    if isinstance(p, Var):
        if p.name in binding:
            return binding if binding[p.name] == value else None
        out = dict(binding)
        out[p.name] = value
        return out
    if isinstance(p, tuple):
        if not isinstance(value, tuple) or len(value) != len(p):
            return None
        for sub, val in zip(p, value):
            binding = match(sub, val, binding)
            if binding is None:
                return None
        return binding
    return binding if p == value and type(p) is type(value) else None


@dataclass(frozen=True)
class Net:
    name: str
    places: Tuple[Place, ...]
    transitions: Tuple[Transition, ...]
    arcs: Tuple[Arc, ...]
    colorsets: Tuple[Tuple[str, Optional[Tuple[Value, ...]]], ...] = (("ANY", None),)
    _index: Dict[str, Any] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        place_ids = [p.id for p in self.places]
        trans_ids = [t.id for t in self.transitions]
        if len(set(place_ids)) != len(place_ids) or len(set(trans_ids)) != len(trans_ids):
            raise NetError("duplicate place or transition id")
        cs = dict(self.colorsets)
        for p in self.places:
            if p.colorset not in cs:
                raise NetError(f"place {p.id} uses unknown colour set {p.colorset}")
            for value, _ in p.initial:
                self._check_colour(p.id, p.colorset, value, cs)
        inputs: Dict[str, List[Arc]] = {t: [] for t in trans_ids}
        outputs: Dict[str, List[Arc]] = {t: [] for t in trans_ids}
        for a in self.arcs:
            if a.place not in place_ids:
                raise NetError(f"arc references unknown place {a.place}")
            if a.transition not in trans_ids:
                raise NetError(f"arc references unknown transition {a.transition}")
            if a.direction not in ("in", "out"):
                raise NetError(f"bad arc direction {a.direction!r}")
            (inputs if a.direction == "in" else outputs)[a.transition].append(a)
        for t in self.transitions:
            if not inputs[t.id]:
                raise NetError(f"transition {t.id} has no input arc")
        object.__setattr__(self, "_index", {
            "inputs": inputs, "outputs": outputs,
            "colours": {p.id: p.colorset for p in self.places},
            "colorsets": cs,
            "transitions": {t.id: t for t in self.transitions},
        })

    @staticmethod
    def _check_colour(place, colorset, value, cs):
        allowed = cs[colorset]
        if allowed is not None and value not in allowed:
            raise NetError(f"token {value!r} is not in colour set {colorset} of place {place}")

    def check_token(self, place: str, value: Value) -> None:
        self._check_colour(place, self._index["colours"][place], value, self._index["colorsets"])

    def inputs(self, transition: str) -> List[Arc]:
        return self._index["inputs"][transition]

    def outputs(self, transition: str) -> List[Arc]:
        return self._index["outputs"][transition]

    def transition(self, tid: str) -> Transition:
        return self._index["transitions"][tid]

    def adjacent_places(self, transition: str) -> List[str]:
        seen = []
        for a in self.inputs(transition) + self.outputs(transition):
            if a.place not in seen:
                seen.append(a.place)
        return seen

    # -- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "colorsets": {k: None if v is None else [_jv(x) for x in v] for k, v in self.colorsets},
            "places": [{"id": p.id, "colorset": p.colorset,
                        "initial": [[_jv(v), t] for v, t in p.initial]} for p in self.places],
            "transitions": [{"id": t.id, "delay": t.delay,
                             "choices": {k: [_jv(x) for x in v] for k, v in t.choices},
                             "guard": {k: [_jv(x) for x in v] for k, v in t.guard}}
                            for t in self.transitions],
            "arcs": [{"place": a.place, "transition": a.transition, "direction": a.direction,
                      "items": [{"pattern": _jp(i.pattern),
                                 "when": {k: [_jv(x) for x in v] for k, v in i.when}}
                                for i in a.items]}
                     for a in self.arcs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Net":
        def dom(m):
            return tuple((k, tuple(_pv(x) for x in v)) for k, v in m.items())
        return cls(
            name=d["name"],
            colorsets=tuple((k, None if v is None else tuple(_pv(x) for x in v))
                            for k, v in d["colorsets"].items()),
            places=tuple(Place(p["id"], p["colorset"], tuple((_pv(v), t) for v, t in p["initial"]))
                         for p in d["places"]),
            transitions=tuple(Transition(t["id"], t["delay"], dom(t["choices"]), dom(t["guard"]))
                              for t in d["transitions"]),
            arcs=tuple(Arc(a["place"], a["transition"], a["direction"],
                           tuple(ArcItem(_pp(i["pattern"]), dom(i["when"])) for i in a["items"]))
                       for a in d["arcs"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "Net":
        return cls.from_dict(json.loads(text))


def _jv(v):
    return [_jv(x) for x in v] if isinstance(v, tuple) else v


def _pv(v):
    return tuple(_pv(x) for x in v) if isinstance(v, list) else v


def _jp(p):
    if isinstance(p, Var):
        return {"var": p.name}
    if isinstance(p, tuple):
        return [_jp(x) for x in p]
    return p


def _pp(p):
    if isinstance(p, dict):
        return Var(p["var"])
    if isinstance(p, list):
        return tuple(_pp(x) for x in p)
    return p


# --------------------------------------------------------------------------
# construction helper

def _domain(spec: Mapping[str, Iterable[Value]]) -> Tuple[Tuple[str, Tuple[Value, ...]], ...]:
    return tuple((k, tuple(v)) for k, v in spec.items())


class NetBuilder:
    """Incremental construction; ``build()`` validates and freezes."""

    def __init__(self, name: str):
        self.name = name
        self._colorsets: Dict[str, Optional[Tuple[Value, ...]]] = {"ANY": None}
        self._places: List[Place] = []
        self._transitions: List[Transition] = []
        self._arcs: List[Arc] = []

    def colorset(self, name: str, values: Optional[Iterable[Value]]) -> "NetBuilder":
        self._colorsets[name] = None if values is None else tuple(values)
        return self

    def place(self, pid: str, colorset: str = "ANY", initial: Iterable[Value] = ()) -> str:
        self._places.append(Place(pid, colorset, tuple((v, 0) for v in initial)))
        return pid

    def transition(self, tid: str, delay: float = 5, choices=None, guard=None) -> str:
        self._transitions.append(
            Transition(tid, delay, _domain(choices or {}), _domain(guard or {})))
        return tid

    def _arc(self, place, transition, direction, items):
        norm = []
        for it in items:
            if isinstance(it, ArcItem):
                norm.append(it)
            else:
                norm.append(ArcItem(it))
        self._arcs.append(Arc(place, transition, direction, tuple(norm)))

    def consume(self, place: str, transition: str, *items) -> None:
        self._arc(place, transition, "in", items)

    def produce(self, transition: str, place: str, *items) -> None:
        self._arc(place, transition, "out", items)

    def read(self, place: str, transition: str, item) -> None:
        """Test arc: consume and immediately reproduce the same token."""
        self.consume(place, transition, item)
        self.produce(transition, place, item)

    def build(self) -> Net:
        return Net(self.name, tuple(self._places), tuple(self._transitions), tuple(self._arcs),
                   tuple(self._colorsets.items()))


def when(pattern: Pattern, **conditions) -> ArcItem:
    """Arc item present only for bindings where each ``var`` takes one of the given values."""
    return ArcItem(pattern, tuple((k, tuple(v) if isinstance(v, (list, tuple, set)) else (v,))
                                  for k, v in conditions.items()))
