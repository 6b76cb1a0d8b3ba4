"""Symbolic network attacker and the attack-resistance matrix.

The attacker controls the channel between the honest parties.  Its power is
described by a term algebra: it can pair and split, hash, encrypt under any
public key it knows and decrypt only under a private key it knows, and raise
a public DH value to an exponent it owns.  It never inverts a hash and never
takes a discrete logarithm.

Attacks run the real protocol state machines (:func:`protocols.drive`) with
an interceptor.  Every forged field is produced only if the attacker's
knowledge derives it; otherwise the attacker falls back to the best value it
does have (its own signature, a relayed tag), and the honest checks decide.
"""
from __future__ import annotations

import functools
import json
import random
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from . import crypto, protocols
from .crypto import (Certificate, PkKeyPair, bind_tag, confirm_tag, f_transform,
                     gen_dh_keypair, load_group, modexp, pk_decrypt, pk_encrypt, sign)
from .messages import (AnonDhOffer, AnonDhReply, DhM2, DhM3, EapClientCert, EapServerCert,
                       Pkmv1AuthInfo, Pkmv1AuthReply, Pkmv1AuthRequest,
                       Pkmv2AuthInfo, Pkmv2AuthReply, Pkmv2AuthRequest, ProtocolMessage,
                       SaDescriptor, Transcript)
from .protocols import (AK_BITS, AK_LIFETIME, PREMASTER_BITS, PREPAK_BITS, PROTOCOLS, Envelope,
                        RunResult, World)

ATTACKS = ("mitm", "replay", "interception")
TABLE_PROTOCOLS = ("pkmv2", "eap", "dh-proposed")
BASELINES = ("pkmv1", "dh-bare")
ROW_LABELS = {"pkmv1": "pkmv1 (extension)", "dh-bare": "dh-bare (baseline)"}

RESISTANT = "resistant"
VULNERABLE = "vulnerable"
WEAK = "conditionally-weak (pre-auth messages)"


class UsageError(ValueError):
    """Unknown protocol or attack name."""


# --------------------------------------------------------------------------
# terms

@dataclass(frozen=True)
class Atom:
    value: object


@dataclass(frozen=True)
class Pair:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Hash:
    body: "Term"


@dataclass(frozen=True)
class PkEnc:
    key_id: str
    body: "Term"


@dataclass(frozen=True)
class DhPub:
    exponent: str


@dataclass(frozen=True)
class DhShared:
    exponent: str
    peer: "Term"


Term = object  # Atom | Pair | Hash | PkEnc | DhPub | DhShared

F = Atom("f")  # public direction map applied to nonces


def pair(*terms: Term) -> Term:
    """Right-nested tuple of terms."""
    if len(terms) == 1:
        return terms[0]
    return Pair(terms[0], pair(*terms[1:]))


def pub(name: str) -> Atom:
    return Atom(("pub", name))


def priv(name: str) -> Atom:
    return Atom(("priv", name))


def exp(label: str) -> Atom:
    return Atom(("exp", label))


def dh_shared(a: str, b: str) -> DhShared:
    """Shared value of exponents ``a`` and ``b``, normalised so g^ab == g^ba."""
    lo, hi = sorted((a, b))
    return DhShared(lo, DhPub(hi))


def _normal(t: Term) -> Term:
    if isinstance(t, DhShared) and isinstance(t.peer, DhPub):
        return dh_shared(t.exponent, t.peer.exponent)
    return t


# --------------------------------------------------------------------------
# knowledge

@dataclass(frozen=True)
class KnowledgeBase:
    """Terms held by the attacker.

    ``closure()`` saturates the finite *analysis* part (projection and
    decryption).  Synthesis (pairing, hashing, encryption, DH exponentiation)
    produces infinitely many terms, so membership in the closure is decided
    on demand by :meth:`knows`.
    """

    terms: FrozenSet[Term] = frozenset()

    def add(self, *terms: Term) -> "KnowledgeBase":
        return KnowledgeBase(self.terms | {_normal(t) for t in terms})

    def closure(self) -> "KnowledgeBase":
        known = set(self.terms)
        changed = True
        while changed:
            changed = False
            for t in list(known):
                new = []
                if isinstance(t, Pair):
                    new = [t.left, t.right]
                elif isinstance(t, PkEnc) and priv(t.key_id) in known:
                    new = [t.body]
                for n in new:
                    n = _normal(n)
                    if n not in known:
                        known.add(n)
                        changed = True
        return KnowledgeBase(frozenset(known))

    def knows(self, t: Term) -> bool:
        return _derives(self.closure().terms, _normal(t))

    def __contains__(self, t: Term) -> bool:
        return self.knows(t)

    def __le__(self, other: "KnowledgeBase") -> bool:
        return all(other.knows(t) for t in self.terms)


def _derives(analysed: FrozenSet[Term], t: Term) -> bool:
    if t in analysed:
        return True
    if isinstance(t, Pair):
        return _derives(analysed, t.left) and _derives(analysed, t.right)
    if isinstance(t, Hash):
        return _derives(analysed, t.body)
    if isinstance(t, PkEnc):
        return pub(t.key_id) in analysed and _derives(analysed, t.body)
    if isinstance(t, DhPub):
        return exp(t.exponent) in analysed
    if isinstance(t, DhShared):
        peer = t.peer
        if exp(t.exponent) in analysed and _derives(analysed, peer):
            return True
        if isinstance(peer, DhPub):
            return exp(peer.exponent) in analysed and _derives(analysed, DhPub(t.exponent))
    return False


def knowledge_closure(kb: KnowledgeBase) -> KnowledgeBase:
    return kb.closure()


# --------------------------------------------------------------------------
# concrete message -> term

_ENCRYPTED = {"enc_ak": ("ak", AK_BITS), "enc_prepak": ("prepak", PREPAK_BITS),
              "enc_nonce": ("nonce", 64), "enc_premaster": ("tls", PREMASTER_BITS)}
_SIGNATURES = {"ss_signature", "bs_signature", "client_verify"}
_NONCES = {"n_s", "n_b"}


@dataclass
class TermContext:
    """God-view bookkeeping used only to name the values seen on the wire."""

    keyring: Dict[str, PkKeyPair]
    dh_owner: Dict[int, str] = field(default_factory=dict)
    nonces: set = field(default_factory=set)
    prepaks: set = field(default_factory=set)

    def y_term(self, y: int) -> Term:
        label = self.dh_owner.get(y)
        return DhPub(label) if label else Atom(("int", y))

    def ciphertext(self, fname: str, c: int) -> Term:
        label, bits = _ENCRYPTED[fname]
        for name, keys in self.keyring.items():
            if c < keys.n:
                p = pk_decrypt(keys, c)
                if p < (1 << bits):
                    return PkEnc(name, Atom((label, p)))
        return Atom(("opaque", c))


def cert_term(c: Certificate) -> Term:
    return Pair(Atom(("cert", c.subject_id, c.issuer_id, c.signature)), pub(c.subject_id))


def field_term(fname: str, value, msg: ProtocolMessage, ctx: TermContext) -> Term:
    if isinstance(value, Certificate):
        return cert_term(value)
    if fname in _ENCRYPTED:
        return ctx.ciphertext(fname, value)
    if fname in _SIGNATURES:
        return Atom(("sig", value))
    if fname in _NONCES:
        return Atom(("nonce", value))
    if fname in ("y", "y_bs", "y_ms"):
        return ctx.y_term(value)
    if fname == "tag_b":
        for n in ctx.nonces:
            if bind_tag(msg.y_bs, f_transform(n)) == value:
                return Hash(Pair(ctx.y_term(msg.y_bs), Pair(F, Atom(("nonce", n)))))
    if fname == "tag_m":
        for n in ctx.nonces:
            if bind_tag(msg.y_ms, n) == value:
                return Hash(Pair(ctx.y_term(msg.y_ms), Atom(("nonce", n))))
    if fname == "confirm":
        for n in ctx.nonces:
            if confirm_tag(n) == value:
                return Hash(Atom(("nonce", n)))
    if fname == "checksum":
        for k in ctx.prepaks:
            if protocols.pkmv2_checksum(k, msg.n_b, msg.ss_mac) == value:
                return Hash(pair(Atom(("prepak", k)), Atom(("nonce", msg.n_b)),
                                 Atom(("ss_mac", msg.ss_mac))))
    if isinstance(value, bytes):
        return Atom(("bytes", value))
    return Atom((fname, value))


def message_term(msg: ProtocolMessage, ctx: TermContext) -> Term:
    parts = [field_term(k, v, msg, ctx) for k, v in msg.field_items()]
    return pair(Atom(("variant", msg.variant)), *parts) if parts else Atom(("variant", msg.variant))


def session_key_term(protocol: str, role: str, result_or_session, ctx: TermContext) -> Optional[Term]:
    s = result_or_session.sessions[role] if isinstance(result_or_session, RunResult) else result_or_session
    key = s.derived_key
    if key is None:
        return None
    if protocol == "pkmv1":
        return Atom(("ak", key))
    if protocol == "pkmv2":
        return Atom(("prepak", key))
    if protocol == "eap":
        return Atom(("tls", key))
    own = ctx.dh_owner[s.secrets["dh"].y_public]
    peer = s.memory.get("peer_public")
    if peer is None:  # anonymous baseline keeps no memory; recover from the key
        for y, label in ctx.dh_owner.items():
            if label != own and modexp(y, s.secrets["dh"].x_private, s.world.group.q) == key:
                return dh_shared(own, label)
        return Atom(("int", key))
    return dh_shared(own, ctx.dh_owner.get(peer, f"y:{peer}"))


# --------------------------------------------------------------------------
# scenario setup

@functools.lru_cache(maxsize=4)
def attack_world(seed: int = 0) -> World:
    """Deployment used by the harness: a 512-bit DH group so public values never collide."""
    return protocols.make_world(seed, group=load_group("realistic"))


def _keyring(world: World) -> Dict[str, PkKeyPair]:
    _, mallory = protocols.make_rogue(0)
    ring = {c.principal.name: c.keys for c in (world.ss, world.bs, world.ap, world.auth_server)}
    ring["mallory"] = mallory.keys
    return ring


def _label_sessions(ctx: TermContext, sessions, tag: str) -> None:
    for s in sessions.values():
        dh = s.secrets.get("dh")
        if dh is not None:
            ctx.dh_owner[dh.y_public] = f"{s.role.lower()}-{tag}"
        if "nonce" in s.secrets:
            ctx.nonces.add(s.secrets["nonce"])
        if "prepak" in s.secrets:
            ctx.prepaks.add(s.secrets["prepak"])


def initial_knowledge(world: World) -> KnowledgeBase:
    _, mallory = protocols.make_rogue(0)
    certs = [world.ss.cert, world.bs.cert, world.ap.cert, world.auth_server.cert,
             world.manufacturer_cert, mallory.cert]
    names = [c.subject_id for c in certs] + [world.ca.name, "rogue-ca"]
    return KnowledgeBase().add(F, priv("mallory"), *(pub(n) for n in names),
                               *(cert_term(c) for c in certs))


# --------------------------------------------------------------------------
# outcomes

@dataclass(frozen=True)
class AttackOutcome:
    attack: str
    protocol: str
    broken: bool
    evidence: str
    rating: str
    seed: int = 0
    preauth_accepted: bool = False
    checks: Tuple[Tuple[str, bool], ...] = ()
    victims: Tuple[Tuple[str, str], ...] = ()

    def as_dict(self) -> dict:
        return {"broken": self.broken, "rating": self.rating, "evidence": self.evidence,
                "preauth_accepted": self.preauth_accepted,
                "victims": dict(self.victims), "checks": [list(c) for c in self.checks]}


def _rate(broken: bool, preauth: bool) -> str:
    if broken:
        return VULNERABLE
    return WEAK if preauth else RESISTANT


def _victims(result: RunResult) -> Tuple[Tuple[str, str], ...]:
    return tuple((r, str(v)) for r, v in result.verdicts.items())


def _rng(seed: int, purpose: str) -> random.Random:
    return random.Random(f"{purpose}/{seed}")


# --------------------------------------------------------------------------
# interception: passive eavesdropping on an honest run

def _interception(protocol: str, seed: int) -> AttackOutcome:
    world = attack_world()
    sessions = protocols.new_sessions(protocol, world, _rng(seed, "honest"))
    ctx = TermContext(_keyring(world))
    _label_sessions(ctx, sessions, "honest")
    result = protocols.drive(protocol, sessions)
    kb = initial_knowledge(world).add(*(message_term(e.message, ctx) for e in result.transcript))
    roles = protocols.protocol_spec(protocol).key_roles
    leaked = [r for r in roles
              if (t := session_key_term(protocol, r, result, ctx)) is not None and kb.knows(t)]
    broken = bool(leaked)
    if broken:
        evidence = f"session key of {', '.join(leaked)} derivable from {len(result.transcript)} observed messages"
    else:
        evidence = (f"session key absent from closure of {len(result.transcript)} observed "
                    f"messages ({len(kb.closure().terms)} analysed terms)")
    checks = (("honest run completed", result.all_accepted and result.keys_agree),)
    return AttackOutcome("interception", protocol, broken, evidence, _rate(broken, False),
                         seed, False, checks, _victims(result))


# --------------------------------------------------------------------------
# replay: record an honest run, re-inject the server reply into a fresh one

_SERVER_REPLY = {"pkmv1": "Pkmv1AuthReply", "pkmv2": "Pkmv2AuthReply", "eap": "EapServerCert",
                 "dh-proposed": "DhM2", "dh-bare": "AnonDhReply"}
_PREAUTH = {"pkmv1": "Pkmv1AuthInfo", "pkmv2": "Pkmv2AuthInfo"}


def _replay(protocol: str, seed: int) -> AttackOutcome:
    world = attack_world()
    recorded = protocols.drive(protocol, protocols.new_sessions(protocol, world, _rng(seed, "honest")))
    target = _SERVER_REPLY[protocol]
    old = next(e for e in recorded.transcript if e.message.variant == target)
    victim_role = old.receiver
    stale_key = recorded.sessions[victim_role].derived_key

    def swap(env: Envelope) -> List[Envelope]:
        if env.message.variant == target:
            return [replace(env, message=old.message)]
        return [env]

    fresh = protocols.drive(protocol, protocols.new_sessions(protocol, world, _rng(seed, "fresh")), swap)
    victim = fresh.sessions[victim_role]
    accepted = victim.verdict.accepted
    stale = accepted and victim.derived_key is not None and victim.derived_key == stale_key
    broken = stale
    checks = [("victim accepted replayed reply", accepted),
              ("victim key equals recorded key", stale)]
    if broken:
        evidence = (f"{victim_role} accepted the recorded {target} and installed the stale key "
                    f"from the earlier run")
    elif accepted:
        evidence = (f"{victim_role} accepted the recorded {target} but derived a fresh key "
                    f"the attacker does not hold")
    else:
        evidence = f"{victim_role} rejected the recorded {target}: {victim.verdict.reason}"

    preauth = False
    if protocol in _PREAUTH:
        info = next(e for e in recorded.transcript if e.message.variant == _PREAUTH[protocol])
        bs = protocols.new_session(protocol, "BS", world, _rng(seed, "preauth"))
        _, after = protocols.advance(bs, info.message)
        preauth = not after.verdict.rejected
        checks.append(("fresh BS accepted replayed pre-auth message", preauth))
        if preauth:
            evidence += f"; a fresh BS accepted the recorded {_PREAUTH[protocol]} unchallenged"
    return AttackOutcome("replay", protocol, broken, evidence, _rate(broken, preauth), seed,
                         preauth, tuple(checks), _victims(fresh))


# --------------------------------------------------------------------------
# man in the middle: two half-sessions with attacker-substituted values

class _Mallory:
    """Interceptor state: what the attacker has seen, owns and claims."""

    def __init__(self, protocol: str, world: World, seed: int, ctx: TermContext):
        self.protocol = protocol
        self.world = world
        self.ctx = ctx
        self.rng = _rng(seed, "mallory")
        _, self.creds = protocols.make_rogue(0)
        self.kb = initial_knowledge(world)
        self.claimed: Dict[str, int] = {}     # victim role -> key value the attacker holds
        self.preauth_forged = False
        self.notes: List[str] = []
        self.dh: Dict[str, crypto.DhKeyPair] = {}

    def learn(self, *terms: Term) -> None:
        self.kb = self.kb.add(*terms)

    def observe(self, msg: ProtocolMessage) -> None:
        self.learn(message_term(msg, self.ctx))

    def own_dh(self, label: str) -> crypto.DhKeyPair:
        kp = gen_dh_keypair(self.world.group, self.rng)
        self.dh[label] = kp
        self.ctx.dh_owner[kp.y_public] = label
        self.learn(exp(label))
        return kp

    def secret(self, kind: str, bits: int) -> int:
        v = self.rng.getrandbits(bits)
        self.learn(Atom((kind, v)))
        if kind == "nonce":
            self.ctx.nonces.add(v)
        if kind == "prepak":
            self.ctx.prepaks.add(v)
        return v

    def sign_as(self, name: str, payload: bytes) -> int:
        """Signature under ``name`` if its private key is derivable, else Mallory's own."""
        if self.kb.knows(priv(name)):
            raise AssertionError("honest private keys are never exposed in these scenarios")
        return sign(self.creds.keys, payload)

    def nonce_if_known(self, n: int) -> Optional[int]:
        return n if self.kb.knows(Atom(("nonce", n))) else None


def _mitm_pkm(m: _Mallory, env: Envelope, v1: bool) -> List[Envelope]:
    msg = env.message
    m.observe(msg)
    if isinstance(msg, (Pkmv1AuthInfo, Pkmv2AuthInfo)):
        m.preauth_forged = True
        return [replace(env, message=type(msg)(m.creds.cert))]
    if isinstance(msg, (Pkmv1AuthRequest, Pkmv2AuthRequest)):
        # toward the BS: present the attacker's own certificate
        if v1:
            fake_req = Pkmv1AuthRequest(m.creds.cert, msg.capabilities, msg.said)
        else:
            unsigned = replace(msg, ss_cert=m.creds.cert, ss_signature=0)
            fake_req = replace(unsigned, ss_signature=sign(m.creds.keys, unsigned.signed_payload()))
        # toward the SS: impersonate the BS with an attacker-chosen key
        ss_pub = msg.ss_cert.subject_public_key
        if v1:
            ak = m.secret("ak", AK_BITS)
            reply = Pkmv1AuthReply(pk_encrypt(ss_pub, ak), AK_LIFETIME, 0,
                                   (SaDescriptor(msg.said, msg.capabilities.cipher_suites[0]),))
            m.claimed["SS"] = ak
        else:
            prepak = m.secret("prepak", PREPAK_BITS)
            n_b = m.secret("nonce", 64)
            unsigned = Pkmv2AuthReply(msg.n_s, n_b, pk_encrypt(ss_pub, prepak), AK_LIFETIME, 0,
                                      (msg.said,), m.world.bs.cert, 0)
            reply = replace(unsigned, bs_signature=m.sign_as(m.world.bs.principal.name,
                                                              unsigned.signed_payload()))
            m.claimed["SS"] = prepak
        return [replace(env, message=fake_req), Envelope("BS", "SS", reply)]
    if isinstance(msg, (Pkmv1AuthReply, Pkmv2AuthReply)):
        return []  # the honest BS reply is suppressed
    return [env]


def _mitm_eap(m: _Mallory, env: Envelope) -> List[Envelope]:
    msg = env.message
    m.observe(msg)
    if isinstance(msg, EapServerCert):
        # toward the supplicant: the attacker's own server certificate
        return [replace(env, message=EapServerCert(m.creds.cert, msg.cert_request))]
    if isinstance(msg, EapClientCert):
        return []
    if isinstance(msg, protocols.RadiusAccessRequest):
        # toward the server: claim the supplicant's identity with an own premaster
        premaster = m.secret("tls", PREMASTER_BITS)
        enc = pk_encrypt(m.world.auth_server.cert.subject_public_key, premaster)
        unsigned = EapClientCert(m.world.ss.cert, enc, 0)
        forged = replace(unsigned, client_verify=m.sign_as(m.world.ss.principal.name,
                                                            unsigned.signed_payload()))
        m.claimed["AS"] = premaster
        return [env, Envelope("S", "AS", forged)]
    return [env]


def _mitm_dh_proposed(m: _Mallory, env: Envelope) -> List[Envelope]:
    msg = env.message
    m.observe(msg)
    if msg.variant == "DhM1":
        # toward the MS: a fresh M2 built entirely from values the attacker holds
        kp = m.own_dh("mallory-ms")
        n = m.secret("nonce", 64)
        ms_pub = msg.ms_cert.subject_public_key
        m2 = DhM2(m.world.bs.cert, kp.y_public, pk_encrypt(ms_pub, n),
                  bind_tag(kp.y_public, f_transform(n)))
        m.notes.append("offered MS a forged M2 under the public BS certificate")
        return [env, Envelope("BS", "MS", m2)]
    if msg.variant == "DhM2":
        named = m.ctx.ciphertext("enc_nonce", msg.enc_nonce)
        m.bs_nonce = named.body.value[1] if isinstance(named, PkEnc) else None
        return []
    if msg.variant == "DhM3":
        # toward the BS: substitute an attacker exponent; the tag needs the BS nonce
        if "mallory-ms" in m.dh:
            m.claimed["MS"] = modexp(msg.y_ms, m.dh["mallory-ms"].x_private, m.world.group.q)
        kp = m.own_dh("mallory-bs")
        n = getattr(m, "bs_nonce", None)
        known = m.nonce_if_known(n) if n is not None else None
        if known is None:
            m.notes.append("BS nonce not derivable; relayed the MS binding tag")
            return [replace(env, message=DhM3(kp.y_public, msg.tag_m))]
        return [replace(env, message=DhM3(kp.y_public, bind_tag(kp.y_public, known)))]
    return [env]


def _mitm_dh_bare(m: _Mallory, env: Envelope) -> List[Envelope]:
    msg = env.message
    m.observe(msg)
    if isinstance(msg, AnonDhOffer):
        to_bs = m.own_dh("mallory-bs")
        to_ms = m.own_dh("mallory-ms")
        m.claimed["MS"] = modexp(msg.y, to_ms.x_private, m.world.group.q)
        return [replace(env, message=AnonDhOffer(to_bs.y_public)),
                Envelope("BS", "MS", AnonDhReply(to_ms.y_public))]
    if isinstance(msg, AnonDhReply):
        m.claimed["BS"] = modexp(msg.y, m.dh["mallory-bs"].x_private, m.world.group.q)
        return []
    return [env]


def _mitm(protocol: str, seed: int) -> AttackOutcome:
    world = attack_world()
    sessions = protocols.new_sessions(protocol, world, _rng(seed, "honest"))
    ctx = TermContext(_keyring(world))
    _label_sessions(ctx, sessions, "honest")
    m = _Mallory(protocol, world, seed, ctx)
    strategy = {
        "pkmv1": lambda e: _mitm_pkm(m, e, True),
        "pkmv2": lambda e: _mitm_pkm(m, e, False),
        "eap": lambda e: _mitm_eap(m, e),
        "dh-proposed": lambda e: _mitm_dh_proposed(m, e),
        "dh-bare": lambda e: _mitm_dh_bare(m, e),
    }[protocol]
    result = protocols.drive(protocol, sessions, strategy)
    roles = protocols.protocol_spec(protocol).key_roles
    accepted = {r: result.sessions[r].verdict.accepted for r in roles}
    known = {}
    for r in roles:
        t = session_key_term(protocol, r, result, ctx)
        known[r] = t is not None and m.kb.knows(t)
    # concrete confirmation: the attacker's own key values match what the victims installed
    concrete = {r: m.claimed.get(r) is not None and m.claimed[r] == result.sessions[r].derived_key
                for r in roles}
    broken = all(accepted.values()) and all(known.values())
    checks = tuple([(f"{r} accepted", accepted[r]) for r in roles]
                   + [(f"{r} key in attacker closure", known[r]) for r in roles]
                   + [(f"{r} key matches attacker value", concrete[r]) for r in roles])
    if broken:
        evidence = "both victims accepted; attacker holds " + ", ".join(
            f"{r} key {result.sessions[r].derived_key}" for r in roles)
    else:
        parts = []
        for r in roles:
            v = result.sessions[r].verdict
            if v.accepted and known[r]:
                parts.append(f"{r} accepted an attacker-keyed session")
            elif v.accepted:
                parts.append(f"{r} accepted but its key is not derivable")
            else:
                parts.append(f"{r} {v}")
        evidence = "; ".join(parts)
    if m.preauth_forged:
        bs = result.sessions.get("BS")
        if bs is not None and any(a.startswith("auth-info:") for a in bs.advisories):
            evidence += "; forged AuthInfo accepted with only an advisory"
    preauth = m.preauth_forged
    return AttackOutcome("mitm", protocol, broken, evidence, _rate(broken, preauth), seed,
                         preauth, checks, _victims(result))


# --------------------------------------------------------------------------
# public entry points

_RUNNERS = {"mitm": _mitm, "replay": _replay, "interception": _interception}


def run_attack(protocol: str, attack: str, rng=0) -> AttackOutcome:
    """Run one scripted attack; a pure function of (protocol, attack, seed)."""
    if protocol not in PROTOCOLS:
        raise UsageError(f"unknown protocol {protocol!r}; choose from {', '.join(PROTOCOLS)}")
    if attack not in ATTACKS:
        raise UsageError(f"unknown attack {attack!r}; choose from {', '.join(ATTACKS)}")
    seed = rng if isinstance(rng, int) else rng.getrandbits(32)
    return _RUNNERS[attack](protocol, seed)


def verify_evidence(outcome: AttackOutcome) -> bool:
    """Re-run the victim sessions and confirm the recorded outcome and its checks."""
    again = run_attack(outcome.protocol, outcome.attack, outcome.seed)
    if again != outcome:
        return False
    if outcome.broken:
        if outcome.attack == "replay":
            return all(ok for _, ok in outcome.checks[:2])
        if outcome.attack == "mitm":
            return all(ok for _, ok in outcome.checks)
        return any(ok for _, ok in outcome.checks)
    return True


@dataclass
class AttackMatrix:
    protocols: Tuple[str, ...]
    outcomes: Dict[Tuple[str, str], AttackOutcome]

    def cell(self, protocol: str, attack: str) -> AttackOutcome:
        return self.outcomes[(protocol, attack)]

    def to_text(self) -> str:
        head = ["protocol"] + list(ATTACKS)
        rows = [[ROW_LABELS.get(p, p)] + [self.cell(p, a).rating for a in ATTACKS]
                for p in self.protocols]
        widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
        fmt = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
        lines = [fmt(head), fmt(["-" * w for w in widths])] + [fmt(r) for r in rows]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {p: {a: self.cell(p, a).as_dict() for a in ATTACKS} for p in self.protocols}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def attack_matrix(rng=0, include_baselines: bool = True) -> AttackMatrix:
    seed = rng if isinstance(rng, int) else rng.getrandbits(32)
    rows = TABLE_PROTOCOLS + (BASELINES if include_baselines else ())
    outcomes = {(p, a): run_attack(p, a, seed) for p in rows for a in ATTACKS}
    return AttackMatrix(rows, outcomes)


def observe_transcript(transcript: Transcript, ctx: TermContext,
                       kb: Optional[KnowledgeBase] = None) -> KnowledgeBase:
    kb = kb or KnowledgeBase()
    return kb.add(*(message_term(e.message, ctx) for e in transcript))


def terms_of(*items: Iterable[Term]) -> KnowledgeBase:
    return KnowledgeBase().add(*items)
