"""Executable state machines for PKMv1, PKMv2-RSA, EAP-TLS and the DH proposal.

Every handshake is a set of immutable :class:`SessionState` values driven by
:func:`advance`, a pure single-step transition.  The ``*_run`` helpers are
folds of ``advance`` over a reliable FIFO channel.

Role labels used in transcripts:

=============  ===============================================
pkmv1, pkmv2   ``SS`` (subscriber station), ``BS``
eap            ``S`` (supplicant), ``AP`` (authenticator), ``AS``
dh-proposed    ``MS`` (initiator), ``BS`` (responder)
dh-bare        ``MS``, ``BS`` (anonymous Diffie-Hellman baseline)
=============  ===============================================

The DH proposal's figure mixes the labels A, AS and MS for the mobile side;
here the mobile is always ``MS`` and the base station always ``BS``.
"""
from __future__ import annotations

import functools
import random
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

from . import crypto
from .crypto import (
    DESK_GROUP, Certificate, CertificateAuthority, CryptoError, DhGroup, DhKeyPair,
    PkKeyPair, bind_tag, confirm_tag, draw_nonce, encode_fields, f_transform,
    gen_dh_keypair, gen_pk_keypair, issue_cert, pk_decrypt, pk_encrypt, sign,
    verify_sig,
)
from .messages import (
    AnonDhOffer, AnonDhReply, DhM1, DhM2, DhM3, DhM4, EapClientCert, EapIdentityRequest,
    EapIdentityResponse, EapServerCert, Pkmv1AuthInfo, Pkmv1AuthReply, Pkmv1AuthRequest,
    Pkmv2AuthAck, Pkmv2AuthInfo, Pkmv2AuthReply, Pkmv2AuthRequest, ProtocolMessage,
    RadiusAccessRequest, RadiusAccessResult, SaDescriptor, SecurityCapabilities, Transcript,
)

PROTOCOLS = ("pkmv1", "pkmv2", "eap", "dh-proposed", "dh-bare")

AK_BITS = 160
PREPAK_BITS = 256
PREMASTER_BITS = 256
AK_LIFETIME = 7 * 24 * 3600
DEFAULT_SUITES = ("AES-CCM-128", "DES-CBC-56")

Rng = Union[int, random.Random, None]


def as_rng(rng: Rng) -> random.Random:
    if isinstance(rng, random.Random):
        return rng
    return random.Random(0 if rng is None else rng)


# --------------------------------------------------------------------------
# principals and credentials

@dataclass(frozen=True)
class PrincipalId:
    role: str  # SS | BS | AP | AS | CA | attacker
    name: str
    mac_address: int = 0

    def __post_init__(self):
        if not 0 <= self.mac_address < (1 << 48):
            raise ValueError("MAC address must fit in 48 bits")


@dataclass(frozen=True)
class Credentials:
    principal: PrincipalId
    keys: PkKeyPair
    cert: Certificate


@dataclass(frozen=True)
class World:
    """The long-lived parties of one deployment: a CA and its certified principals."""

    ca: CertificateAuthority
    ss: Credentials
    bs: Credentials
    ap: Credentials
    auth_server: Credentials
    manufacturer_cert: Certificate
    group: DhGroup = DESK_GROUP

    @property
    def trusted(self) -> Dict[str, crypto.PublicKey]:
        return {self.ca.name: self.ca.public}

    def with_cert(self, who: str, cert: Certificate) -> "World":
        creds = getattr(self, who)
        return replace(self, **{who: replace(creds, cert=cert)})

    def with_group(self, group: DhGroup) -> "World":
        return replace(self, group=group)


def _credentials(ca: CertificateAuthority, role: str, name: str, mac: int,
                 bits: int, rng: random.Random) -> Credentials:
    keys = gen_pk_keypair(bits, rng)
    principal = PrincipalId(role, name, mac)
    return Credentials(principal, keys, issue_cert(ca, name, keys.public))


@functools.lru_cache(maxsize=8)
def make_world(seed: int = 0, rsa_bits: int = 512, group: DhGroup = DESK_GROUP) -> World:
    """Deterministic deployment: one root CA, an SS/MS, a BS, an AP and a RADIUS server."""
    rng = random.Random(f"world/{seed}")
    ca = CertificateAuthority("root-ca", gen_pk_keypair(rsa_bits, rng))
    ss = _credentials(ca, "SS", "ss-0001", 0x0002_4A11_0001, rsa_bits, rng)
    bs = _credentials(ca, "BS", "bs-0001", 0x0002_4A22_0001, rsa_bits, rng)
    ap = _credentials(ca, "AP", "ap-0001", 0x0002_4A33_0001, rsa_bits, rng)
    server = _credentials(ca, "AS", "radius-0001", 0x0002_4A44_0001, rsa_bits, rng)
    mfr_keys = gen_pk_keypair(rsa_bits, rng)
    mfr = issue_cert(ca, "manufacturer-acme", mfr_keys.public)
    return World(ca, ss, bs, ap, server, mfr, group)


@functools.lru_cache(maxsize=8)
def make_rogue(seed: int = 0, rsa_bits: int = 512) -> Tuple[CertificateAuthority, Credentials]:
    """An attacker-run CA (not trusted by anyone) and credentials it vouches for."""
    rng = random.Random(f"rogue/{seed}")
    rogue_ca = CertificateAuthority("rogue-ca", gen_pk_keypair(rsa_bits, rng))
    creds = _credentials(rogue_ca, "attacker", "mallory", 0x0002_4AEE_0001, rsa_bits, rng)
    return rogue_ca, creds


# indirection so tests can count certificate checks per session
def verify_cert(trusted, cert):
    return crypto.verify_cert(trusted, cert)


# --------------------------------------------------------------------------
# session state

@dataclass(frozen=True)
class Verdict:
    status: str  # in-progress | accepted | rejected
    reason: Optional[str] = None

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"

    @property
    def rejected(self) -> bool:
        return self.status == "rejected"

    @property
    def terminal(self) -> bool:
        return self.status != "in-progress"

    def __str__(self):
        return f"rejected({self.reason})" if self.rejected else self.status


IN_PROGRESS = Verdict("in-progress")
ACCEPTED = Verdict("accepted")


def rejected(reason: str) -> Verdict:
    return Verdict("rejected", reason)


@dataclass(frozen=True)
class SessionState:
    protocol: str
    role: str
    principal: PrincipalId
    world: World = field(repr=False)
    phase: str
    secrets: Mapping[str, object] = field(repr=False)
    memory: Mapping[str, object] = field(default_factory=lambda: MappingProxyType({}))
    verdict: Verdict = IN_PROGRESS
    derived_key: Optional[int] = None
    advisories: Tuple[str, ...] = ()

    def remember(self, **items) -> "SessionState":
        return replace(self, memory=MappingProxyType({**self.memory, **items}))

    def goto(self, phase: str, **items) -> "SessionState":
        return replace(self.remember(**items), phase=phase)

    def accept(self, key: Optional[int] = None, phase: str = "done") -> "SessionState":
        return replace(self, phase=phase, verdict=ACCEPTED, derived_key=key)

    def reject(self, reason: str) -> "SessionState":
        return replace(self, phase="failed", verdict=rejected(reason), derived_key=None)


Step = Tuple[List[ProtocolMessage], SessionState]


class _Inadmissible(Exception):
    pass


def _expect(incoming, *kinds):
    if not isinstance(incoming, kinds):
        raise _Inadmissible()
    return incoming


def _cert_failure(check: crypto.CertCheck) -> str:
    return "untrusted-issuer" if check.reason == "untrusted-issuer" else "cert"


# --------------------------------------------------------------------------
# PKMv1: unilateral, BS authenticates the SS only

def _pkmv1_ss(s: SessionState, msg) -> Step:
    if s.phase == "start":
        _expect(msg, type(None))
        creds = s.world.ss
        said = s.secrets["said"]
        out = [Pkmv1AuthInfo(s.world.manufacturer_cert),
               Pkmv1AuthRequest(creds.cert, SecurityCapabilities(DEFAULT_SUITES), said)]
        return out, s.goto("await-reply")
    if s.phase == "await-reply":
        reply = _expect(msg, Pkmv1AuthReply)
        try:
            ak = pk_decrypt(s.world.ss.keys, reply.enc_ak)
        except CryptoError:
            return [], s.reject("decode")
        if ak >= 1 << AK_BITS:
            return [], s.reject("decode")
        return [], s.accept(ak).remember(ak_lifetime=reply.ak_lifetime, ak_seq=reply.ak_seq)
    raise _Inadmissible()


def _pkmv1_bs(s: SessionState, msg) -> Step:
    if s.phase == "await-info":
        info = _expect(msg, Pkmv1AuthInfo)
        # policy-only check; failure is recorded but does not stop the exchange
        check = verify_cert(s.world.trusted, info.manufacturer_cert)
        s = s.goto("await-request")
        if not check:
            s = replace(s, advisories=s.advisories + (f"auth-info:{check.reason}",))
        return [], s
    if s.phase == "await-request":
        req = _expect(msg, Pkmv1AuthRequest)
        check = verify_cert(s.world.trusted, req.ss_cert)
        if not check:
            return [], s.reject(_cert_failure(check))
        ak = s.secrets["ak"]
        reply = Pkmv1AuthReply(
            enc_ak=pk_encrypt(req.ss_cert.subject_public_key, ak),
            ak_lifetime=AK_LIFETIME,
            ak_seq=s.secrets["ak_seq"],
            sa_descriptors=(SaDescriptor(req.said, req.capabilities.cipher_suites[0]),),
        )
        return [reply], s.accept(ak)
    raise _Inadmissible()


# --------------------------------------------------------------------------
# PKMv2 RSA-based mutual authentication

def pkmv2_checksum(prepak: int, n_b: int, ss_mac: int) -> bytes:
    """Keyed digest of the ack: H(pre-PAK || encode(n_b, ss_mac))."""
    return crypto.hash_bytes(prepak.to_bytes(PREPAK_BITS // 8, "big") + encode_fields(n_b, ss_mac))


def _pkmv2_ss(s: SessionState, msg) -> Step:
    creds = s.world.ss
    if s.phase == "start":
        _expect(msg, type(None))
        n_s = s.secrets["n_s"]
        unsigned = Pkmv2AuthRequest(creds.cert, n_s, SecurityCapabilities(DEFAULT_SUITES),
                                    s.secrets["said"], 0)
        req = replace(unsigned, ss_signature=sign(creds.keys, unsigned.signed_payload()))
        return [Pkmv2AuthInfo(s.world.manufacturer_cert), req], s.goto("await-reply")
    if s.phase == "await-reply":
        reply = _expect(msg, Pkmv2AuthReply)
        if reply.n_s != s.secrets["n_s"]:
            return [], s.reject("liveness")
        check = verify_cert(s.world.trusted, reply.bs_cert)
        if not check:
            return [], s.reject(_cert_failure(check))
        if not verify_sig(reply.bs_cert.subject_public_key, reply.signed_payload(),
                          reply.bs_signature):
            return [], s.reject("signature")
        try:
            prepak = pk_decrypt(creds.keys, reply.enc_prepak)
        except CryptoError:
            return [], s.reject("decode")
        if prepak >= 1 << PREPAK_BITS:
            return [], s.reject("decode")
        mac = s.principal.mac_address
        ack = Pkmv2AuthAck(reply.n_b, mac, pkmv2_checksum(prepak, reply.n_b, mac))
        return [ack], s.accept(prepak)
    raise _Inadmissible()


def _pkmv2_bs(s: SessionState, msg) -> Step:
    creds = s.world.bs
    if s.phase == "await-info":
        info = _expect(msg, Pkmv2AuthInfo)
        check = verify_cert(s.world.trusted, info.manufacturer_cert)
        s = s.goto("await-request")
        if not check:
            s = replace(s, advisories=s.advisories + (f"auth-info:{check.reason}",))
        return [], s
    if s.phase == "await-request":
        req = _expect(msg, Pkmv2AuthRequest)
        check = verify_cert(s.world.trusted, req.ss_cert)
        if not check:
            return [], s.reject(_cert_failure(check))
        if not verify_sig(req.ss_cert.subject_public_key, req.signed_payload(), req.ss_signature):
            return [], s.reject("signature")
        prepak = s.secrets["prepak"]
        unsigned = Pkmv2AuthReply(
            n_s=req.n_s, n_b=s.secrets["n_b"],
            enc_prepak=pk_encrypt(req.ss_cert.subject_public_key, prepak),
            prepak_lifetime=AK_LIFETIME, prepak_seq=s.secrets["prepak_seq"],
            said_list=(req.said,), bs_cert=creds.cert, bs_signature=0,
        )
        reply = replace(unsigned, bs_signature=sign(creds.keys, unsigned.signed_payload()))
        return [reply], s.goto("await-ack", peer_mac=None)
    if s.phase == "await-ack":
        ack = _expect(msg, Pkmv2AuthAck)
        prepak = s.secrets["prepak"]
        if ack.n_b != s.secrets["n_b"]:
            return [], s.reject("liveness")
        if ack.checksum != pkmv2_checksum(prepak, ack.n_b, ack.ss_mac):
            return [], s.reject("integrity")
        return [], s.accept(prepak).remember(peer_mac=ack.ss_mac)
    raise _Inadmissible()


# --------------------------------------------------------------------------
# EAP-TLS at the granularity of the six arrows

def _eap_supplicant(s: SessionState, msg) -> Step:
    if s.phase == "await-request":
        _expect(msg, EapIdentityRequest)
        return [EapIdentityResponse(s.principal.name)], s.goto("await-server-cert")
    if s.phase == "await-server-cert":
        sc = _expect(msg, EapServerCert)
        check = verify_cert(s.world.trusted, sc.as_cert)
        if not check:
            # the client certificate is only released to a valid server
            return [], s.reject(_cert_failure(check))
        if not sc.cert_request:
            return [], s.reject("no-cert-request")
        # premaster under the server key plus proof of possession of the client key
        premaster = s.secrets["tls_secret"]
        try:
            enc = pk_encrypt(sc.as_cert.subject_public_key, premaster)
        except CryptoError:
            return [], s.reject("decode")
        unsigned = EapClientCert(s.world.ss.cert, enc, 0)
        cc = replace(unsigned, client_verify=sign(s.world.ss.keys, unsigned.signed_payload()))
        return [cc], s.accept(premaster, phase="server-authenticated")
    raise _Inadmissible()


def _eap_authenticator(s: SessionState, msg) -> Step:
    if s.phase == "start":
        _expect(msg, type(None))
        return [EapIdentityRequest()], s.goto("await-identity")
    if s.phase == "await-identity":
        resp = _expect(msg, EapIdentityResponse)
        return [RadiusAccessRequest(resp.identity)], s.goto("await-result", identity=resp.identity)
    if s.phase == "await-result":
        result = _expect(msg, RadiusAccessResult)
        if not result.success:
            return [], s.reject("access-denied")
        return [], s.accept(phase="port-authorized")
    raise _Inadmissible()


def _eap_server(s: SessionState, msg) -> Step:
    if s.phase == "await-access-request":
        req = _expect(msg, RadiusAccessRequest)
        out = EapServerCert(s.world.auth_server.cert, cert_request=True)
        return [out], s.goto("await-client-cert", identity=req.identity)
    if s.phase == "await-client-cert":
        cc = _expect(msg, EapClientCert)
        check = verify_cert(s.world.trusted, cc.supplicant_cert)
        if not check:
            return [RadiusAccessResult(False)], s.reject(_cert_failure(check))
        if cc.supplicant_cert.subject_id != s.memory["identity"]:
            return [RadiusAccessResult(False)], s.reject("identity-mismatch")
        if not verify_sig(cc.supplicant_cert.subject_public_key, cc.signed_payload(),
                          cc.client_verify):
            return [RadiusAccessResult(False)], s.reject("signature")
        try:
            premaster = pk_decrypt(s.world.auth_server.keys, cc.enc_premaster)
        except CryptoError:
            return [RadiusAccessResult(False)], s.reject("decode")
        if premaster >= 1 << PREMASTER_BITS:
            return [RadiusAccessResult(False)], s.reject("decode")
        return [RadiusAccessResult(True)], s.accept(premaster)
    raise _Inadmissible()


# --------------------------------------------------------------------------
# proposed DH protocol: nonce transport under the MS key, hash binding, AK = Y_peer^x mod q

def _dh_ms(s: SessionState, msg) -> Step:
    group = s.world.group
    if s.phase == "start":
        _expect(msg, type(None))
        return [DhM1(s.world.ss.cert)], s.goto("await-m2")
    if s.phase == "await-m2":
        m2 = _expect(msg, DhM2)
        check = verify_cert(s.world.trusted, m2.bs_cert)
        if not check:
            return [], s.reject(_cert_failure(check))
        try:
            nonce = pk_decrypt(s.world.ss.keys, m2.enc_nonce)
        except CryptoError:
            return [], s.reject("decode")
        if nonce > crypto.NONCE_MASK:
            return [], s.reject("decode")
        if not group.contains(m2.y_bs):
            return [], s.reject("peer-public")
        if bind_tag(m2.y_bs, f_transform(nonce)) != m2.tag_b:
            return [], s.reject("binding")
        own: DhKeyPair = s.secrets["dh"]
        m3 = DhM3(own.y_public, bind_tag(own.y_public, nonce))
        m4 = DhM4(confirm_tag(nonce))
        ak = crypto.derive_ak(own, m2.y_bs, group).value
        return [m3, m4], s.accept(ak).remember(nonce=nonce, peer_public=m2.y_bs)
    raise _Inadmissible()


def _dh_bs(s: SessionState, msg) -> Step:
    group = s.world.group
    if s.phase == "await-m1":
        m1 = _expect(msg, DhM1)
        check = verify_cert(s.world.trusted, m1.ms_cert)
        if not check:
            return [], s.reject(_cert_failure(check))
        own: DhKeyPair = s.secrets["dh"]
        nonce = s.secrets["nonce"]
        m2 = DhM2(
            bs_cert=s.world.bs.cert,
            y_bs=own.y_public,
            enc_nonce=pk_encrypt(m1.ms_cert.subject_public_key, nonce),
            tag_b=bind_tag(own.y_public, f_transform(nonce)),
        )
        return [m2], s.goto("await-m3")
    if s.phase == "await-m3":
        m3 = _expect(msg, DhM3)
        if not group.contains(m3.y_ms):
            return [], s.reject("peer-public")
        if bind_tag(m3.y_ms, s.secrets["nonce"]) != m3.tag_m:
            return [], s.reject("binding")
        return [], s.goto("await-m4", peer_public=m3.y_ms)
    if s.phase == "await-m4":
        m4 = _expect(msg, DhM4)
        if m4.confirm != confirm_tag(s.secrets["nonce"]):
            return [], s.reject("confirm")
        ak = crypto.derive_ak(s.secrets["dh"], s.memory["peer_public"], group).value
        return [], s.accept(ak)
    raise _Inadmissible()


# --------------------------------------------------------------------------
# anonymous DH baseline

def _anon_ms(s: SessionState, msg) -> Step:
    if s.phase == "start":
        _expect(msg, type(None))
        return [AnonDhOffer(s.secrets["dh"].y_public)], s.goto("await-reply")
    if s.phase == "await-reply":
        reply = _expect(msg, AnonDhReply)
        if not s.world.group.contains(reply.y):
            return [], s.reject("peer-public")
        return [], s.accept(crypto.derive_ak(s.secrets["dh"], reply.y, s.world.group).value)
    raise _Inadmissible()


def _anon_bs(s: SessionState, msg) -> Step:
    if s.phase == "await-offer":
        offer = _expect(msg, AnonDhOffer)
        if not s.world.group.contains(offer.y):
            return [], s.reject("peer-public")
        own = s.secrets["dh"]
        ak = crypto.derive_ak(own, offer.y, s.world.group).value
        return [AnonDhReply(own.y_public)], s.accept(ak)
    raise _Inadmissible()


# --------------------------------------------------------------------------
# protocol table

@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    roles: Tuple[str, ...]          # initiator first
    initial_phase: Mapping[str, str]
    handlers: Mapping[str, Callable[[SessionState, object], Step]]
    route: Mapping[str, Tuple[str, str]]  # variant -> (sender, receiver)
    key_roles: Tuple[str, ...]      # roles whose derived keys must agree


SPECS: Dict[str, ProtocolSpec] = {
    "pkmv1": ProtocolSpec(
        "pkmv1", ("SS", "BS"), {"SS": "start", "BS": "await-info"},
        {"SS": _pkmv1_ss, "BS": _pkmv1_bs},
        {"Pkmv1AuthInfo": ("SS", "BS"), "Pkmv1AuthRequest": ("SS", "BS"),
         "Pkmv1AuthReply": ("BS", "SS")},
        ("SS", "BS")),
    "pkmv2": ProtocolSpec(
        "pkmv2", ("SS", "BS"), {"SS": "start", "BS": "await-info"},
        {"SS": _pkmv2_ss, "BS": _pkmv2_bs},
        {"Pkmv2AuthInfo": ("SS", "BS"), "Pkmv2AuthRequest": ("SS", "BS"),
         "Pkmv2AuthReply": ("BS", "SS"), "Pkmv2AuthAck": ("SS", "BS")},
        ("SS", "BS")),
    "eap": ProtocolSpec(
        "eap", ("AP", "S", "AS"), {"AP": "start", "S": "await-request", "AS": "await-access-request"},
        {"AP": _eap_authenticator, "S": _eap_supplicant, "AS": _eap_server},
        {"EapIdentityRequest": ("AP", "S"), "EapIdentityResponse": ("S", "AP"),
         "RadiusAccessRequest": ("AP", "AS"), "EapServerCert": ("AS", "S"),
         "EapClientCert": ("S", "AS"), "RadiusAccessResult": ("AS", "AP")},
        ("S", "AS")),
    "dh-proposed": ProtocolSpec(
        "dh-proposed", ("MS", "BS"), {"MS": "start", "BS": "await-m1"},
        {"MS": _dh_ms, "BS": _dh_bs},
        {"DhM1": ("MS", "BS"), "DhM2": ("BS", "MS"), "DhM3": ("MS", "BS"), "DhM4": ("MS", "BS")},
        ("MS", "BS")),
    "dh-bare": ProtocolSpec(
        "dh-bare", ("MS", "BS"), {"MS": "start", "BS": "await-offer"},
        {"MS": _anon_ms, "BS": _anon_bs},
        {"AnonDhOffer": ("MS", "BS"), "AnonDhReply": ("BS", "MS")},
        ("MS", "BS")),
}


def protocol_spec(name: str) -> ProtocolSpec:
    try:
        return SPECS[name]
    except KeyError:
        raise ValueError(f"unknown protocol {name!r}; choose from {', '.join(PROTOCOLS)}") from None


_PRINCIPAL_OF_ROLE = {"SS": "ss", "MS": "ss", "S": "ss", "BS": "bs", "AP": "ap", "AS": "auth_server"}


def _draw_secrets(protocol: str, role: str, world: World, rng: random.Random,
                  forced: Mapping[str, object]) -> Dict[str, object]:
    """Pre-draw every random value a session will need, in a fixed order."""
    out: Dict[str, object] = {}
    if protocol == "pkmv1":
        if role == "SS":
            out["said"] = rng.getrandbits(16)
        else:
            out["ak"] = rng.getrandbits(AK_BITS)
            out["ak_seq"] = rng.getrandbits(4)
    elif protocol == "pkmv2":
        if role == "SS":
            out["n_s"] = draw_nonce(rng)
            out["said"] = rng.getrandbits(16)
        else:
            out["n_b"] = draw_nonce(rng)
            out["prepak"] = rng.getrandbits(PREPAK_BITS)
            out["prepak_seq"] = rng.getrandbits(4)
    elif protocol == "eap":
        if role == "S":
            # stands in for the TLS pre-master secret
            out["tls_secret"] = rng.getrandbits(PREMASTER_BITS)
    elif protocol in ("dh-proposed", "dh-bare"):
        x_forced = forced.get("x_ms" if role == "MS" else "x_bs")
        out["dh"] = gen_dh_keypair(world.group, rng, x=x_forced)
        if role == "BS" and protocol == "dh-proposed":
            out["nonce"] = draw_nonce(rng)
    for k, v in forced.items():
        if k in out:
            out[k] = v
    return out


def new_session(protocol: str, role: str, world: World, rng: Rng = None,
                **forced) -> SessionState:
    spec = protocol_spec(protocol)
    if role not in spec.roles:
        raise ValueError(f"{protocol} has no role {role!r}")
    creds: Credentials = getattr(world, _PRINCIPAL_OF_ROLE[role])
    return SessionState(
        protocol=protocol, role=role, principal=creds.principal, world=world,
        phase=spec.initial_phase[role],
        secrets=MappingProxyType(_draw_secrets(protocol, role, world, as_rng(rng), forced)),
    )


def new_sessions(protocol: str, world: World, rng: Rng = None, **forced) -> Dict[str, SessionState]:
    rng = as_rng(rng)
    return {role: new_session(protocol, role, world, rng, **forced)
            for role in protocol_spec(protocol).roles}


def advance(session: SessionState, incoming: Optional[ProtocolMessage]) -> Step:
    """Single pure transition: consume ``incoming`` (or ``None`` to initiate)."""
    if session.verdict.rejected:
        return [], session
    if session.verdict.accepted:
        return [], session.reject("out-of-order")
    handler = SPECS[session.protocol].handlers[session.role]
    try:
        return handler(session, incoming)
    except _Inadmissible:
        return [], session.reject("out-of-order")


# --------------------------------------------------------------------------
# reliable-channel driver

@dataclass(frozen=True)
class Envelope:
    sender: str
    receiver: str
    message: ProtocolMessage


Interceptor = Callable[[Envelope], List[Envelope]]


@dataclass
class RunResult:
    protocol: str
    transcript: Transcript
    sessions: Dict[str, SessionState]

    @property
    def verdicts(self) -> Dict[str, Verdict]:
        return {r: s.verdict for r, s in self.sessions.items()}

    @property
    def keys(self) -> Dict[str, Optional[int]]:
        return {r: s.derived_key for r, s in self.sessions.items()}

    @property
    def all_accepted(self) -> bool:
        return all(v.accepted for v in self.verdicts.values())

    @property
    def keys_agree(self) -> bool:
        roles = SPECS[self.protocol].key_roles
        values = {self.sessions[r].derived_key for r in roles}
        return len(values) == 1 and None not in values


def drive(protocol: str, sessions: Dict[str, SessionState],
          interceptor: Optional[Interceptor] = None, max_messages: int = 64) -> RunResult:
    """Fold :func:`advance` over a FIFO channel until no message is in flight.

    ``interceptor`` sees each envelope before delivery and returns the
    envelopes actually delivered (possibly none, possibly altered).  The
    transcript records delivered envelopes.
    """
    spec = protocol_spec(protocol)
    sessions = dict(sessions)
    transcript = Transcript(protocol)
    initiator = spec.roles[0]
    out, sessions[initiator] = advance(sessions[initiator], None)
    queue = [_envelope(spec, initiator, m) for m in out]
    while queue:
        env = queue.pop(0)
        delivered = interceptor(env) if interceptor else [env]
        for d in delivered:
            if len(transcript) >= max_messages:
                raise RuntimeError("message budget exhausted; channel does not terminate")
            transcript.append(d.sender, d.receiver, d.message)
            if d.receiver not in sessions:
                continue
            out, sessions[d.receiver] = advance(sessions[d.receiver], d.message)
            queue.extend(_envelope(spec, d.receiver, m) for m in out)
    return RunResult(protocol, transcript, sessions)


def _envelope(spec: ProtocolSpec, sender: str, msg: ProtocolMessage) -> Envelope:
    src, dst = spec.route[msg.variant]
    if src != sender:
        raise RuntimeError(f"{sender} emitted {msg.variant}, which only {src} may send")
    return Envelope(sender, dst, msg)


def run_protocol(protocol: str, world: Optional[World] = None, rng: Rng = None,
                 **forced) -> RunResult:
    world = world or make_world()
    return drive(protocol, new_sessions(protocol, world, rng, **forced))


def pkmv1_run(world: Optional[World] = None, rng: Rng = None) -> RunResult:
    return run_protocol("pkmv1", world, rng)


def pkmv2_run(world: Optional[World] = None, rng: Rng = None) -> RunResult:
    return run_protocol("pkmv2", world, rng)


def eap_tls_run(world: Optional[World] = None, rng: Rng = None) -> RunResult:
    return run_protocol("eap", world, rng)


def dh_proposed_run(world: Optional[World] = None, rng: Rng = None, **forced) -> RunResult:
    """``forced`` may pin ``x_ms``, ``x_bs`` or ``nonce``."""
    return run_protocol("dh-proposed", world, rng, **forced)


def dh_bare_run(world: Optional[World] = None, rng: Rng = None, **forced) -> RunResult:
    return run_protocol("dh-bare", world, rng, **forced)
