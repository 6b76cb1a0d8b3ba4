"""Message variants of the four handshakes, and transcript serialisation."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from typing import ClassVar, Dict, Iterator, List, Tuple, Type

from .crypto import NONCE_MASK, Certificate, PublicKey, encode_fields


def _check_width(name: str, value: int, bits: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < (1 << bits):
        raise ValueError(f"{name}={value!r} does not fit in {bits} bits")


@dataclass(frozen=True)
class SaDescriptor:
    said: int
    cipher_suite: str

    def __post_init__(self):
        _check_width("said", self.said, 16)

    def canonical_fields(self):
        return (self.said, self.cipher_suite)


@dataclass(frozen=True)
class SecurityCapabilities:
    cipher_suites: Tuple[str, ...]

    def __post_init__(self):
        if not self.cipher_suites:
            raise ValueError("security capabilities must list at least one suite")

    def canonical_fields(self):
        return tuple(self.cipher_suites)


VARIANTS: Dict[str, Type["ProtocolMessage"]] = {}


class ProtocolMessage:
    """Base of every message variant; subclasses are frozen dataclasses."""

    variant: ClassVar[str]
    # fields covered by a signature or checksum travel last and are excluded here
    unsigned_tail: ClassVar[int] = 0

    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        VARIANTS[cls.__name__] = cls
        cls.variant = cls.__name__

    def field_items(self) -> List[Tuple[str, object]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def canonical_fields(self) -> tuple:
        return tuple(v for _, v in self.field_items())

    def signed_payload(self) -> bytes:
        items = self.field_items()
        if self.unsigned_tail:
            items = items[:-self.unsigned_tail]
        return encode_fields(self.variant, *(v for _, v in items))


def _nonce(name, v):
    if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v <= NONCE_MASK:
        raise ValueError(f"{name}={v!r} is not a 64-bit nonce")


# --- PKMv1 -----------------------------------------------------------------

@dataclass(frozen=True)
class Pkmv1AuthInfo(ProtocolMessage):
    manufacturer_cert: Certificate


@dataclass(frozen=True)
class Pkmv1AuthRequest(ProtocolMessage):
    ss_cert: Certificate
    capabilities: SecurityCapabilities
    said: int

    def __post_init__(self):
        _check_width("said", self.said, 16)


@dataclass(frozen=True)
class Pkmv1AuthReply(ProtocolMessage):
    enc_ak: int
    ak_lifetime: int
    ak_seq: int
    sa_descriptors: Tuple[SaDescriptor, ...]

    def __post_init__(self):
        _check_width("ak_lifetime", self.ak_lifetime, 32)
        _check_width("ak_seq", self.ak_seq, 4)
        saids = [d.said for d in self.sa_descriptors]
        if len(set(saids)) != len(saids):
            raise ValueError("SAIDs must be unique within a reply")


# --- PKMv2 RSA -------------------------------------------------------------

@dataclass(frozen=True)
class Pkmv2AuthInfo(ProtocolMessage):
    manufacturer_cert: Certificate


@dataclass(frozen=True)
class Pkmv2AuthRequest(ProtocolMessage):
    unsigned_tail: ClassVar[int] = 1
    ss_cert: Certificate
    n_s: int
    capabilities: SecurityCapabilities
    said: int
    ss_signature: int

    def __post_init__(self):
        _nonce("n_s", self.n_s)
        _check_width("said", self.said, 16)


@dataclass(frozen=True)
class Pkmv2AuthReply(ProtocolMessage):
    unsigned_tail: ClassVar[int] = 1
    n_s: int
    n_b: int
    enc_prepak: int
    prepak_lifetime: int
    prepak_seq: int
    said_list: Tuple[int, ...]
    bs_cert: Certificate
    bs_signature: int

    def __post_init__(self):
        _nonce("n_s", self.n_s)
        _nonce("n_b", self.n_b)
        _check_width("prepak_lifetime", self.prepak_lifetime, 32)
        _check_width("prepak_seq", self.prepak_seq, 4)
        if not self.said_list:
            raise ValueError("said_list must not be empty")
        for s in self.said_list:
            _check_width("said", s, 16)


@dataclass(frozen=True)
class Pkmv2AuthAck(ProtocolMessage):
    unsigned_tail: ClassVar[int] = 1
    n_b: int
    ss_mac: int
    checksum: bytes

    def __post_init__(self):
        _nonce("n_b", self.n_b)
        _check_width("ss_mac", self.ss_mac, 48)


# --- EAP-TLS ---------------------------------------------------------------

@dataclass(frozen=True)
class EapIdentityRequest(ProtocolMessage):
    pass


@dataclass(frozen=True)
class EapIdentityResponse(ProtocolMessage):
    identity: str


@dataclass(frozen=True)
class RadiusAccessRequest(ProtocolMessage):
    identity: str


@dataclass(frozen=True)
class EapServerCert(ProtocolMessage):
    as_cert: Certificate
    cert_request: bool


@dataclass(frozen=True)
class EapClientCert(ProtocolMessage):
    unsigned_tail: ClassVar[int] = 1
    supplicant_cert: Certificate
    enc_premaster: int
    client_verify: int


@dataclass(frozen=True)
class RadiusAccessResult(ProtocolMessage):
    success: bool


# --- proposed Diffie-Hellman protocol --------------------------------------

@dataclass(frozen=True)
class DhM1(ProtocolMessage):
    ms_cert: Certificate


@dataclass(frozen=True)
class DhM2(ProtocolMessage):
    bs_cert: Certificate
    y_bs: int
    enc_nonce: int
    tag_b: bytes


@dataclass(frozen=True)
class DhM3(ProtocolMessage):
    y_ms: int
    tag_m: bytes


@dataclass(frozen=True)
class DhM4(ProtocolMessage):
    confirm: bytes


# --- anonymous Diffie-Hellman baseline -------------------------------------

@dataclass(frozen=True)
class AnonDhOffer(ProtocolMessage):
    y: int


@dataclass(frozen=True)
class AnonDhReply(ProtocolMessage):
    y: int


# --------------------------------------------------------------------------
# transcripts

@dataclass(frozen=True)
class TranscriptEntry:
    step: int
    sender: str
    receiver: str
    message: ProtocolMessage


@dataclass
class Transcript:
    protocol: str
    entries: List[TranscriptEntry] = field(default_factory=list)

    def append(self, sender: str, receiver: str, message: ProtocolMessage) -> TranscriptEntry:
        step = self.entries[-1].step + 1 if self.entries else 1
        entry = TranscriptEntry(step, sender, receiver, message)
        self.entries.append(entry)
        return entry

    def __len__(self):
        return len(self.entries)

    def __iter__(self) -> Iterator[TranscriptEntry]:
        return iter(self.entries)

    def variants(self) -> List[str]:
        return [e.message.variant for e in self.entries]

    def to_text(self) -> str:
        return "".join(render_entry(e) + "\n" for e in self.entries)

    def to_json(self) -> str:
        doc = {
            "protocol": self.protocol,
            "messages": [
                {"step": e.step, "sender": e.sender, "receiver": e.receiver,
                 "variant": e.message.variant,
                 "fields": {k: _to_json_value(v) for k, v in e.message.field_items()}}
                for e in self.entries
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        doc = json.loads(text)
        out = cls(doc["protocol"])
        for m in doc["messages"]:
            kind = VARIANTS[m["variant"]]
            msg = kind(**{k: _from_json_value(v) for k, v in m["fields"].items()})
            entry = out.append(m["sender"], m["receiver"], msg)
            if entry.step != m["step"]:
                raise ValueError(f"non-contiguous step index {m['step']}")
        return out


def _text_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, bytes):
        return v.hex()
    if isinstance(v, Certificate):
        return f"cert({v.subject_id}<-{v.issuer_id})"
    if isinstance(v, SaDescriptor):
        return f"{v.said}/{v.cipher_suite}"
    if isinstance(v, SecurityCapabilities):
        return "[" + ";".join(v.cipher_suites) + "]"
    if isinstance(v, tuple):
        return "[" + ";".join(_text_value(x) for x in v) + "]"
    return str(v)


def render_entry(e: TranscriptEntry) -> str:
    body = ",".join(f"{k}={_text_value(v)}" for k, v in e.message.field_items())
    return f"{e.step}|{e.sender}|{e.receiver}|{e.message.variant}|{body}"


def _to_json_value(v):
    if isinstance(v, (bool, int, str)):
        return v
    if isinstance(v, bytes):
        return {"bytes": v.hex()}
    if isinstance(v, Certificate):
        return {"cert": {"subject_id": v.subject_id, "n": v.subject_public_key.n,
                         "e": v.subject_public_key.e, "issuer_id": v.issuer_id,
                         "signature": v.signature, "dh_public": v.dh_public}}
    if isinstance(v, SaDescriptor):
        return {"sa": [v.said, v.cipher_suite]}
    if isinstance(v, SecurityCapabilities):
        return {"capabilities": list(v.cipher_suites)}
    if isinstance(v, tuple):
        return [_to_json_value(x) for x in v]
    raise TypeError(f"unserialisable field value {v!r}")


def _from_json_value(v):
    if isinstance(v, list):
        return tuple(_from_json_value(x) for x in v)
    if not isinstance(v, dict):
        return v
    (tag, body), = v.items()
    if tag == "bytes":
        return bytes.fromhex(body)
    if tag == "cert":
        return Certificate(body["subject_id"], PublicKey(body["n"], body["e"]),
                           body["issuer_id"], body["signature"], body["dh_public"])
    if tag == "sa":
        return SaDescriptor(body[0], body[1])
    if tag == "capabilities":
        return SecurityCapabilities(tuple(body))
    raise ValueError(f"unknown field tag {tag!r}")
