"""Desk-scale cryptographic primitives for the handshake models.

Everything here is textbook: unpadded RSA, plain Diffie-Hellman over a prime
field, SHA-256 over a length-prefixed field encoding.  It exists so that
protocol behaviour can be executed and attacked deterministically; it is not
meant to protect anything.

Randomness is always taken from an explicitly passed ``random.Random`` so a
fixed seed reproduces every key, nonce and ciphertext.
"""
from __future__ import annotations

import hashlib
import math
import os
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

NONCE_BITS = 64
NONCE_MASK = (1 << NONCE_BITS) - 1
DIGEST_BYTES = 32

FIXTURE_ENV = "PKMLAB_FIXTURES"

Field = Union[int, str, bytes, bool, None, tuple, list]


class CryptoError(ValueError):
    """Domain error: an argument lies outside the primitive's valid range."""


class ProtocolError(ValueError):
    """A received value would make the handshake unsafe to continue."""


def modexp(base: int, exponent: int, modulus: int) -> int:
    """Left-to-right square-and-multiply."""
    if modulus <= 1:
        raise CryptoError(f"modulus must be > 1, got {modulus}")
    if exponent < 0:
        raise CryptoError("exponent must be non-negative")
    base %= modulus
    result = 1
    for bit in bin(exponent)[2:]:
        result = (result * result) % modulus
        if bit == "1":
            result = (result * base) % modulus
    return result % modulus


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)


def is_probable_prime(n: int, rounds: int = 32, rng: Optional[random.Random] = None) -> bool:
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # fixed witness stream keeps primality checks reproducible
    rng = rng or random.Random(n)
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = modexp(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = (x * x) % n
            if x == n - 1:
                break
        else:
            return False
    return True


# --------------------------------------------------------------------------
# canonical encoding and hashing

def _magnitude(value: int) -> bytes:
    if value < 0:
        raise CryptoError("canonical encoding covers non-negative integers only")
    return value.to_bytes((value.bit_length() + 7) // 8, "big")


def encode_field(value: Field) -> bytes:
    """4-byte big-endian length followed by the field's big-endian bytes.

    Sequences are encoded recursively and wrapped as a single field.
    """
    if isinstance(value, bool):
        body = b"\x01" if value else b"\x00"
    elif isinstance(value, int):
        body = _magnitude(value)
    elif isinstance(value, str):
        body = value.encode("utf-8")
    elif isinstance(value, (bytes, bytearray)):
        body = bytes(value)
    elif value is None:
        body = b""
    elif isinstance(value, (tuple, list)):
        body = encode_fields(*value)
    elif hasattr(value, "canonical_fields"):
        body = encode_fields(*value.canonical_fields())
    else:
        raise TypeError(f"cannot canonically encode {type(value).__name__}")
    return len(body).to_bytes(4, "big") + body


def encode_fields(*fields: Field) -> bytes:
    return b"".join(encode_field(f) for f in fields)


def hash_bytes(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def digest(*fields: Field) -> bytes:
    """H over the canonical encoding of ``fields`` in order."""
    return hash_bytes(encode_fields(*fields))


def nonce_bytes(nonce: int) -> bytes:
    if not 0 <= nonce <= NONCE_MASK:
        raise CryptoError(f"nonce out of 64-bit range: {nonce}")
    return nonce.to_bytes(8, "big")


def draw_nonce(rng: random.Random) -> int:
    return rng.getrandbits(NONCE_BITS)


def f_transform(nonce: int) -> int:
    """Public direction-separating map on nonces: 64-bit complement."""
    if not 0 <= nonce <= NONCE_MASK:
        raise CryptoError(f"nonce out of 64-bit range: {nonce}")
    return ~nonce & NONCE_MASK


def bind_tag(y: int, nonce: int) -> bytes:
    """H(Y || nonce): canonical encoding of ``y`` then the 8 raw nonce bytes."""
    return hash_bytes(encode_field(y) + nonce_bytes(nonce))


def confirm_tag(nonce: int) -> bytes:
    return hash_bytes(nonce_bytes(nonce))


# --------------------------------------------------------------------------
# Diffie-Hellman

@dataclass(frozen=True)
class DhGroup:
    q: int
    g: int

    def __post_init__(self):
        if not is_probable_prime(self.q):
            raise CryptoError(f"group modulus {self.q} is not prime")
        if not 1 < self.g < self.q:
            raise CryptoError("generator must satisfy 1 < g < q")
        if modexp(self.g, 2, self.q) == 1:
            raise CryptoError("generator spans a subgroup of order <= 2")

    def contains(self, y: int) -> bool:
        return 1 < y < self.q


def fixture_dir() -> Path:
    override = os.environ.get(FIXTURE_ENV)
    if override:
        return Path(override)
    return Path(__file__).parent / "data"


def load_group(name: str = "desk") -> DhGroup:
    """Read ``groups/<name>.txt``: modulus then generator, decimal, one per line."""
    path = fixture_dir() / "groups" / f"{name}.txt"
    lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    if len(lines) != 2:
        raise CryptoError(f"{path}: expected 2 parameters, found {len(lines)}")
    return DhGroup(q=int(lines[0]), g=int(lines[1]))


DESK_GROUP = DhGroup(q=23, g=5)


@dataclass(frozen=True)
class DhKeyPair:
    x_private: int
    y_public: int


@dataclass(frozen=True)
class AuthorizationKey:
    value: int


def gen_dh_keypair(group: DhGroup, rng: Optional[random.Random] = None,
                   x: Optional[int] = None) -> DhKeyPair:
    """Draw x uniformly from [2, q-2] unless ``x`` forces it."""
    if x is None:
        if rng is None:
            raise CryptoError("either rng or a forced exponent is required")
        x = rng.randint(2, group.q - 2)
    elif not 1 <= x <= group.q - 2:
        raise CryptoError(f"forced exponent {x} outside [1, q-2]")
    return DhKeyPair(x_private=x, y_public=modexp(group.g, x, group.q))


def derive_ak(own: DhKeyPair, peer_public: int, group: DhGroup) -> AuthorizationKey:
    if not group.contains(peer_public):
        raise ProtocolError(f"peer public value {peer_public} outside (1, q)")
    return AuthorizationKey(modexp(peer_public, own.x_private, group.q))


# --------------------------------------------------------------------------
# textbook RSA

@dataclass(frozen=True)
class PublicKey:
    n: int
    e: int

    def canonical_fields(self):
        return (self.n, self.e)


@dataclass(frozen=True)
class PkKeyPair:
    n: int
    e: int
    d: int

    @property
    def public(self) -> PublicKey:
        return PublicKey(self.n, self.e)


def _random_prime(bits: int, rng: random.Random) -> int:
    while True:
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if is_probable_prime(candidate, rng=random.Random(rng.getrandbits(32))):
            return candidate


def gen_pk_keypair(bits: int, rng: random.Random, e: int = 65537) -> PkKeyPair:
    """RSA keypair with a modulus of exactly ``bits`` bits."""
    while True:
        p = _random_prime(bits // 2, rng)
        q = _random_prime(bits - bits // 2, rng)
        n = p * q
        phi = (p - 1) * (q - 1)
        if p != q and n.bit_length() == bits and math.gcd(e, phi) == 1:
            return PkKeyPair(n=n, e=e, d=pow(e, -1, phi))


def pk_encrypt(pub: Union[PublicKey, PkKeyPair], m: int) -> int:
    if not 0 <= m < pub.n:
        raise CryptoError(f"plaintext must lie in [0, n); got {m}")
    return modexp(m, pub.e, pub.n)


def pk_decrypt(priv: PkKeyPair, c: int) -> int:
    if not 0 <= c < priv.n:
        raise CryptoError(f"ciphertext must lie in [0, n); got {c}")
    return modexp(c, priv.d, priv.n)


def sign(priv: PkKeyPair, data: bytes) -> int:
    """Hash-then-RSA: SHA-256(data) raised to d.  Requires n > 2**256."""
    h = int.from_bytes(hash_bytes(data), "big")
    if h >= priv.n:
        raise CryptoError("modulus too small to sign a 256-bit digest")
    return modexp(h, priv.d, priv.n)


def verify_sig(pub: Union[PublicKey, PkKeyPair], data: bytes, signature: int) -> bool:
    if not 0 <= signature < pub.n:
        return False
    h = int.from_bytes(hash_bytes(data), "big")
    return modexp(signature, pub.e, pub.n) == h


# --------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class Certificate:
    """Flat stand-in for an X.509 certificate."""

    subject_id: str
    subject_public_key: PublicKey
    issuer_id: str
    signature: int
    dh_public: Optional[int] = None

    def signed_fields(self) -> tuple:
        return (self.subject_id, self.subject_public_key.n, self.subject_public_key.e,
                self.dh_public, self.issuer_id)

    def canonical_fields(self) -> tuple:
        return self.signed_fields() + (self.signature,)


@dataclass(frozen=True)
class CertificateAuthority:
    name: str
    keys: PkKeyPair

    @property
    def public(self) -> PublicKey:
        return self.keys.public


@dataclass(frozen=True)
class CertCheck:
    ok: bool
    reason: Optional[str] = None  # "untrusted-issuer" | "bad-signature"

    def __bool__(self):
        return self.ok


def issue_cert(ca: CertificateAuthority, subject_id: str, subject_key: PublicKey,
               dh_public: Optional[int] = None) -> Certificate:
    unsigned = Certificate(subject_id, subject_key, ca.name, 0, dh_public)
    sig = sign(ca.keys, encode_fields(*unsigned.signed_fields()))
    return Certificate(subject_id, subject_key, ca.name, sig, dh_public)


def verify_cert(trusted: Union[CertificateAuthority, Iterable[CertificateAuthority], dict],
                cert: Certificate) -> CertCheck:
    """Accept iff the issuer is trusted and its signature covers every field.

    ``trusted`` maps issuer names to CA public keys; a single CA or an iterable
    of CAs is accepted as a convenience.
    """
    if isinstance(trusted, CertificateAuthority):
        trusted = {trusted.name: trusted.public}
    elif not isinstance(trusted, dict):
        trusted = {ca.name: ca.public for ca in trusted}
    key = trusted.get(cert.issuer_id)
    if key is None:
        return CertCheck(False, "untrusted-issuer")
    if not verify_sig(key, encode_fields(*cert.signed_fields()), cert.signature):
        return CertCheck(False, "bad-signature")
    return CertCheck(True)
