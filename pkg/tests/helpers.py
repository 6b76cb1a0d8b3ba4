"""Shared test machinery: single-field mutation of transcript messages."""
import random
from dataclasses import fields, replace

from pkmlab.crypto import Certificate
from pkmlab.messages import SaDescriptor, SecurityCapabilities
from pkmlab.protocols import drive, new_sessions

# fields no party authenticates, by design of the protocol being modelled
UNAUTHENTICATED = {
    "pkmv2": {("Pkmv2AuthInfo", "manufacturer_cert")},
}


def _flip_int(v: int, rng: random.Random) -> int:
    width = max(v.bit_length(), 1)
    return v ^ (1 << rng.randrange(width))


def _mutate_str(s: str, rng: random.Random) -> str:
    if not s:
        return "x"
    i = rng.randrange(len(s))
    return s[:i] + chr((ord(s[i]) - 32 + rng.randrange(1, 90)) % 95 + 32) + s[i + 1:]


def mutate_value(v, rng: random.Random):
    if isinstance(v, bool):
        return not v
    if isinstance(v, int):
        return _flip_int(v, rng)
    if isinstance(v, str):
        return _mutate_str(v, rng)
    if isinstance(v, bytes):
        raw = bytearray(v)
        i = rng.randrange(len(raw))
        raw[i] ^= rng.randrange(1, 256)
        return bytes(raw)
    if isinstance(v, Certificate):
        which = rng.choice(["subject_id", "n", "e", "issuer_id", "signature", "dh_public"])
        if which in ("n", "e"):
            key = v.subject_public_key
            return replace(v, subject_public_key=replace(key, **{which: _flip_int(getattr(key, which), rng)}))
        if which == "dh_public":
            return replace(v, dh_public=rng.randrange(2, 1 << 16) if v.dh_public is None else _flip_int(v.dh_public, rng))
        return replace(v, **{which: mutate_value(getattr(v, which), rng)})
    if isinstance(v, SecurityCapabilities):
        suites = list(v.cipher_suites)
        i = rng.randrange(len(suites))
        suites[i] = _mutate_str(suites[i], rng)
        return SecurityCapabilities(tuple(suites))
    if isinstance(v, SaDescriptor):
        if rng.random() < 0.5:
            return replace(v, said=_flip_int(v.said, rng) & 0xFFFF)
        return replace(v, cipher_suite=_mutate_str(v.cipher_suite, rng))
    if isinstance(v, tuple):
        items = list(v)
        i = rng.randrange(len(items))
        items[i] = mutate_value(items[i], rng)
        return tuple(items)
    raise TypeError(type(v))


def mutable_fields(transcript, protocol):
    skip = UNAUTHENTICATED.get(protocol, set())
    out = []
    for e in transcript:
        for f in fields(e.message):
            if (e.message.variant, f.name) not in skip:
                out.append((e.step, f.name))
    return out


def mutated_run(protocol, world, seed, step, fname, rng):
    """Re-run the seeded handshake with one field of message ``step`` altered.

    Returns (RunResult, mutated message) or None if no valid mutation exists.
    """
    counter = {"n": 0}
    box = {}

    def tamper(env):
        counter["n"] += 1
        if counter["n"] != step:
            return [env]
        msg = env.message
        for _ in range(20):
            try:
                new = replace(msg, **{fname: mutate_value(getattr(msg, fname), rng)})
            except ValueError:
                continue
            if new != msg:
                box["msg"] = new
                return [replace(env, message=new)]
        return [env]

    result = drive(protocol, new_sessions(protocol, world, seed), tamper)
    if "msg" not in box:
        return None
    return result, box["msg"]


def dual_acceptance(result):
    return result.all_accepted and result.keys_agree
