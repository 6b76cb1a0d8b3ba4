import random

import pytest
from hypothesis import given, settings, strategies as st

from pkmlab import crypto
from pkmlab.crypto import (
    DESK_GROUP, CryptoError, DhGroup, PkKeyPair, ProtocolError, PublicKey,
    bind_tag, confirm_tag, derive_ak, encode_field, encode_fields, f_transform, gen_dh_keypair,
    gen_pk_keypair, hash_bytes, issue_cert, load_group, modexp, pk_decrypt, pk_encrypt, sign,
    verify_cert, verify_sig,
)

TOY = PkKeyPair(n=3233, e=17, d=2753)


def naive_pow(b, e, m):
    r = 1 % m
    for _ in range(e):
        r = (r * b) % m
    return r


@pytest.mark.parametrize("b,e,m,want", [(5, 0, 23, 1), (5, 6, 23, 8), (5, 15, 23, 19)])
def test_modexp_examples(b, e, m, want):
    assert modexp(b, e, m) == want


def test_modexp_matches_repeated_multiplication():
    for m in (7, 23, 101):
        for b in range(51):
            for e in range(51):
                assert modexp(b, e, m) == naive_pow(b, e, m)


@pytest.mark.parametrize("m", [1, 0, -5])
def test_modexp_rejects_small_modulus(m):
    with pytest.raises(CryptoError):
        modexp(3, 2, m)


def test_dh_symmetry_exhaustive():
    q, g = 23, 5
    for a in range(1, 22):
        for b in range(1, 22):
            assert modexp(modexp(g, a, q), b, q) == modexp(modexp(g, b, q), a, q)


def test_dh_keypair_forced_and_seeded():
    assert gen_dh_keypair(DESK_GROUP, x=6).y_public == 8
    assert gen_dh_keypair(DESK_GROUP, x=1).y_public == 5
    a = gen_dh_keypair(DESK_GROUP, random.Random(7))
    b = gen_dh_keypair(DESK_GROUP, random.Random(7))
    assert a == b
    assert 2 <= a.x_private <= 21 and 1 < a.y_public < 23


def test_dh_keypair_draw_range_covers_interval():
    rng = random.Random(0)
    xs = {gen_dh_keypair(DESK_GROUP, rng).x_private for _ in range(2000)}
    assert xs == set(range(2, 22))


def test_derive_ak_examples():
    ms, bs = gen_dh_keypair(DESK_GROUP, x=6), gen_dh_keypair(DESK_GROUP, x=15)
    assert (ms.y_public, bs.y_public) == (8, 19)
    assert derive_ak(ms, bs.y_public, DESK_GROUP).value == 2
    assert derive_ak(bs, ms.y_public, DESK_GROUP).value == 2
    one = gen_dh_keypair(DESK_GROUP, x=1)
    assert derive_ak(one, one.y_public, DESK_GROUP).value == 5


@pytest.mark.parametrize("peer", [0, 1, 23, 24])
def test_derive_ak_rejects_degenerate_peer(peer):
    with pytest.raises(ProtocolError):
        derive_ak(gen_dh_keypair(DESK_GROUP, x=3), peer, DESK_GROUP)


def test_group_validation():
    with pytest.raises(CryptoError):
        DhGroup(21, 5)
    with pytest.raises(CryptoError):
        DhGroup(23, 22)  # order-2 element
    with pytest.raises(CryptoError):
        DhGroup(23, 23)


def test_group_fixtures_load():
    assert load_group("desk") == DESK_GROUP
    big = load_group("realistic")
    assert big.q.bit_length() == 512
    assert crypto.is_probable_prime((big.q - 1) // 2)  # safe prime


def test_group_fixture_override(tmp_path, monkeypatch):
    (tmp_path / "groups").mkdir()
    (tmp_path / "groups" / "desk.txt").write_text("47\n5\n")
    monkeypatch.setenv(crypto.FIXTURE_ENV, str(tmp_path))
    assert load_group("desk") == DhGroup(47, 5)
    (tmp_path / "groups" / "bad.txt").write_text("47\n")
    with pytest.raises(CryptoError):
        load_group("bad")


def test_encoding_layout():
    assert encode_field(0) == b"\x00\x00\x00\x00"
    assert encode_field(258) == b"\x00\x00\x00\x02\x01\x02"
    assert encode_field("ab") == b"\x00\x00\x00\x02ab"
    assert encode_fields(1, b"\xff") == b"\x00\x00\x00\x01\x01\x00\x00\x00\x01\xff"
    # length prefix makes concatenation unambiguous
    assert encode_fields("a", "bc") != encode_fields("ab", "c")
    with pytest.raises(CryptoError):
        encode_field(-1)


def test_hash_determinism_and_distinctness():
    assert hash_bytes(b"m") == hash_bytes(b"m")
    assert hash_bytes(b"m") != hash_bytes(b"m'")
    assert len(hash_bytes(b"")) == 32


def test_bind_tag_layout():
    assert bind_tag(19, 7) == hash_bytes(b"\x00\x00\x00\x01\x13" + (7).to_bytes(8, "big"))
    assert bind_tag(19, 7) == bind_tag(19, 7)
    assert bind_tag(19, 7) != bind_tag(8, 7)
    assert bind_tag(19, f_transform(7)) != bind_tag(19, 7)
    assert confirm_tag(7) == hash_bytes((7).to_bytes(8, "big"))


BOUNDARY = [0, crypto.NONCE_MASK, 0x5555555555555555, 0xAAAAAAAAAAAAAAAA, 1, 1 << 63,
            0x00000000FFFFFFFF, 0xFFFFFFFF00000000]


@pytest.mark.parametrize("n", BOUNDARY)
def test_f_transform_involution_no_fixed_point(n):
    assert f_transform(n) != n
    assert f_transform(f_transform(n)) == n


def test_f_transform_examples_and_range():
    assert f_transform(0) == 0xFFFFFFFFFFFFFFFF
    for bad in (-1, 1 << 64):
        with pytest.raises(CryptoError):
            f_transform(bad)


@given(st.integers(0, crypto.NONCE_MASK))
def test_f_transform_property(n):
    assert f_transform(n) != n and f_transform(f_transform(n)) == n


def test_toy_rsa_examples():
    assert pk_encrypt(TOY, 65) == 2790
    assert pk_decrypt(TOY, 2790) == 65
    assert pk_encrypt(TOY, 0) == 0
    with pytest.raises(CryptoError):
        pk_encrypt(TOY, 3233)
    with pytest.raises(CryptoError):
        pk_decrypt(TOY, -1)


def test_toy_rsa_roundtrip_exhaustive():
    for m in range(TOY.n):
        assert pk_decrypt(TOY, pk_encrypt(TOY, m)) == m


def test_generated_rsa_keys():
    keys = gen_pk_keypair(512, random.Random(3))
    assert keys.n.bit_length() == 512
    rng = random.Random(4)
    for _ in range(20):
        m = rng.randrange(keys.n)
        assert pk_decrypt(keys, pk_encrypt(keys.public, m)) == m
    assert gen_pk_keypair(512, random.Random(3)) == keys


def test_signatures(world):
    keys = world.ss.keys
    sig = sign(keys, b"payload")
    assert verify_sig(keys.public, b"payload", sig)
    assert not verify_sig(keys.public, b"payload!", sig)
    assert not verify_sig(world.bs.keys.public, b"payload", sig)
    assert not verify_sig(keys.public, b"payload", keys.n + 1)


def test_certificates(world, rogue):
    ca = world.ca
    cert = issue_cert(ca, "node-7", world.ss.keys.public)
    assert verify_cert(ca, cert).ok
    assert verify_cert([ca], cert).ok
    assert verify_cert(world.trusted, cert).ok
    flipped = "nodf-7"
    from dataclasses import replace
    assert verify_cert(ca, replace(cert, subject_id=flipped)).reason == "bad-signature"
    rogue_ca, _ = rogue
    forged = issue_cert(rogue_ca, "node-7", world.ss.keys.public)
    check = verify_cert(ca, forged)
    assert not check and check.reason == "untrusted-issuer"


def _mutations(cert, rng, count):
    from dataclasses import replace
    for _ in range(count):
        which = rng.choice(["subject_id", "n", "e", "issuer_id", "dh_public"])
        if which in ("subject_id", "issuer_id"):
            raw = bytearray(getattr(cert, which).encode())
            i = rng.randrange(len(raw))
            raw[i] = (raw[i] + rng.randrange(1, 256)) % 256
            yield replace(cert, **{which: raw.decode("latin-1")})
        elif which in ("n", "e"):
            v = getattr(cert.subject_public_key, which)
            raw = bytearray(v.to_bytes((v.bit_length() + 7) // 8, "big"))
            i = rng.randrange(len(raw))
            raw[i] ^= rng.randrange(1, 256)
            key = replace(cert.subject_public_key, **{which: int.from_bytes(raw, "big")})
            yield replace(cert, subject_public_key=key)
        else:
            yield replace(cert, dh_public=rng.randrange(1, 1 << 16))


def test_certificate_rejects_single_byte_mutations(world):
    cert = issue_cert(world.ca, "bs-0001", world.bs.keys.public, dh_public=None)
    rng = random.Random(11)
    for bad in _mutations(cert, rng, 300):
        assert not verify_cert(world.ca, bad).ok


@settings(max_examples=60, deadline=None)
@given(st.binary(min_size=1, max_size=64), st.data())
def test_signature_rejects_payload_mutation(payload, data):
    from pkmlab.protocols import make_world
    keys = make_world(0).bs.keys
    sig = sign(keys, payload)
    i = data.draw(st.integers(0, len(payload) - 1))
    delta = data.draw(st.integers(1, 255))
    mutated = bytearray(payload)
    mutated[i] = (mutated[i] + delta) % 256
    assert not verify_sig(keys.public, bytes(mutated), sig)


def test_public_key_canonical_fields():
    assert encode_field(PublicKey(3233, 17)) == encode_field((3233, 17))
