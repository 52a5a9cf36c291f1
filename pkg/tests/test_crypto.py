import hashlib

import pytest
from hypothesis import given
from hypothesis import strategies as st

from owncash.crypto import (
    Digest,
    EncodingError,
    SeedLengthError,
    Signature,
    generate_keypair,
    hash_bytes,
    sign,
    verify,
)

# RFC 8032 section 7.1, TEST 1 and TEST 2
RFC_TEST1 = dict(
    secret="9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60",
    public="d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a",
    message="",
    signature=(
        "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065224901555"
        "fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b"
    ),
)
RFC_TEST2 = dict(
    secret="4ccd089b28ff96da9db6c346ec114e0f5b8a319f35aba624da8cf6ed4fb8a6fb",
    public="3d4017c3e843895a92b70aa74d1b7ebc9c982ccf2ec4968cc0cd55f12af4660c",
    message="72",
    signature=(
        "92a009a9f0d4cab8720e820b5f642540a2b27b5416503f8fb3762223ebdb69da"
        "085ac1e43e15996e458f3613d0f11d8c387b2eaeb4302aeeb00d291612bb0c00"
    ),
)
ZERO_SEED_PUBLIC = "3b6a27bcceb6a42d62a3a8d02a6f0d73653215771de243a63ac048a18b59da29"
SHA256_EMPTY = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
SHA256_ABC = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


@pytest.mark.parametrize("vector", [RFC_TEST1, RFC_TEST2], ids=["rfc1", "rfc2"])
def test_ed25519_known_answers(vector):
    kp = generate_keypair(bytes.fromhex(vector["secret"]))
    assert kp.public_key.hex() == vector["public"]
    msg = bytes.fromhex(vector["message"])
    sig = sign(msg, kp)
    assert sig.hex() == vector["signature"]
    assert verify(msg, sig, kp.public_key)


def test_zero_seed_public_key():
    assert generate_keypair(bytes(32)).public_key.hex() == ZERO_SEED_PUBLIC


def test_keygen_deterministic_and_distinct():
    a = generate_keypair(bytes(32))
    assert a == generate_keypair(bytes(32))
    assert a.public_key != generate_keypair(bytes(31) + b"\x01").public_key


@pytest.mark.parametrize("length", [0, 31, 33, 64])
def test_bad_seed_length(length):
    with pytest.raises(SeedLengthError):
        generate_keypair(bytes(length))


def test_private_key_not_in_repr():
    kp = generate_keypair(bytes.fromhex(RFC_TEST1["secret"]))
    assert RFC_TEST1["secret"] not in repr(kp)
    assert repr(kp.private_key) not in repr(kp)


def test_hash_known_answers():
    assert hash_bytes(b"").hex() == SHA256_EMPTY
    assert hash_bytes(b"abc").hex() == SHA256_ABC


def test_verify_wrong_key_and_message():
    k1, k2 = generate_keypair(bytes(32)), generate_keypair(b"\x01" * 32)
    sig = sign(b"m", k1)
    assert verify(b"m", sig, k1.public_key)
    assert not verify(b"m", sig, k2.public_key)
    assert not verify(b"n", sig, k1.public_key)


def test_verify_malformed_lengths():
    kp = generate_keypair(bytes(32))
    sig = sign(b"m", kp)
    with pytest.raises(EncodingError):
        verify(b"m", sig, kp.public_key[:31])
    with pytest.raises(EncodingError):
        verify(b"m", sig.value[:63], kp.public_key)
    with pytest.raises(EncodingError):
        Digest(b"\x00" * 31)
    with pytest.raises(EncodingError):
        Signature(b"")


def test_verify_non_point_key_is_clean_false():
    kp = generate_keypair(bytes(32))
    # y = 2 is not the y-coordinate of any Ed25519 point
    not_a_point = (2).to_bytes(32, "little")
    assert verify(b"m", sign(b"m", kp), not_a_point) is False


@given(seed=st.binary(min_size=32, max_size=32), msg=st.binary(max_size=256))
def test_sign_verify_round_trip(seed, msg):
    kp = generate_keypair(seed)
    sig = sign(msg, kp)
    assert verify(msg, sig, kp.public_key)
    assert sign(msg, kp) == sig


@given(
    seed=st.binary(min_size=32, max_size=32),
    msg=st.binary(min_size=1, max_size=128),
    bit=st.integers(min_value=0),
)
def test_one_bit_flip_rejected(seed, msg, bit):
    kp = generate_keypair(seed)
    sig = sign(msg, kp)
    i = bit % (len(msg) * 8)
    tampered = bytearray(msg)
    tampered[i // 8] ^= 1 << (i % 8)
    assert not verify(bytes(tampered), sig, kp.public_key)


@given(st.binary(max_size=512))
def test_hash_matches_hashlib_and_extension_differs(data):
    assert hash_bytes(data).value == hashlib.sha256(data).digest()
    assert hash_bytes(data) == hash_bytes(data)
    assert hash_bytes(data) != hash_bytes(data + b"\x00")
