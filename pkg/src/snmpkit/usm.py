"""User-based Security Model primitives for SNMPv3.

Key derivation, HMAC message authentication (MD5/SHA1, 96-bit tags) and
DES-CBC privacy.  Engine discovery itself lives in the client since it
needs a transport; this module keeps the per-session engine state.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
import time
from dataclasses import dataclass, field

from cryptography.hazmat.primitives.ciphers import Cipher, modes
try:  # single-DES moved to the decrepit module in newer releases
    from cryptography.hazmat.decrepit.ciphers.algorithms import TripleDES
except ImportError:  # pragma: no cover
    from cryptography.hazmat.primitives.ciphers.algorithms import TripleDES

from .errors import SnmpError

AUTH_MD5 = "md5"
AUTH_SHA1 = "sha1"
PRIV_DES = "des"

MAC_LENGTH = 12
TIME_WINDOW = 150  # seconds of tolerated clock skew before resync

_DIGESTS = {AUTH_MD5: hashlib.md5, AUTH_SHA1: hashlib.sha1}
_MEGABYTE = 1024 * 1024


@dataclass(frozen=True)
class Credential:
    """An SNMPv3 user with optional auth and priv secrets."""

    user: str
    auth: tuple | None = None  # (protocol, passphrase)
    priv: tuple | None = None

    def __post_init__(self):
        if self.priv is not None and self.auth is None:
            raise SnmpError("priv requires auth")

    @property
    def security_level(self):
        if self.priv is not None:
            return "authPriv"
        if self.auth is not None:
            return "authNoPriv"
        return "noAuthNoPriv"

    @classmethod
    def create(cls, user, auth=None, priv=None):
        """Accepts bare passphrases; the auth protocol defaults to md5."""
        return cls(user, _coerce_secret(auth, AUTH_MD5, _DIGESTS),
                   _coerce_secret(priv, PRIV_DES, {PRIV_DES: None}))


def _coerce_secret(spec, default_protocol, known):
    if spec is None:
        return None
    if isinstance(spec, str):
        return (default_protocol, spec)
    protocol, passphrase = spec
    if protocol not in known:
        raise SnmpError(f"unsupported protocol {protocol!r}")
    return (protocol, passphrase)


def password_to_key(passphrase, protocol):
    """Digest 1 MiB of the cyclically repeated passphrase (RFC 3414 style)."""
    if not passphrase:
        raise SnmpError("empty passphrase")
    digest = _DIGESTS[protocol]()
    data = passphrase.encode("utf-8") if isinstance(passphrase, str) else bytes(passphrase)
    repeated = data * (_MEGABYTE // len(data) + 1)
    digest.update(repeated[:_MEGABYTE])
    return digest.digest()


def localize_key(key, engine_id, protocol):
    """Bind a password-derived key to one peer engine."""
    return _DIGESTS[protocol](key + bytes(engine_id) + key).digest()


def sign(message, localized_key, protocol):
    """HMAC over the message (auth_params zero-filled), truncated to 12 octets."""
    return hmac.new(localized_key, message, _DIGESTS[protocol]).digest()[:MAC_LENGTH]


def verify(message, localized_key, protocol, mac):
    return hmac.compare_digest(sign(message, localized_key, protocol), bytes(mac))


class _SaltCounter:
    """Process-wide monotonically increasing 32-bit salt, randomly seeded."""

    def __init__(self):
        self._lock = threading.Lock()
        self._value = secrets.randbelow(2 ** 32)

    def next(self):
        with self._lock:
            self._value = (self._value + 1) % 2 ** 32
            return self._value


_salt_counter = _SaltCounter()


def _des_cipher(localized_priv_key, iv):
    key = localized_priv_key[:8]
    return Cipher(TripleDES(key * 3), modes.CBC(iv))


def encrypt_scoped_pdu(plaintext, localized_priv_key, engine_boots, salt=None):
    """DES-CBC encrypt; returns (ciphertext, 8-octet priv_params)."""
    if len(localized_priv_key) < 16:
        raise SnmpError("priv key material shorter than 16 octets")
    if salt is None:
        salt = _salt_counter.next()
    priv_params = (engine_boots % 2 ** 32).to_bytes(4, "big") + \
        (salt % 2 ** 32).to_bytes(4, "big")
    pre_iv = localized_priv_key[8:16]
    iv = bytes(a ^ b for a, b in zip(pre_iv, priv_params))
    pad = (-len(plaintext)) % 8
    padded = plaintext + bytes(pad)
    enc = _des_cipher(localized_priv_key, iv).encryptor()
    return enc.update(padded) + enc.finalize(), priv_params


def decrypt_scoped_pdu(ciphertext, localized_priv_key, priv_params):
    if len(localized_priv_key) < 16:
        raise SnmpError("priv key material shorter than 16 octets")
    if len(priv_params) != 8:
        raise SnmpError(f"priv_params must be 8 octets, got {len(priv_params)}")
    if len(ciphertext) % 8:
        raise SnmpError("ciphertext length not a multiple of 8")
    pre_iv = localized_priv_key[8:16]
    iv = bytes(a ^ b for a, b in zip(pre_iv, priv_params))
    dec = _des_cipher(localized_priv_key, iv).decryptor()
    # trailing DES padding is delimited away by the inner BER length
    return dec.update(bytes(ciphertext)) + dec.finalize()


@dataclass
class EngineState:
    """Discovered peer engine identity, clock and localized keys."""

    engine_id: bytes = b""
    engine_boots: int = 0
    engine_time: int = 0
    synced_at: float = field(default=0.0, compare=False)

    auth_key: bytes | None = None
    priv_key: bytes | None = None

    @property
    def discovered(self):
        return bool(self.engine_id)

    def adopt(self, engine_id, boots, engine_time, credential, now=None):
        """Take on a (new) engine identity; re-localizes keys when it changes."""
        engine_id = bytes(engine_id)
        if engine_id != self.engine_id:
            self.auth_key = None
            self.priv_key = None
            if credential.auth is not None:
                proto, passphrase = credential.auth
                self.auth_key = localize_key(
                    password_to_key(passphrase, proto), engine_id, proto)
            if credential.priv is not None:
                auth_proto = credential.auth[0]
                _, passphrase = credential.priv
                self.priv_key = localize_key(
                    password_to_key(passphrase, auth_proto), engine_id, auth_proto)
        self.engine_id = engine_id
        self.engine_boots = boots
        self.engine_time = engine_time
        self.synced_at = time.monotonic() if now is None else now

    def current_time(self, now=None):
        """Extrapolate the peer's engine time from the local clock."""
        if now is None:
            now = time.monotonic()
        return self.engine_time + int(now - self.synced_at)

    def in_time_window(self, peer_boots, peer_time, now=None):
        return peer_boots == self.engine_boots and \
            abs(peer_time - self.current_time(now)) <= TIME_WINDOW
