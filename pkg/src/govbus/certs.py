"""Agent certificates: Ed25519 signatures over the identity triple.

Adoption under any law of an ensemble requires a certificate signed by
the ensemble's configured authority. The deterministic constructor
derives the key from a seed so simulations stay reproducible.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from .values import Triple


def _triple_bytes(triple: Triple) -> bytes:
    return json.dumps(list(triple), separators=(",", ":")).encode("utf-8")


@dataclass(frozen=True)
class Certificate:
    triple: Triple
    issuer: str
    signature: bytes

    def to_json(self) -> dict:
        return {"triple": list(self.triple), "issuer": self.issuer, "signature": self.signature.hex()}

    @classmethod
    def from_json(cls, data: dict) -> "Certificate":
        triple = tuple(str(p) for p in data["triple"])
        if len(triple) != 3:
            raise ValueError("certificate triple must have three parts")
        return cls(triple, str(data["issuer"]), bytes.fromhex(data["signature"]))


class CertAuthority:
    """Issues certificates; holds the signing key."""

    def __init__(self, private_key: Ed25519PrivateKey, issuer: str = "ca"):
        self._key = private_key
        self.issuer = issuer

    @classmethod
    def generate(cls, issuer: str = "ca") -> "CertAuthority":
        return cls(Ed25519PrivateKey.generate(), issuer)

    @classmethod
    def deterministic(cls, seed: str, issuer: str = "test-ca") -> "CertAuthority":
        raw = hashlib.sha256(seed.encode("utf-8")).digest()
        return cls(Ed25519PrivateKey.from_private_bytes(raw), issuer)

    def issue(self, triple: Triple) -> Certificate:
        return Certificate(triple, self.issuer, self._key.sign(_triple_bytes(triple)))

    def verifier(self) -> "CertVerifier":
        return CertVerifier(self._key.public_key(), self.issuer)


class CertVerifier:
    """Checks certificates against the authority's public key."""

    def __init__(self, public_key: Ed25519PublicKey, issuer: str = "ca"):
        self._key = public_key
        self.issuer = issuer

    def verify(self, cert: Certificate) -> bool:
        if cert.issuer != self.issuer:
            return False
        try:
            self._key.verify(cert.signature, _triple_bytes(cert.triple))
            return True
        except InvalidSignature:
            return False
