"""Executable models of IEEE 802.16 PKM, EAP-TLS and a certificate-bound DH handshake,
with a symbolic attacker and a timed coloured Petri-net analyser."""

__version__ = "0.1.0"
