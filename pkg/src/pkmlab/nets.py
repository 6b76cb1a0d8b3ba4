"""Hand-built Petri-net models of the PKMv2, EAP-TLS and proposed handshakes.

Each transition takes 5 time units.  Message transitions that appear on both
sides of the link carry a ``side`` choice (send / recv) so one transition
covers a request and its reception.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional

from .cpn.net import Net, NetBuilder, Var, when

DELAY = 5

M = Var("m")
L = Var("l")
V = Var("v")


def build_proposed_net() -> Net:
    b = NetBuilder("proposed")
    b.colorset("MS_STATE", ["idle", "wait_m2", "m2_ok", "keyed", "m3_sent", "done"])
    b.colorset("BS_STATE", ["listen", "m1_ok", "wait_m3", "wait_m4", "m4_ok", "done"])
    b.colorset("MSG", ["M1", "M2", "M3", "M4"])
    b.colorset("UNIT", ["free", "ca", "nonce", "ak"])

    b.place("MS_State", "MS_STATE", ["idle"])
    b.place("BS_State", "BS_STATE", ["listen"])
    b.place("Medium", "UNIT", ["free"])
    b.place("Uplink", "MSG")
    b.place("Downlink", "MSG")
    b.place("MS_Nonce", "UNIT")
    b.place("BS_Nonce", "UNIT")
    b.place("MS_AK", "UNIT")
    b.place("BS_AK", "UNIT")
    b.place("CA", "UNIT", ["ca"])

    sides = {"side": ("send", "recv")}
    S = dict(side="send")
    R = dict(side="recv")

    # M1: MS certificate
    t = b.transition("M1_Certificate", DELAY, choices=sides)
    b.consume("MS_State", t, when("idle", **S))
    b.consume("Medium", t, when("free", **S))
    b.consume("Uplink", t, when("M1", **R))
    b.consume("BS_State", t, when("listen", **R))
    b.consume("CA", t, when("ca", **R))
    b.produce(t, "MS_State", when("wait_m2", **S))
    b.produce(t, "Uplink", when("M1", **S))
    b.produce(t, "BS_State", when("m1_ok", **R))
    b.produce(t, "Medium", when("free", **R))
    b.produce(t, "CA", when("ca", **R))

    # M2: BS certificate, Y_BS, encrypted nonce, binding tag
    t = b.transition("M2_NonceBinding", DELAY, choices=sides)
    b.consume("BS_State", t, when("m1_ok", **S))
    b.consume("Medium", t, when("free", **S))
    b.consume("Downlink", t, when("M2", **R))
    b.consume("MS_State", t, when("wait_m2", **R))
    b.consume("CA", t, when("ca", **R))
    b.produce(t, "BS_State", when("wait_m3", **S))
    b.produce(t, "BS_Nonce", when("nonce", **S))
    b.produce(t, "Downlink", when("M2", **S))
    b.produce(t, "MS_State", when("m2_ok", **R))
    b.produce(t, "MS_Nonce", when("nonce", **R))
    b.produce(t, "Medium", when("free", **R))
    b.produce(t, "CA", when("ca", **R))

    # M3: Y_MS with tag over f(nonce)
    t = b.transition("M3_DhBinding", DELAY, choices=sides)
    b.consume("MS_State", t, when("keyed", **S))
    b.consume("Medium", t, when("free", **S))
    b.consume("MS_Nonce", t, when("nonce", **S))
    b.consume("Uplink", t, when("M3", **R))
    b.consume("BS_State", t, when("wait_m3", **R))
    b.consume("BS_Nonce", t, when("nonce", **R))
    b.produce(t, "MS_State", when("m3_sent", **S))
    b.produce(t, "MS_Nonce", when("nonce", **S))
    b.produce(t, "Uplink", when("M3", **S))
    b.produce(t, "BS_State", when("wait_m4", **R))
    b.produce(t, "BS_Nonce", when("nonce", **R))
    b.produce(t, "Medium", when("free", **R))

    # M4: key confirmation H(nonce)
    t = b.transition("M4_Confirm", DELAY, choices=sides)
    b.consume("MS_State", t, when("m3_sent", **S))
    b.consume("Medium", t, when("free", **S))
    b.consume("MS_Nonce", t, when("nonce", **S))
    b.consume("Uplink", t, when("M4", **R))
    b.consume("BS_State", t, when("wait_m4", **R))
    b.produce(t, "MS_State", when("done", **S))
    b.produce(t, "Uplink", when("M4", **S))
    b.produce(t, "BS_State", when("m4_ok", **R))
    b.produce(t, "Medium", when("free", **R))

    # AK = g^(x_ms x_bs) mod q, computed by each side in turn
    t = b.transition("Derive_AK", DELAY, choices={"side": ("ms", "bs")})
    b.consume("MS_State", t, when("m2_ok", side="ms"))
    b.consume("BS_State", t, when("m4_ok", side="bs"))
    b.consume("BS_Nonce", t, when("nonce", side="bs"))
    b.produce(t, "MS_State", when("keyed", side="ms"))
    b.produce(t, "MS_AK", when("ak", side="ms"))
    b.produce(t, "BS_State", when("done", side="bs"))
    b.produce(t, "BS_AK", when("ak", side="bs"))
    return b.build()


def build_pkmv2_net() -> Net:
    b = NetBuilder("pkmv2")
    b.colorset("SS_STATE", ["idle", "info_sent", "wait_reply", "verified", "done"])
    b.colorset("BS_STATE", ["idle", "wait_ack", "deciding", "authorized", "denied"])
    b.colorset("MSG", ["AuthInfo", "AuthRequest", "AuthReply", "AuthAck"])
    b.colorset("VERDICT", ["accepted", "rejected"])

    b.place("SS_State", "SS_STATE", ["idle"])
    b.place("BS_State", "BS_STATE", ["idle"])
    b.place("Uplink", "MSG")
    b.place("Downlink", "MSG")
    b.place("CA", initial=["ca"])
    b.place("SS_Cert", initial=["ss_cert"])
    b.place("BS_Cert", initial=["bs_cert"])
    b.place("SS_Nonce", initial=["n_s"])
    b.place("BS_Nonce")
    b.place("SS_PrePAK")
    b.place("BS_PrePAK")
    b.place("BS_Verdict", "VERDICT")

    msgs = ("AuthInfo", "AuthRequest", "AuthAck")
    t = b.transition("SS_Send", DELAY, choices={"m": msgs})
    b.consume("SS_State", t, when("idle", m="AuthInfo"), when("info_sent", m="AuthRequest"),
              when("verified", m="AuthAck"))
    b.consume("SS_Cert", t, when("ss_cert", m="AuthRequest"))
    b.consume("SS_Nonce", t, when("n_s", m="AuthRequest"))
    b.produce(t, "SS_State", when("info_sent", m="AuthInfo"), when("wait_reply", m="AuthRequest"),
              when("done", m="AuthAck"))
    b.produce(t, "SS_Cert", when("ss_cert", m="AuthRequest"))
    b.produce(t, "SS_Nonce", when("n_s", m="AuthRequest"))
    b.produce(t, "Uplink", M)

    t = b.transition("BS_Authorize", DELAY)
    b.consume("Uplink", t, "AuthInfo", "AuthRequest")
    b.consume("BS_State", t, "idle")
    b.read("CA", t, "ca")
    b.read("BS_Cert", t, "bs_cert")
    b.produce(t, "BS_State", "wait_ack")
    b.produce(t, "BS_Nonce", "n_b")
    b.produce(t, "BS_PrePAK", "prepak")
    b.produce(t, "Downlink", "AuthReply")

    t = b.transition("SS_Verify", DELAY)
    b.consume("Downlink", t, "AuthReply")
    b.consume("SS_State", t, "wait_reply")
    b.read("SS_Nonce", t, "n_s")
    b.read("CA", t, "ca")
    b.produce(t, "SS_State", "verified")
    b.produce(t, "SS_PrePAK", "prepak")

    # liveness (n_b) and checksum check on the ack: success or failure
    t = b.transition("BS_CheckAck", DELAY, choices={"v": ("accepted", "rejected")})
    b.consume("Uplink", t, "AuthAck")
    b.consume("BS_State", t, "wait_ack")
    b.consume("BS_Nonce", t, "n_b")
    b.produce(t, "BS_State", "deciding")
    b.produce(t, "BS_Verdict", V)

    t = b.transition("BS_Install", DELAY)
    b.consume("BS_Verdict", t, V)
    b.consume("BS_State", t, "deciding")
    b.consume("BS_PrePAK", t, when("prepak", v="rejected"))
    b.produce(t, "BS_State", when("authorized", v="accepted"), when("denied", v="rejected"))
    b.produce(t, "BS_PrePAK", when("prepak", v="accepted"))
    return b.build()


def build_eap_net() -> Net:
    b = NetBuilder("eap")
    b.colorset("S_STATE", ["idle", "started", "await_cert", "await_result", "authenticated",
                           "aborted"])
    b.colorset("AP_STATE", ["idle", "relay"])
    b.colorset("AS_STATE", ["idle", "await_client_cert", "done"])
    b.colorset("EAPOL", ["EapolStart", "IdentityRequest", "IdentityResponse", "ServerCert",
                         "ClientCert", "Success"])
    b.colorset("RADIUS", ["AccessRequest", "ClientCert", "ServerCert", "AccessAccept"])
    b.colorset("LINKED", [(link, m) for link in ("primary", "secondary")
                          for m in ("AccessRequest", "ClientCert", "ServerCert", "AccessAccept")])
    b.colorset("PORT", ["unauthorized", "authorized"])

    b.place("Supplicant", "S_STATE", ["idle"])
    b.place("Authenticator", "AP_STATE", ["idle"])
    b.place("AuthServer", "AS_STATE", ["idle"])
    b.place("ToSupplicant", "EAPOL")
    b.place("ToAuthenticator", "EAPOL")
    b.place("RadiusUp", "LINKED")
    b.place("RadiusDown", "LINKED")
    b.place("ServerOut", "RADIUS")
    b.place("CA", initial=["ca"])
    b.place("S_Cert", initial=["s_cert"])
    b.place("AS_Cert", initial=["as_cert"])
    b.place("Port", "PORT", ["unauthorized"])

    links = {"link": ("primary", "secondary")}

    t = b.transition("S_Start", DELAY)
    b.consume("Supplicant", t, "idle")
    b.produce(t, "Supplicant", "started")
    b.produce(t, "ToAuthenticator", "EapolStart")

    t = b.transition("AP_RequestIdentity", DELAY)
    b.consume("ToAuthenticator", t, "EapolStart")
    b.consume("Authenticator", t, "idle")
    b.produce(t, "Authenticator", "relay")
    b.produce(t, "ToSupplicant", "IdentityRequest")

    t = b.transition("S_Receive", DELAY, guard={"m": ("IdentityRequest", "Success")})
    b.consume("ToSupplicant", t, M)
    b.consume("Supplicant", t, when("started", m="IdentityRequest"),
              when("await_result", m="Success"))
    b.produce(t, "Supplicant", when("await_cert", m="IdentityRequest"),
              when("authenticated", m="Success"))
    b.produce(t, "ToAuthenticator", when("IdentityResponse", m="IdentityRequest"))

    # EAPOL -> RADIUS, over either back-haul link
    t = b.transition("AP_ForwardUp", DELAY, choices=links,
                     guard={"m": ("IdentityResponse", "ClientCert")})
    b.consume("ToAuthenticator", t, M)
    b.read("Authenticator", t, "relay")
    b.produce(t, "RadiusUp", when((Var("link"), "AccessRequest"), m="IdentityResponse"),
              when((Var("link"), "ClientCert"), m="ClientCert"))

    t = b.transition("AS_Challenge", DELAY)
    b.consume("RadiusUp", t, (L, "AccessRequest"))
    b.consume("AuthServer", t, "idle")
    b.read("AS_Cert", t, "as_cert")
    b.produce(t, "AuthServer", "await_client_cert")
    b.produce(t, "ServerOut", "ServerCert")

    t = b.transition("AS_Transmit", DELAY, choices=links)
    b.consume("ServerOut", t, M)
    b.produce(t, "RadiusDown", (Var("link"), M))

    t = b.transition("AP_ForwardDown", DELAY)
    b.consume("RadiusDown", t, (L, M))
    b.read("Authenticator", t, "relay")
    b.consume("Port", t, when("unauthorized", m="AccessAccept"))
    b.produce(t, "Port", when("authorized", m="AccessAccept"))
    b.produce(t, "ToSupplicant", when("ServerCert", m="ServerCert"),
              when("Success", m="AccessAccept"))

    t = b.transition("S_ValidateServerCert", DELAY, choices={"ok": (True, False)})
    b.consume("ToSupplicant", t, "ServerCert")
    b.consume("Supplicant", t, "await_cert")
    b.read("CA", t, "ca")
    b.consume("S_Cert", t, when("s_cert", ok=True))
    b.produce(t, "S_Cert", when("s_cert", ok=True))
    b.produce(t, "Supplicant", when("await_result", ok=True), when("aborted", ok=False))
    b.produce(t, "ToAuthenticator", when("ClientCert", ok=True))

    t = b.transition("AS_ValidateClientCert", DELAY)
    b.consume("RadiusUp", t, (L, "ClientCert"))
    b.consume("AuthServer", t, "await_client_cert")
    b.read("CA", t, "ca")
    b.produce(t, "AuthServer", "done")
    b.produce(t, "ServerOut", "AccessAccept")
    return b.build()


@dataclass(frozen=True)
class Expected:
    places: int
    transitions: int
    steps: int
    model_time: float
    ss_nodes: int
    ss_arcs: int
    dead_markings: int
    reported_model_time: Optional[float] = None  # as printed in the source table


@dataclass(frozen=True)
class NetCatalogEntry:
    name: str
    builder: Callable[[], Net]
    expected: Expected
    canonical_seed: int = 0

    @property
    def net(self) -> Net:
        return self.builder()


CATALOG: Dict[str, NetCatalogEntry] = {
    "proposed": NetCatalogEntry("proposed", build_proposed_net,
                                Expected(10, 5, 10, 50.0, 11, 10, 1, 50.0)),
    "pkmv2": NetCatalogEntry("pkmv2", build_pkmv2_net,
                             Expected(12, 5, 7, 35.0, 10, 9, 2, 40.0)),
    "eap": NetCatalogEntry("eap", build_eap_net,
                           Expected(12, 9, 13, 65.0, 19, 22, 2, 90.0),
                           canonical_seed=2),
}


def get_net(name: str) -> Net:
    try:
        return CATALOG[name].net
    except KeyError:
        raise KeyError(f"unknown net {name!r}; choose from {sorted(CATALOG)}") from None
