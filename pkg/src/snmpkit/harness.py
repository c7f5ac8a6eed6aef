"""Deterministic in-process test fabric.

A virtual clock, a lossy loopback channel with packet counters, and a
scripted SNMPv3 responder.  Transport-level behavior (retransmission,
timeouts, exchange counts) becomes observable and reproducible without
real sockets or sleeping.
"""

from __future__ import annotations

import random

from . import agent as agent_mod, ber, messages, usm
from .errors import EndpointClosedError
from .messages import (
    FLAG_AUTH, FLAG_PRIV, REPORT,
    Pdu, ScopedPdu, UsmParams, V3Message, VarBind,
)


class VirtualClock:
    """Explicitly advanced monotonic time source."""

    def __init__(self, start=0.0):
        self.now = float(start)

    def __call__(self):
        return self.now

    def advance(self, seconds):
        if seconds < 0:
            raise ValueError("the clock only moves forward")
        self.now += seconds


class FakeChannel:
    """Loopback datagram path from a client endpoint into a responder.

    Requests may be dropped by ordinal (drop_requests, 1-based) or with a
    seeded probability; delivery is otherwise FIFO and exact.  Counters
    satisfy client_sent == agent_received + dropped.
    """

    def __init__(self, responder, clock=None, drop_requests=(),
                 loss_probability=0.0, seed=0, delay=0.0):
        self.responder = responder
        self.clock = clock or VirtualClock()
        self.drop_requests = set(drop_requests)
        self.loss_probability = loss_probability
        self._rng = random.Random(seed)
        self.delay = delay
        self._queue = []  # [(ready_time, datagram)]
        self.client_sent = 0
        self.client_received = 0
        self.agent_received = 0
        self.agent_sent = 0
        self.dropped = 0

    @property
    def exchanges(self):
        """Completed request/response pairs."""
        return self.agent_sent

    @property
    def total_packets(self):
        """Datagrams put on the wire in either direction."""
        return self.client_sent + self.agent_sent

    def _drop(self):
        if self.client_sent in self.drop_requests:
            return True
        return self.loss_probability > 0 and \
            self._rng.random() < self.loss_probability

    def send(self, data):
        self.client_sent += 1
        if self._drop():
            self.dropped += 1
            return
        self.agent_received += 1
        reply = self.responder(data)
        if reply is not None:
            self.agent_sent += 1
            self._queue.append((self.clock() + self.delay, reply))

    def receive(self, timeout):
        """Next queued datagram within timeout virtual seconds, else None.

        The clock advances to the delivery instant, or by the full
        timeout when nothing arrives — no real time passes either way.
        """
        if self._queue and self._queue[0][0] <= self.clock() + timeout:
            ready, data = self._queue.pop(0)
            if ready > self.clock():
                self.clock.advance(ready - self.clock())
            self.client_received += 1
            return data
        self.clock.advance(timeout)
        return None


class LoopbackEndpoint:
    """Endpoint facade over a FakeChannel; plugs into the exchange loop."""

    def __init__(self, channel):
        self.channel = channel
        self.closed = False
        self.local_address = ("127.0.0.1", 0)

    def send(self, payload):
        if self.closed:
            raise EndpointClosedError("send on closed endpoint")
        self.channel.send(bytes(payload))

    def receive(self, timeout):
        if self.closed:
            raise EndpointClosedError("receive on closed endpoint")
        return self.channel.receive(timeout)

    def close(self):
        self.closed = True


def agent_responder(tree, ctx):
    """Adapt an agent dispatch tree to the channel's responder contract."""
    return lambda data: agent_mod.handle_datagram(tree, ctx, data)


def connect(responder, clock=None, **channel_options):
    """Wire a responder behind a loopback endpoint.

    Returns (endpoint, channel, clock); pass the endpoint to a session
    via transport_factory and share the clock with it.
    """
    clock = clock or VirtualClock()
    channel = FakeChannel(responder, clock, **channel_options)
    return LoopbackEndpoint(channel), channel, clock


def loopback_session_kwargs(endpoint, clock, **extra):
    """Session options that route through the harness deterministically."""
    kwargs = {"transport_factory": lambda host, port: endpoint,
              "clock": clock}
    kwargs.update(extra)
    return kwargs


class ScriptedV3Responder:
    """A miniature v3 engine for exercising discovery and USM handling.

    Serves variables from an agent dispatch tree, answers unknown-engine
    probes with a Report, and counts the two kinds of exchange so tests
    can assert the discovery flow (one Report, then authenticated
    traffic only).
    """

    def __init__(self, tree, ctx, credential,
                 engine_id=b"\x80\x00\x13\x70\x05harness",
                 engine_boots=1, engine_time=1000):
        self.tree = tree
        self.ctx = ctx
        self.credential = credential
        self.engine_id = engine_id
        self.engine_boots = engine_boots
        self.engine_time = engine_time
        self.report_count = 0
        self.auth_count = 0
        self.unknown_engine_count = 0
        auth_proto, auth_pass = credential.auth
        self.auth_proto = auth_proto
        self.auth_key = usm.localize_key(
            usm.password_to_key(auth_pass, auth_proto), engine_id, auth_proto)
        self.priv_key = None
        if credential.priv is not None:
            self.priv_key = usm.localize_key(
                usm.password_to_key(credential.priv[1], auth_proto),
                engine_id, auth_proto)

    def __call__(self, data):
        try:
            msg = messages.decode_message(data)
        except Exception:
            return None
        if not isinstance(msg, V3Message):
            return None
        if not msg.usm.engine_id:
            return self._report(msg, messages.USM_STATS_UNKNOWN_ENGINE_IDS,
                                unknown_engine=True)
        if msg.usm.engine_id != self.engine_id:
            return self._report(msg, messages.USM_STATS_UNKNOWN_ENGINE_IDS,
                                unknown_engine=True)
        if msg.flags & FLAG_AUTH:
            if not self._verify(msg, data):
                return self._report(msg, messages.USM_STATS_WRONG_DIGESTS)
        if msg.flags & FLAG_PRIV:
            plaintext = usm.decrypt_scoped_pdu(
                msg.encrypted_pdu, self.priv_key, msg.usm.priv_params)
            scoped, _ = messages.decode_scoped_pdu(plaintext)
        else:
            scoped = msg.scoped_pdu
        self.auth_count += 1
        response = agent_mod.dispatch(self.tree, scoped.pdu, self.ctx)
        return self._respond(msg, scoped, response)

    def _verify(self, msg, wire):
        mac = msg.usm.auth_params
        if len(mac) != usm.MAC_LENGTH:
            return False
        msg.usm.auth_params = bytes(usm.MAC_LENGTH)
        blanked = messages.encode_message(msg)
        msg.usm.auth_params = mac
        return usm.verify(blanked, self.auth_key, self.auth_proto, mac)

    def _usm_params(self, **extra):
        return UsmParams(engine_id=self.engine_id,
                         engine_boots=self.engine_boots,
                         engine_time=self.engine_time, **extra)

    def _report(self, msg, stats_oid, unknown_engine=False):
        self.report_count += 1
        if unknown_engine:
            self.unknown_engine_count += 1
        request_id = 0
        if msg.scoped_pdu is not None and msg.scoped_pdu.pdu is not None:
            request_id = msg.scoped_pdu.pdu.request_id
        report = Pdu(REPORT, request_id,
                     bindings=[VarBind(ber.Oid(stats_oid), ber.Counter32(1))])
        reply = V3Message(msg.msg_id, 0, self._usm_params(),
                          ScopedPdu(self.engine_id, b"", report))
        return messages.encode_message(reply)

    def _respond(self, msg, scoped, response_pdu):
        flags = msg.flags & (FLAG_AUTH | FLAG_PRIV)
        usm_params = self._usm_params(user_name=msg.usm.user_name)
        reply = V3Message(msg.msg_id, flags, usm_params)
        out_scoped = ScopedPdu(self.engine_id, scoped.context_name, response_pdu)
        if flags & FLAG_PRIV:
            plaintext = messages.encode_scoped_pdu(out_scoped)
            reply.encrypted_pdu, usm_params.priv_params = \
                usm.encrypt_scoped_pdu(plaintext, self.priv_key,
                                       self.engine_boots)
        else:
            reply.scoped_pdu = out_scoped
        if flags & FLAG_AUTH:
            usm_params.auth_params = bytes(usm.MAC_LENGTH)
            wire = messages.encode_message(reply)
            usm_params.auth_params = usm.sign(wire, self.auth_key,
                                              self.auth_proto)
        return messages.encode_message(reply)
