from __future__ import annotations

import base64
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from helpers import H, S, simple_scenario
from impedance_swarm.perception import (
    DEFAULT_PROMPT,
    AnalyzerTimeout,
    PerceptionNoise,
    RemoteAnalyzerError,
    analyze_ground_truth,
    analyze_noisy,
    remote_analyze,
)
from impedance_swarm.scene import DescriptionParseError, Gate, ObstacleKind, parse_description, render_description


def test_ground_truth_experiment_one(experiments):
    d = analyze_ground_truth(experiments[0])
    assert d.total == 4
    assert all(e.kind is ObstacleKind.HARD for e in d.entries)


def test_ground_truth_experiment_two(experiments):
    d = analyze_ground_truth(experiments[1])
    assert (d.total, d.before, d.after) == (2, 2, 0)
    assert d.count(ObstacleKind.SOFT) == 2


def test_ground_truth_empty_scene():
    d = analyze_ground_truth(simple_scenario(gate=Gate((2.0, 1.0), 0.8, 0.0)))
    assert d.total == 0
    assert "no obstacles before the gate" in render_description(d)


def test_ground_truth_total_matches_obstacles(scenarios):
    for s in scenarios:
        assert analyze_ground_truth(s).total == len(s.obstacles)


def test_gate_split():
    s = simple_scenario([(H, (1.2, 0.3), 0.1), (S, (3.0, 1.7), 0.2)], gate=Gate((2.0, 1.0), 0.8, 0.0))
    d = analyze_ground_truth(s)
    assert (d.before, d.after) == (1, 1)


def test_zero_noise_is_ground_truth(experiments):
    for s in experiments:
        out = analyze_noisy(s, PerceptionNoise(seed=5))
        assert out.exact
        assert out.description == analyze_ground_truth(s)


def test_certain_miss_drops_everything(experiments):
    out = analyze_noisy(experiments[0], PerceptionNoise(p_miss=1.0, seed=1))
    assert out.description.total == 0
    assert not out.exact


def test_noisy_is_deterministic_per_seed(experiments):
    noise = PerceptionNoise(0.3, 0.3, 2.0, seed=123)
    a = analyze_noisy(experiments[0], noise)
    b = analyze_noisy(experiments[0], noise)
    assert a == b


def test_jitter_alone_keeps_semantics_mostly():
    # one obstacle, no gate: jitter can never change counts, kinds or the (absent) spacing label
    s = simple_scenario([(H, (1.5, 0.3), 0.1)])
    for seed in range(20):
        assert analyze_noisy(s, PerceptionNoise(jitter_sigma=3.0, seed=seed)).exact


def test_exact_rate_monotone_in_probabilities(experiments):
    seeds = range(300)

    def rate(p_miss, p_mis):
        return np.mean([analyze_noisy(s, PerceptionNoise(p_miss, p_mis, 1.0, seed)).exact for s in experiments for seed in seeds])

    grid = [0.0, 0.05, 0.15, 0.3]
    for pm in grid:
        rates = [rate(pm, q) for q in grid]
        assert all(b <= a for a, b in zip(rates, rates[1:]))
    for q in grid:
        rates = [rate(pm, q) for pm in grid]
        assert all(b <= a for a, b in zip(rates, rates[1:]))


def test_noise_validation():
    with pytest.raises(ValueError):
        PerceptionNoise(p_miss=1.5)
    with pytest.raises(ValueError):
        PerceptionNoise(jitter_sigma=-1)


# -- remote analyzer ----------------------------------------------------------


class _Stub:
    """Tiny HTTP analyzer; ``reply`` maps the decoded request to a response body."""

    def __init__(self, reply, delay=0.0):
        stub = self
        self.requests = []

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                stub.requests.append(body)
                time.sleep(delay)
                out = reply(body).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(out)))
                self.end_headers()
                try:
                    self.wfile.write(out)
                except (BrokenPipeError, ConnectionResetError):
                    pass

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.server.daemon_threads = True
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/analyze"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


CANON = "1 human and 1 cylindrical stand; 1 before the gate; 1 after the gate; widely spaced\nhuman at (20, 30)\ncylindrical stand at (70, 40)"


def test_remote_loopback():
    with _Stub(lambda body: json.dumps({"description": CANON})) as stub:
        got = remote_analyze(stub.url, b"\x89PNG fake")
    assert got == parse_description(CANON)
    req = stub.requests[0]
    assert base64.b64decode(req["image"]) == b"\x89PNG fake"
    assert req["prompt"] == DEFAULT_PROMPT


def test_remote_malformed_description_propagates_parse_error():
    with _Stub(lambda body: json.dumps({"description": "lots of stuff"})) as stub:
        with pytest.raises(DescriptionParseError) as e:
            remote_analyze(stub.url, b"img")
    assert "lots of stuff" in e.value.payload


def test_remote_missing_field_keeps_payload():
    with _Stub(lambda body: '{"answer": 1}') as stub:
        with pytest.raises(RemoteAnalyzerError) as e:
            remote_analyze(stub.url, b"img")
    assert e.value.payload == '{"answer": 1}'


def test_remote_timeout():
    with _Stub(lambda body: json.dumps({"description": CANON}), delay=1.0) as stub:
        with pytest.raises(AnalyzerTimeout):
            remote_analyze(stub.url, b"img", timeout=0.2)


def test_remote_unreachable():
    with pytest.raises(RemoteAnalyzerError):
        remote_analyze("http://127.0.0.1:9/none", b"img", timeout=1.0)
