"""Shared fixtures for the CPCM decoder tests."""
import numpy as np

from polarcm.channels import make_constellation
from polarcm.construction import code_from_profile, ga_evolve, surrogate_means_from_pam
from polarcm.cpcm import GenieDetector, cpcm_decode, cpcm_map
from polarcm.interleave import interleaver2
from polarcm.polar import polar_transform


def make_code(m, N, K, sigma=0.4):
    const = make_constellation(m, "sp")
    means = surrogate_means_from_pam(const, sigma, "mlc")
    return const, code_from_profile(ga_evolve(interleaver2(N, m), means), K)


def transmit(code, const, L, sigma, seed):
    rng = np.random.default_rng(seed)
    u = code.place(rng.integers(0, 2, size=(L, code.K), dtype=np.int8))
    frame = cpcm_map(polar_transform(u), const.m, rng)
    y = const.modulate(frame.tuples) + sigma * rng.standard_normal(frame.layout.T)
    return u, frame, y


class ScriptedDetector:
    """Genie answers, overridden to fail on chosen (codeword, attempt) pairs.

    ``script[l]`` is a set of 1-based attempt numbers to fail, or ``"all"``.
    """

    def __init__(self, true_u, script):
        self.genie = GenieDetector(true_u)
        self.script = script
        self.count = {}

    def __call__(self, l, u_hat):
        k = self.count[l] = self.count.get(l, 0) + 1
        rule = self.script.get(l, ())
        if rule == "all" or k in rule:
            return False
        return self.genie(l, u_hat)


def scripted_run(script, L=5, m=2, N=16):
    """Decode a noiseless frame while the detector follows ``script``."""
    const, code = make_code(m, N, N // 2)
    u, frame, y = transmit(code, const, L, 1e-6, seed=3)
    det = ScriptedDetector(u, script)
    res = cpcm_decode(y, code, const, 1e-6, frame.tuples, det, L)
    return res.state, res, u
