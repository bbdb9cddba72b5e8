"""Deterministic random boundary data.

Random numbers come from SplitMix64, written out here so that any port can
reproduce the coefficients bit for bit:

    state = (state + 0x9E3779B97F4A7C15) mod 2^64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    z = z ^ (z >> 31)
    uniform in [0, 1) = (z >> 11) * 2^-53
"""

from __future__ import annotations

import math

import numpy as np

from .solver import BoundaryData

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53

    def integer(self, lo: int, hi: int) -> int:
        """Uniform on lo..hi inclusive (modulo bias is below 2^-50 here)."""
        return lo + self.next_u64() % (hi - lo + 1)


def reference_boundary_points(n: int, lateral: int = 128, levels: int = 64,
                              bottom_h: float = 1 / 32):
    """Fixed sample of the parabolic boundary of Q_1: (points (k, n), times (k,))."""
    if n == 1:
        sphere = np.array([[-1.0], [1.0]])
    elif n == 2:
        th = 2 * np.pi * np.arange(lateral) / lateral
        sphere = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        k = np.arange(2 * lateral) + 0.5
        z = 1 - 2 * k / (2 * lateral)
        r = np.sqrt(1 - z * z)
        phi = np.pi * (1 + 5 ** 0.5) * k
        sphere = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    ts = -1.0 + np.arange(levels + 1) / levels
    lat_x = np.tile(sphere, (ts.size, 1))
    lat_t = np.repeat(ts, sphere.shape[0])
    h = bottom_h if n < 3 else 2 * bottom_h
    ax = np.arange(-1.0, 1.0 + 0.5 * h, h)
    mesh = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    disk = mesh[np.linalg.norm(mesh, axis=1) <= 1.0]
    return (np.concatenate([lat_x, disk]),
            np.concatenate([lat_t, np.full(disk.shape[0], -1.0)]))


class TrigBoundaryData(BoundaryData):
    """g(x, t) = (1/S) sum_j a_j cos(pi/2 (k_j . x + m_j t) + phi_j).

    S is the maximum of |sum| over ``reference_boundary_points``, so the
    data has sup-norm exactly 1 on that sample.
    """

    def __init__(self, seed: int, smoothness: float = 1.0, n: int = 2, terms: int = 8):
        rng = SplitMix64(seed)
        self.seed = int(seed) & MASK64
        self.smoothness = float(smoothness)
        self.n = n
        K = np.empty((terms, n))
        m = np.empty(terms)
        amp = np.empty(terms)
        phase = np.empty(terms)
        for j in range(terms):
            for i in range(n):
                K[j, i] = rng.integer(-2, 2)
            m[j] = rng.integer(0, 2)
            phase[j] = 2 * math.pi * rng.uniform()
            w = 1.0 + float(K[j] @ K[j]) + m[j] ** 2
            amp[j] = (2 * rng.uniform() - 1) / w ** (0.5 * self.smoothness)
        self.K, self.m, self.amp, self.phase = K, m, amp, phase
        self.scale = 1.0
        x, t = reference_boundary_points(n)
        self.scale = float(np.max(np.abs(self._raw(x, t))))
        super().__init__(self._eval, f"trig(seed={self.seed}, s={self.smoothness})")

    def _raw(self, x, t):
        arg = (0.5 * math.pi) * (x @ self.K.T + np.multiply.outer(t, self.m)) + self.phase
        return np.cos(arg) @ self.amp

    def _eval(self, x, t):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, self.n)
        tt = np.broadcast_to(np.asarray(t, dtype=float), flat.shape[:1])
        return (self._raw(flat, tt) / self.scale).reshape(x.shape[:-1])

    def bind(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.n)
        base = (0.5 * math.pi) * (x @ self.K.T)
        amp, phase, m, scale = self.amp, self.phase, self.m, self.scale

        def at(t):
            arg = (base + (0.5 * math.pi) * (t * m)) + phase
            return (np.cos(arg) @ amp) / scale
        return at

    def coefficients(self):
        return {"K": self.K.tolist(), "m": self.m.tolist(), "amp": self.amp.tolist(),
                "phase": self.phase.tolist(), "scale": self.scale}


def generate_boundary_data(seed: int, smoothness: float = 1.0, n: int = 2,
                           terms: int = 8) -> TrigBoundaryData:
    return TrigBoundaryData(seed, smoothness, n, terms)
