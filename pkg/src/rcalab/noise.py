"""Noise channels on the alphabet group: additive noise with its kappa
constant and mixture decomposition, the permutation-noise extension, and the
induced PCA local kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Alphabet
from .rules import LocalRule, TorusConfiguration

__all__ = [
    "NoiseModel",
    "additive_noise",
    "permutation_noise",
    "kappa",
    "decompose",
    "channel_matrix",
    "local_kernel",
    "apply_noise",
    "noise_to_json",
    "noise_from_json",
]

MIN_PROB = 1e-9
SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Strictly positive noise on the alphabet.

    kind "additive": q is the law of the added symbol Z.
    kind "permutation": perms is a stack of permutations of Sigma and q the
    law over them; the induced channel matrix must be doubly stochastic with
    all entries positive.  The permutation kind is an extension; bound
    validation in this lab is additive-only.
    """

    alphabet: Alphabet
    kind: str
    q: np.ndarray
    perms: np.ndarray | None = None

    def __init__(self, alphabet, kind, q, perms=None):
        q = np.asarray(q, dtype=np.float64)
        if abs(float(q.sum()) - 1.0) > SUM_TOL:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        if q.min() < MIN_PROB:
            raise ValueError(f"probabilities must be >= {MIN_PROB} (strict positivity)")
        if kind == "additive":
            if perms is not None:
                raise ValueError("additive noise takes no permutations")
            if q.shape != (alphabet.size,):
                raise ValueError("q must have one entry per symbol")
        elif kind == "permutation":
            perms = np.asarray(perms, dtype=np.int64)
            if perms.ndim != 2 or perms.shape[1] != alphabet.size:
                raise ValueError("perms must be a stack of symbol permutations")
            if q.shape != (perms.shape[0],):
                raise ValueError("q must have one entry per permutation")
            ident = np.arange(alphabet.size)
            for p in perms:
                if not np.array_equal(np.sort(p), ident):
                    raise ValueError("each row of perms must be a permutation of Sigma")
        else:
            raise ValueError(f"unknown noise kind {kind!r}")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "perms", perms)
        if kind == "permutation":
            ch = channel_matrix(self)
            if ch.min() <= 0:
                raise ValueError("permutation channel must have all entries positive")

    @property
    def kappa(self) -> float:
        return kappa(self)

    @property
    def kappa_is_derived(self) -> bool:
        """True when kappa comes from the channel matrix rather than q itself."""
        return self.kind == "permutation"


def additive_noise(alphabet: Alphabet, q) -> NoiseModel:
    return NoiseModel(alphabet, "additive", q)


def permutation_noise(alphabet: Alphabet, perms, probs) -> NoiseModel:
    return NoiseModel(alphabet, "permutation", probs, perms=perms)


def kappa(noise: NoiseModel) -> float:
    """Uniform-mixture weight |Sigma| * min q (channel-matrix min for the
    permutation kind, flagged derived)."""
    if noise.kind == "additive":
        return noise.alphabet.size * float(noise.q.min())
    return noise.alphabet.size * float(channel_matrix(noise).min())


def decompose(noise: NoiseModel):
    """Split q = kappa * uniform + (1 - kappa) * q_tilde.

    Uniform q (kappa = 1) returns q_tilde = uniform by convention.
    """
    if noise.kind != "additive":
        raise ValueError("decompose applies to additive noise")
    size = noise.alphabet.size
    k = kappa(noise)
    if k >= 1.0:
        return 1.0, np.full(size, 1.0 / size)
    q_tilde = (noise.q - k / size) / (1.0 - k)
    q_tilde = np.clip(q_tilde, 0.0, None)
    return k, q_tilde


def channel_matrix(noise: NoiseModel) -> np.ndarray:
    """Single-cell transition matrix C[a, b] = Pr(output=b | input=a)."""
    size = noise.alphabet.size
    if noise.kind == "additive":
        a = np.arange(size)
        diff = noise.alphabet.sub(a[None, :].repeat(size, 0), a[:, None].repeat(size, 1))
        return noise.q[diff]
    ch = np.zeros((size, size))
    for p, w in zip(noise.perms, noise.q):
        ch[np.arange(size), p] += w
    return ch


def local_kernel(rule: LocalRule, noise: NoiseModel) -> np.ndarray:
    """PCA local kernel phi(u, b) = q(b - f(u)), one row per neighbourhood
    pattern."""
    if rule.alphabet.factors != noise.alphabet.factors:
        raise ValueError("rule and noise alphabets differ")
    return channel_matrix(noise)[rule.table]


def sample_noise_symbols(noise: NoiseModel, shape, rng: np.random.Generator) -> np.ndarray:
    """Draw iid noise symbols Z ~ q (additive kind only)."""
    if noise.kind != "additive":
        raise ValueError("symbol draws apply to additive noise")
    cum = np.cumsum(noise.q)
    cum[-1] = 1.0
    return np.searchsorted(cum, rng.random(shape), side="right").astype(np.int64)


def apply_noise_array(data: np.ndarray, noise: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    if noise.kind == "additive":
        z = sample_noise_symbols(noise, data.shape, rng)
        return noise.alphabet.add(data, z)
    cum = np.cumsum(noise.q)
    cum[-1] = 1.0
    which = np.searchsorted(cum, rng.random(data.shape), side="right")
    return noise.perms[which, data]


def apply_noise(x, noise: NoiseModel, rng: np.random.Generator):
    """Perturb every cell independently; deterministic given the generator.

    Accepts a TorusConfiguration or a raw symbol array and returns the same
    shape.
    """
    if isinstance(x, TorusConfiguration):
        return TorusConfiguration(x.sides, apply_noise_array(x.data, noise, rng))
    return apply_noise_array(np.asarray(x), noise, rng)


def noise_to_json(noise: NoiseModel) -> dict:
    # Probabilities as decimal strings so configs round-trip without
    # binary-float drift.
    doc = {
        "kind": noise.kind,
        "alphabet": list(noise.alphabet.factors),
        "q": [repr(float(v)) for v in noise.q],
    }
    if noise.kind == "permutation":
        doc["perms"] = noise.perms.tolist()
    return doc


def noise_from_json(doc: dict) -> NoiseModel:
    alphabet = Alphabet(tuple(doc["alphabet"]))
    q = [float(v) for v in doc["q"]]
    if doc["kind"] == "additive":
        return additive_noise(alphabet, q)
    return permutation_noise(alphabet, doc["perms"], q)
