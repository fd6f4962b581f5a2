"""Labeled barcode-pair generation: correlated vs uncorrelated classes.

Correlated pairs (label 0) tie the second barcode to the first through the
orthonormal Walsh-Hadamard transform; uncorrelated pairs (label 1) are two
independent draws. Pixels come from truncated Gaussian vectors rounded to
bits. Two knobs control the construction:

rounding:
  "sign"        bit = 1 iff the value is negative; exact zeros are broken by
                a fair coin so pixel marginals stay unbiased. Scale-invariant
                in the Gaussian variance. Default.
  "randomized"  bit = 1 with probability (1 - t)/2 for truncated value t, so
                the encoded phase (-1)**bit has expectation t.

partner (correlated class only):
  "encoded"     x1 is rounded first; the partner vector is the transform of
                the sign vector s1 = (-1)**x1 that the first barcode actually
                encodes: z2 = WHT(s1). Concentrates the realized pair overlap
                near E|N(0,1)|. Default.
  "gaussian"    z2 = WHT(z1) applied to the raw Gaussian draw, both vectors
                rounded independently afterwards.

All sampling is reproducible from (seed, n, epsilon, count) plus the mode
knobs; the generator is numpy's PCG64 (``numpy.random.default_rng``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .statevec import as_bits, bits_to_string, fwht

DEFAULT_ROUNDING = "sign"
DEFAULT_PARTNER = "encoded"


def default_epsilon(n: int) -> float:
    """Gaussian variance scale 1/(4 ln N); irrelevant under sign rounding."""
    return 1.0 / (4.0 * np.log(2.0 ** n))


@dataclass(frozen=True)
class SamplePair:
    x1: np.ndarray  # uint8 bits, length N
    x2: np.ndarray
    label: int  # 0 = correlated, 1 = uncorrelated

    def __post_init__(self):
        if self.x1.shape != self.x2.shape:
            raise ValueError("pair members have different lengths")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")

    def key(self) -> tuple:
        """Bitstring identity, used for train/test disjointness checks."""
        return (bits_to_string(self.x1), bits_to_string(self.x2))


@dataclass(frozen=True)
class Dataset:
    samples: tuple  # of SamplePair
    n: int
    epsilon: float
    seed: int

    def __post_init__(self):
        N = 2 ** self.n
        for s in self.samples:
            if s.x1.size != N:
                raise ValueError("sample length inconsistent with n")

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=float)


def truncate(z):
    """Clamp to [-1, 1]; rejects non-finite input."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("truncate requires finite input")
    return np.clip(z, -1.0, 1.0)


def round_to_bit(t, rng) -> np.ndarray:
    """Randomized rounding: P(bit=1) = (1-t)/2, so E[(-1)**bit] = t."""
    t = np.asarray(t, dtype=float)
    if np.any(t < -1.0) or np.any(t > 1.0):
        raise ValueError("round_to_bit requires values in [-1, 1]")
    u = rng.random(t.shape)
    return (u < (1.0 - t) / 2.0).astype(np.uint8)


def sign_round(z, rng) -> np.ndarray:
    """Deterministic sign rounding; exact zeros broken by a fair coin."""
    z = np.asarray(z, dtype=float)
    bits = (z < 0).astype(np.uint8)
    zero = z == 0.0
    if np.any(zero):
        bits[zero] = rng.integers(0, 2, int(zero.sum()), dtype=np.uint8)
    return bits


def _round_vector(z, rng, rounding: str) -> np.ndarray:
    if rounding == "sign":
        return sign_round(truncate(z), rng)
    if rounding == "randomized":
        return round_to_bit(truncate(z), rng)
    raise ValueError(f"unknown rounding mode {rounding!r}")


def sample_pair(n: int, epsilon: float, correlated: bool, rng,
                rounding: str = DEFAULT_ROUNDING,
                partner: str = DEFAULT_PARTNER) -> SamplePair:
    """Draw one labeled pair.

    Uncorrelated: two independent N(0, epsilon I) vectors, truncated and
    rounded. Correlated: the second vector is the orthonormal WHT of either
    the encoded sign vector of x1 ("encoded") or the raw Gaussian draw
    ("gaussian"); in both modes the transform is applied, never re-sampled.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if epsilon is None:
        epsilon = default_epsilon(n)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    N = 2 ** n
    scale = np.sqrt(epsilon)
    z1 = rng.normal(0.0, scale, N)
    if not correlated:
        z2 = rng.normal(0.0, scale, N)
        x1 = _round_vector(z1, rng, rounding)
        x2 = _round_vector(z2, rng, rounding)
        return SamplePair(x1, x2, 1)
    if partner == "gaussian":
        z2 = fwht(z1)
        x1 = _round_vector(z1, rng, rounding)
        x2 = _round_vector(z2, rng, rounding)
    elif partner == "encoded":
        x1 = _round_vector(z1, rng, rounding)
        s1 = 1.0 - 2.0 * x1.astype(float)
        z2 = fwht(s1)
        x2 = _round_vector(z2, rng, rounding)
    else:
        raise ValueError(f"unknown partner mode {partner!r}")
    return SamplePair(x1, x2, 0)


def generate_dataset(n: int, epsilon: float, count_per_class: int, seed: int,
                     rounding: str = DEFAULT_ROUNDING,
                     partner: str = DEFAULT_PARTNER) -> Dataset:
    """count_per_class of each label, interleaved correlated, uncorrelated,
    correlated, ... so every prefix is class-balanced."""
    if count_per_class < 1:
        raise ValueError("count_per_class must be >= 1")
    if epsilon is None:
        epsilon = default_epsilon(n)
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(count_per_class):
        samples.append(sample_pair(n, epsilon, True, rng, rounding, partner))
        samples.append(sample_pair(n, epsilon, False, rng, rounding, partner))
    return Dataset(tuple(samples), n, float(epsilon), int(seed))


class DatasetFormatError(ValueError):
    """Malformed dataset file; message names the offending location/field."""


def save_dataset(ds: Dataset, path) -> None:
    obj = {
        "n": ds.n,
        "epsilon": ds.epsilon,
        "seed": ds.seed,
        "samples": [
            {"x1": bits_to_string(s.x1), "x2": bits_to_string(s.x2), "y": s.label}
            for s in ds.samples
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def load_dataset(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(
                f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}"
            ) from exc
    for field_name in ("n", "epsilon", "seed", "samples"):
        if field_name not in obj:
            raise DatasetFormatError(f"{path}: missing field {field_name!r}")
    n = obj["n"]
    if not isinstance(n, int) or n < 1:
        raise DatasetFormatError(f"{path}: field 'n' must be a positive integer")
    N = 2 ** n
    samples = []
    for i, rec in enumerate(obj["samples"]):
        for field_name in ("x1", "x2", "y"):
            if field_name not in rec:
                raise DatasetFormatError(
                    f"{path}: sample {i} missing field {field_name!r}")
        try:
            x1 = as_bits(rec["x1"])
            x2 = as_bits(rec["x2"])
        except ValueError as exc:
            raise DatasetFormatError(f"{path}: sample {i}: {exc}") from exc
        if x1.size != N or x2.size != N:
            raise DatasetFormatError(
                f"{path}: sample {i}: barcode length != 2**n = {N}")
        if rec["y"] not in (0, 1):
            raise DatasetFormatError(f"{path}: sample {i}: label must be 0 or 1")
        samples.append(SamplePair(x1, x2, int(rec["y"])))
    return Dataset(tuple(samples), n, float(obj["epsilon"]), int(obj["seed"]))
