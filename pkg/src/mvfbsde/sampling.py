"""Reproducible Brownian increments shared by solvers, estimator, and oracles.

Increments are drawn with counter-based Philox substreams: paths are grouped
into fixed blocks of 4096, and block b uses the Philox counter offset
b << 128.  Path p therefore depends only on (seed, p, N, tau), never on the
total number of paths requested, so a study can enlarge an ensemble without
perturbing existing paths.  Normal variates come from NumPy's ziggurat
sampler; determinism is promised per implementation, not across libraries.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .core import InvalidArgumentError, TimeGrid

__all__ = ["SampleConfig", "gen_increments", "derive_seed"]

_BLOCK = 4096


@dataclass(frozen=True)
class SampleConfig:
    """How many paths to draw and from which substream family."""

    seed: int
    paths: int
    antithetic: bool = False

    def __post_init__(self):
        if self.paths < 1:
            raise InvalidArgumentError("paths must be >= 1")
        if self.antithetic and self.paths % 2 != 0:
            raise InvalidArgumentError("antithetic sampling needs an even path count")


def derive_seed(*entropy: int) -> int:
    """Hash a tuple of integers into a 64-bit stream seed."""
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def _standard_normal_blocks(seed: int, n_paths: int, n_cols: int) -> np.ndarray:
    n_blocks = -(-n_paths // _BLOCK)
    out = np.empty((n_blocks * _BLOCK, n_cols))
    for b in range(n_blocks):
        gen = Generator(Philox(key=seed, counter=b << 128))
        out[b * _BLOCK : (b + 1) * _BLOCK] = gen.standard_normal((_BLOCK, n_cols))
    return out[:n_paths]


def gen_increments(cfg: SampleConfig, grid: TimeGrid) -> np.ndarray:
    """Draw a (paths, N) matrix of i.i.d. Normal(0, tau) increments.

    The output is a pure function of (seed, paths, N, tau, antithetic).
    With the antithetic flag, row 2k+1 is the negation of row 2k.
    """
    if cfg.antithetic:
        base = _standard_normal_blocks(cfg.seed, cfg.paths // 2, grid.N)
        out = np.empty((cfg.paths, grid.N))
        out[0::2] = base
        out[1::2] = -base
    else:
        out = _standard_normal_blocks(cfg.seed, cfg.paths, grid.N)
    out *= np.sqrt(grid.tau)
    return out
