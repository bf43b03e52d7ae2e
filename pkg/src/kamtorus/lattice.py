"""Finite lattice truncations and equal-norm block decompositions.

Sites are integer d-tuples inside the sup-norm box |a|_inf <= cutoff.  A
finite set of tangential sites carries action-angle variables; every other
retained site is a normal-mode site.  Normal-mode matrices are organised in
blocks: the transitive closure of the pre-equivalence

    a ~ b  iff  |a| = |b|  and  |a - b| <= delta,

computed with exact integer squared norms.  Tangential sites do not take part
in the graph (they are not indices of normal-mode matrices).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

Site = tuple


def _as_site(a) -> Site:
    return tuple(int(x) for x in a)


def norm2(a) -> int:
    """Exact squared Euclidean norm of an integer site."""
    return sum(int(x) * int(x) for x in a)


def site_str(a) -> str:
    return "(" + ",".join(str(x) for x in a) + ")"


@dataclass(frozen=True)
class LatticeConfig:
    """Truncated lattice: dimension, tangential sites, sup-norm cutoff.

    The normal set is derived: every site of the box that is not tangential.
    """

    dim: int
    tangential: tuple
    cutoff: int
    normal: tuple = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("lattice dimension must be >= 1")
        if self.cutoff < 0:
            raise ConfigError("lattice cutoff must be >= 0")
        tang = tuple(_as_site(a) for a in self.tangential)
        if len(set(tang)) != len(tang):
            raise ConfigError("tangential sites must be distinct")
        for a in tang:
            if len(a) != self.dim:
                raise ConfigError(f"tangential site {a} has wrong dimension")
            if max(abs(x) for x in a) > self.cutoff:
                raise ConfigError(
                    f"tangential site {site_str(a)} lies outside the cutoff box"
                )
        object.__setattr__(self, "tangential", tang)
        tset = set(tang)
        rng = range(-self.cutoff, self.cutoff + 1)
        normal = tuple(
            a for a in itertools.product(rng, repeat=self.dim) if a not in tset
        )
        object.__setattr__(self, "normal", normal)

    @property
    def n_tangential(self) -> int:
        return len(self.tangential)

    @property
    def n_normal(self) -> int:
        return len(self.normal)

    def retained(self):
        """All retained sites, tangential first."""
        return self.tangential + self.normal

    def to_json(self) -> str:
        return json.dumps(
            {
                "dim": self.dim,
                "tangential": [list(a) for a in self.tangential],
                "cutoff": self.cutoff,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "LatticeConfig":
        data = json.loads(text)
        return cls(
            dim=data["dim"],
            tangential=tuple(tuple(a) for a in data["tangential"]),
            cutoff=data["cutoff"],
        )


@dataclass(frozen=True)
class BlockDecomposition:
    """Partition of the normal sites into equal-norm, delta-close blocks."""

    delta: float
    sites: tuple  # normal sites, lexicographic order
    blocks: tuple  # tuple of blocks; each block a lexicographically sorted tuple
    d_delta: float  # supremum of block diameters (Euclidean)

    def __post_init__(self):
        index = {}
        for bi, block in enumerate(self.blocks):
            for a in block:
                index[a] = bi
        object.__setattr__(self, "_block_index", index)
        object.__setattr__(
            self, "_site_index", {a: i for i, a in enumerate(self.sites)}
        )

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def block_of(self, a) -> int:
        """Index of the block containing site ``a``."""
        return self._block_index[_as_site(a)]

    def site_index(self, a) -> int:
        return self._site_index[_as_site(a)]

    def block_distance(self, i: int, j: int) -> float:
        """Minimal pairwise Euclidean distance between two blocks."""
        best = math.inf
        for a in self.blocks[i]:
            for b in self.blocks[j]:
                d2 = sum((x - y) ** 2 for x, y in zip(a, b))
                if d2 < best:
                    best = d2
        return math.sqrt(best)

    def to_json(self) -> str:
        return json.dumps(
            {
                "delta": self.delta,
                "sites": [list(a) for a in self.sites],
                "blocks": [[list(a) for a in block] for block in self.blocks],
                "d_delta": self.d_delta,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "BlockDecomposition":
        data = json.loads(text)
        return cls(
            delta=data["delta"],
            sites=tuple(tuple(a) for a in data["sites"]),
            blocks=tuple(tuple(tuple(a) for a in block) for block in data["blocks"]),
            d_delta=data["d_delta"],
        )


def block_diameter(block) -> float:
    """Euclidean diameter of a set of sites (0.0 for singletons)."""
    sites = [_as_site(a) for a in block]
    best = 0
    for i, a in enumerate(sites):
        for b in sites[i + 1 :]:
            d2 = sum((x - y) ** 2 for x, y in zip(a, b))
            if d2 > best:
                best = d2
    return math.sqrt(best)


def _equal_norm_neighbors(a: Site, delta: float):
    """Integer points b != a with |b| = |a| and |a-b| <= delta (all of Z^d)."""
    d = len(a)
    r = int(math.floor(delta))
    n2 = norm2(a)
    delta2 = delta * delta
    out = []
    for off in itertools.product(range(-r, r + 1), repeat=d):
        if all(x == 0 for x in off):
            continue
        if sum(x * x for x in off) > delta2 + 1e-9:
            continue
        b = tuple(a[i] + off[i] for i in range(d))
        if norm2(b) == n2:
            out.append(b)
    return out


def build_blocks(cfg: LatticeConfig, delta: float) -> BlockDecomposition:
    """Partition the retained normal sites into blocks at scale ``delta``.

    Pre-equivalence edges join normal sites of equal exact squared norm at
    Euclidean distance <= delta; blocks are the connected components.  If any
    edge would connect a retained normal site to a site outside the cutoff
    box, the truncation would cut a block in half and the configuration is
    rejected.  Block ids order blocks by their lexicographically smallest
    member, which makes the decomposition deterministic.
    """
    if delta < 0:
        raise ConfigError("delta must be >= 0")
    tang = set(cfg.tangential)
    normal = sorted(cfg.normal)
    normal_set = set(normal)

    adj = {a: [] for a in normal}
    for a in normal:
        for b in _equal_norm_neighbors(a, delta):
            if b in tang:
                # Tangential sites are not normal-matrix indices; the edge
                # simply does not exist.
                continue
            if b not in normal_set:
                raise ConfigError(
                    f"pre-equivalence edge {site_str(a)} ~ {site_str(b)} leaves "
                    f"the cutoff box (cutoff={cfg.cutoff}, delta={delta}); "
                    "enlarge the cutoff or shrink delta"
                )
            adj[a].append(b)

    seen = set()
    blocks = []
    for a in normal:
        if a in seen:
            continue
        comp = [a]
        seen.add(a)
        stack = [a]
        while stack:
            cur = stack.pop()
            for b in adj[cur]:
                if b not in seen:
                    seen.add(b)
                    comp.append(b)
                    stack.append(b)
        blocks.append(tuple(sorted(comp)))

    blocks.sort(key=lambda block: block[0])
    d_delta = max((block_diameter(block) for block in blocks), default=0.0)
    return BlockDecomposition(
        delta=float(delta),
        sites=tuple(normal),
        blocks=tuple(blocks),
        d_delta=d_delta,
    )


def _entries_of(matrix, sites):
    """Iterate (a, b, value) over a sparse dict or a dense array."""
    if hasattr(matrix, "H") and not isinstance(matrix, np.ndarray):
        matrix = matrix.H
    if isinstance(matrix, dict):
        for (a, b), v in matrix.items():
            yield _as_site(a), _as_site(b), complex(v)
    else:
        arr = np.asarray(matrix)
        n = len(sites)
        if arr.shape != (n, n):
            raise ConfigError(
                f"dense matrix shape {arr.shape} does not match {n} normal sites"
            )
        for i in range(n):
            for j in range(n):
                v = complex(arr[i, j])
                if v != 0:
                    yield sites[i], sites[j], v


def is_normal_form(matrix, dec: BlockDecomposition, tol: float = 1e-12) -> bool:
    """Check a normal-mode matrix against the normal-form shape.

    In complex coordinates a normal-form quadratic is <u, Q v> with Q
    Hermitian and block-diagonal over the decomposition.  ``matrix`` may be a
    sparse dict {(a, b): value}, a dense array indexed like ``dec.sites``, or
    an object exposing such data via an ``H`` attribute.
    """
    entries = {}
    for a, b, v in _entries_of(matrix, dec.sites):
        if dec.block_of(a) != dec.block_of(b):
            if abs(v) > tol:
                return False
            continue
        entries[(a, b)] = v
    for (a, b), v in entries.items():
        if abs(v - entries.get((b, a), 0j).conjugate()) > tol:
            return False
    return True
