"""Deterministic synthetic configurations with certified structure."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spaces import DissimilaritySpace, induced_triplet
from .structure import is_point_like

KINDS = ("geometric_chain", "separated_blocks", "ball_with_outliers", "ordering_example", "four_group_outlier")


class CertificateError(ValueError):
    """A generated configuration failed its structural certificate."""


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator {self.kind!r}; choose from {', '.join(KINDS)}")


@dataclass(frozen=True)
class Synthetic:
    space: DissimilaritySpace
    blocks: tuple = ()
    outliers: tuple = ()


def generate(spec: GeneratorSpec) -> DissimilaritySpace:
    return generate_detailed(spec).space


def generate_detailed(spec: GeneratorSpec) -> Synthetic:
    rng = np.random.default_rng(spec.seed)
    build = {
        "geometric_chain": _geometric_chain,
        "separated_blocks": _separated_blocks,
        "ball_with_outliers": _ball_with_outliers,
        "ordering_example": _ordering_example,
        "four_group_outlier": _four_group_outlier,
    }[spec.kind]
    return build(rng, **spec.params)


def _geometric_chain(rng, n=5, epsilon=0.1):
    """Points ``1 / (2 + epsilon)^i`` on the line, uniform masses."""
    if n < 1 or not epsilon > 0:
        raise ValueError("geometric chain needs n >= 1 and epsilon > 0")
    x = 1.0 / (2.0 + epsilon) ** np.arange(1, n + 1)
    return Synthetic(DissimilaritySpace.from_coords(x, labels=[f"x{i}" for i in range(1, n + 1)]))


def _disk(rng, k, radius, dim=2):
    # uniform in the ball via normalised Gaussians
    v = rng.standard_normal((k, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = radius * rng.random(k) ** (1.0 / dim)
    return v * r[:, None]


def _separated_blocks(rng, sizes=(20, 30, 50), intra_scales=None, inter_scale=20.0):
    """Blobs of the given sizes centred at ``inter_scale * (2^k - 1)`` on a line.

    Centre gaps are pairwise distinct, so the closest pair of blocks is
    always blocks 0 and 1. Each block is certified point-like.
    """
    sizes = [int(s) for s in sizes]
    if not sizes or min(sizes) < 1:
        raise ValueError("block sizes must be positive")
    if intra_scales is None:
        intra_scales = [1.0 / (1 + k) for k in range(len(sizes))]
    if len(intra_scales) != len(sizes):
        raise ValueError("one intra scale per block is required")
    pts, blocks, labels, start = [], [], [], 0
    for k, (size, scale) in enumerate(zip(sizes, intra_scales)):
        centre = np.array([inter_scale * (2 ** k - 1), 0.0])
        pts.append(centre + _disk(rng, size, scale))
        blocks.append(frozenset(range(start, start + size)))
        labels += [f"b{k}_{i}" for i in range(size)]
        start += size
    space = DissimilaritySpace.from_coords(np.vstack(pts), labels=labels)
    _certify_blocks(space, blocks)
    return Synthetic(space, tuple(blocks))


def _certify_blocks(space, blocks):
    d = space.d
    t = induced_triplet(space)
    for b in blocks:
        idx = sorted(b)
        rest = [i for i in range(space.n) if i not in b]
        if rest and not d[np.ix_(idx, idx)].max() < d[np.ix_(idx, rest)].min():
            raise CertificateError("blocks overlap; increase inter_scale")
        if not is_point_like(t, b):
            raise CertificateError("generated block is not point-like; increase inter_scale")


def _ball_with_outliers(rng, n_ball=90, n_out=10, radius=1.0, outlier_distance=10.0):
    """Uniform points in a disk plus outliers beyond ``outlier_distance``.

    Outliers sit at random angles and radii in
    ``[outlier_distance, 1.5 * outlier_distance]``; the group's diameter must
    stay below every group-to-outlier distance.
    """
    ball = _disk(rng, n_ball, radius)
    ang = rng.uniform(0.0, 2.0 * np.pi, n_out)
    rad = outlier_distance * (1.0 + 0.5 * rng.random(n_out))
    out = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    labels = [f"x{i}" for i in range(n_ball)] + [f"z{i}" for i in range(n_out)]
    space = DissimilaritySpace.from_coords(np.vstack([ball, out]), labels=labels)
    xs, zs = list(range(n_ball)), list(range(n_ball, n_ball + n_out))
    if zs and not space.d[np.ix_(xs, xs)].max() < space.d[np.ix_(xs, zs)].min():
        raise CertificateError("outliers too close to the group; increase outlier_distance")
    return Synthetic(space, (frozenset(xs),), tuple(zs))


def _ordering_example(rng, p=0.5):
    """Four points where the heavy point ``x4`` reverses the cohesion order."""
    q = (1.0 - p) / 3.0
    pts = [[0.0, 0.0], [4.0, 0.0], [0.0, 5.0], [6.0, 0.0]]
    return Synthetic(DissimilaritySpace.from_coords(pts, [q, q, q, p], ["x1", "x2", "x3", "x4"]))


FOUR_GROUP = np.array([[0.0, 0.0], [1.0, 0.1], [0.2, 1.3], [1.1, 1.6]])


def _four_group_outlier(rng, outlier_mass=0.25, outlier_at=(20.0, 3.0)):
    """A four-point group sharing ``1 - outlier_mass`` plus one distant outlier."""
    pts = np.vstack([FOUR_GROUP, [outlier_at]])
    g = (1.0 - outlier_mass) / 4.0
    space = DissimilaritySpace.from_coords(pts, [g, g, g, g, outlier_mass], ["a", "b", "c", "d", "z"])
    return Synthetic(space, (frozenset(range(4)),), (4,))
