"""Topological structure of diagrams: point sequences and shape composition.

A simple closed shape is an ordered list of its boundary points; the set of
all rotations of that list carries the shape's full topological structure.
Composite shapes are built by gluing two shapes along a shared run of
boundary points that the two traversals visit in opposite order.
"""

from __future__ import annotations

import logging
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

PointSeq = tuple[str, ...]
TsiSet = frozenset[PointSeq]


def rotate(seq: PointSeq) -> PointSeq:
    """Move the first point to the end (one clockwise rotation)."""
    if not seq:
        raise ValueError("cannot rotate an empty point sequence")
    return seq[1:] + seq[:1]


def reflect(seq: PointSeq) -> PointSeq:
    """Reverse the traversal order (mirror image)."""
    if not seq:
        raise ValueError("cannot reflect an empty point sequence")
    return seq[::-1]


def multi_repr(seq: PointSeq) -> TsiSet:
    """All rotations of one representation: the full structure set."""
    if not seq:
        raise ValueError("empty point sequence has no representations")
    return frozenset(seq[i:] + seq[:i] for i in range(len(seq)))


def canonical(seq: PointSeq) -> PointSeq:
    """Lexicographically smallest rotation, used as the class key."""
    return min(multi_repr(seq))


def compose_pair(pa: PointSeq, pb: PointSeq) -> PointSeq | None:
    """Glue two shape representations along their shared boundary run.

    The shared points must appear contiguously in ``pa`` and in reversed
    order contiguously in ``pb``; interior shared points vanish from the
    merged boundary. Returns None when the pair is not composable in these
    representations (callers try other rotations).
    """
    common = set(pa) & set(pb)
    k = len(common)
    if k < 2 or k == len(pa) or k == len(pb):
        return None
    positions = sorted(i for i, p in enumerate(pa) if p in common)
    if positions[-1] - positions[0] != k - 1:
        return None  # shared points not contiguous in pa
    run = pa[positions[0]:positions[-1] + 1]
    reversed_run = run[::-1]
    try:
        j = pb.index(reversed_run[0])
    except ValueError:
        return None
    if pb[j:j + k] != reversed_run:
        return None
    a_prefix, a_suffix = pa[:positions[0]], pa[positions[-1] + 1:]
    b_prefix, b_suffix = pb[:j], pb[j + k:]
    merged = a_prefix + (run[0],) + b_suffix + b_prefix + (run[-1],) + a_suffix
    if len(set(merged)) != len(merged):
        log.debug("discarding self-touching composite %s", merged)
        return None
    return merged


def compose_sets(ra: TsiSet, rb: TsiSet) -> TsiSet | None:
    """Compose two structure sets: all rotations of the glued boundary."""
    for pa in sorted(ra):
        for pb in sorted(rb):
            merged = compose_pair(pa, pb)
            if merged is not None:
                return multi_repr(merged)
    return None


def construct_all(units: Sequence[PointSeq]) -> dict[PointSeq, frozenset[int]]:
    """Close a list of simple shape units under composition.

    Returns every reachable shape (the units themselves included) keyed by
    canonical representation, mapped to the set of unit indices it was
    built from. The result is independent of the unit order.
    """
    for u in units:
        if len(u) < 3:
            raise ValueError(f"shape unit needs at least 3 points, got {u}")
        if len(set(u)) != len(u):
            raise ValueError(f"shape unit repeats a point: {u}")

    results: dict[PointSeq, frozenset[int]] = {}
    unit_classes: list[tuple[TsiSet, PointSeq]] = []
    for i, u in enumerate(units):
        key = canonical(u)
        if key in results:
            results[key] |= frozenset([i])
        else:
            results[key] = frozenset([i])
            unit_classes.append((multi_repr(u), key))

    combs: list[tuple[TsiSet, PointSeq]] = list(unit_classes)
    while combs:
        new_combs: list[tuple[TsiSet, PointSeq]] = []
        for unit_set, unit_key in unit_classes:
            for comb_set, comb_key in combs:
                merged = compose_sets(unit_set, comb_set)
                if merged is None:
                    continue
                key = canonical(next(iter(merged)))
                if key in results:
                    continue
                results[key] = results[unit_key] | results[comb_key]
                new_combs.append((merged, key))
        combs = new_combs
    return results


def straight_triples(collinear: Iterable[tuple[str, ...]]) -> set[tuple[str, str, str]]:
    """Ordered triples that lie on one known collinear run (both directions)."""
    straight: set[tuple[str, str, str]] = set()
    for run in collinear:
        for i in range(len(run) - 2):
            for j in range(i + 1, len(run) - 1):
                for l in range(j + 1, len(run)):
                    triple = (run[i], run[j], run[l])
                    straight.add(triple)
                    straight.add(triple[::-1])
    return straight


def contract_collinear(seq: PointSeq,
                       collinear: Iterable[tuple[str, ...]]) -> PointSeq:
    """Drop boundary points that sit on a straight angle of the traversal.

    ``collinear`` lists known collinear runs; a boundary triple lying inside
    one run in order is not a corner of the shape.
    """
    straight = straight_triples(collinear)
    points = list(seq)
    changed = True
    while changed and len(points) >= 3:
        changed = False
        n = len(points)
        for i in range(n):
            triple = (points[(i - 1) % n], points[i], points[(i + 1) % n])
            if triple in straight:
                del points[i]
                changed = True
                break
    return tuple(points)
