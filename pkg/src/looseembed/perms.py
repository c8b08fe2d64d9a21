"""Permutations of {1..k} stored as tuples: ``p[s - 1]`` is the image of ``s``."""
from __future__ import annotations

import re
from collections import deque
from itertools import permutations
from typing import Iterable

Perm = tuple[int, ...]


def identity(k: int) -> Perm:
    return tuple(range(1, k + 1))


def compose(outer: Perm, inner: Perm) -> Perm:
    """The permutation s -> outer(inner(s))."""
    return tuple(outer[inner[s] - 1] for s in range(len(inner)))


def inverse(p: Perm) -> Perm:
    out = [0] * len(p)
    for s, image in enumerate(p, start=1):
        out[image - 1] = s
    return tuple(out)


def transposition(i: int, j: int, k: int) -> Perm:
    p = list(range(1, k + 1))
    p[i - 1], p[j - 1] = j, i
    return tuple(p)


def cycle_power(k: int, power: int = 1) -> Perm:
    """The cycle (1 2 ... k) raised to ``power``."""
    return tuple((s - 1 + power) % k + 1 for s in range(1, k + 1))


def all_perms(k: int) -> list[Perm]:
    return [tuple(p) for p in permutations(range(1, k + 1))]


def is_perm(p: Iterable[int], k: int) -> bool:
    return sorted(p) == list(range(1, k + 1))


def parse_perm(text: str, k: int) -> Perm:
    """Parse cycle notation like ``(12)(34)``, ``(1 3 2)`` or ``id``.

    Single digits may be run together; use spaces or commas for k >= 10.
    """
    text = text.strip()
    if text in ("", "id", "()"):
        return identity(k)
    p = list(range(1, k + 1))
    for body in re.findall(r"\(([^)]*)\)", text):
        tokens = re.split(r"[\s,]+", body.strip())
        if len(tokens) == 1:
            tokens = list(tokens[0])
        cyc = [int(t) for t in tokens if t]
        if any(not 1 <= c <= k for c in cyc) or len(set(cyc)) != len(cyc):
            raise ValueError(f"bad cycle {body!r} for k={k}")
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            p[a - 1] = b
    if not re.fullmatch(r"(\([^)]*\))+", text.replace(" ", "")):
        raise ValueError(f"cannot parse permutation {text!r}")
    return tuple(p)


def cycle_string(p: Perm) -> str:
    seen: set[int] = set()
    parts = []
    for start in range(1, len(p) + 1):
        if start in seen or p[start - 1] == start:
            continue
        cyc = []
        cur = start
        while cur not in seen:
            seen.add(cur)
            cyc.append(cur)
            cur = p[cur - 1]
        sep = "" if len(p) < 10 else " "
        parts.append("(" + sep.join(map(str, cyc)) + ")")
    return "".join(parts) or "id"


def generated_group(generators: Iterable[Perm], k: int) -> dict[Perm, tuple[Perm, ...]]:
    """Breadth-first closure: each element with a shortest word over the generators.

    A word (g1, g2, ..., gm) stands for the product g1 g2 ... gm.
    """
    gens = list(dict.fromkeys(generators))
    words: dict[Perm, tuple[Perm, ...]] = {identity(k): ()}
    queue = deque([identity(k)])
    while queue:
        cur = queue.popleft()
        for g in gens:
            nxt = compose(cur, g)
            if nxt not in words:
                words[nxt] = words[cur] + (g,)
                queue.append(nxt)
    return words
