"""Overlapping index-set partitions and their structural assumptions."""

from __future__ import annotations

from dataclasses import dataclass, field


class AssumptionError(ValueError):
    """A structural assumption on the partition fails; the message names it."""


@dataclass
class Partition:
    """Overlapping cover of [0, n) by p index sets, with pairwise intersections.

    ``sets`` holds sorted tuples I_k; ``pairs`` maps (k, l) with k < l to the
    sorted intersection tuple, storing only nonempty pairs.
    """

    n: int
    sets: list
    pairs: dict = field(default_factory=dict)

    @classmethod
    def from_sets(cls, n, sets):
        sets = [tuple(sorted(set(int(i) for i in s))) for s in sets]
        part = cls(n=int(n), sets=sets)
        for k in range(len(sets)):
            sk = set(sets[k])
            for l in range(k + 1, len(sets)):
                inter = tuple(sorted(sk & set(sets[l])))
                if inter:
                    part.pairs[(k, l)] = inter
        return part

    @property
    def p(self):
        return len(self.sets)

    def neighbours(self, k):
        """Indices l != k with a stored nonempty intersection."""
        out = []
        for (a, b) in self.pairs:
            if a == k:
                out.append(b)
            elif b == k:
                out.append(a)
        return sorted(out)

    def pair_set(self, k, l):
        if k > l:
            k, l = l, k
        return self.pairs.get((k, l), ())

    def validate(self, max_neighbours=8, require_no_containment=True):
        """Check the cover plus the overlap assumptions; raise naming the failure.

        Assumption 1: every set meets at least one other set.
        Assumption 2: no set is contained in another (skipped when
        ``require_no_containment`` is false; element-wise mesh partitions
        violate it along a fixed edge).
        Assumption 3: each set meets at most ``max_neighbours`` others.
        A single-set partition is the degenerate case and skips assumption 1.
        """
        for k, s in enumerate(self.sets):
            if not s:
                raise AssumptionError(f"set {k} is empty")
            if s[0] < 0 or s[-1] >= self.n:
                raise AssumptionError(f"set {k} not contained in [0,{self.n})")
        covered = set()
        for s in self.sets:
            covered.update(s)
        if covered != set(range(self.n)):
            raise AssumptionError("sets do not cover [0,n)")
        for (k, l), inter in self.pairs.items():
            if not (k < l):
                raise AssumptionError(f"pair ({k},{l}) violates the k < l convention")
            recomputed = tuple(sorted(set(self.sets[k]) & set(self.sets[l])))
            if inter != recomputed:
                raise AssumptionError(f"stored intersection ({k},{l}) is stale")
        if self.p >= 2:
            for k in range(self.p):
                nbrs = self.neighbours(k)
                if not nbrs:
                    raise AssumptionError(f"assumption 1 fails: set {k} meets no other set")
                if len(nbrs) > max_neighbours:
                    raise AssumptionError(
                        f"assumption 3 fails: set {k} meets {len(nbrs)} others"
                    )
            if require_no_containment:
                for k in range(self.p):
                    sk = set(self.sets[k])
                    for l in range(self.p):
                        if k != l and set(self.sets[l]) <= sk:
                            raise AssumptionError(
                                f"assumption 2 fails: set {l} is contained in set {k}"
                            )
        return self

    def min_overlap(self):
        if not self.pairs:
            return 0
        return min(len(v) for v in self.pairs.values())
