"""Brute-force reference for the fragment-pairing optimization.

Enumerates every feasible chain of non-overlapping (start, end) pairs and
returns the one with the best mean score, breaking ties toward more
fragments, then earlier starts, then earlier ends. Kept deliberately
independent of the production dynamic program.
"""

from __future__ import annotations


def enumerate_best(starts, ends, prob_of, min_length=2, max_length=None):
    """Best chain of (start, end) spans by exhaustive enumeration.

    `prob_of` maps a (start, end) span to its score. Returns a list of
    spans (possibly empty when nothing is feasible).
    """
    spans = []
    for s in sorted(starts):
        for e in sorted(ends):
            length = e - s + 1
            if length >= max(min_length, 2) and (max_length is None or length <= max_length):
                spans.append((s, e))
    spans.sort()

    best = {"key": None, "chain": []}

    def consider(chain):
        total = sum(prob_of(span) for span in chain)
        mean = total / len(chain)
        key = (
            -mean,
            -len(chain),
            tuple(s for s, _ in chain),
            tuple(e for _, e in chain),
        )
        if best["key"] is None or key < best["key"]:
            best["key"] = key
            best["chain"] = list(chain)

    def extend(chain, last_end):
        for span in spans:
            if span[0] <= last_end:
                continue
            chain.append(span)
            consider(chain)
            extend(chain, span[1])
            chain.pop()

    extend([], -1)
    return best["chain"]
