"""Independent brute-force oracles the implementation is checked against.

These stay deliberately naive: full enumeration for the alignment
objective, fixpoint pairwise merging for connected components.
"""

import math

from finelabel.matcher import prefix_similarity


def enumerate_matchings(K, N, admissible):
    """every order-preserving pairing of phrase indices to sentence indices
    drawn from the admissible (i, j) set."""
    results = []

    def recurse(i, last_j, current):
        if i == K:
            results.append(tuple(current))
            return
        recurse(i + 1, last_j, current)
        for j in range(last_j + 1, N):
            if (i, j) in admissible:
                current.append((i, j))
                recurse(i + 1, j, current)
                current.pop()

    recurse(0, -1, [])
    return results


def matching_score(pairs, admissible, delta):
    if not pairs:
        return 0.0
    rho_sum = math.fsum(admissible[pair] for pair in pairs)
    first = pairs[0][1]
    last = pairs[-1][1]
    gap = (last - first + 1) - len(pairs)
    return rho_sum - delta * gap


def brute_force_align(phrase_tokens, sentence_tokens, tau, delta):
    """(score, cardinality, pairs) of the best matching by enumeration.

    Tie order: higher score, more pairs, leftmost sentence positions,
    leftmost phrase positions; identical to the advertised contract.
    """
    S = [w.lower() for w in phrase_tokens]
    T = [w.lower() for w in sentence_tokens]
    admissible = {}
    for i, s in enumerate(S):
        for j, t in enumerate(T):
            rho = prefix_similarity(s, t)
            if rho >= tau:
                admissible[(i, j)] = rho

    best_key = None
    best = ((), 0.0)
    for pairs in enumerate_matchings(len(S), len(T), admissible):
        score = matching_score(pairs, admissible, delta)
        key = (
            -score,
            -len(pairs),
            tuple(j for _, j in pairs),
            tuple(i for i, _ in pairs),
        )
        if best_key is None or key < best_key:
            best_key = key
            best = (pairs, score)
    pairs, score = best
    return score, len(pairs), pairs


def closure_components(tuples, n_tokens):
    """Transitive closure by repeated pairwise merging to a fixpoint."""
    sets = [{token} for token in range(n_tokens)]
    for elements in tuples:
        sets.append(set(elements))
    changed = True
    while changed:
        changed = False
        for a in range(len(sets)):
            if not sets[a]:
                continue
            for b in range(a + 1, len(sets)):
                if sets[b] and sets[a] & sets[b]:
                    sets[a] |= sets[b]
                    sets[b] = set()
                    changed = True
    return {frozenset(s) for s in sets if s}
