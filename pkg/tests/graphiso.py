"""Graph isomorphism up to blank-node relabeling and renaming of IRIs
within designated namespaces (used for runtime-id-insensitive comparisons)."""

from typing import Dict, Optional, Tuple

from semlift.rdf import BlankNode, Graph, Iri, Term


def _mappable(t: Term, namespaces: Tuple[str, ...]) -> bool:
    if isinstance(t, BlankNode):
        return True
    if isinstance(t, Iri):
        return any(t.value.startswith(ns) for ns in namespaces)
    return False


def _kind(t: Term) -> str:
    return "blank" if isinstance(t, BlankNode) else "iri"


def find_isomorphism(
    g1: Graph, g2: Graph, namespaces: Tuple[str, ...] = ()
) -> Optional[Dict[Term, Term]]:
    """A bijection g1 -> g2 over blanks and namespace-local IRIs making the
    triple sets equal, or None. Exact match is required everywhere else."""
    t1 = list(g1.triples)
    t2 = list(g2.triples)
    if len(t1) != len(t2):
        return None
    # anchor on triples with few mappable positions first
    t1.sort(key=lambda t: (sum(_mappable(x, namespaces) for x in t), str(t)))
    targets = set(t2)

    def extend(i: int, mapping: Dict[Term, Term], used: frozenset):
        if i == len(t1):
            return mapping
        t = t1[i]
        for u in targets:
            if u in used:
                continue
            trial = dict(mapping)
            ok = True
            for a, b in zip(t, u):
                if _mappable(a, namespaces):
                    if a in trial:
                        if trial[a] != b:
                            ok = False
                            break
                    else:
                        if not _mappable(b, namespaces) or _kind(a) != _kind(b):
                            ok = False
                            break
                        if b in trial.values():
                            ok = False
                            break
                        trial[a] = b
                else:
                    if a != b:
                        ok = False
                        break
            if ok:
                result = extend(i + 1, trial, used | {u})
                if result is not None:
                    return result
        return None

    return extend(0, {}, frozenset())


def isomorphic(g1: Graph, g2: Graph, namespaces: Tuple[str, ...] = ()) -> bool:
    return find_isomorphism(g1, g2, namespaces) is not None
