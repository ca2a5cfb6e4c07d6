"""Command line front end.

Exit codes: 0 success or positive verdict, 1 negative verdict, 2 bad input,
3 search budget exhausted, 4 a final verification failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import formats, selftest
from .errors import MalnormalError, ParseError, TheoremViolation
from .pingpong import CandidateBudget, is_coned_elliptic, select_pingpong_pair
from .stallings import (
    Subgroup,
    based_intersection,
    build,
    commensurator_in_free,
    conjugate_intersections,
    index,
    is_malnormal,
    power_conjugates_into,
    rank,
)
from .vfree import (
    abelianized_action,
    centralizer_of_fiber,
    commensurator_in_G,
    construct_weakly_malnormal,
    exponent_search,
    validate,
)
from .words import (
    BoundaryPoint,
    Word,
    abelianize,
    boundary_distance,
    commutator_square,
    cyclic_reduce,
    format_vector,
    in_commutator_subgroup,
    invert,
    iota,
    is_reduced_product,
    multiply,
)

OK, NEGATIVE, INPUT_ERROR = 0, 1, 2


def _infer_rank(words: list[str]) -> int:
    top = max((ord(ch.lower()) - ord("a") + 1 for w in words for ch in w if ch.isalpha()), default=1)
    return max(top, 2)


def _word(text: str, m: int) -> Word:
    return Word.parse(text, m)


def _subgroups(args) -> list[Subgroup]:
    """H from --gens or the first --gens-file; K from --other or the second."""
    found = []
    if args.gens:
        found.append(build([_word(w, args.rank) for w in args.gens], rank=args.rank))
    for path in args.gens_file or []:
        found.append(formats.load_subgroup(path))
    if getattr(args, "other", None):
        found.append(build([_word(w, args.rank) for w in args.other], rank=args.rank))
    if not found:
        raise ParseError("no subgroup given (use --gens or --gens-file)")
    return found


def _avoid(args, m: int) -> list[Subgroup]:
    Es = [formats.load_subgroup(p) for p in args.avoid or []]
    for E in Es:
        if E.ambient_rank != m:
            raise ParseError(f"avoided subgroup has rank {E.ambient_rank}, expected {m}")
    return Es


def _budget(args) -> CandidateBudget:
    return CandidateBudget(args.max_pad, args.max_candidates, args.max_exp)


def _subgroup_doc(H: Subgroup) -> dict:
    return {
        "generators": [str(g) for g in H.generators],
        "basis": [str(b) for b in H.basis()],
        "rank": rank(H),
        "index": index(H),
        "graph": H.graph.to_dict(),
    }


def _ray(text: str, m: int) -> BoundaryPoint:
    prefix, _, period = text.partition(":")
    return BoundaryPoint(_word(prefix, m), _word(period, m))


def cmd_words(args):
    m = args.rank or _infer_rank([w.replace(":", "") for w in args.words])
    ws = args.words
    op = args.op
    if op == "distance":
        p, q = _ray(ws[0], m), _ray(ws[1], m)
        return OK, {"distance": str(boundary_distance(p, q))}
    w = [_word(x, m) for x in ws]
    if op == "reduce":
        return OK, str(w[0])
    if op == "multiply":
        out = w[0]
        for x in w[1:]:
            out = multiply(out, x)
        return OK, str(out)
    if op == "invert":
        return OK, str(invert(w[0]))
    if op == "iota":
        return OK, str(iota(w[0]))
    if op == "commutator-square":
        return OK, str(commutator_square(w[0]))
    if op == "abelianize":
        return OK, format_vector(abelianize(w[0]))
    if op == "cyclic":
        dec = cyclic_reduce(w[0])
        return OK, {"conjugator": str(dec.conjugator), "core": str(dec.core)}
    if op == "in-commutator":
        v = in_commutator_subgroup(w[0])
        return (OK if v else NEGATIVE), {"verdict": v}
    if op == "reduced-product":
        v = is_reduced_product(w[0], w[1])
        return (OK if v else NEGATIVE), {"verdict": v}
    raise ParseError(f"unknown words operation {op!r}")


def cmd_subgroup(args):
    H = _subgroups(args)[0]
    doc = _subgroup_doc(H)
    if args.contains:
        doc["contains"] = {w: H.contains(_word(w, H.ambient_rank)) for w in args.contains}
    return OK, doc


def _two(args):
    groups = _subgroups(args)
    if len(groups) < 2:
        raise ParseError("two subgroups needed (--gens/--other or two --gens-file)")
    return groups[0], groups[1]


def cmd_intersect(args):
    H, K = _two(args)
    return OK, _subgroup_doc(based_intersection(H, K))


def cmd_conj_intersections(args):
    H, K = _two(args)
    comps = conjugate_intersections(H, K)
    return OK, {
        "components": [
            {
                "witness": str(c.witness),
                "trivial": c.trivial,
                "rank": c.rank,
                "intersection": [str(b) for b in c.intersection.basis()],
                "left_covering": c.left_covering,
                "right_covering": c.right_covering,
            }
            for c in comps
        ]
    }


def cmd_malnormal(args):
    H = _subgroups(args)[0]
    report = is_malnormal(H)
    return (OK if report.verdict else NEGATIVE), report.to_dict()


def cmd_commensurator(args):
    H = _subgroups(args)[0]
    return OK, commensurator_in_free(H).to_dict()


def cmd_pingpong(args):
    m = args.rank
    w = _word(args.seed, m)
    pair = select_pingpong_pair(w, _avoid(args, m), _budget(args))
    return OK, pair.to_dict()


def cmd_coned_elliptic(args):
    m = args.rank
    g = _word(args.element, m)
    Hs = _avoid(args, m)
    verdict = is_coned_elliptic(g, Hs)
    detail = []
    for H in Hs:
        pc = power_conjugates_into(g, H)
        detail.append(
            {
                "subgroup": [str(x) for x in H.generators],
                "found": pc.found,
                "exponent": pc.exponent,
                "conjugator": None if pc.conjugator is None else str(pc.conjugator),
            }
        )
    return (OK if verdict else NEGATIVE), {"verdict": verdict, "subgroups": detail}


def cmd_vfree(args):
    G = validate(formats.load_vfree(args.vfree))
    L = abelianized_action(G)
    doc = {
        "valid": True,
        "centralizer": [g.to_dict() for g in centralizer_of_fiber(G)],
        "L": L.to_dict(),
    }
    try:
        doc["exponent"] = exponent_search(L).to_dict()
    except MalnormalError as exc:
        doc["exponent"] = {"error": type(exc).__name__, "message": str(exc)}
    if args.gens:
        K = build([_word(w, G.rank) for w in args.gens], rank=G.rank)
        doc["commensurator"] = commensurator_in_G(K, G, jobs=args.jobs).to_dict(G)
    return OK, doc


def cmd_construct(args):
    G = validate(formats.load_vfree(args.vfree))
    result = construct_weakly_malnormal(
        G, _avoid(args, G.rank), _budget(args), target_rank=args.target_rank, jobs=args.jobs
    )
    return OK, result.to_dict()


def cmd_selftest(args):
    doc = selftest.run()
    return (OK if doc["passed"] else NEGATIVE), doc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="malnormal", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, rank_required=False):
        sp.add_argument("--rank", type=int, required=rank_required)
        sp.add_argument("--gens", action="append", default=[], metavar="WORD")
        sp.add_argument("--gens-file", action="append", default=[], metavar="FILE")
        sp.add_argument("--out", metavar="FILE")
        sp.add_argument("--jobs", type=int, default=1)

    def budget(sp):
        sp.add_argument("--avoid", action="append", default=[], metavar="FILE")
        sp.add_argument("--max-pad", type=int, default=8)
        sp.add_argument("--max-exp", type=int, default=6)
        sp.add_argument("--max-candidates", type=int, default=200)

    sp = sub.add_parser("words", help="word arithmetic")
    sp.add_argument(
        "op",
        choices=[
            "reduce", "multiply", "invert", "iota", "commutator-square", "abelianize",
            "cyclic", "in-commutator", "reduced-product", "distance",
        ],
    )
    sp.add_argument("words", nargs="+")
    sp.add_argument("--rank", type=int)
    sp.add_argument("--out", metavar="FILE")
    sp.set_defaults(func=cmd_words)

    sp = sub.add_parser("subgroup", help="build a subgroup graph")
    common(sp)
    sp.add_argument("--contains", action="append", default=[], metavar="WORD")
    sp.set_defaults(func=cmd_subgroup)

    for name, func in (("intersect", cmd_intersect), ("conj-intersections", cmd_conj_intersections)):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--other", action="append", default=[], metavar="WORD")
        sp.set_defaults(func=func)

    for name, func in (("malnormal", cmd_malnormal), ("commensurator", cmd_commensurator)):
        sp = sub.add_parser(name)
        common(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("pingpong", help="select a ping-pong pair")
    common(sp, rank_required=True)
    budget(sp)
    sp.add_argument("--seed", required=True, metavar="WORD")
    sp.set_defaults(func=cmd_pingpong)

    sp = sub.add_parser("coned-elliptic")
    common(sp, rank_required=True)
    sp.add_argument("element")
    sp.add_argument("--avoid", action="append", default=[], metavar="FILE")
    sp.set_defaults(func=cmd_coned_elliptic)

    sp = sub.add_parser("vfree", help="inspect a virtually free group")
    common(sp)
    sp.add_argument("--vfree", required=True, metavar="FILE")
    sp.set_defaults(func=cmd_vfree)

    sp = sub.add_parser("construct", help="build a weakly malnormal subgroup")
    common(sp)
    budget(sp)
    sp.add_argument("--vfree", required=True, metavar="FILE")
    sp.add_argument("--target-rank", type=int, default=2)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("selftest")
    sp.add_argument("--out", metavar="FILE")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_selftest)
    return p


def run(argv) -> tuple[int, str]:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (INPUT_ERROR if exc.code else OK), ""
    if getattr(args, "rank", None) is None and hasattr(args, "gens") and args.gens and args.command != "words":
        args.rank = _infer_rank(args.gens + getattr(args, "other", []))
    try:
        code, doc = args.func(args)
    except TheoremViolation as exc:
        code, doc = exc.exit_code, {"error": "TheoremViolation", "message": str(exc), "transcript": exc.transcript}
    except MalnormalError as exc:
        code = exc.exit_code
        doc = {"error": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "state", None):
            doc["state"] = exc.state
        print(f"malnormal: {exc}", file=sys.stderr)
    except (OSError, ValueError) as exc:
        code, doc = INPUT_ERROR, {"error": type(exc).__name__, "message": str(exc)}
        print(f"malnormal: {exc}", file=sys.stderr)
    text = doc if isinstance(doc, str) else formats.to_json(doc)
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n")
    return code, text


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.INFO if "-v" in argv else logging.WARNING)
    code, text = run(argv)
    if text:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
