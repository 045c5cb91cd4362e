"""Command-line front end.

Every subcommand reads a JSON project file.  Commands that produce data write
the updated project to stdout (or ``--output``); checks print a short report.

Exit codes: 0 success, 1 validation failure, 2 numerical fault, 64 usage.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .cocycle import CocycleError, Multiplier, is_isometric, isometrize, validate_multiplier
from .core import GroupoidError, restrict
from .hilbert import unitarize
from .measure import (
    CutoffFunction,
    HaarSystem,
    MeasureError,
    default_measures,
    normalize_cutoff,
    normalized_counting_haar,
    validate_cutoff,
    validate_haar,
)
from .morita import (
    MoritaError,
    default_section,
    extend_and_correct,
    pullback,
    pushforward,
    regular_rep,
    section_from_arrows,
    separates,
)
from .projectfile import Project, ProjectError, RepEntry, dumps, parse_project
from .rep import (
    ConvergenceError,
    NotAlmostError,
    PseudoRep,
    RepError,
    SingularError,
    correct,
    defect_and_bound,
    is_almost,
    perturb,
    validate_rep,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(x: float) -> str:
    return format(x, ".12g")


# helpers


def _measures(p: Project):
    mu, c = default_measures(p.groupoid)
    if p.haar is not None:
        mu = p.haar
        c = normalize_cutoff(p.groupoid, mu, p.cutoff or CutoffFunction(np.ones(p.groupoid.n_points)))
    elif p.cutoff is not None:
        c = normalize_cutoff(p.groupoid, mu, p.cutoff)
    return mu, c


def _context(p: Project, entry: RepEntry):
    """Domain groupoid, multiplier and measures matching a representation entry."""
    G, sigma = p.groupoid, p.sigma
    mu, c = _measures(p)
    if entry.support is None:
        return G, sigma, mu, c
    H, inc = restrict(G, entry.support)
    a = inc.arrow_map
    sH = Multiplier(sigma.entries[np.ix_(a, a)])
    muH = HaarSystem(mu.weights[a])
    cH = normalize_cutoff(H, muH, CutoffFunction(c.values[inc.point_map]))
    return H, sH, muH, cH


def _write_project(p: Project, args, out):
    text = dumps(p)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        out.write(text)


def _points(p: Project, names: str) -> tuple[int, ...]:
    try:
        return tuple(sorted(p.groupoid.point_index(s) for s in names.split(",") if s))
    except (KeyError, ValueError, GroupoidError):
        raise ProjectError(f"unresolved id: unknown point in {names!r}") from None


def _orbit_label(G, orbit) -> str:
    return "{" + ",".join(G.points[x] for x in orbit) + "}"


# subcommands


def cmd_validate(p, args, out):
    G = p.groupoid
    out.write(f"groupoid: ok ({G.n_points} points, {G.n_arrows} arrows, {len(G.orbits)} orbits)\n")
    if p.haar is not None:
        out.write("haar: ok\n")
    if p.cutoff is not None:
        out.write("cutoff: ok\n")
    if p.multiplier is not None:
        out.write("multiplier: ok\n")
    for e in p.representations:
        H, sigma, _, _ = _context(p, e)
        report = validate_rep(H, sigma, e.rep, 1e-10)
        ok, _ = is_almost(H, sigma, e.rep)
        kind = "exact" if report.ok else ("almost" if ok else "neither")
        out.write(f"representation {e.name}: {kind}\n")
    return EXIT_OK


def cmd_haar_make(p, args, out):
    p.haar = normalized_counting_haar(p.groupoid)
    if p.cutoff is not None:
        p.cutoff = normalize_cutoff(p.groupoid, p.haar, p.cutoff)
    _write_project(p, args, out)
    return EXIT_OK


def cmd_haar_check(p, args, out):
    if p.haar is None:
        out.write("haar: missing\n")
        return EXIT_INVALID
    report = validate_haar(p.groupoid, p.haar, args.tol)
    out.write(f"haar: {report}\n")
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_cutoff_normalize(p, args, out):
    mu = p.haar if p.haar is not None else normalized_counting_haar(p.groupoid)
    c = p.cutoff if p.cutoff is not None else CutoffFunction(np.ones(p.groupoid.n_points))
    report = validate_cutoff(p.groupoid, c)
    if not report.ok:
        out.write(f"cutoff: {report}\n")
        return EXIT_INVALID
    p.haar, p.cutoff = mu, normalize_cutoff(p.groupoid, mu, c)
    _write_project(p, args, out)
    return EXIT_OK


def cmd_cocycle_check(p, args, out):
    G, sigma = p.groupoid, p.sigma
    report = validate_multiplier(G, sigma, args.tol)
    out.write(f"multiplier: {report}\n")
    out.write(f"isometric: {'true' if is_isometric(G, sigma, args.tol) else 'false'}\n")
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_cocycle_isometrize(p, args, out):
    """Replace σ by its isometric cohomologue; representations are rescaled by ρ."""
    G = p.groupoid
    mu, c = _measures(p)
    rho, sigma_t = isometrize(G, mu, c, p.sigma)
    p.multiplier, p.cochain = sigma_t, rho
    for e in p.representations:
        amap = np.arange(G.n_arrows) if e.support is None else restrict(G, e.support)[1].arrow_map
        mats = [rho.values[a] * m for a, m in zip(amap, e.rep.matrices)]
        e.rep = PseudoRep(e.rep.fiber_dim, mats)
    _write_project(p, args, out)
    return EXIT_OK


def cmd_rep_check(p, args, out):
    e = p.get(args.rep)
    H, sigma, _, _ = _context(p, e)
    report = validate_rep(H, sigma, e.rep, args.tol)
    out.write(f"{e.name}: {report}\n")
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_rep_defect(p, args, out):
    e = p.get(args.rep)
    H, sigma, _, _ = _context(p, e)
    db = defect_and_bound(H, sigma, e.rep)
    ok, margins = is_almost(H, sigma, e.rep)
    for orbit in H.orbits:
        r, b = db[orbit]
        out.write(f"orbit {_orbit_label(H, orbit)}: r = {_fmt(r)}, b = {_fmt(b)}, margin = {_fmt(margins[orbit])}\n")
    out.write(f"almost: {'true' if ok else 'false'}\n")
    return EXIT_OK


def _write_trace(trace, path):
    if path and trace is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(trace.to_csv())


def cmd_rep_correct(p, args, out):
    e = p.get(args.rep)
    H, sigma, mu, c = _context(p, e)
    try:
        R, trace = correct(H, mu, c, sigma, e.rep, tol=args.tol, max_iter=args.max_iter)
    except ConvergenceError as exc:
        _write_trace(exc.trace, args.trace)
        raise
    _write_trace(trace, args.trace)
    p.put(RepEntry(args.name or e.name, R, e.support))
    _write_project(p, args, out)
    return EXIT_OK


def cmd_rep_perturb(p, args, out):
    e = p.get(args.rep)
    H, _, _, _ = _context(p, e)
    T = perturb(H, e.rep, args.eps, args.seed)
    p.put(RepEntry(args.name or e.name, T, e.support))
    _write_project(p, args, out)
    return EXIT_OK


def cmd_rep_unitarize(p, args, out):
    e = p.get(args.rep)
    H, sigma, mu, c = _context(p, e)
    S = unitarize(H, mu, c, sigma, e.rep)
    p.put(RepEntry(args.name or e.name, S, e.support))
    _write_project(p, args, out)
    return EXIT_OK


def _inclusion(p, e, subset):
    support = _points(p, subset) if subset else e.support
    if support is None:
        raise ProjectError(f"{e.name!r} has no support; pass --subset")
    if e.support is not None and tuple(support) != tuple(e.support):
        raise ProjectError(f"--subset does not match the support of {e.name!r}")
    return restrict(p.groupoid, support)


def cmd_push(p, args, out):
    e = p.get(args.rep)
    H, phi = _inclusion(p, e, args.subset)
    if args.section:
        try:
            arrows = [int(s) for s in args.section.split(",")]
        except ValueError:
            raise ProjectError(f"--section expects comma-separated arrow ids, got {args.section!r}") from None
        section = section_from_arrows(phi, arrows)
    else:
        section = default_section(phi)
    R = pushforward(phi, p.sigma, e.rep, section)
    p.put(RepEntry(args.name or f"{e.name}_push", R, None))
    _write_project(p, args, out)
    return EXIT_OK


def cmd_pull(p, args, out):
    e = p.get(args.rep)
    if e.support is not None:
        raise ProjectError("pull expects a representation of the whole groupoid")
    support = _points(p, args.subset)
    H, phi = restrict(p.groupoid, support)
    S, _ = pullback(phi, p.sigma, e.rep)
    p.put(RepEntry(args.name or f"{e.name}_pull", S, support))
    _write_project(p, args, out)
    return EXIT_OK


def cmd_extend_correct(p, args, out):
    """Exact rep on G|O (``--rep``) plus matrices off O taken from ``--outer``."""
    inner = p.get(args.rep)
    outer = p.get(args.outer)
    if inner.support is None or outer.support is not None:
        raise ProjectError("extend-correct needs --rep on a support O and --outer on the whole groupoid")
    G = p.groupoid
    mu, c = _measures(p)
    inside = np.zeros(G.n_points, dtype=bool)
    inside[list(inner.support)] = True
    T_out = {g: outer.rep[g] for g in range(G.n_arrows) if not inside[G.tgt[g]] and not G.is_unit(g)}
    dims = {G.points[x]: int(outer.rep.fiber_dim[x]) for x in range(G.n_points) if not inside[x]}
    try:
        R, trace = extend_and_correct(
            G, mu, c, p.sigma, inner.support, inner.rep, T_out, dims, tol=args.tol, max_iter=args.max_iter
        )
    except ConvergenceError as exc:
        _write_trace(exc.trace, args.trace)
        raise
    _write_trace(trace, args.trace)
    p.put(RepEntry(args.name or f"{inner.name}_extended", R, None))
    _write_project(p, args, out)
    return EXIT_OK


def cmd_regular(p, args, out):
    p.put(RepEntry(args.name or "regular", regular_rep(p.groupoid), None))
    _write_project(p, args, out)
    return EXIT_OK


def cmd_separate(p, args, out):
    G = p.groupoid
    names = args.rep or [e.name for e in p.representations if e.support is None]
    reps = [p.get(n) for n in names]
    for e in reps:
        if e.support is not None:
            raise ProjectError(f"{e.name!r} is not a representation of the whole groupoid")
    ok, pair = separates(G, [e.rep for e in reps], tol=args.sep_tol)
    if ok:
        out.write("separates: true\n")
        return EXIT_OK
    g, h = pair
    out.write(f"separates: false ({G.arrow_names[g]}, {G.arrow_names[h]})\n")
    return EXIT_INVALID


COMMANDS = {
    "validate": (cmd_validate, "parse and validate a project"),
    "haar-make": (cmd_haar_make, "add the normalized counting Haar system"),
    "haar-check": (cmd_haar_check, "check support and left invariance of the Haar system"),
    "cutoff-normalize": (cmd_cutoff_normalize, "rescale the cutoff so fiber integrals are 1"),
    "cocycle-check": (cmd_cocycle_check, "check normality and the cocycle identity"),
    "cocycle-isometrize": (cmd_cocycle_isometrize, "replace the multiplier by a modulus-one cohomologue"),
    "rep-check": (cmd_rep_check, "check a representation is exact"),
    "rep-defect": (cmd_rep_defect, "print defect r and bound b per orbit"),
    "rep-correct": (cmd_rep_correct, "correct an almost representation by iterated averaging"),
    "rep-perturb": (cmd_rep_perturb, "add seeded uniform noise to non-unit arrows"),
    "rep-unitarize": (cmd_rep_unitarize, "conjugate an exact representation to a unitary one"),
    "push": (cmd_push, "pushforward along the inclusion of a full subgroupoid"),
    "pull": (cmd_pull, "pullback along the inclusion of a full subgroupoid"),
    "extend-correct": (cmd_extend_correct, "extend a representation off an invariant subset and correct"),
    "regular": (cmd_regular, "add the left-regular representation"),
    "separate": (cmd_separate, "check representations separate arrows"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="almostrep", description="Correct almost representations of finite groupoids.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("project", help="JSON project file")
        sp.add_argument("--tol", type=float, default=1e-12)
        sp.add_argument("--max-iter", type=int, default=200)
        sp.add_argument("-o", "--output", help="write the resulting project here instead of stdout")
        if name == "separate":
            sp.add_argument("--rep", action="append", help="representation name (repeatable)")
            sp.add_argument("--sep-tol", type=float, default=1e-10)
        elif name.startswith("rep-") or name in ("push", "pull", "extend-correct"):
            sp.add_argument("--rep", help="representation name (default: first)")
        if name in ("rep-correct", "rep-perturb", "rep-unitarize", "push", "pull", "extend-correct", "regular"):
            sp.add_argument("--name", help="name of the resulting representation")
        if name in ("rep-correct", "extend-correct"):
            sp.add_argument("--trace", help="write the convergence trace CSV here")
        if name == "rep-perturb":
            sp.add_argument("--eps", type=float, default=0.01)
            sp.add_argument("--seed", type=int, default=0)
        if name in ("push", "pull"):
            sp.add_argument("--subset", required=(name == "pull"), help="comma-separated point names")
        if name == "push":
            sp.add_argument("--section", help="comma-separated arrow ids, one per point")
        if name == "extend-correct":
            sp.add_argument("--outer", required=True, help="representation supplying arrows off the support")
    return parser


def run_command(argv, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(stderr)
        print(exc, file=stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    func = COMMANDS[args.command][0]
    try:
        p = parse_project(args.project)
        return func(p, args, stdout)
    except (ConvergenceError, SingularError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical fault: {exc}", file=stderr)
        return EXIT_NUMERIC
    except (
        ProjectError,
        GroupoidError,
        MeasureError,
        CocycleError,
        MoritaError,
        NotAlmostError,
        RepError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID


def main(argv=None) -> None:
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
