"""Problem bundles on disk.

A bundle is a directory holding ``graph.txt``, ``marginal_<i>.txt`` for i = 1..m and,
optionally, ``duals_<i>.txt``, ``gluing_hint.txt`` and the solver output
(``coupling.txt``, ``value.txt``).

Marginal files start with ``d=<int>``; every other non-blank line is ``w x1 ... xd``.
Numbers may be decimals or ``p/q`` literals. ``#`` starts a comment.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .graph import GraphError, InteractionGraph, format_graph_text, parse_graph_text
from .mmot import FLOAT, RATIONAL, CostModel, CouplingTensor, DiscreteMarginal, DualPotentials, ProblemError


class BundleError(ValueError):
    """A bundle file is missing or malformed; the message carries file, line and column."""


def _number(tok: str, mode: str, where: str):
    try:
        v = Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise BundleError(f"{where}: not a number: {tok!r}") from None
    if mode == RATIONAL:
        return v
    return float(tok) if "/" not in tok else float(v)


def format_number(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _lines(text: str):
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if line.strip():
            yield ln, raw, line


def _col(raw: str, tok: str) -> int:
    return raw.find(tok) + 1


def parse_marginal_text(text: str, mode: str = RATIONAL, name: str = "<marginal>") -> DiscreteMarginal:
    d = None
    atoms, weights = [], []
    for ln, raw, line in _lines(text):
        if d is None:
            head = line.strip()
            if not head.startswith("d="):
                raise BundleError(f"{name}:{ln}:{_col(raw, head)}: expected a 'd=<int>' header")
            try:
                d = int(head[2:])
            except ValueError:
                raise BundleError(f"{name}:{ln}:{_col(raw, head) + 2}: bad dimension {head[2:]!r}") from None
            if d < 1:
                raise BundleError(f"{name}:{ln}:{_col(raw, head) + 2}: dimension must be positive")
            continue
        toks = line.split()
        if len(toks) != d + 1:
            raise BundleError(f"{name}:{ln}:1: expected {d + 1} numbers (weight then {d} coordinates), got {len(toks)}")
        vals = [_number(t, mode, f"{name}:{ln}:{_col(raw, t)}") for t in toks]
        weights.append(vals[0])
        atoms.append(tuple(vals[1:]))
    if d is None:
        raise BundleError(f"{name}:1:1: empty marginal file")
    if not atoms:
        raise BundleError(f"{name}: no atoms")
    try:
        return DiscreteMarginal(tuple(atoms), tuple(weights))
    except ProblemError as exc:
        raise BundleError(f"{name}: {exc}") from None


def format_marginal_text(mu: DiscreteMarginal) -> str:
    lines = [f"d={mu.d}"]
    for w, a in zip(mu.weights, mu.atoms):
        lines.append(" ".join(format_number(v) for v in (w, *a)))
    return "\n".join(lines) + "\n"


def parse_values_text(text: str, mode: str, name: str) -> tuple:
    out = []
    for ln, raw, line in _lines(text):
        tok = line.strip()
        if len(tok.split()) != 1:
            raise BundleError(f"{name}:{ln}:1: expected one value per line")
        out.append(_number(tok, mode, f"{name}:{ln}:{_col(raw, tok)}"))
    return tuple(out)


def parse_hint_text(text: str, name: str = "gluing_hint.txt") -> list[set]:
    parts = []
    for ln, raw, line in _lines(text):
        try:
            parts.append({int(t) for t in line.split()})
        except ValueError:
            raise BundleError(f"{name}:{ln}:1: hint lines list vertex indices") from None
    return parts


@dataclass
class ProblemBundle:
    path: Path
    cm: CostModel
    mode: str = RATIONAL
    duals: Optional[DualPotentials] = None
    hint: Optional[list] = None


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except FileNotFoundError:
        raise BundleError(f"{path}: missing file") from None


def read_graph(path) -> InteractionGraph:
    path = Path(path)
    try:
        return parse_graph_text(_read(path))
    except GraphError as exc:
        raise BundleError(f"{path}: {exc}") from None


def read_bundle(path, mode: str = RATIONAL) -> ProblemBundle:
    if mode not in (RATIONAL, FLOAT):
        raise BundleError(f"unknown mode {mode!r}")
    root = Path(path)
    if not root.is_dir():
        raise BundleError(f"{root}: not a bundle directory")
    g = read_graph(root / "graph.txt")
    marg = []
    for i in range(1, g.m + 1):
        f = root / f"marginal_{i}.txt"
        marg.append(parse_marginal_text(_read(f), mode, str(f)))
    dims = {mu.d for mu in marg}
    if len(dims) != 1:
        raise BundleError(f"{root}: marginal dimensions differ: {sorted(dims)}")
    cm = CostModel(g, tuple(marg))
    duals = None
    if all((root / f"duals_{i}.txt").exists() for i in range(1, g.m + 1)):
        vals = []
        for i, mu in enumerate(marg, start=1):
            f = root / f"duals_{i}.txt"
            v = parse_values_text(f.read_text(), mode, str(f))
            if len(v) != mu.n:
                raise BundleError(f"{f}: expected {mu.n} values, got {len(v)}")
            vals.append(v)
        duals = DualPotentials(tuple(vals))
    hint = None
    if (root / "gluing_hint.txt").exists():
        hint = parse_hint_text((root / "gluing_hint.txt").read_text())
    return ProblemBundle(root, cm, mode, duals, hint)


def write_bundle(path, cm: CostModel, duals: Optional[DualPotentials] = None,
                 hint: Optional[list] = None) -> Path:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / "graph.txt").write_text(format_graph_text(cm.graph))
    for i, mu in enumerate(cm.marginals, start=1):
        (root / f"marginal_{i}.txt").write_text(format_marginal_text(mu))
    if duals is not None:
        write_duals(root, duals)
    if hint is not None:
        (root / "gluing_hint.txt").write_text("".join(" ".join(map(str, sorted(p))) + "\n" for p in hint))
    return root


def write_duals(root, duals: DualPotentials) -> None:
    for i, vals in enumerate(duals.values, start=1):
        (Path(root) / f"duals_{i}.txt").write_text("".join(format_number(v) + "\n" for v in vals))


def write_solution(root, coupling: CouplingTensor, duals: DualPotentials, value) -> None:
    root = Path(root)
    lines = [" ".join(str(k + 1) for k in t) + " " + format_number(v) for t, v in sorted(coupling.entries.items())]
    (root / "coupling.txt").write_text("".join(line + "\n" for line in lines))
    (root / "value.txt").write_text(format_number(value) + "\n")
    write_duals(root, duals)


def read_coupling(root, shape, mode: str = RATIONAL) -> CouplingTensor:
    f = Path(root) / "coupling.txt"
    entries = {}
    for ln, raw, line in _lines(_read(f)):
        toks = line.split()
        if len(toks) != len(shape) + 1:
            raise BundleError(f"{f}:{ln}:1: expected {len(shape)} indices and a mass")
        t = tuple(int(x) - 1 for x in toks[:-1])
        entries[t] = _number(toks[-1], mode, f"{f}:{ln}:{_col(raw, toks[-1])}")
    return CouplingTensor(tuple(shape), entries)
