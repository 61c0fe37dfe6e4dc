"""Plain-text measure files.

One record per line, ``#`` starts a comment::

    dimension 2
    domain 0 1 0 1
    atom 0.5 0.5 -1.0
    curve 2.0 0.1 0.1 0.9 0.9     # linear density, then polyline coordinates
    density sine(1.0)

``dimension`` must come first. ``domain`` is optional (unit box by default).
Several ``density`` records are summed.
"""

from __future__ import annotations

from pathlib import Path

from obstaclelab.measure import Atom, CurvePiece, Density, Measure


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_measure(text: str) -> Measure:
    dim = None
    domain = None
    atoms, curves, densities = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        tag, _, rest = line.partition(" ")
        try:
            if tag == "dimension":
                dim = int(rest)
                continue
            if dim is None:
                raise ValueError("the dimension record must come first")
            if tag == "domain":
                v = [float(x) for x in rest.split()]
                if len(v) != 2 * dim:
                    raise ValueError("domain needs two bounds per dimension")
                domain = tuple((v[2 * d], v[2 * d + 1]) for d in range(dim))
            elif tag == "atom":
                v = [float(x) for x in rest.split()]
                if len(v) != dim + 1:
                    raise ValueError(f"atom needs {dim} coordinates and a mass")
                atoms.append(Atom(tuple(v[:dim]), v[dim]))
            elif tag == "curve":
                v = [float(x) for x in rest.split()]
                if (len(v) - 1) % dim or len(v) < 1 + 2 * dim:
                    raise ValueError("curve needs a density and at least two points")
                pts = [tuple(v[1 + i : 1 + i + dim]) for i in range(0, len(v) - 1, dim)]
                curves.append(CurvePiece(tuple(pts), v[0]))
            elif tag == "density":
                densities.append(Density.from_text(rest))
            else:
                raise ValueError(f"unknown record {tag!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    if dim is None:
        raise ValueError("measure file has no dimension record")
    density = None
    for d in densities:
        density = d if density is None else density + d
    return Measure(dim, tuple(atoms), tuple(curves), density, domain)


def format_measure(mu: Measure) -> str:
    lines = [f"dimension {mu.dimension}", "domain " + " ".join(repr(v) for b in mu.domain for v in b)]
    for a in mu.atoms:
        lines.append("atom " + " ".join(repr(v) for v in (*a.location, a.mass)))
    for c in mu.curves:
        coords = [v for p in c.polyline for v in p]
        lines.append("curve " + " ".join(repr(v) for v in (c.linear_density, *coords)))
    if mu.density is not None:
        lines.append("density " + mu.density.to_text())
    return "\n".join(lines) + "\n"


def read_measure(path: str | Path) -> Measure:
    return parse_measure(Path(path).read_text())


def write_measure(mu: Measure, path: str | Path) -> None:
    Path(path).write_text(format_measure(mu))
