"""Problem files, run summaries and trajectory files.

Problem files are JSON documents::

    {
      "name": "QP2D",
      "n": 2,
      "objective": {"quadratic": {"Q": [[1, 0], [0, 1]], "q": [-1, -1], "const": 1}},
      "constraints": [
        {"affine": {"a": [1, 0], "b": 0}},
        {"quadratic-concave": {"Q": [[-1, 0], [0, -1]], "q": [0, 0], "const": 4}}
      ],
      "known_solution": {"x": [0.5, 0.5], "lambda": [0, 0, 0.5]},
      "interior_point": [0.1, 0.1]
    }

``Q`` may be nested rows or a flat row-major list.  An affine objective is
also accepted.  Constraints mean ``value >= 0``.  ``m`` is optional and
checked against the constraint list when present.

Summaries are ``key=value`` lines; trajectories hold one JSON object per
line.  Floats are written with ``repr`` so they parse back bit-for-bit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping

import numpy as np

from .exceptions import ParseError, ValidationError
from .problem import Affine, KnownSolution, ProblemInstance, Quadratic, validate_known_solution

SYMMETRY_TOL = 1e-8
CONCAVITY_TOL = 1e-8


def parse_problem_file(path) -> ProblemInstance:
    """Read a problem from a JSON file.

    Raises
    ------
    ParseError
        Unreadable or malformed file; the message names the line or field.
    ValidationError
        A quadratic block is asymmetric, a concave block is not negative
        semidefinite, or the known solution fails its KKT check.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return problem_from_dict(doc, source=str(path))


def problem_from_dict(doc: Mapping[str, Any], source: str = "<dict>") -> ProblemInstance:
    """Build a problem from an already-decoded document."""
    if not isinstance(doc, Mapping):
        raise ParseError(f"{source}: top level must be an object")
    n = _int_field(doc, "n", source)
    raw_cons = _require(doc, "constraints", source)
    if not isinstance(raw_cons, list):
        raise ParseError(f"{source}: field 'constraints' must be a list")
    if "m" in doc and _int_field(doc, "m", source) != len(raw_cons):
        raise ParseError(f"{source}: field 'm' is {doc['m']} but {len(raw_cons)} constraints are listed")

    objective = _objective(_require(doc, "objective", source), n, f"{source}: objective")
    constraints = [_constraint(c, n, f"{source}: constraints[{i}]") for i, c in enumerate(raw_cons)]

    known = None
    if doc.get("known_solution") is not None:
        ks = doc["known_solution"]
        where = f"{source}: known_solution"
        if not isinstance(ks, Mapping):
            raise ParseError(f"{where} must be an object")
        known = KnownSolution(_vector(_require(ks, "x", where), n, f"{where}.x"),
                              _vector(_require(ks, "lambda", where), len(constraints), f"{where}.lambda"))
    interior = None
    if doc.get("interior_point") is not None:
        interior = _vector(doc["interior_point"], n, f"{source}: interior_point")

    p = ProblemInstance(objective, constraints, name=str(doc.get("name", Path(source).stem)),
                        known_solution=known, interior_point=interior)
    validate_known_solution(p)
    return p


def problem_to_dict(p: ProblemInstance) -> Dict[str, Any]:
    """Inverse of :func:`problem_from_dict` for quadratic and affine pieces."""
    doc = {"name": p.name, "n": p.n, "m": p.m, "objective": _piece_to_dict(p.objective, objective=True),
           "constraints": [_piece_to_dict(c, objective=False) for c in p.constraints]}
    if p.known_solution is not None:
        doc["known_solution"] = {"x": p.known_solution.x.tolist(), "lambda": p.known_solution.lam.tolist()}
    if p.interior_point is not None:
        doc["interior_point"] = p.interior_point.tolist()
    return doc


def write_problem_file(p: ProblemInstance, path) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(p), indent=2) + "\n")


def _piece_to_dict(piece, objective):
    if isinstance(piece, Affine):
        return {"affine": {"a": piece.a.tolist(), "b": piece.b}}
    if isinstance(piece, Quadratic):
        key = "quadratic" if objective else "quadratic-concave"
        return {key: {"Q": piece.Q.tolist(), "q": piece.q.tolist(), "const": piece.const}}
    raise TypeError(f"{type(piece).__name__} has no file representation")


def _require(doc, key, where):
    if key not in doc:
        raise ParseError(f"{where}: missing field '{key}'")
    return doc[key]


def _int_field(doc, key, where):
    v = _require(doc, key, where)
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ParseError(f"{where}: field '{key}' must be a nonnegative integer, got {v!r}")
    return v


def _vector(v, size, where):
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: expected a list of numbers") from None
    if a.ndim != 1 or a.size != size:
        raise ParseError(f"{where}: expected {size} numbers, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParseError(f"{where}: entries must be finite")
    return a


def _matrix(v, n, where):
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: expected a matrix of numbers") from None
    if a.ndim == 1 and a.size == n * n:
        a = a.reshape(n, n)
    if a.shape != (n, n):
        raise ParseError(f"{where}: expected an {n}x{n} matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParseError(f"{where}: entries must be finite")
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.max(np.abs(a), initial=0.0)):
        raise ValidationError(f"{where}: Q is not symmetric")
    return 0.5 * (a + a.T)


def _single_kind(block, where, allowed):
    if not isinstance(block, Mapping) or len(block) != 1:
        raise ParseError(f"{where}: expected an object with exactly one of {', '.join(allowed)}")
    (kind, body), = block.items()
    if kind not in allowed:
        raise ParseError(f"{where}: unknown kind '{kind}'; expected one of {', '.join(allowed)}")
    if not isinstance(body, Mapping):
        raise ParseError(f"{where}.{kind} must be an object")
    return kind, body


def _affine(body, n, where):
    b = body.get("b", 0.0)
    if isinstance(b, bool) or not isinstance(b, (int, float)):
        raise ParseError(f"{where}.b must be a number")
    return Affine(_vector(_require(body, "a", where), n, f"{where}.a"), float(b))


def _quadratic(body, n, where):
    const = body.get("const", 0.0)
    if isinstance(const, bool) or not isinstance(const, (int, float)):
        raise ParseError(f"{where}.const must be a number")
    Q = _matrix(_require(body, "Q", where), n, f"{where}.Q")
    q = _vector(body.get("q", [0.0] * n), n, f"{where}.q")
    return Quadratic(Q, q, float(const))


def _objective(block, n, where):
    kind, body = _single_kind(block, where, ("quadratic", "affine"))
    if kind == "affine":
        return _affine(body, n, f"{where}.affine")
    piece = _quadratic(body, n, f"{where}.quadratic")
    if np.linalg.eigvalsh(piece.Q)[0] < -CONCAVITY_TOL:
        raise ValidationError(f"{where}: objective Q is not positive semidefinite")
    return piece


def _constraint(block, n, where):
    kind, body = _single_kind(block, where, ("affine", "quadratic-concave"))
    if kind == "affine":
        return _affine(body, n, f"{where}.affine")
    piece = _quadratic(body, n, f"{where}.quadratic-concave")
    if np.linalg.eigvalsh(piece.Q)[-1] > CONCAVITY_TOL:
        raise ValidationError(f"{where}: Q is not negative semidefinite")
    return piece


# -- run output ----------------------------------------------------------------

def format_value(v) -> str:
    """Round-trip text for a scalar, vector, bool or string."""
    if v is None:
        return "none"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return v
    return ",".join(repr(float(x)) for x in np.ravel(v))


def write_summary(path, fields: Mapping[str, Any]) -> None:
    Path(path).write_text("".join(f"{k}={format_value(v)}\n" for k, v in fields.items()))


def read_summary(path) -> Dict[str, str]:
    """Key to raw text; callers convert the fields they need."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"{path}: line {lineno}: expected key=value")
        out[key] = value
    return out


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def record_to_json(record) -> str:
    """One trajectory line.  Non-finite floats use JSON's ``Infinity``/``NaN`` extension."""
    return json.dumps({k: _jsonable(v) for k, v in record._asdict().items()})


class TrajectoryWriter:
    """Appends one JSON line per record and flushes, so a partial file is always parseable."""

    def __init__(self, path):
        self._fh = open(path, "w")

    def __call__(self, record):
        self._fh.write(record_to_json(record) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_trajectory(path) -> list:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if line.strip():
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc.msg}") from None
    return rows


def write_table(path, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> None:
    lines = [",".join(header)] + [",".join(format_value(x) for x in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")
