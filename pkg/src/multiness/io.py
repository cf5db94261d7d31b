"""Text file formats for multiplex networks, dense matrices and fitted decompositions.

Multiplex file (``MULTINESS v1``)::

    MULTINESS v1
    n 4
    m 2
    selfloops 0
    1 1 2 0.5
    1 2 3 NA
    2 1 4 1

Data lines are ``k i j w`` with 1-based layer ``k`` and nodes ``i, j``.  Pairs
that are not listed are observed with weight 0; ``NA`` marks an unobserved
pair.  Either node order is accepted on read; writing uses ``i < j`` (``i <=
j`` with self-loops) and lists only non-zero or unobserved pairs.  Blank lines
and lines starting with ``#`` are ignored.

Dense matrix file: the first line holds ``n``, followed by ``n`` rows of ``n``
whitespace-separated numbers.

All floats are written with 17 significant digits so they re-read bitwise.
"""

import json
import os
from pathlib import Path

import numpy as np

from .embed import ase
from .exceptions import InvalidInput, IoError, ParseError
from .model import LatentDecomposition, MultiplexNetwork, Signature

__all__ = [
    "FORMAT_HEADER",
    "REPORT_KEYS",
    "REPORT_SCHEMA",
    "format_float",
    "read_multiplex",
    "write_multiplex",
    "read_matrix",
    "write_matrix",
    "write_embedding",
    "read_embedding",
    "write_decomposition",
    "read_decomposition",
    "write_json",
]

FORMAT_HEADER = "MULTINESS v1"

REPORT_KEYS = (
    "family",
    "lambda",
    "alphas",
    "delta",
    "ranks",
    "objective_trace",
    "converged",
    "iterations",
    "seed",
    "versions",
)

_NUMBER = {"type": "number"}
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": list(REPORT_KEYS),
    "properties": {
        "family": {"enum": ["gaussian", "bernoulli"]},
        "lambda": {"type": "number", "minimum": 0},
        "alphas": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "delta": {"type": ["number", "null"]},
        "ranks": {
            "type": "object",
            "required": ["d1", "d2"],
            "additionalProperties": False,
            "properties": {
                "d1": {"type": "integer", "minimum": 0},
                "d2": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            },
        },
        "objective_trace": {"type": "array", "items": _NUMBER, "minItems": 1},
        "converged": {"type": "boolean"},
        "iterations": {"type": "integer", "minimum": 0},
        "seed": {"type": ["integer", "null"]},
        "versions": {
            "type": "object",
            "additionalProperties": {"type": "string"},
        },
        "timing": {"type": "object", "additionalProperties": _NUMBER},
    },
}


def format_float(x):
    """Shortest-safe text form: 17 significant digits."""
    return format(float(x), ".17g")


def _open_write(path):
    try:
        return open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror}") from exc


def _read_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror}") from exc


def _header_int(lines, idx, key, path):
    if idx >= len(lines):
        raise ParseError(f"{path}: missing '{key}' header")
    lineno, text = lines[idx]
    parts = text.split()
    if len(parts) != 2 or parts[0] != key:
        raise ParseError(f"{path}:{lineno}: expected '{key} <int>', got {text!r}")
    try:
        value = int(parts[1])
    except ValueError:
        raise ParseError(f"{path}:{lineno}: '{key}' must be an integer, got {parts[1]!r}") from None
    if value < 0:
        raise ParseError(f"{path}:{lineno}: '{key}' must be non-negative")
    return value


def read_multiplex(path, log1p=False):
    """Parse a ``MULTINESS v1`` multiplex file.

    Parameters
    ----------
    path : str or Path
    log1p : bool
        Apply ``log(1 + w)`` to every observed weight after parsing.  This is a
        preprocessing convenience for heavy-tailed weights.

    Raises
    ------
    ParseError
        Malformed header or data line, node or layer out of range, a weight
        that is neither a number nor ``NA``, or the same pair listed twice
        with different weights (both line numbers are reported).
    """
    raw = _read_lines(path)
    lines = [
        (no, text.strip())
        for no, text in enumerate(raw, start=1)
        if text.strip() and not text.lstrip().startswith("#")
    ]
    if not lines or lines[0][1] != FORMAT_HEADER:
        where = f"{path}:{lines[0][0]}" if lines else str(path)
        raise ParseError(f"{where}: first line must be {FORMAT_HEADER!r}")
    n = _header_int(lines, 1, "n", path)
    m = _header_int(lines, 2, "m", path)
    selfloops = _header_int(lines, 3, "selfloops", path)
    if selfloops not in (0, 1):
        raise ParseError(f"{path}:{lines[3][0]}: selfloops must be 0 or 1")
    if n < 1 or m < 1:
        raise ParseError(f"{path}: n and m must be positive")

    layers = np.zeros((m, n, n))
    mask = np.ones((m, n, n), dtype=bool)
    seen = {}
    for lineno, text in lines[4:]:
        parts = text.split()
        if len(parts) != 4:
            raise ParseError(f"{path}:{lineno}: expected 'k i j w', got {text!r}")
        try:
            k, i, j = (int(p) for p in parts[:3])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: layer and node ids must be integers") from None
        if not 1 <= k <= m:
            raise ParseError(f"{path}:{lineno}: layer {k} outside 1..{m}")
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"{path}:{lineno}: node id outside 1..{n}")
        if i == j and not selfloops:
            raise ParseError(f"{path}:{lineno}: self-loop ({i}, {i}) but selfloops is 0")
        token = parts[3]
        if token == "NA":
            weight = None
        else:
            try:
                weight = float(token)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: weight {token!r} is not a number or NA") from None
            if not np.isfinite(weight):
                raise ParseError(f"{path}:{lineno}: weight must be finite (use NA for missing)")
        key = (k, min(i, j), max(i, j))
        if key in seen:
            prev_line, prev_weight = seen[key]
            if prev_weight != weight:
                raise ParseError(
                    f"{path}: lines {prev_line} and {lineno} give conflicting weights "
                    f"for layer {k}, pair ({key[1]}, {key[2]})"
                )
            continue
        seen[key] = (lineno, weight)
        a, b = i - 1, j - 1
        if weight is None:
            mask[k - 1, a, b] = mask[k - 1, b, a] = False
        else:
            layers[k - 1, a, b] = layers[k - 1, b, a] = weight
    if log1p:
        observed = layers[mask]
        if np.any(observed <= -1):
            raise InvalidInput("log1p preprocessing needs weights greater than -1")
        layers = np.where(mask, np.log1p(np.where(mask, layers, 0.0)), 0.0)
    return MultiplexNetwork(layers, mask, bool(selfloops))


def write_multiplex(net, path):
    """Write ``net`` in the ``MULTINESS v1`` format (inverse of :func:`read_multiplex`)."""
    n, m = net.n, net.m
    offset = 0 if net.self_loops else 1
    iu = np.triu_indices(n, offset)
    with _open_write(path) as fh:
        fh.write(f"{FORMAT_HEADER}\nn {n}\nm {m}\nselfloops {int(net.self_loops)}\n")
        for k in range(m):
            w = net.layers[k][iu]
            obs = net.mask[k][iu]
            for idx in np.flatnonzero(~obs | (w != 0)):
                i, j = iu[0][idx] + 1, iu[1][idx] + 1
                value = format_float(w[idx]) if obs[idx] else "NA"
                fh.write(f"{k + 1} {i} {j} {value}\n")


def write_matrix(M, path):
    """Dense square matrix as text: ``n`` then ``n`` rows."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {M.shape}")
    with _open_write(path) as fh:
        fh.write(f"{M.shape[0]}\n")
        for row in M:
            fh.write(" ".join(format_float(x) for x in row) + "\n")


def read_matrix(path):
    """Read a dense matrix written by :func:`write_matrix`."""
    lines = [t for t in _read_lines(path) if t.strip()]
    if not lines:
        raise ParseError(f"{path}: empty matrix file")
    try:
        n = int(lines[0])
    except ValueError:
        raise ParseError(f"{path}:1: first line must be the dimension") from None
    if len(lines) != n + 1:
        raise ParseError(f"{path}: expected {n} rows, found {len(lines) - 1}")
    M = np.empty((n, n))
    for r, text in enumerate(lines[1:]):
        parts = text.split()
        if len(parts) != n:
            raise ParseError(f"{path}:{r + 2}: expected {n} values, found {len(parts)}")
        try:
            M[r] = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"{path}:{r + 2}: non-numeric entry") from None
    return M


def write_embedding(X, sig, path, gaps=None):
    """Latent positions as CSV after a ``# signature p q`` header line.

    An optional ``# gaps ...`` line records eigenvalue gaps.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != sig.d:
        raise InvalidInput(f"embedding has shape {X.shape}, signature needs {sig.d} columns")
    with _open_write(path) as fh:
        fh.write(f"# signature {sig.p} {sig.q}\n")
        if gaps is not None:
            fh.write("# gaps " + " ".join(format_float(g) for g in gaps) + "\n")
        for row in X:
            fh.write(",".join(format_float(x) for x in row) + "\n")


def read_embedding(path):
    """Inverse of :func:`write_embedding`; returns ``(X, Signature)``.

    A rank-zero embedding has no rows, so it reads back with shape ``(0, 0)``.
    """
    lines = _read_lines(path)
    if not lines or not lines[0].startswith("# signature"):
        raise ParseError(f"{path}:1: missing '# signature p q' header")
    try:
        p, q = (int(t) for t in lines[0].split()[2:4])
    except ValueError:
        raise ParseError(f"{path}:1: malformed signature header") from None
    rows = [t for t in lines[1:] if t.strip() and not t.startswith("#")]
    try:
        X = np.array([[float(v) for v in t.split(",")] for t in rows], dtype=float)
    except ValueError:
        raise ParseError(f"{path}: non-numeric coordinate") from None
    if rows and X.shape[1] != p + q:
        raise ParseError(f"{path}: rows have {X.shape[1]} columns, signature says {p + q}")
    return X.reshape(len(rows), p + q), Signature(p, q)


def _embed_block(ep):
    if ep.rank == 0:
        return np.zeros((ep.n, 0)), Signature(0, 0)
    return ase(ep.to_matrix(), ep.rank)


def write_json(obj, path):
    """Deterministic JSON (insertion order kept, two-space indent)."""
    with _open_write(path) as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def write_decomposition(dec, report, directory):
    """Persist a fit.

    Writes ``F.mat``, ``G_1.mat`` ... ``G_m.mat``, the latent positions
    ``V.csv`` and ``U_1.csv`` ... ``U_m.csv``, and ``report.json`` (keys in
    the order given by ``report``).
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {directory}: {exc.strerror}") from exc
    if not os.access(directory, os.W_OK):
        raise IoError(f"{directory} is not writable")
    write_matrix(dec.F, directory / "F.mat")
    V, sig = _embed_block(dec.common)
    write_embedding(V, sig, directory / "V.csv")
    for k, Gk in enumerate(dec.individual, start=1):
        write_matrix(dec.G[k - 1], directory / f"G_{k}.mat")
        U, sig = _embed_block(Gk)
        write_embedding(U, sig, directory / f"U_{k}.csv")
    if report is not None:
        write_json(report, directory / "report.json")


def read_decomposition(directory):
    """Load ``(LatentDecomposition, report dict or None)`` from :func:`write_decomposition` output.

    The dense ``F`` and ``G_k`` are returned exactly as stored.
    """
    directory = Path(directory)
    if not (directory / "F.mat").exists():
        raise IoError(f"{directory} holds no F.mat")
    F = read_matrix(directory / "F.mat")
    G = []
    k = 1
    while (directory / f"G_{k}.mat").exists():
        G.append(read_matrix(directory / f"G_{k}.mat"))
        k += 1
    G = np.stack(G) if G else np.zeros((0,) + F.shape)
    report = None
    if (directory / "report.json").exists():
        try:
            report = json.loads((directory / "report.json").read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{directory / 'report.json'}: {exc}") from exc
    return LatentDecomposition.from_dense(F, G), report
