"""Readers and writers for the file formats used by the command line."""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .spaces import aggregate_outlier_responses, aggregate_weights

SCHEMA_VERSION = 1


class InputError(ValueError):
    """Malformed input file; the message carries ``path:line``."""

    def __init__(self, path, line, message):
        self.path, self.line = str(path), line
        where = f"{path}:{line}" if line else str(path)
        super().__init__(f"{where}: {message}")


def _is_number(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _csv_rows(path):
    with open(path, newline="") as fh:
        text = fh.read()
    try:
        dialect = csv.Sniffer().sniff(text[:4096], delimiters=",;\t ")
    except csv.Error:
        dialect = csv.excel
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text), dialect), start=1):
        row = [c.strip() for c in row if c.strip() != ""]
        if row and not row[0].startswith("#"):
            rows.append((lineno, row))
    if not rows:
        raise InputError(path, 0, "file is empty")
    return rows


def _floats(path, lineno, toks):
    try:
        return [float(t) for t in toks]
    except ValueError as exc:
        raise InputError(path, lineno, f"non-numeric value ({exc})") from None


def read_matrix_csv(path):
    """Square dissimilarity matrix with optional header row and label column."""
    rows = _csv_rows(path)
    header = None
    if not all(_is_number(t) for t in rows[0][1]):
        header = rows[0][1]
        rows = rows[1:]
    labels, values = [], []
    for lineno, row in rows:
        if not _is_number(row[0]):
            labels.append(row[0])
            row = row[1:]
        values.append(_floats(path, lineno, row))
    n = len(values)
    for (lineno, _), v in zip(rows, values):
        if len(v) != n:
            raise InputError(path, lineno, f"row has {len(v)} values, expected {n} for a square matrix")
    if header is not None:
        if len(header) == n + 1:
            header = header[1:]
        if len(header) != n:
            raise InputError(path, 1, f"header has {len(header)} labels for {n} columns")
    if labels and len(labels) != n:
        raise InputError(path, 0, "label column present on some rows only")
    return (labels or header or [str(i) for i in range(n)]), np.array(values)


def read_coords_csv(path):
    """Coordinates, one row per point; an optional ``label`` column names points."""
    rows = _csv_rows(path)
    header = None
    if not all(_is_number(t) for t in rows[0][1]):
        header = [h.lower() for h in rows[0][1]]
        rows = rows[1:]
    label_col = header.index("label") if header and "label" in header else None
    labels, values = [], []
    for lineno, row in rows:
        if header is not None and len(row) != len(header):
            raise InputError(path, lineno, f"row has {len(row)} fields, header has {len(header)}")
        if label_col is not None:
            labels.append(row[label_col])
            row = row[:label_col] + row[label_col + 1:]
        values.append(_floats(path, lineno, row))
        if len(values[-1]) != len(values[0]):
            raise InputError(path, lineno, "inconsistent number of coordinates")
    if not values:
        raise InputError(path, 0, "no points")
    return (labels or [str(i) for i in range(len(values))]), np.array(values)


def _token_lines(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if line:
                yield lineno, line.replace(",", " ").split()


def read_mass_file(path, labels):
    """``label p`` lines; every label must appear exactly once and masses sum to 1."""
    pos = {s: i for i, s in enumerate(labels)}
    p = np.full(len(labels), np.nan)
    for lineno, toks in _token_lines(path):
        if len(toks) != 2:
            raise InputError(path, lineno, "expected 'label mass'")
        if toks[0] not in pos:
            raise InputError(path, lineno, f"unknown label {toks[0]!r}")
        i = pos[toks[0]]
        if not np.isnan(p[i]):
            raise InputError(path, lineno, f"duplicate mass for {toks[0]!r}")
        (p[i],) = _floats(path, lineno, toks[1:])
        if p[i] < 0:
            raise InputError(path, lineno, "negative mass")
    if np.isnan(p).any():
        missing = [labels[i] for i in np.flatnonzero(np.isnan(p))][:5]
        raise InputError(path, 0, f"no mass given for {', '.join(missing)}")
    if abs(p.sum() - 1.0) > 1e-6:
        raise InputError(path, 0, f"masses sum to {p.sum()!r}, expected 1")
    return p / p.sum()


def read_triplet_records(path):
    """Parse a triplet file into ``(labels, records, weighted)``.

    ``i j k`` lines are single responses naming ``k`` the outlier;
    ``i j k w`` lines give ``T({i, j}, k) = w`` directly. Mixing the two is an
    error.
    """
    labels, seen, records, kind = [], set(), [], None
    for lineno, toks in _token_lines(path):
        if len(toks) not in (3, 4):
            raise InputError(path, lineno, f"expected 'i j k' or 'i j k w', got {len(toks)} fields")
        this = len(toks) == 4
        if kind is not None and kind != this:
            raise InputError(path, lineno, "response lines and weighted lines cannot be mixed")
        kind = this
        if len(set(toks[:3])) != 3:
            raise InputError(path, lineno, "the three points of a triple must be distinct")
        for t in toks[:3]:
            if t not in seen:
                seen.add(t)
                labels.append(t)
        w = _floats(path, lineno, toks[3:])[0] if this else 1.0
        records.append((lineno, (*toks[:3], w)))
    if kind is None:
        raise InputError(path, 0, "no triplet lines")
    return labels, records, kind


def read_triplet_file(path, labels=None, p=None):
    found, records, weighted = read_triplet_records(path)
    labels = list(labels) if labels is not None else found
    known = set(labels)
    for lineno, rec in records:
        for t in rec[:3]:
            if t not in known:
                raise InputError(path, lineno, f"unknown label {t!r}")
    build = aggregate_weights if weighted else aggregate_outlier_responses
    try:
        return build(labels, [r for _, r in records], p)
    except ValueError as exc:
        raise InputError(path, 0, str(exc)) from None


def read_partition_file(path, labels):
    """``label block_id`` lines; returns blocks as index sets ordered by first member."""
    pos = {s: i for i, s in enumerate(labels)}
    blocks, seen = {}, set()
    for lineno, toks in _token_lines(path):
        if len(toks) != 2:
            raise InputError(path, lineno, "expected 'label block_id'")
        if toks[0] not in pos:
            raise InputError(path, lineno, f"unknown label {toks[0]!r}")
        if toks[0] in seen:
            raise InputError(path, lineno, f"label {toks[0]!r} assigned twice")
        seen.add(toks[0])
        blocks.setdefault(toks[1], set()).add(pos[toks[0]])
    if len(seen) != len(labels):
        raise InputError(path, 0, f"{len(labels) - len(seen)} points have no block")
    return sorted((frozenset(b) for b in blocks.values()), key=min)


# -- writers ---------------------------------------------------------------------------

def matrix_csv(labels, values):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + list(labels))
    for lab, row in zip(labels, np.asarray(values)):
        w.writerow([lab] + [repr(float(v)) for v in row])
    return buf.getvalue()


def cohesion_json(c):
    return json.dumps({
        "schema_version": SCHEMA_VERSION,
        "labels": list(c.labels),
        "masses": [float(v) for v in c.p],
        "values": np.asarray(c.values).tolist(),
        "weighted_mean": c.weighted_mean(),
    }, indent=2)


def read_cohesion_json(text):
    obj = json.loads(text)
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {obj.get('schema_version')!r}")
    return obj["labels"], np.array(obj["values"]), np.array(obj["masses"])


def family_json(family, partitions=()):
    return json.dumps({
        "schema_version": SCHEMA_VERSION,
        "labels": list(family.labels),
        "sets": [
            {"id": i, "members": [family.labels[j] for j in sorted(s)], "parent": par}
            for i, (s, par) in enumerate(zip(family.sets, family.parents))
        ],
        "partitions": [[[family.labels[j] for j in sorted(b)] for b in q.blocks] for q in partitions],
    }, indent=2)


def quotient_json(q, c, labels):
    return json.dumps({
        "schema_version": SCHEMA_VERSION,
        "representatives": list(q.space.labels),
        "blocks": [[labels[i] for i in sorted(b)] for b in q.partition.blocks],
        "masses": [float(v) for v in q.pbar],
        "cohesion": np.asarray(c.values).tolist(),
    }, indent=2)


def edges_csv(graph):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "w", "weight", "strong"])
    for a, b, wt, strong in graph.edges:
        w.writerow([graph.labels[a], graph.labels[b], repr(wt), int(strong)])
    return buf.getvalue()


def _dot_id(s):
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def graph_dot(graph):
    lines = ["graph cohesion {", f"  // threshold {graph.threshold!r}"]
    for k, comm in enumerate(graph.communities):
        for i in comm:
            lines.append(f"  {_dot_id(graph.labels[i])} [community={k}];")
    for a, b, wt, strong in graph.edges:
        style = "solid" if strong else "dashed"
        lines.append(f"  {_dot_id(graph.labels[a])} -- {_dot_id(graph.labels[b])} "
                     f"[weight={wt!r}, style={style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def checks_json(results):
    return json.dumps([r.to_dict() for r in results], indent=2)


def coords_csv(labels, coords):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    coords = np.atleast_2d(np.asarray(coords))
    w.writerow(["label"] + [f"c{k}" for k in range(coords.shape[1])])
    for lab, row in zip(labels, coords):
        w.writerow([lab] + [repr(float(v)) for v in row])
    return buf.getvalue()


def mass_text(labels, p):
    return "".join(f"{lab} {float(v)!r}\n" for lab, v in zip(labels, p))
