"""On-disk process format: JSON with a canonical, bit-reproducible encoding.

Two payload representations are supported. ``hs`` stores the nonzero
Hilbert-Schmidt coefficients as ``{"indices": [...], "coeff": x}`` records;
``dense`` stores the full matrix as row-major ``[re, im]`` pairs. Canonical
files sort HS terms lexicographically and print every float with 17
significant digits, so parsing and re-serializing a canonical file is a
byte-identical round trip.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .linalg import CMatrix, FrameSpec, PartyLayout, hs_compose, hs_decompose
from .process import ProcessMatrix

FORMAT_VERSION = 1

#: writer drops HS coefficients at or below this magnitude (numerical dust)
HS_WRITE_CUTOFF = 1e-12


class ProcessFileError(ValueError):
    """Malformed process file: carries a human-readable field diagnostic."""


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class ProcessFile:
    """Parsed process file; keeps the payload exactly as read for round trips."""

    layout: PartyLayout
    representation: str
    terms: tuple[tuple[tuple[int, ...], float], ...] | None = None
    entries: np.ndarray | None = None

    # -- conversions --------------------------------------------------------

    def to_process(self) -> ProcessMatrix:
        if self.representation == "hs":
            coeffs = {t: c for t, c in self.terms}
            mat = hs_compose(coeffs, self.layout.factors)
        else:
            mat = CMatrix(self.entries, self.layout.factors)
        return ProcessMatrix(mat, self.layout)

    @classmethod
    def from_process(
        cls,
        w: ProcessMatrix,
        representation: str = "hs",
        cutoff: float = HS_WRITE_CUTOFF,
    ) -> "ProcessFile":
        if representation == "hs":
            terms = tuple(sorted(hs_decompose(w.mat, cutoff=cutoff).items()))
            return cls(w.layout, "hs", terms=terms)
        if representation == "dense":
            return cls(w.layout, "dense", entries=w.mat.mat.copy())
        raise ValueError(f"unknown representation {representation!r}")

    # -- serialization ------------------------------------------------------

    def canonical_text(self) -> str:
        lay = self.layout
        lines = [
            "{",
            f'  "version": {FORMAT_VERSION},',
            f'  "n_parties": {lay.n_parties},',
            f'  "d_in": {lay.d_in},',
            f'  "d_out": {lay.d_out},',
        ]
        if lay.frame is None:
            lines.append('  "frame": null,')
        else:
            lines.append(
                f'  "frame": {{"d_frame_in": {lay.frame.d_in}, '
                f'"d_frame_out": {lay.frame.d_out}}},'
            )
        lines.append(f'  "representation": "{self.representation}",')
        if self.representation == "hs":
            body = [
                f'    {{"indices": [{", ".join(str(i) for i in idx)}], '
                f'"coeff": {_fmt(c)}}}'
                for idx, c in sorted(self.terms)
            ]
            lines.append('  "terms": [')
            lines.append(",\n".join(body))
            lines.append("  ]")
        else:
            flat = self.entries.ravel()
            body = [f"    [{_fmt(z.real)}, {_fmt(z.imag)}]" for z in flat]
            lines.append('  "entries": [')
            lines.append(",\n".join(body))
            lines.append("  ]")
        lines.append("}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _require_positive_int(doc: dict, field: str) -> int:
    value = doc.get(field)
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ProcessFileError(f"field '{field}': expected a positive integer, got {value!r}")
    return value


def _parse_layout(doc: dict) -> PartyLayout:
    n = _require_positive_int(doc, "n_parties")
    d_in = _require_positive_int(doc, "d_in")
    d_out = _require_positive_int(doc, "d_out")
    frame_doc = doc.get("frame")
    frame = None
    if frame_doc is not None:
        if not isinstance(frame_doc, dict):
            raise ProcessFileError("field 'frame': expected an object or null")
        frame = FrameSpec(
            _require_positive_int(frame_doc, "d_frame_in"),
            _require_positive_int(frame_doc, "d_frame_out"),
        )
    return PartyLayout(n, d_in, d_out, frame)


def _parse_terms(doc: dict, layout: PartyLayout):
    raw = doc.get("terms")
    if not isinstance(raw, list):
        raise ProcessFileError("field 'terms': expected a list of term records")
    k = len(layout.factors)
    limits = [f * f for f in layout.factors]
    seen: set[tuple[int, ...]] = set()
    terms = []
    for pos, rec in enumerate(raw):
        where = f"terms[{pos}]"
        if not isinstance(rec, dict):
            raise ProcessFileError(f"{where}: expected an object")
        idx = rec.get("indices")
        if not isinstance(idx, list) or len(idx) != k:
            raise ProcessFileError(f"{where}.indices: expected a list of {k} integers")
        clean = []
        for i, (v, lim) in enumerate(zip(idx, limits)):
            if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v < lim:
                raise ProcessFileError(
                    f"{where}.indices[{i}]: expected an integer in [0, {lim}), got {v!r}"
                )
            clean.append(v)
        key = tuple(clean)
        if key in seen:
            raise ProcessFileError(f"{where}: duplicate indices {key}")
        seen.add(key)
        coeff = rec.get("coeff")
        if not isinstance(coeff, (int, float)) or isinstance(coeff, bool):
            raise ProcessFileError(f"{where}.coeff: expected a number, got {coeff!r}")
        terms.append((key, float(coeff)))
    return tuple(terms)


def _parse_entries(doc: dict, layout: PartyLayout) -> np.ndarray:
    raw = doc.get("entries")
    dim = layout.dim
    if not isinstance(raw, list) or len(raw) != dim * dim:
        raise ProcessFileError(
            f"field 'entries': expected {dim * dim} [re, im] pairs for dimension {dim}"
        )
    out = np.empty(dim * dim, dtype=np.complex128)
    for pos, pair in enumerate(raw):
        ok = (
            isinstance(pair, list)
            and len(pair) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair)
        )
        if not ok:
            raise ProcessFileError(f"entries[{pos}]: expected [re, im] numbers, got {pair!r}")
        out[pos] = complex(pair[0], pair[1])
    return out.reshape(dim, dim)


def loads(text: str) -> ProcessFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProcessFileError(
            f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ProcessFileError("top level: expected a JSON object")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise ProcessFileError(
            f"field 'version': expected {FORMAT_VERSION}, got {version!r}"
        )
    layout = _parse_layout(doc)
    rep = doc.get("representation")
    if rep == "hs":
        return ProcessFile(layout, "hs", terms=_parse_terms(doc, layout))
    if rep == "dense":
        return ProcessFile(layout, "dense", entries=_parse_entries(doc, layout))
    raise ProcessFileError(
        f"field 'representation': expected 'hs' or 'dense', got {rep!r}"
    )


def read_file(path: str) -> ProcessFile:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProcessFileError(f"cannot read {path}: {exc.strerror}") from exc
    return loads(text)


def write_file(path: str, pf: ProcessFile) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(pf.canonical_text())


def read_process(path: str) -> ProcessMatrix:
    return read_file(path).to_process()


def write_process(
    path: str, w: ProcessMatrix, representation: str = "hs"
) -> None:
    write_file(path, ProcessFile.from_process(w, representation))
