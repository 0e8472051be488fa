"""Cross-language reporting: rank correlation, typed tables, artifact emission.

The correlation between corpus indicators and leakage measures is the
headline output, so its statistic is implemented here in full view (no
library call) and kept honest by a brute-force oracle in the tests. Tables
carry explicit column types so CSV emission round-trips exactly: floats are
written with repr, which Python guarantees to parse back to the same
double.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field

from .errors import ContractError
from .metrics import LinguisticProfile

# joined-table column name -> LinguisticProfile attribute
INDICATOR_COLUMNS = (
    ("morphological_complexity", "M"),
    ("syntactic_entropy", "S"),
    ("contextual_redundancy", "R"),
    ("avg_word_length", "T"),
    ("capitalization_rate", "C"),
    ("vocabulary_richness", "D"),
)

_CELL_TYPES = ("str", "int", "float")


def _average_ranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(xs: list[float], ys: list[float]) -> float | None:
    """Spearman rank correlation with average ranks for ties.

    Returns None when undefined: fewer than 3 pairs, or either input
    constant (zero rank variance).
    """
    if len(xs) != len(ys):
        raise ContractError(
            f"spearman: length mismatch ({len(xs)} vs {len(ys)})"
        )
    n = len(xs)
    if n < 3:
        return None
    rx = _average_ranks([float(v) for v in xs])
    ry = _average_ranks([float(v) for v in ys])
    mx = math.fsum(rx) / n
    my = math.fsum(ry) / n
    cov = math.fsum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = math.fsum((a - mx) ** 2 for a in rx)
    vy = math.fsum((b - my) ** 2 for b in ry)
    if vx == 0.0 or vy == 0.0:
        return None
    return cov / math.sqrt(vx * vy)


@dataclass
class Table:
    """Typed rectangular data with exact CSV round-trip.

    col_types entries are "str", "int", or "float". None cells are allowed
    in int/float columns only (they serialize as the empty string); floats
    must be finite.
    """

    name: str
    columns: tuple[str, ...]
    col_types: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.col_types = tuple(self.col_types)
        if len(self.columns) != len(self.col_types):
            raise ContractError(
                f"table {self.name!r}: {len(self.columns)} columns but "
                f"{len(self.col_types)} types"
            )
        for t in self.col_types:
            if t not in _CELL_TYPES:
                raise ContractError(f"table {self.name!r}: unknown column type {t!r}")
        self.rows = [self._check_row(i, r) for i, r in enumerate(self.rows)]

    def _check_row(self, i: int, row) -> tuple:
        row = tuple(row)
        if len(row) != len(self.columns):
            raise ContractError(
                f"table {self.name!r} row {i}: {len(row)} cells, expected "
                f"{len(self.columns)}"
            )
        out = []
        for cell, col, typ in zip(row, self.columns, self.col_types):
            if cell is None:
                if typ == "str":
                    raise ContractError(
                        f"table {self.name!r} row {i}, column {col!r}: None is "
                        "not representable in a str column"
                    )
                out.append(None)
            elif typ == "str":
                if not isinstance(cell, str):
                    raise ContractError(
                        f"table {self.name!r} row {i}, column {col!r}: "
                        f"expected str, got {type(cell).__name__}"
                    )
                out.append(cell)
            elif typ == "int":
                if not isinstance(cell, int) or isinstance(cell, bool):
                    raise ContractError(
                        f"table {self.name!r} row {i}, column {col!r}: "
                        f"expected int, got {type(cell).__name__}"
                    )
                out.append(cell)
            else:
                if isinstance(cell, bool) or not isinstance(cell, (int, float)):
                    raise ContractError(
                        f"table {self.name!r} row {i}, column {col!r}: "
                        f"expected float, got {type(cell).__name__}"
                    )
                cell = float(cell)
                if not math.isfinite(cell):
                    raise ContractError(
                        f"table {self.name!r} row {i}, column {col!r}: "
                        "non-finite float"
                    )
                out.append(cell)
        return tuple(out)

    def append(self, row) -> None:
        self.rows.append(self._check_row(len(self.rows), row))

    def to_csv(self) -> str:
        sio = io.StringIO()
        w = csv.writer(sio, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            cells = []
            for cell, typ in zip(row, self.col_types):
                if cell is None:
                    cells.append("")
                elif typ == "float":
                    cells.append(repr(cell))
                else:
                    cells.append(str(cell))
            w.writerow(cells)
        return sio.getvalue()

    @classmethod
    def from_csv(cls, name: str, text: str, col_types: tuple[str, ...]) -> "Table":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise ContractError(f"table {name!r}: empty CSV") from None
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if len(raw) != len(header):
                raise ContractError(
                    f"table {name!r} line {lineno}: {len(raw)} cells, expected "
                    f"{len(header)}"
                )
            cells = []
            for cell, typ in zip(raw, col_types):
                try:
                    if typ == "str":
                        cells.append(cell)
                    elif cell == "":
                        cells.append(None)
                    elif typ == "int":
                        cells.append(int(cell))
                    else:
                        cells.append(float(cell))
                except ValueError as exc:
                    raise ContractError(
                        f"table {name!r} line {lineno}: {exc}"
                    ) from exc
            rows.append(tuple(cells))
        return cls(name=name, columns=tuple(header), col_types=col_types, rows=rows)


@dataclass
class LeakageSummary:
    """One language's leakage measurements, every family in one record.

    Measures may individually be None when that attack was not run;
    downstream joins keep the column and leave the cell null.
    """

    lang: str
    extraction_unique: dict[int, int]
    extraction_attempts: dict[int, int]
    memorization_tail_mass: float | None = None
    memorization_threshold: float | None = None
    mia_accuracy: float | None = None
    mia_precision_in: float | None = None
    mia_precision_out: float | None = None
    mia_overlap: float | None = None

    def __post_init__(self):
        if set(self.extraction_unique) != set(self.extraction_attempts):
            raise ContractError(
                f"summary for {self.lang!r}: unique/attempt prompt sizes differ"
            )
        for k, uniq in self.extraction_unique.items():
            att = self.extraction_attempts[k]
            if uniq < 0 or att < 0 or uniq > att:
                raise ContractError(
                    f"summary for {self.lang!r}: bad counts at prompt size {k} "
                    f"(unique={uniq}, attempts={att})"
                )

    def measures(self) -> dict[str, float | None]:
        out: dict[str, float | None] = {}
        for k in sorted(self.extraction_unique):
            att = self.extraction_attempts[k]
            out[f"extraction_rate_k{k}"] = (
                self.extraction_unique[k] / att if att > 0 else None
            )
        out["memorization_tail_mass"] = self.memorization_tail_mass
        out["mia_accuracy"] = self.mia_accuracy
        out["mia_overlap"] = self.mia_overlap
        return out

    def to_json_dict(self) -> dict:
        return {
            "lang": self.lang,
            "extraction_unique": {str(k): v for k, v in sorted(self.extraction_unique.items())},
            "extraction_attempts": {str(k): v for k, v in sorted(self.extraction_attempts.items())},
            "memorization_tail_mass": self.memorization_tail_mass,
            "memorization_threshold": self.memorization_threshold,
            "mia_accuracy": self.mia_accuracy,
            "mia_precision_in": self.mia_precision_in,
            "mia_precision_out": self.mia_precision_out,
            "mia_overlap": self.mia_overlap,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "LeakageSummary":
        def opt(key):
            v = d.get(key)
            return None if v is None else float(v)

        try:
            return cls(
                lang=str(d["lang"]),
                extraction_unique={int(k): int(v) for k, v in d["extraction_unique"].items()},
                extraction_attempts={int(k): int(v) for k, v in d["extraction_attempts"].items()},
                memorization_tail_mass=opt("memorization_tail_mass"),
                memorization_threshold=opt("memorization_threshold"),
                mia_accuracy=opt("mia_accuracy"),
                mia_precision_in=opt("mia_precision_in"),
                mia_precision_out=opt("mia_precision_out"),
                mia_overlap=opt("mia_overlap"),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ContractError(f"malformed leakage summary: {exc}") from exc


def write_leakage(summary: LeakageSummary, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary.to_json_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_leakage(path: str) -> LeakageSummary:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return LeakageSummary.from_json_dict(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise ContractError(f"cannot read leakage summary {path!r}: {exc}") from exc


def _aligned(
    profiles: list[LinguisticProfile], summaries: list[LeakageSummary]
) -> tuple[list[str], dict[str, LinguisticProfile], dict[str, LeakageSummary]]:
    pmap: dict[str, LinguisticProfile] = {}
    for p in profiles:
        if p.lang in pmap:
            raise ContractError(f"duplicate profile for language {p.lang!r}")
        pmap[p.lang] = p
    smap: dict[str, LeakageSummary] = {}
    for s in summaries:
        if s.lang in smap:
            raise ContractError(f"duplicate leakage summary for language {s.lang!r}")
        smap[s.lang] = s
    only_p = sorted(set(pmap) - set(smap))
    only_s = sorted(set(smap) - set(pmap))
    if only_p or only_s:
        raise ContractError(
            "profile/leakage language sets differ: "
            f"profiles-only={only_p}, leakage-only={only_s}"
        )
    return sorted(pmap), pmap, smap


def _measure_names(summaries: list[LeakageSummary]) -> list[str]:
    names: set[str] = set()
    for s in summaries:
        names.update(s.measures())
    return sorted(names)


def join(
    profiles: list[LinguisticProfile], summaries: list[LeakageSummary]
) -> Table:
    """One row per language: indicators then leakage measures.

    Languages must match one-to-one across the two inputs; a measure
    missing from some summary yields a null cell, not an error.
    """
    langs, pmap, smap = _aligned(profiles, summaries)
    measure_names = _measure_names(summaries)
    columns = (
        ("lang",)
        + tuple(name for name, _ in INDICATOR_COLUMNS)
        + tuple(measure_names)
    )
    col_types = ("str",) + ("float",) * (len(columns) - 1)
    table = Table(name="indicators_vs_leakage", columns=columns, col_types=col_types)
    for lang in langs:
        p, s = pmap[lang], smap[lang]
        m = s.measures()
        row = [lang]
        row.extend(getattr(p, attr) for _, attr in INDICATOR_COLUMNS)
        row.extend(m.get(name) for name in measure_names)
        table.append(row)
    return table


def compute_correlations(
    profiles: list[LinguisticProfile], summaries: list[LeakageSummary]
) -> Table:
    """Spearman rho of every indicator against every leakage measure.

    Rows where fewer than 3 languages have the measure get a null rho but
    keep their pair count, so sparse runs stay visible in the output.
    """
    langs, pmap, smap = _aligned(profiles, summaries)
    measure_names = _measure_names(summaries)
    table = Table(
        name="indicator_leakage_correlations",
        columns=("indicator", "measure", "spearman_rho", "n"),
        col_types=("str", "str", "float", "int"),
    )
    for ind_name, attr in INDICATOR_COLUMNS:
        for measure in measure_names:
            xs, ys = [], []
            for lang in langs:
                val = smap[lang].measures().get(measure)
                if val is None:
                    continue
                xs.append(getattr(pmap[lang], attr))
                ys.append(val)
            table.append((ind_name, measure, spearman(xs, ys), len(xs)))
    return table


@dataclass(frozen=True)
class Artifact:
    """A named output file whose content is already fully serialized."""

    name: str
    content: str

    def __post_init__(self):
        if not self.name or os.sep in self.name or "/" in self.name:
            raise ContractError(f"artifact name {self.name!r} must be a bare file name")
        if "." not in self.name:
            raise ContractError(f"artifact name {self.name!r} needs an extension")

    @property
    def extension(self) -> str:
        return self.name.rsplit(".", 1)[1]

    @classmethod
    def from_json(cls, name: str, obj) -> "Artifact":
        text = json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
        return cls(name=name, content=text)

    @classmethod
    def from_table(cls, table: Table) -> "Artifact":
        return cls(name=f"{table.name}.csv", content=table.to_csv())

    @classmethod
    def from_svg(cls, name: str, svg_text: str) -> "Artifact":
        return cls(name=name, content=svg_text)


def emit(
    artifacts: list[Artifact],
    out_dir: str,
    formats: tuple[str, ...] | None = None,
    extra_files: tuple[str, ...] = (),
) -> dict:
    """Write artifacts plus a manifest of sha256 digests to out_dir.

    formats, when given, keeps only artifacts with those extensions
    (manifest.json is always written). extra_files are names of files
    already present in out_dir to fold into the manifest, e.g. wire-format
    logs written earlier in the run.
    """
    os.makedirs(out_dir, exist_ok=True)
    seen: set[str] = set()
    entries = []
    for art in artifacts:
        if formats is not None and art.extension not in formats:
            continue
        if art.name in seen:
            raise ContractError(f"duplicate artifact name {art.name!r}")
        seen.add(art.name)
        data = art.content.encode("utf-8")
        with open(os.path.join(out_dir, art.name), "wb") as fh:
            fh.write(data)
        entries.append(
            {
                "name": art.name,
                "sha256": hashlib.sha256(data).hexdigest(),
                "bytes": len(data),
            }
        )
    for name in extra_files:
        if name in seen:
            raise ContractError(f"extra file {name!r} collides with an artifact")
        seen.add(name)
        path = os.path.join(out_dir, name)
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise ContractError(f"extra file {name!r} unreadable: {exc}") from exc
        entries.append(
            {
                "name": name,
                "sha256": hashlib.sha256(data).hexdigest(),
                "bytes": len(data),
            }
        )
    entries.sort(key=lambda e: e["name"])
    manifest = {"schema": "manifest/1", "files": entries}
    text = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    with open(os.path.join(out_dir, "manifest.json"), "wb") as fh:
        fh.write(text.encode("utf-8"))
    return manifest
