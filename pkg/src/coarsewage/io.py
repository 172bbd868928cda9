"""Canonical hire CSV, ingestion filters, key=value configs and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io as _io
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping
from urllib.parse import quote

import numpy as np
import pandas as pd

from . import money
from .errors import ConfigError, SchemaError
from .simulate import BRAZIL_MINIMUM_WAGE, LATENT_COLUMNS, RECORD_COLUMNS

INT_COLUMNS = {"worker_id", "firm_id", "year", "month", "region", "wage_centavos", "education",
               "occupation", "firm_age", "chosen_grain"}
NULLABLE_INT_COLUMNS = {"wage_next_centavos"}
BOOL_COLUMNS = {"separated", "resigned", "has_hr", "was_coarse", "mw_floored", "monthly_contract"}
FLOAT_COLUMNS = {"firm_size", "hiring_experience", "log_cpi", "w_star"}
OPTIONAL_COLUMNS = ["wage_next_centavos", *LATENT_COLUMNS, "monthly_contract"]
KNOWN_COLUMNS = [*RECORD_COLUMNS, *LATENT_COLUMNS, "monthly_contract"]
FILTERS = ("invalid_id", "non_monthly", "below_mw", "duplicate", "missing_wage")


# -- writing --------------------------------------------------------------------

def _fmt(col: str, v) -> str:
    if v is None or v is pd.NA or (isinstance(v, float) and np.isnan(v)):
        return ""
    if col in BOOL_COLUMNS:
        return "1" if v else "0"
    if col in FLOAT_COLUMNS:
        return repr(float(v))
    return str(int(v))


def records_to_csv(records: pd.DataFrame, manifest: str | None = None) -> str:
    cols = [c for c in KNOWN_COLUMNS if c in records]
    buf = _io.StringIO()
    if manifest:
        buf.write(manifest + "\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(cols)
    data = [records[c].tolist() for c in cols]
    for row in zip(*data):
        wr.writerow([_fmt(c, v) for c, v in zip(cols, row)])
    return buf.getvalue()


def write_records(records: pd.DataFrame, path, manifest: str | None = None) -> None:
    Path(path).write_bytes(records_to_csv(records, manifest).encode("utf-8"))


def write_table(df: pd.DataFrame, path, manifest: str | None = None) -> None:
    buf = _io.StringIO()
    if manifest:
        buf.write(manifest + "\n")
    df.to_csv(buf, index=False, lineterminator="\n", float_format=None)
    Path(path).write_bytes(buf.getvalue().encode("utf-8"))


# -- ingestion ------------------------------------------------------------------

@dataclass
class IngestionReport:
    rows_read: int = 0
    dropped: dict = field(default_factory=lambda: {k: 0 for k in FILTERS})
    rows_retained: int = 0

    def balanced(self) -> bool:
        return self.rows_read == self.rows_retained + sum(self.dropped.values())

    def as_line(self) -> str:
        parts = [f"read={self.rows_read}"] + [f"{k}={v}" for k, v in self.dropped.items()]
        return " ".join(parts + [f"retained={self.rows_retained}"])


def _parse_column(name: str, raw: list[str], lines: list[int]):
    if name in INT_COLUMNS or name in NULLABLE_INT_COLUMNS:
        out = np.zeros(len(raw), dtype=np.int64)
        missing = np.zeros(len(raw), dtype=bool)
        for i, s in enumerate(raw):
            if s == "":
                missing[i] = True
                continue
            try:
                out[i] = int(s)
            except ValueError:
                raise SchemaError(f"column {name}: {s!r} is not an integer", line=lines[i]) from None
        return out, missing
    if name in BOOL_COLUMNS:
        bad = [i for i, s in enumerate(raw) if s not in ("0", "1")]
        if bad:
            raise SchemaError(f"column {name}: {raw[bad[0]]!r} is not 0/1", line=lines[bad[0]])
        return np.array([s == "1" for s in raw], dtype=bool), np.zeros(len(raw), dtype=bool)
    out = np.empty(len(raw))
    for i, s in enumerate(raw):
        try:
            out[i] = float(s) if s != "" else np.nan
        except ValueError:
            raise SchemaError(f"column {name}: {s!r} is not a number", line=lines[i]) from None
    return out, np.isnan(out)


def read_raw(text: str) -> tuple[list[str], dict[str, list[str]], list[int]]:
    """Split CSV text into header, string columns and physical line numbers.  ``#`` lines are skipped."""
    src = _io.StringIO(text)
    lines = [ln for ln in src]
    body = [(i + 1, ln) for i, ln in enumerate(lines) if not ln.startswith("#") and ln.strip() != ""]
    if not body:
        raise SchemaError("missing header row")
    reader = csv.reader([ln for _, ln in body])
    rows = list(reader)
    header = rows[0]
    unknown = [c for c in header if c not in KNOWN_COLUMNS]
    if unknown:
        raise SchemaError(f"unknown column(s) {unknown}", line=body[0][0])
    required = [c for c in RECORD_COLUMNS if c not in OPTIONAL_COLUMNS]
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"missing required column(s) {missing}", line=body[0][0])
    if len(set(header)) != len(header):
        raise SchemaError("duplicate column names", line=body[0][0])
    cols = {c: [] for c in header}
    line_nos = []
    for (ln, _), row in zip(body[1:], rows[1:]):
        if len(row) != len(header):
            raise SchemaError(f"expected {len(header)} fields, found {len(row)}", line=ln)
        for c, v in zip(header, row):
            cols[c].append(v)
        line_nos.append(ln)
    return header, cols, line_nos


def ingest_text(text: str, mw_schedule: Mapping[int, int] | int | None = None) -> tuple[pd.DataFrame, IngestionReport]:
    """Parse and filter hire records.

    Filters run in this order: invalid worker/firm id (empty or negative),
    non-monthly contract, wage below the year's minimum, repeated
    worker-firm-year (the first row is kept), missing wage.
    ``mw_schedule`` maps year to centavos; None means no minimum-wage filter.
    """
    header, raw, lines = read_raw(text)
    n = len(lines)
    report = IngestionReport(rows_read=n)
    parsed, missing = {}, {}
    for c in header:
        parsed[c], missing[c] = _parse_column(c, raw[c], lines)
    for c in header:
        if c in NULLABLE_INT_COLUMNS or c in ("worker_id", "firm_id", "wage_centavos"):
            continue
        if missing[c].any() and c not in FLOAT_COLUMNS:
            i = int(np.argmax(missing[c]))
            raise SchemaError(f"column {c}: empty value", line=lines[i])
    if n and (parsed["wage_centavos"] < 0).any():
        i = int(np.argmax(parsed["wage_centavos"] < 0))
        raise SchemaError("negative wage", line=lines[i])

    keep = np.ones(n, dtype=bool)

    def apply(name, drop):
        drop = drop & keep
        report.dropped[name] = int(drop.sum())
        keep[drop] = False

    apply("invalid_id", missing["worker_id"] | missing["firm_id"]
          | (parsed["worker_id"] < 0) | (parsed["firm_id"] < 0))
    if "monthly_contract" in parsed:
        apply("non_monthly", ~parsed["monthly_contract"])
    wage_missing = missing["wage_centavos"]
    if mw_schedule is not None and n:
        years = parsed["year"]
        if isinstance(mw_schedule, Mapping):
            known = np.isin(years, list(mw_schedule))
            if not known[keep].all():
                i = int(np.argmax(keep & ~known))
                raise SchemaError(f"no minimum wage for year {years[i]}", line=lines[i])
            mw = np.zeros(n, dtype=np.int64)
            mw[known] = money.mw_lookup(mw_schedule, years[known])
        else:
            mw = np.full(n, int(mw_schedule), dtype=np.int64)
        apply("below_mw", ~wage_missing & (parsed["wage_centavos"] < mw))
    key = pd.DataFrame({"w": parsed["worker_id"], "f": parsed["firm_id"], "y": parsed["year"]})
    dup = np.zeros(n, dtype=bool)
    idx = np.flatnonzero(keep)
    dup[idx] = key.iloc[idx].duplicated(keep="first").to_numpy()
    apply("duplicate", dup)
    apply("missing_wage", wage_missing)
    report.rows_retained = int(keep.sum())

    data = {}
    for c in [c for c in KNOWN_COLUMNS if c in header]:
        v = parsed[c][keep]
        if c in NULLABLE_INT_COLUMNS:
            v = pd.array(np.where(missing[c][keep], 0, v), dtype="Int64")
            v[missing[c][keep]] = pd.NA
        data[c] = v
    return pd.DataFrame(data), report


def ingest(path, mw_schedule: Mapping[int, int] | int | None = None) -> tuple[pd.DataFrame, IngestionReport]:
    p = Path(path)
    if not p.is_file():
        raise SchemaError(f"input file not found: {p}")
    try:
        text = p.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaError(f"input is not UTF-8: {exc}") from None
    return ingest_text(text, mw_schedule)


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


# -- configuration ----------------------------------------------------------------

def parse_min_wage(text: str) -> dict[int, int] | int:
    """``"24000"`` (one value, centavos) or ``"2003:24000,2004:26000"``."""
    text = text.strip()
    try:
        if ":" not in text:
            return int(text)
        out = {}
        for part in text.split(","):
            y, v = part.split(":")
            out[int(y)] = int(v)
        return out
    except ValueError:
        raise ConfigError("min_wage", f"cannot parse {text!r}") from None


def format_min_wage(mw) -> str:
    if isinstance(mw, Mapping):
        return ",".join(f"{y}:{mw[y]}" for y in sorted(mw))
    return str(int(mw))


DEFAULT_MIN_WAGE = {y: money.reais(v) for y, v in BRAZIL_MINIMUM_WAGE.items()}


@dataclass
class RunConfig:
    """Everything a CLI run depends on.  Money values are centavos."""

    command: str = ""
    input: str = ""
    out: str = "."
    seed: int = 0
    degree: int = 7
    bandwidth: int = 500
    kernel: str = "uniform"
    grain: int = 10
    min_wage: object = field(default_factory=lambda: dict(DEFAULT_MIN_WAGE))
    winsorize: int = 1_010_000
    bootstrap: int = 0
    cells: str = ""
    rd_grain: int = 100
    rd_bandwidth: int = 10
    outcome: str = "resigned"
    n_firms: int = 20_000
    next_year: bool = True
    demo: bool = False

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "min_wage":
                v = format_min_wage(v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def manifest(self, digest: str | None = None) -> str:
        """One comment line with every setting that shapes the output (not its location)."""
        parts = []
        for f in fields(self):
            if f.name == "out":
                continue
            v = getattr(self, f.name)
            if f.name == "min_wage":
                v = format_min_wage(v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif f.name == "input" and v:
                v = Path(v).name  # contents are pinned by the digest
            parts.append(f"{f.name}={quote(str(v), safe=':,/._-')}")
        if digest is not None:
            parts.append(f"input_sha256={digest}")
        return "# manifest: " + " ".join(parts)

    @classmethod
    def from_mapping(cls, values: Mapping[str, str], base: "RunConfig | None" = None) -> "RunConfig":
        cfg = base if base is not None else cls()
        kinds = {f.name: f for f in fields(cls)}
        for k, raw in values.items():
            if k not in kinds:
                raise ConfigError(k, "unknown configuration key")
            default = getattr(cls(), k)
            try:
                if k == "min_wage":
                    v = parse_min_wage(raw)
                elif isinstance(default, bool):
                    if raw.lower() not in ("true", "false", "1", "0"):
                        raise ValueError(raw)
                    v = raw.lower() in ("true", "1")
                elif isinstance(default, int):
                    v = int(raw)
                else:
                    v = raw
            except ValueError:
                raise ConfigError(k, f"invalid value {raw!r}") from None
            setattr(cfg, k, v)
        return cfg


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment line."""
    out = {}
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ConfigError(f"line {i}", "expected key = value")
        k, v = s.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_config(path) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("config", f"file not found: {p}")
    return parse_config_text(p.read_text(encoding="utf-8"))
