"""File formats, bundled configuration, latency aggregation and report emission.

CSV schemas (UTF-8, comma separated, exact headers):

    alpha table   draft_id,target_id,draft_ppl,target_ppl,alpha,alpha_ci
    TAR samples   gamma,tar
    latency log   prompt_id,ttft_s,ttot_s,tokens
    sweep records target_size,draft_tokens,target_tokens,optimal_draft,
                  best_throughput,alpha_at_opt,gamma_at_opt
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .alpha_fit import TarObservation
from .draft_optimizer import GridSpec, OptimalDraftRecord
from .errors import DomainError, InsufficientData, NoFeasiblePoint, ParseError, SchemaError
from .regression import AlphaObservation
from .scaling_models import (
    ChinchillaParams,
    PlaneCoefficients,
    TrainingBudgets,
    throughput_curve,
)

ALPHA_HEADER = ["draft_id", "target_id", "draft_ppl", "target_ppl", "alpha", "alpha_ci"]
TAR_HEADER = ["gamma", "tar"]
LATENCY_HEADER = ["prompt_id", "ttft_s", "ttot_s", "tokens"]
RECORD_HEADER = ["target_size", "draft_tokens", "target_tokens", "optimal_draft",
                 "best_throughput", "alpha_at_opt", "gamma_at_opt"]
CURVE_HEADER = ["n", "throughput", "alpha", "gamma_opt", "feasible"]
T5_HEADER = ["target_id", "target_size", "target_tokens", "draft_family", "draft_tokens",
             "n_star", "throughput"]

Z_95 = 1.96


# -- paths and atomic writes ----------------------------------------------


def data_path(name: str) -> Path:
    """Path of a bundled data file."""
    return Path(str(resources.files("specdraft") / "data" / name))


def resolve_path(name: str | os.PathLike) -> Path:
    """An existing path as given, else the bundled data file of that name."""
    p = Path(name)
    if p.exists():
        return p
    bundled = data_path(p.name)
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"no such file: {name}")


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- CSV reading ------------------------------------------------------------


def _read_csv(path, header: list[str]):
    """Yield (line_number, row_dict) for a CSV file with an exact header."""
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            got = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {','.join(header)}") from None
        got = [h.strip().lstrip("\ufeff") for h in got]
        if got != header:
            raise SchemaError(f"{path}: header {','.join(got)!r} does not match "
                              f"{','.join(header)!r}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", row=line)
            yield line, dict(zip(header, (c.strip() for c in row)))


def _num(row, key, line, kind=float):
    text = row[key]
    try:
        val = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", row=line, column=key) from None
    if not math.isfinite(val):
        raise ParseError(f"non-finite value {text!r}", row=line, column=key)
    if kind is int:
        if val != int(val):
            raise ParseError(f"not an integer: {text!r}", row=line, column=key)
        return int(val)
    return val


def load_alpha_table(path) -> list[AlphaObservation]:
    out = []
    for line, row in _read_csv(path, ALPHA_HEADER):
        vals = {k: _num(row, k, line) for k in ("draft_ppl", "target_ppl", "alpha")}
        ci = _num(row, "alpha_ci", line) if row["alpha_ci"] else float("nan")
        if not 0 < vals["alpha"] < 1:
            raise ParseError(f"alpha {vals['alpha']} outside (0, 1)", row=line, column="alpha")
        for k in ("draft_ppl", "target_ppl"):
            if not vals[k] > 1:
                raise ParseError(f"perplexity {vals[k]} must exceed 1", row=line, column=k)
        out.append(AlphaObservation(row["draft_id"], row["target_id"], vals["draft_ppl"],
                                    vals["target_ppl"], vals["alpha"], ci))
    return out


def load_tar_samples(path) -> list[TarObservation]:
    out = []
    for line, row in _read_csv(path, TAR_HEADER):
        g = _num(row, "gamma", line, int)
        b = _num(row, "tar", line)
        if g < 0:
            raise ParseError("gamma must be non-negative", row=line, column="gamma")
        if not 1 <= b <= g + 1:
            raise ParseError(f"tar {b} outside [1, {g + 1}]", row=line, column="tar")
        out.append(TarObservation(g, b))
    return out


def tar_samples_csv(obs: Iterable[TarObservation]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TAR_HEADER)
    for o in obs:
        w.writerow([o.lookahead, repr(float(o.measured_tar))])
    return buf.getvalue()


@dataclass(frozen=True)
class LatencyRow:
    prompt_id: str
    ttft_seconds: float
    ttot_seconds: float
    tokens_generated: int

    def __post_init__(self):
        if not (self.ttft_seconds > 0 and self.ttot_seconds > 0 and self.tokens_generated > 0):
            raise DomainError("latency times and token counts must be positive")


def load_latency(path) -> list[LatencyRow]:
    out = []
    for line, row in _read_csv(path, LATENCY_HEADER):
        ttft = _num(row, "ttft_s", line)
        ttot = _num(row, "ttot_s", line)
        tokens = _num(row, "tokens", line, int)
        for key, v in (("ttft_s", ttft), ("ttot_s", ttot), ("tokens", tokens)):
            if not v > 0:
                raise ParseError(f"{key} must be positive", row=line, column=key)
        out.append(LatencyRow(row["prompt_id"], ttft, ttot, tokens))
    return out


def records_csv(records: Iterable[OptimalDraftRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_HEADER)
    for r in records:
        w.writerow([repr(float(getattr(r, k))) for k in RECORD_HEADER])
    return buf.getvalue()


def load_records(path) -> list[OptimalDraftRecord]:
    out = []
    for line, row in _read_csv(path, RECORD_HEADER):
        vals = {k: _num(row, k, line) for k in RECORD_HEADER}
        if not 0 < vals["optimal_draft"] < vals["target_size"]:
            raise ParseError("need 0 < optimal_draft < target_size", row=line,
                             column="optimal_draft")
        out.append(OptimalDraftRecord(**vals))
    return out


# -- bundled configuration ----------------------------------------------------


def _load_json(path) -> dict:
    with open(resolve_path(path), encoding="utf-8") as f:
        return json.load(f)


def load_plane(path="table3.json") -> PlaneCoefficients:
    d = _load_json(path)
    try:
        return PlaneCoefficients(float(d["a"]), float(d["b"]), float(d["c"]))
    except KeyError as exc:
        raise SchemaError(f"plane file lacks key {exc}") from None


def load_chinchilla(path="chinchilla.json") -> ChinchillaParams:
    d = _load_json(path)
    keys = ("irreducible", "coef_model", "coef_data", "exp_model", "exp_data")
    try:
        return ChinchillaParams(**{k: float(d[k]) for k in keys})
    except KeyError as exc:
        raise SchemaError(f"Chinchilla file lacks key {exc}") from None


def load_grid(path="table4.toml") -> GridSpec:
    with open(resolve_path(path), "rb") as f:
        d = tomllib.load(f)
    kw = {}
    try:
        for name in ("n", "m", "d", "dprime"):
            sec = d[name]
            kw[f"{name}_range"] = (float(sec["low"]), float(sec["high"]))
            kw[f"{name}_points"] = int(sec["points"])
    except KeyError as exc:
        raise SchemaError(f"grid file lacks {exc}") from None
    return GridSpec(**kw, spacing=d.get("spacing", "log"))


@dataclass(frozen=True)
class Table5Row:
    target_id: str
    target_size: float
    target_tokens: float
    draft_family: str
    draft_tokens: float
    n_star: float
    throughput: float


def load_table5(path="table5.csv") -> list[Table5Row]:
    out = []
    for line, row in _read_csv(resolve_path(path), T5_HEADER):
        nums = {k: _num(row, k, line) for k in T5_HEADER if k not in ("target_id", "draft_family")}
        out.append(Table5Row(target_id=row["target_id"], draft_family=row["draft_family"], **nums))
    return out


def load_draft_sizes(path="draft_models.csv") -> dict[str, float]:
    return {row["draft_id"]: _num(row, "parameters", line)
            for line, row in _read_csv(resolve_path(path), ["draft_id", "family", "parameters"])}


# -- latency aggregation --------------------------------------------------


@dataclass(frozen=True)
class LatencyReport:
    n_prompts: int
    ttft_mean: float
    ttft_moe: float
    ttot_mean: float
    ttot_moe: float
    tpot_mean: float
    tpot_moe: float
    normalized_distance: float


def normalized_distance(n: float, n_star: float, m: float) -> float:
    return abs(n - n_star) / m


def latency_report(rows: Sequence[LatencyRow], n: float, n_star: float,
                   m: float) -> LatencyReport:
    """Means with 1.96 * s / sqrt(n) margins; TPOT is ttot / tokens per row."""
    if len(rows) < 2:
        raise InsufficientData("latency aggregation needs at least 2 rows")
    ttft = np.array([r.ttft_seconds for r in rows])
    ttot = np.array([r.ttot_seconds for r in rows])
    tpot = ttot / np.array([r.tokens_generated for r in rows], dtype=float)
    k = len(rows)

    def agg(v):
        return float(v.mean()), float(Z_95 * v.std(ddof=1) / math.sqrt(k))

    (a, am), (b, bm), (c, cm) = agg(ttft), agg(ttot), agg(tpot)
    return LatencyReport(k, a, am, b, bm, c, cm, normalized_distance(n, n_star, m))


# -- curves -------------------------------------------------------------------


def emit_curve(m: float, budgets: TrainingBudgets, plane: PlaneCoefficients,
               p_draft: ChinchillaParams, p_target: ChinchillaParams, n_grid) -> str:
    """CSV of (n, throughput, alpha, gamma_opt, feasible) along the draft grid."""
    n = n_grid.n_grid() if isinstance(n_grid, GridSpec) else np.atleast_1d(np.asarray(n_grid, float))
    curve = throughput_curve(n, m, budgets, plane, p_draft, p_target)
    if not curve.feasible.any():
        raise NoFeasiblePoint("no feasible point on the curve")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for i in range(len(n)):
        ok = bool(curve.feasible[i])
        w.writerow([repr(float(n[i])),
                    repr(float(curve.throughput[i])) if ok else "",
                    repr(float(curve.alpha[i])) if ok else "",
                    repr(float(curve.gamma_opt[i])) if ok else "",
                    int(ok)])
    return buf.getvalue()


# -- reports ------------------------------------------------------------------


class ReportKind(str, enum.Enum):
    PLANE_FIT = "PlaneFit"
    ALPHA_ESTIMATE = "AlphaEstimate"
    OPTIMAL_DRAFT = "OptimalDraft"
    SWEEP = "Sweep"
    ANSATZ_FIT = "AnsatzFit"
    POOLED_FIT = "PooledFit"
    CURVE_FIT = "CurveFit"
    SIMULATION = "Simulation"
    LATENCY = "Latency"
    THROUGHPUT = "Throughput"
    GAMMA_OPT = "GammaOpt"
    CURVE = "Curve"


def _plain(obj):
    """Recursively convert numpy / tuple values to JSON-native types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


@dataclass
class Report:
    kind: ReportKind
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kind = ReportKind(self.kind)
        self.payload = _plain(self.payload)

    def to_json(self) -> str:
        # repr-based float output is the shortest string that round-trips exactly
        return json.dumps({"kind": self.kind.value, "payload": self.payload}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        try:
            return cls(d["kind"], d["payload"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"not a report document: {exc}") from None
