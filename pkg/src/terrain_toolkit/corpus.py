"""Batch classification and scoring of DEM corpora.

A manifest lists DEM files with a category tag and an optional measured
(perceived) score.  :func:`batch_score` turns it into a :class:`Report`, one
row per entry in id order; failures are recorded per row and the batch keeps
going.  Reports round-trip through CSV and JSON, and a report carrying
measured scores can be refit into a new :class:`~terrain_toolkit.metric.Calibration`.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import geomorphon, metric, raster, stats
from .geomorphon import FEATURE_NAMES, GeomorphonParams
from .metric import Calibration

KNOWN_TAGS = ("RA", "RC", "RF", "RG", "RS", "SP", "SR", "SM", "ST", "SF", "SC", "R2S", "S2R")
COLUMNS = ("id", "category", *FEATURE_NAMES, "ptrm", "measured_score", "voids_filled", "error")
DEFAULT_REFIT_DIVISOR = 69.96
MIN_REFIT_ROWS = 12


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    path: Path
    category: str
    measured_score: float | None = None


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ManifestError(f"duplicate entry ids: {dupes}")
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=lambda e: e.id)))

    def __len__(self):
        return len(self.entries)

    def to_dict(self, base_dir=None) -> dict:
        out = []
        for e in self.entries:
            path = e.path
            if base_dir is not None:
                try:
                    path = path.relative_to(base_dir)
                except ValueError:
                    pass
            doc = {"id": e.id, "path": str(path), "category": e.category}
            if e.measured_score is not None:
                doc["measured_score"] = e.measured_score
            out.append(doc)
        return {"entries": out}


def load_manifest(path) -> CorpusManifest:
    """Read a manifest JSON; relative DEM paths resolve against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise ManifestError(f"{path}: expected an object with an 'entries' list")
    entries = []
    for i, item in enumerate(doc["entries"]):
        try:
            eid, epath, cat = str(item["id"]), item["path"], str(item["category"])
        except (KeyError, TypeError):
            raise ManifestError(f"{path}: entry {i} needs id, path and category") from None
        measured = item.get("measured_score")
        if measured is not None:
            measured = float(measured)
        p = Path(epath)
        entries.append(CorpusEntry(eid, p if p.is_absolute() else path.parent / p, cat, measured))
    return CorpusManifest(tuple(entries))


def save_manifest(manifest: CorpusManifest, path) -> None:
    path = Path(path)
    path.write_text(json.dumps(manifest.to_dict(path.parent), indent=2) + "\n")


@dataclass(frozen=True)
class ReportRow:
    id: str
    category: str
    coverage: tuple | None = None
    ptrm: float | None = None
    measured_score: float | None = None
    voids_filled: int = 0
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error

    def as_record(self) -> dict:
        rec = {"id": self.id, "category": self.category}
        cov = self.coverage if self.coverage is not None else (None,) * len(FEATURE_NAMES)
        rec.update(zip(FEATURE_NAMES, cov))
        rec.update(ptrm=self.ptrm, measured_score=self.measured_score,
                   voids_filled=self.voids_filled, error=self.error)
        return rec


@dataclass(frozen=True)
class Report:
    rows: tuple = field(default_factory=tuple)

    @property
    def failures(self) -> list:
        return [r for r in self.rows if not r.ok]

    def features(self) -> np.ndarray:
        ok = [r for r in self.rows if r.ok]
        return np.array([r.coverage for r in ok], dtype=np.float64).reshape(len(ok), 10)

    def category_stats(self) -> dict:
        """Per-category mean, median, stdev (sample), min and max of the score."""
        groups: dict = {}
        for r in self.rows:
            if r.ok:
                groups.setdefault(r.category, []).append(r.ptrm)
        out = {}
        for cat in sorted(groups):
            v = np.array(groups[cat])
            out[cat] = {"n": int(v.size), "mean": float(v.mean()), "median": float(np.median(v)),
                        "stdev": float(v.std(ddof=1)) if v.size > 1 else 0.0,
                        "min": float(v.min()), "max": float(v.max())}
        return out


def _score_entry(entry, params, cal, fill, resample_to):
    try:
        field_ = raster.load_dem(entry.path)
        filled = 0
        if field_.has_voids:
            if not fill:
                raise ValueError(f"{int(field_.void_mask.sum())} void cells; enable void filling")
            filled = int(field_.void_mask.sum())
            field_ = raster.fill_voids(field_)
        if resample_to is not None:
            field_ = raster.resample(field_, resample_to)
        hist = geomorphon.geomorphon_histogram(field_, params)
        score = metric.score_histogram(hist, cal)
        return ReportRow(entry.id, entry.category, tuple(float(c) for c in hist.coverage), score,
                         entry.measured_score, filled)
    except Exception as exc:  # fault isolation: one bad DEM must not sink the batch
        return ReportRow(entry.id, entry.category, measured_score=entry.measured_score,
                         error=f"{type(exc).__name__}: {exc}")


def batch_score(manifest: CorpusManifest, params: GeomorphonParams | None = None,
                calibration: Calibration | str = "ptrm-main", threads: int | None = None,
                fill_voids: bool = False, resample_to: int | None = None) -> Report:
    """Classify and score every manifest entry.

    ``params`` defaults to the calibration's own geomorphon parameters.  DEMs
    with voids fail unless ``fill_voids`` is set, in which case the number of
    filled cells is reported per row.
    """
    cal = calibration if isinstance(calibration, Calibration) else metric.load_calibration(calibration)
    params = params or cal.geomorphon
    workers = raster.default_threads(threads)

    def run(entry):
        return _score_entry(entry, params, cal, fill_voids, resample_to)

    if workers == 1 or len(manifest) < 2:
        rows = [run(e) for e in manifest.entries]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, manifest.entries))
    return Report(tuple(rows))


# ------------------------------------------------------------ report I/O

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))  # np.float64 reprs as "np.float64(...)" under numpy 2
    return str(v)


def _parse_float(text):
    text = text.strip() if isinstance(text, str) else text
    if text in ("", None):
        return None
    return float(text)


def _row_from_record(rec) -> ReportRow:
    cov = [_parse_float(rec.get(name)) for name in FEATURE_NAMES]
    coverage = None if any(c is None for c in cov) else tuple(cov)
    vf = rec.get("voids_filled")
    return ReportRow(str(rec["id"]), str(rec["category"]), coverage, _parse_float(rec.get("ptrm")),
                     _parse_float(rec.get("measured_score")),
                     int(vf) if vf not in (None, "") else 0, rec.get("error") or "")


def _infer(path, fmt):
    if fmt is not None:
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix in (".csv", ".json"):
        return suffix[1:]
    raise ValueError(f"cannot infer report format from {path!r}; use csv or json")


def emit_report(report: Report, path, format: str | None = None) -> None:
    fmt = _infer(path, format)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for r in report.rows:
                rec = r.as_record()
                w.writerow([_fmt(rec[c]) for c in COLUMNS])
    elif fmt == "json":
        doc = {"columns": list(COLUMNS), "rows": [r.as_record() for r in report.rows],
               "categories": report.category_stats()}
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def read_report(path, format: str | None = None) -> Report:
    fmt = _infer(path, format)
    if fmt == "csv":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in ("id", "category", *FEATURE_NAMES) if c not in (reader.fieldnames or ())]
            if missing:
                raise ValueError(f"{path}: report lacks columns {missing}")
            return Report(tuple(_row_from_record(rec) for rec in reader))
    doc = json.loads(Path(path).read_text())
    return Report(tuple(_row_from_record(rec) for rec in doc["rows"]))


# ----------------------------------------------------------------- refit

def refit_calibration(report: Report, policy: str = "fixed", divisor: float = DEFAULT_REFIT_DIVISOR,
                      bounds="corpus", name: str = "refit",
                      params: GeomorphonParams | None = None,
                      on_rank_deficient: str = "min_norm") -> tuple[Calibration, stats.RegressionFit]:
    """Fit PTRM weights to the measured scores of a report.

    ``bounds`` is ``"corpus"`` (per-feature min/max over the usable rows) or a
    Calibration whose bounds are reused.  Policies:

    ``fixed``
        keep ``divisor`` and scale the fitted coefficients by it, so the new
        calibration reproduces the fitted predictions exactly.
    ``self-consistent``
        express coefficients on the x100 display scale and set the divisor to
        ``intercept + sum(weights)``, so all-ones features score exactly 1.

    Coverage fractions sum to one, which makes min-max normalized features
    collinear with the intercept; by default such designs get the
    minimum-norm solution (pass ``on_rank_deficient="raise"`` to refuse).
    """
    rows = [r for r in report.rows if r.ok and r.measured_score is not None]
    if len(rows) < MIN_REFIT_ROWS:
        raise stats.StatsError(f"refit needs at least {MIN_REFIT_ROWS} scored rows, got {len(rows)}")
    G = np.array([r.coverage for r in rows], dtype=np.float64)
    y = np.array([r.measured_score for r in rows], dtype=np.float64)
    if isinstance(bounds, Calibration):
        lo, hi = bounds.feature_min, bounds.feature_max
        source = f"bounds from {bounds.name}"
    elif bounds == "corpus":
        lo, hi = G.min(axis=0), G.max(axis=0)
        source = f"bounds from {len(rows)} report rows"
    else:
        raise ValueError("bounds must be 'corpus' or a Calibration")
    probe = Calibration("probe", 0.0, np.zeros(10), 1.0, lo, hi)
    X = np.vstack([metric.normalize_features(g, probe) for g in G])
    fit = stats.fit_mlr(X, y, on_rank_deficient=on_rank_deficient)

    if policy == "fixed":
        if not (math.isfinite(divisor) and divisor > 0):
            raise ValueError("divisor must be positive")
        weights, intercept, div = fit.coefficients * divisor, fit.intercept * divisor, divisor
    elif policy == "self-consistent":
        weights, intercept = fit.coefficients * 100.0, fit.intercept * 100.0
        div = float(weights.sum() + intercept)
        if not div > 0:
            raise stats.StatsError("self-consistent divisor intercept + sum(weights) is not positive")
    else:
        raise ValueError("policy must be 'fixed' or 'self-consistent'")
    cal = Calibration(
        name=name, intercept=float(intercept), weights=weights, divisor=div, feature_min=lo,
        feature_max=hi, clamp=True, geomorphon=params or GeomorphonParams(),
        provenance=(f"refit ({policy} divisor) on {len(rows)} rows; {source}; "
                    f"R2={fit.r_squared:.4f}, rank={fit.rank}"))
    return cal, fit


# ------------------------------------------------------ bundled corpus

def write_synthetic_corpus(directory, categories=None, seeds=range(25), size: int = 129,
                           threads: int | None = None, format: str = "esri_ascii") -> CorpusManifest:
    """Generate synthetic DEMs plus a ``manifest.json``.

    ``format`` is ``esri_ascii`` (lossless) or ``pgm16`` (compact, 16-bit
    quantized elevations with a JSON sidecar).
    """
    from . import synth

    suffix = {"esri_ascii": ".asc", "pgm16": ".pgm"}.get(format)
    if suffix is None:
        raise ValueError("format must be esri_ascii or pgm16")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    categories = tuple(categories or synth.CATEGORIES)
    jobs = [(c, int(s)) for c in categories for s in seeds]

    def make(job):
        cat, seed = job
        eid = f"{synth.CATEGORY_TAGS[cat]}_{seed:04d}"
        spec = synth.SynthSpec(cat, seed, size)
        path = directory / f"{eid}{suffix}"
        raster.save_dem(synth.generate(spec), path)
        return CorpusEntry(eid, path, synth.CATEGORY_TAGS[cat])

    workers = raster.default_threads(threads)
    if workers == 1:
        entries = [make(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(make, jobs))
    manifest = CorpusManifest(tuple(entries))
    save_manifest(manifest, directory / "manifest.json")
    return manifest


def with_measured_scores(report: Report, scores: dict) -> Report:
    """Attach measured scores by id (ids missing from ``scores`` keep theirs)."""
    return Report(tuple(replace(r, measured_score=float(scores[r.id])) if r.id in scores else r
                        for r in report.rows))


__all__ = [
    "COLUMNS", "CorpusEntry", "CorpusManifest", "KNOWN_TAGS", "ManifestError", "Report",
    "ReportRow", "batch_score", "emit_report", "load_manifest", "read_report",
    "refit_calibration", "save_manifest", "with_measured_scores", "write_synthetic_corpus",
]
