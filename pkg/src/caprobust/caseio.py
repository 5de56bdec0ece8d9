"""Reading and writing cases on disk.

A case directory holds ``case.toml`` plus one CSV per yearly series and
quantity (header row of region ids, 8760 data rows) and an optional monthly
outage CSV.  Layout of ``case.toml``::

    outage_data = "outages.csv"          # optional

    [scalars]
    ts = 24
    discount_rate = 0.05

    [technologies.G]
    inv_cost = 436000.0
    ...

    [[regions]]
    id = "R1"
    hydro_reservoir_cap = 750000.0
    max_capacity = { H = 1000.0, W = 2500.0 }   # omitted technologies are unbounded

    [[links]]
    a = "R1"
    b = "R2"
    distance = 450.0

    [[years]]
    id = "Y01"
    probability = 0.5
    load = "Y01_load.csv"
    cf_wind = "Y01_cf_wind.csv"
    cf_solar = "Y01_cf_solar.csv"
    inflow = "Y01_inflow.csv"
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
import tomli_w

from .case import HOURS_PER_YEAR, TECHS, CaseData, Link, Region, Scalars, ScenarioSeries, TechnologyParams
from .errors import DataValidationError
from .outages import MonthlyOutageData

SERIES = ("load", "cf_wind", "cf_solar", "inflow")


def read_series_csv(path, region_ids) -> np.ndarray:
    """(regions, 8760) array from a CSV whose header names the regions."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataValidationError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    missing = [r for r in region_ids if r not in header]
    if missing:
        raise DataValidationError(f"{path}: missing columns for regions {missing}")
    body = [r for r in rows[1:] if r]
    if len(body) != HOURS_PER_YEAR:
        raise DataValidationError(f"{path}: expected {HOURS_PER_YEAR} data rows, found {len(body)}")
    try:
        arr = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise DataValidationError(f"{path}: {exc}") from None
    if arr.shape[1] != len(header):
        raise DataValidationError(f"{path}: ragged rows")
    cols = [header.index(r) for r in region_ids]
    return arr[:, cols].T


def write_series_csv(path, region_ids, arr: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(region_ids)
        for row in np.asarray(arr).T:
            w.writerow([repr(float(v)) for v in row])


def load_case(path) -> CaseData:
    """Read a case from ``case.toml`` (or a directory containing it)."""
    path = Path(path)
    if path.is_dir():
        path = path / "case.toml"
    if not path.exists():
        raise DataValidationError(f"case file {path} does not exist")
    root = path.parent
    try:
        cfg = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise DataValidationError(f"{path}: {exc}") from None
    try:
        scalars = Scalars(**cfg.get("scalars", {}))
        techs = {p: TechnologyParams(**v) for p, v in cfg["technologies"].items()}
        regions = tuple(
            Region(r["id"], dict(r.get("max_capacity", {})), float(r.get("hydro_reservoir_cap", 0.0))) for r in cfg["regions"]
        )
        links = tuple(Link(ln["a"], ln["b"], float(ln["distance"])) for ln in cfg.get("links", []))
        ids = [r.id for r in regions]
        years = tuple(
            ScenarioSeries(
                y["id"],
                float(y.get("probability", 0.0)),
                *[read_series_csv(root / y[q], ids) for q in SERIES],
            )
            for y in cfg["years"]
        )
    except (KeyError, TypeError) as exc:
        raise DataValidationError(f"{path}: malformed case ({exc})") from None
    outage = MonthlyOutageData.from_csv(root / cfg["outage_data"]) if "outage_data" in cfg else None
    return CaseData(regions, links, techs, scalars, years, outage)


def save_case(case: CaseData, directory) -> Path:
    """Write ``case`` as ``case.toml`` plus CSV files; returns the TOML path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    ids = case.region_ids
    cfg: dict = {}
    if case.outage_data is not None:
        case.outage_data.to_csv(d / "outages.csv")
        cfg["outage_data"] = "outages.csv"
    cfg["scalars"] = dataclasses.asdict(case.scalars)
    cfg["technologies"] = {p: dataclasses.asdict(case.technologies[p]) for p in TECHS}
    cfg["regions"] = [
        {
            "id": r.id,
            "hydro_reservoir_cap": r.hydro_reservoir_cap,
            "max_capacity": {p: v for p, v in r.max_capacity.items() if not math.isinf(v)},
        }
        for r in case.regions
    ]
    cfg["links"] = [{"a": ln.a, "b": ln.b, "distance": ln.distance} for ln in case.links]
    cfg["years"] = []
    for y in case.years:
        entry = {"id": y.id, "probability": y.probability}
        for q in SERIES:
            name = f"{y.id}_{q}.csv"
            write_series_csv(d / name, ids, getattr(y, q))
            entry[q] = name
        cfg["years"].append(entry)
    out = d / "case.toml"
    out.write_text(tomli_w.dumps(cfg), encoding="utf-8")
    return out


def case_digest(path) -> str:
    """SHA-256 over ``case.toml`` and every file it references, in sorted name order."""
    path = Path(path)
    if path.is_dir():
        path = path / "case.toml"
    root = path.parent
    cfg = tomllib.loads(path.read_text(encoding="utf-8"))
    files = {path.name}
    if "outage_data" in cfg:
        files.add(cfg["outage_data"])
    for y in cfg.get("years", []):
        files.update(y[q] for q in SERIES if q in y)
    h = hashlib.sha256()
    for name in sorted(files):
        h.update(name.encode())
        h.update(b"\0")
        h.update((root / name).read_bytes())
    return h.hexdigest()
