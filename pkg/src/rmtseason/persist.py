"""On-disk formats for every stage's output.

Floats are written with ``repr`` (shortest round-trip form) and JSON keys are
sorted, so identical inputs give byte-identical files. Matrices go to a flat
little-endian float64 row-major ``.f64`` file next to a JSON sidecar.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from rmtseason.errors import InputError
from rmtseason.ingest import Observable, SampledSeries
from rmtseason.patterns import Eigensignal, Periodogram, Profile
from rmtseason.segmentation import Period, SegmentMatrix, Transform, iso
from rmtseason.spectral import MPReference, Spectrum, eigenvalue_histogram
from rmtseason.statistics import OffDiagSummary, RankedPair, peak_time

PathLike = Union[str, os.PathLike]
_F64 = "<f8"


def _fmt(x) -> str:
    return repr(float(x))


def _dump_json(obj, path: PathLike) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_json(path: PathLike) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _write_csv(path: PathLike, header: str, rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row) + "\n")


def _write_f64(path: PathLike, array: np.ndarray) -> None:
    np.ascontiguousarray(array, dtype=_F64).tofile(path)


def _read_f64(path: PathLike, shape: tuple[int, int]) -> np.ndarray:
    try:
        data = np.fromfile(path, dtype=_F64)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if data.size != shape[0] * shape[1]:
        raise InputError(f"{path} holds {data.size} values, expected {shape[0]}x{shape[1]}")
    return data.reshape(shape).astype(np.float64)


def _sidecar(stem: PathLike, suffix: str) -> tuple[Path, Path]:
    stem = str(stem)
    for ext in (".json", ".f64"):
        if stem.endswith(suffix + ext):
            stem = stem[: -len(suffix + ext)]
    return Path(stem + suffix + ".json"), Path(stem + suffix + ".f64")


# sampled series ---------------------------------------------------------------


def series_to_dict(series: SampledSeries) -> dict:
    return {
        "asset": series.asset,
        "observable": series.observable.value,
        "delta_t": series.delta_t,
        "start_ms": series.start_ms,
        "values": [float(v) for v in series.values],
    }


def write_series_json(series: SampledSeries, path: PathLike) -> None:
    _dump_json(series_to_dict(series), path)


def write_series_csv(series: SampledSeries, path: PathLike) -> None:
    _write_csv(path, "bin_start_ms,value", zip(series.bin_starts().tolist(), series.values.tolist()))


def read_series(path: PathLike) -> SampledSeries:
    d = _load_json(path)
    try:
        return SampledSeries(d["asset"], Observable(d["observable"]), d["delta_t"], d["start_ms"], d["values"])
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path} is not a sampled-series document: {exc}") from exc


# segment matrices -------------------------------------------------------------


def write_segments(matrix: SegmentMatrix, stem: PathLike) -> tuple[Path, Path]:
    meta_path, data_path = _sidecar(stem, ".segments")
    meta = {
        "asset": matrix.asset,
        "period": matrix.period.value,
        "observable": matrix.observable.value,
        "transform": matrix.transform.value,
        "delta_t": matrix.delta_t,
        "K": matrix.K,
        "T": matrix.T,
        "labels_ms": [int(t) for t in matrix.labels],
        "labels_utc": matrix.label_iso(),
        "dropped_rows_ms": [int(t) for t in matrix.dropped_rows],
        "dropped_rows_utc": [iso(t) for t in matrix.dropped_rows],
        "drop_reasons": {iso(k): v for k, v in matrix.drop_reasons.items()},
        "dtype": "float64-le",
        "order": "row-major",
        "data_file": data_path.name,
    }
    _dump_json(meta, meta_path)
    _write_f64(data_path, matrix.data)
    return meta_path, data_path


def read_segments(stem: PathLike) -> SegmentMatrix:
    meta_path, data_path = _sidecar(stem, ".segments")
    meta = _load_json(meta_path)
    data = _read_f64(meta_path.parent / meta.get("data_file", data_path.name), (meta["K"], meta["T"]))
    dropped = [int(t) for t in meta.get("dropped_rows_ms", [])]
    reasons = dict(zip(dropped, meta.get("drop_reasons", {}).values()))
    return SegmentMatrix(
        period=Period(meta["period"]),
        observable=Observable(meta["observable"]),
        transform=Transform(meta["transform"]),
        data=data,
        labels=np.array(meta["labels_ms"], dtype=np.int64),
        delta_t=meta["delta_t"],
        asset=meta.get("asset", ""),
        dropped_rows=dropped,
        drop_reasons=reasons,
    )


def write_segments_csv(matrix: SegmentMatrix, path: PathLike) -> None:
    """Small matrices only: one line per segment, label first."""
    header = "label_utc," + ",".join(str(i) for i in range(matrix.T))
    _write_csv(path, header, ([iso(t), *row.tolist()] for t, row in zip(matrix.labels, matrix.data)))


# spectra ----------------------------------------------------------------------


def spectrum_to_dict(spec: Spectrum, extra: dict | None = None) -> dict:
    d = {
        "K": spec.K,
        "eigenvalues": [float(v) for v in spec.eigenvalues],
        "mp": {
            "Q": spec.mp.Q,
            "sigma": spec.mp.sigma,
            "lambda_minus": spec.mp.lambda_minus,
            "lambda_plus": spec.mp.lambda_plus,
        },
        "outliers_above": list(spec.outliers_above),
        "outliers_below": list(spec.outliers_below),
        "lambda_1": spec.lambda_1,
    }
    if extra:
        d.update(extra)
    return d


def write_spectrum(spec: Spectrum, stem: PathLike, extra: dict | None = None) -> Path:
    """``<stem>.spectrum.json`` plus eigenvectors in ``<stem>.eigvecs.{json,f64}``.

    Row ``k - 1`` of the eigenvector file is ``v_k``.
    """
    stem = str(stem)
    path = Path(stem + ".spectrum.json")
    _dump_json(spectrum_to_dict(spec, extra), path)
    meta_path, data_path = _sidecar(stem, ".eigvecs")
    _dump_json(
        {"K": spec.K, "layout": "row k-1 is eigenvector k", "dtype": "float64-le", "data_file": data_path.name},
        meta_path,
    )
    _write_f64(data_path, spec.eigenvectors.T)
    return path


def read_spectrum(stem: PathLike) -> Spectrum:
    stem = str(stem)
    d = _load_json(stem + ".spectrum.json")
    K = d["K"]
    vecs = _read_f64(stem + ".eigvecs.f64", (K, K)).T
    mp = d["mp"]
    return Spectrum(
        eigenvalues=np.array(d["eigenvalues"], dtype=np.float64),
        eigenvectors=np.ascontiguousarray(vecs),
        mp=MPReference(mp["Q"], mp["sigma"], mp["lambda_minus"], mp["lambda_plus"]),
        outliers_above=list(d["outliers_above"]),
        outliers_below=list(d.get("outliers_below", [])),
    )


def write_histogram_csv(spec: Spectrum, path: PathLike, bins: int = 50) -> None:
    edges, emp, mp = eigenvalue_histogram(spec, bins)
    _write_csv(
        path,
        "bin_left,bin_right,empirical_density,mp_density",
        zip(edges[:-1].tolist(), edges[1:].tolist(), emp.tolist(), mp.tolist()),
    )


def write_offdiag_json(summary: OffDiagSummary, path: PathLike) -> None:
    _dump_json(summary.to_dict(), path)


def write_ranked_csv(pairs: Sequence[RankedPair], matrix: SegmentMatrix, path: PathLike) -> None:
    _write_csv(
        path,
        "label_a,label_b,value,peak_index,peak_utc_time",
        (
            (iso(p.label_a), iso(p.label_b), float(p.value), p.peak_index,
             peak_time(matrix.period, p.peak_index, matrix.delta_t))
            for p in pairs
        ),
    )


# eigensignals, profiles, periodograms -----------------------------------------


def _index_meta(period: Period, delta_t: float) -> dict:
    return {
        "period": Period(period).value,
        "delta_t": delta_t,
        "index_0_utc": "00:00:00" if Period(period) is Period.DAY else "Sun 00:00:00",
        "index_to_time": f"in-period offset = index * {delta_t} s",
    }


def write_eigensignal(sig: Eigensignal, stem: PathLike) -> Path:
    path = Path(f"{stem}.eigensignal_k{sig.k}.csv")
    _write_csv(path, "index_or_period,value", enumerate(sig.values.tolist()))
    meta = _index_meta(sig.period, sig.delta_t)
    meta.update({
        "k": sig.k,
        "lambda_k": sig.eigenvalue,
        "observable": sig.observable.value if sig.observable else None,
        "units": "standardized (z-score)",
        "argmax_abs_index": int(np.argmax(np.abs(sig.values))),
    })
    _dump_json(meta, path.with_suffix(".json"))
    return path


def write_profile(profile: Profile, stem: PathLike) -> Path:
    path = Path(f"{stem}.profile.csv")
    _write_csv(path, "index_or_period,value", enumerate(profile.values.tolist()))
    meta = _index_meta(profile.period, profile.delta_t)
    meta.update({
        "observable": profile.observable.value,
        "statistic": profile.statistic.value,
        "n_segments": profile.n_segments,
    })
    _dump_json(meta, path.with_suffix(".json"))
    return path


def write_periodogram(pg: Periodogram, stem: PathLike, source: dict | None = None) -> Path:
    path = Path(f"{stem}.periodogram.csv")
    _write_csv(path, "index_or_period,value", zip(pg.period_s.tolist(), pg.power.tolist()))
    meta = {"x": "period in seconds", "y": "one-sided power (sums to signal variance)"}
    if source:
        meta.update(source)
    _dump_json(meta, path.with_suffix(".json"))
    return path
