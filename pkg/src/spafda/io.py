"""CSV interchange for samples, reports, and diagnostic dumps.

Samples travel as plain CSV with a small sidecar header block::

    # dims=25,25 basis=fourier k=15
    coef1,coef2,...

Columns are either basis coefficients (``coef1..coefK``) or raw curve values
on an equidistant grid over [0, 1] (``raw1..rawM``); raw curves are projected
onto the basis by ridge-regularized least squares at ingestion.  Floats are
written with 17 significant digits so coefficient-mode round trips are
bit-exact.
"""
from __future__ import annotations

import csv
import json

import numpy as np

from .basis import make_basis
from .errors import ParseError
from .field import FunctionalGridSample
from .normtest import NormalityTestReport
from .sfpca import FilterBank, ScoreField
from .spectral import SpectralDensityField

__all__ = [
    "write_sample_csv",
    "read_sample_csv",
    "report_to_csv",
    "report_to_jsonl",
    "mc_rows_to_csv",
    "spectrum_to_csv",
    "filters_to_csv",
    "scores_to_csv",
]

_RIDGE = 1e-10


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_sample_csv(sample: FunctionalGridSample, path) -> None:
    """Write a sample in coefficient mode with its sidecar header."""
    with open(path, "w", newline="") as fh:
        dims = ",".join(str(v) for v in sample.dims)
        fh.write(f"# dims={dims} basis={sample.basis.kind} k={sample.k}\n")
        writer = csv.writer(fh)
        writer.writerow([f"coef{i + 1}" for i in range(sample.k)])
        for row in sample.coeffs:
            writer.writerow([_fmt(v) for v in row])


def _parse_header_comment(line: str) -> dict:
    meta = {}
    for token in line.lstrip("#").split():
        if "=" not in token:
            raise ParseError(f"malformed header token {token!r}; expected key=value")
        key, value = token.split("=", 1)
        meta[key] = value
    return meta


def read_sample_csv(path, dims=None, basis_kind=None, k=None) -> FunctionalGridSample:
    """Read a sample CSV; explicit arguments override the sidecar header.

    Raises :class:`ParseError` with the offending row or column named when
    shapes, counts, or values are inconsistent.
    """
    meta = {}
    rows = []
    with open(path, newline="") as fh:
        header_cols = None
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                meta.update(_parse_header_comment(stripped))
                continue
            cells = next(csv.reader([line]))
            if header_cols is None:
                header_cols = [c.strip() for c in cells]
                continue
            if len(cells) != len(header_cols):
                raise ParseError(
                    f"{path}: line {lineno} has {len(cells)} fields, "
                    f"expected {len(header_cols)}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
    if header_cols is None:
        raise ParseError(f"{path}: no column header found")

    if dims is None:
        if "dims" not in meta:
            raise ParseError(f"{path}: grid dims given neither in the header nor explicitly")
        dims = tuple(int(v) for v in meta["dims"].split(","))
    else:
        dims = tuple(int(v) for v in dims)
    basis_kind = basis_kind or meta.get("basis", "fourier")
    k = int(k if k is not None else meta.get("k", 0)) or None

    mode = None
    for prefix in ("coef", "raw"):
        if all(c.startswith(prefix) for c in header_cols):
            mode = prefix
    if mode is None:
        raise ParseError(
            f"{path}: column names must all start with 'coef' or 'raw', got {header_cols[:3]}..."
        )
    data = np.asarray(rows, dtype=float)
    n_expected = int(np.prod(dims))
    if data.shape[0] != n_expected:
        raise ParseError(
            f"{path}: {data.shape[0]} data rows but the grid {dims} needs {n_expected}; "
            f"first unexpected row is row {min(data.shape[0], n_expected) + 1}"
        )
    if not np.all(np.isfinite(data)):
        bad = np.argwhere(~np.isfinite(data))[0]
        raise ParseError(
            f"{path}: non-finite value in data row {bad[0] + 1}, column {header_cols[bad[1]]}"
        )

    if mode == "coef":
        if k is not None and k != data.shape[1]:
            raise ParseError(
                f"{path}: header/flags promise k={k} coefficients but rows have {data.shape[1]}"
            )
        basis = make_basis(basis_kind, data.shape[1])
        return FunctionalGridSample(dims, data, basis)

    if k is None:
        raise ParseError(f"{path}: raw mode needs the basis dimension (k=... )")
    basis = make_basis(basis_kind, k)
    design = basis.evaluate(np.linspace(0.0, 1.0, data.shape[1]))
    gram = design.T @ design + _RIDGE * np.eye(k)
    coeffs = np.linalg.solve(gram, design.T @ data.T).T
    return FunctionalGridSample(dims, coeffs, basis)


def report_to_csv(report: NormalityTestReport, path) -> None:
    """Fixed-name per-level rows, with the tuning echo in comment lines."""
    with open(path, "w", newline="") as fh:
        for key, value in sorted(report.tuning.items()):
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh)
        fields = ["level", "S", "K", "varS", "varK", "J", "T", "df", "pvalue"]
        writer.writerow(fields)
        for row in report.to_rows():
            writer.writerow(
                [row["level"]] + [_fmt(row[f]) for f in fields[1:-2]]
                + [_fmt(row["T"]), row["df"], _fmt(row["pvalue"])]
            )


def report_to_jsonl(report: NormalityTestReport, path) -> None:
    """One tuning record followed by one fixed-name record per level."""
    with open(path, "w") as fh:
        fh.write(json.dumps({"tuning": report.tuning}, sort_keys=True) + "\n")
        for row in report.to_rows():
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def mc_rows_to_csv(rows, path) -> None:
    fields = ["dims", "distribution", "p", "rate", "mc_se", "replications", "failures", "alpha"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def spectrum_to_csv(spec: SpectralDensityField, path) -> None:
    """Eigenvalue curves of the spectral density over the frequency grid."""
    eigenvalues = np.linalg.eigvalsh(spec.matrices)[:, ::-1]
    nodes = spec.grid.nodes()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [f"theta{i + 1}" for i in range(spec.grid.d)]
            + [f"lambda{m + 1}" for m in range(spec.k)]
        )
        for node, values in zip(nodes, eigenvalues):
            writer.writerow([_fmt(v) for v in node] + [_fmt(v) for v in values])


def filters_to_csv(bank: FilterBank, basis, path) -> None:
    """Filter coefficient vectors per level and lag, in basis coordinates."""
    d = bank.lags.shape[1]
    with open(path, "w", newline="") as fh:
        weights = ",".join(_fmt(w) for w in bank.captured_weight)
        fh.write(f"# max_lag={bank.max_lag} captured_weight={weights}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["level"] + [f"lag{i + 1}" for i in range(d)]
            + [f"coef{i + 1}" for i in range(bank.k)]
        )
        for m in range(bank.n_levels):
            coefs = basis.from_orthonormal(bank.filters[m])
            for lag, vec in zip(bank.lags, coefs):
                writer.writerow([m + 1] + list(lag) + [_fmt(v) for v in vec])


def scores_to_csv(field: ScoreField, path) -> None:
    """Score values per grid location (row-major), one column per level."""
    with open(path, "w", newline="") as fh:
        dims = ",".join(str(v) for v in field.dims)
        fh.write(f"# dims={dims}\n")
        writer = csv.writer(fh)
        p = field.n_levels
        writer.writerow([f"score{m + 1}" for m in range(p)] + ["valid"])
        for i in range(field.scores.shape[1]):
            writer.writerow(
                [_fmt(field.scores[m, i]) for m in range(p)] + [int(field.valid_mask[i])]
            )
