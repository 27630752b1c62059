"""Tabular outputs of the CLI.

Every table is written with a header row, a fixed column order and 17
significant digits, so the CSV round-trips floats exactly and identical
inputs give identical bytes.
"""

from pathlib import Path
import sys
from typing import Literal, TextIO

import numpy as np
import pandas as pd

from ..config import logger
from ..core.bernstein_model import BernsteinModel
from ..core.feynman_kac import EstimatorReport
from ..core.special_functions import NeumannRoots
from ..core.verify_harness import CheckResult
from ..utils.logger import log_file_info, log_progress

FLOAT_FORMAT = "%.17g"

OutputFormat = Literal["csv", "parquet"]

ROOT_COLUMNS = ["n", "mu", "sqrt_mu", "residual"]
DENSITY_COLUMNS = ["t", "x", "u", "v", "rho", "b_star", "b"]
FK_COLUMNS = ["which", "x", "t", "estimate", "std_error", "target", "z_score"]
VERIFY_COLUMNS = ["name", "kind", "metric", "threshold", "passed"]


def roots_frame(roots: NeumannRoots) -> pd.DataFrame:
    """Table of the radial Neumann eigenvalues, mu_{1,0} = 0 first."""
    return pd.DataFrame({
        "n": np.arange(1, len(roots) + 1),
        "mu": np.asarray(roots.values),
        "sqrt_mu": roots.sqrt_values,
        "residual": np.asarray(roots.residuals),
    }, columns=ROOT_COLUMNS)


def density_frame(model: BernsteinModel, times: list[float], grid: int) -> pd.DataFrame:
    """u, v, rho and both drifts on a uniform grid of ``grid`` points per time."""
    x = np.linspace(0.0, 1.0, grid)
    blocks = []
    for i, t in enumerate(times, start=1):
        blocks.append(pd.DataFrame({
            "t": np.full(grid, t),
            "x": x,
            "u": model.u(x, t),
            "v": model.v(x, t),
            "rho": model.occupation(x, t),
            "b_star": model.forward_drift(x, t),
            "b": model.backward_drift(x, t),
        }, columns=DENSITY_COLUMNS))
        log_progress(i, len(times), "Density times", interval=max(1, len(times) // 4))
    return pd.concat(blocks, ignore_index=True)


def fk_frame(rows: list[tuple[str, float, float, EstimatorReport]]) -> pd.DataFrame:
    """One row per (which, x, t, report)."""
    return pd.DataFrame(
        [(which, x, t, r.estimate, r.std_error, r.target, r.z_score) for which, x, t, r in rows],
        columns=FK_COLUMNS,
    )


def verify_frame(results: list[CheckResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [(r.name, r.kind.value, r.metric, r.threshold, r.passed) for r in results],
        columns=VERIFY_COLUMNS,
    )


def write_frame(frame: pd.DataFrame, out: str | Path | None = None,
                output_format: OutputFormat = "csv", stream: TextIO | None = None) -> None:
    """Write ``frame`` as CSV to ``stream`` (stdout by default) or to the file ``out``.

    Args:
        frame: Table in its final column order
        out: Destination file; None writes CSV to the stream
        output_format: csv, or parquet (pyarrow engine, needs ``out``)
        stream: Text stream used when ``out`` is None

    Raises:
        ValueError: If parquet output is requested without a file
    """
    if output_format == "parquet":
        if out is None:
            raise ValueError("Parquet output needs --out <file>")
        frame.to_parquet(out, index=False, engine="pyarrow")
        logger.success(f"Parquet created: {out}")
        log_file_info(out, "Output")
        return

    if out is None:
        frame.to_csv(stream or sys.stdout, index=False, float_format=FLOAT_FORMAT,
                     lineterminator="\n")
        return
    frame.to_csv(out, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.success(f"CSV created: {out}")
    log_file_info(out, "Output")
