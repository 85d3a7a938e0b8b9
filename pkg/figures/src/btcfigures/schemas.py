"""CSV schemas of the simulator outputs and strict validation.

The renderer consumes only these documented delimited formats; any
missing column fails loudly, naming the column and file.
"""

from __future__ import annotations

from pathlib import Path

import pandas as pd

__all__ = ["SchemaError", "SCHEMAS", "load_table"]


class SchemaError(ValueError):
    """An input CSV does not match its documented schema."""


SCHEMAS: dict[str, list[str]] = {
    "trajectory": ["t", "sx", "sy", "sz", "var_x", "var_y", "var_z", "trace", "purity"],
    "spectrum": ["j", "re_lambda", "im_lambda"],
    "gapscan": ["n_spins", "j", "re_lambda"],
    "bands": ["band_index", "im_center"],
    "fourier": ["omega", "power"],
    "eta_scaling": ["n_spins", "eta", "re_lambda_ref", "frequency"],
    "ness": ["omega0_over_kappa", "sx", "sy", "sz", "var_x", "var_y", "var_z"],
    "portrait": ["seed_q", "seed_p", "class", "period_estimate"],
    "fixed_points": ["mx", "my", "mz", "class", "jac_eigs"],
    "meanfield": ["t", "mx", "my", "mz", "norm", "M", "R", "branch_n"],
}


def load_table(path: str | Path, kind: str) -> pd.DataFrame:
    """Read a CSV and check it carries every column of the schema."""
    if kind not in SCHEMAS:
        raise SchemaError(f"unknown table kind {kind!r}; expected one of {sorted(SCHEMAS)}")
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file {path} does not exist")
    frame = pd.read_csv(path)
    for column in SCHEMAS[kind]:
        if column not in frame.columns:
            raise SchemaError(
                f"column {column!r} missing from {path} (kind {kind!r})"
            )
    return frame
