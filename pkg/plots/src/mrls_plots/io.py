"""CSV readers for the simulator's delimited outputs.

Every file the simulator emits starts with ``#``-prefixed metadata lines
(tool version, ``config_hash=...``, and per-file extras) followed by a
plain CSV table. Readers return the table together with the parsed
metadata so callers can refuse to mix files from different runs.
"""

from __future__ import annotations

import io as _io
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from . import HashMismatchError, SchemaError

# Required columns per table family, used both for validation and for
# kind auto-detection in `make-all`.
FIELDMAP_COLUMNS = ("u", "v", "power_w_m2", "power_normalized")
SPECTRUM_COLUMNS = ("theta_deg", "phi_deg", "p_music")
AGGREGATE_COLUMNS = (
    "system",
    "value",
    "mean_snr_db",
    "mean_eta",
    "rmse_deg",
    "failure_rate",
)
TRACE_COLUMNS = ("iter", "p_bs_rx_w", "p_bs_tx_w")
TRIALS_COLUMNS = (
    "system",
    "value",
    "trial",
    "true_theta_deg",
    "true_phi_deg",
    "est_theta_deg",
    "est_phi_deg",
)


@dataclass(frozen=True)
class Table:
    """A parsed CSV file plus its comment-line metadata."""

    path: Path
    frame: pd.DataFrame
    metadata: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str | None:
        return self.metadata.get("config_hash")


def read_table(path) -> Table:
    """Parse a simulator CSV, splitting off the ``#`` metadata lines."""
    path = Path(path)
    meta: dict[str, str] = {}
    body_lines: list[str] = []
    with open(path) as f:
        for line in f:
            stripped = line.strip()
            if stripped.startswith("#"):
                text = stripped.lstrip("#").strip()
                if "=" in text:
                    key, _, value = text.partition("=")
                    meta[key.strip()] = value.strip()
                elif text:
                    meta.setdefault("banner", text)
            else:
                body_lines.append(line)
    if not any(line.strip() for line in body_lines):
        raise SchemaError(f"{path}: no CSV data after metadata lines")
    frame = pd.read_csv(_io.StringIO("".join(body_lines)))
    return Table(path=path, frame=frame, metadata=meta)


def require_columns(table: Table, columns) -> None:
    """Raise a `SchemaError` naming the first missing column."""
    for col in columns:
        if col not in table.frame.columns:
            raise SchemaError(f"{table.path}: missing column '{col}'")


def check_hash_consistency(tables) -> None:
    """Refuse inputs whose config-hash metadata disagrees.

    Files without a hash line are accepted alongside anything; two files
    that *both* declare a hash must declare the same one.
    """
    seen: dict[str, Path] = {}
    for t in tables:
        h = t.config_hash
        if h is None:
            continue
        for other_hash, other_path in seen.items():
            if other_hash != h:
                raise HashMismatchError(
                    f"inconsistent config_hash metadata: {other_path} has "
                    f"{other_hash} but {t.path} has {h}"
                )
        seen[h] = t.path
