"""CSV and JSON-sidecar writing shared by all artifact producers.

Every CSV emitted by this package gets a `<stem>.json` sidecar carrying the
parameters that produced it.  Sidecars hold no timestamps and use sorted
keys, so re-running with the same inputs reproduces both files byte for
byte.
"""

import csv
import json

__all__ = ["sidecar_path", "write_sidecar", "write_csv", "fmt"]


def fmt(x) -> str:
    """Render a float with 15 significant digits (round-trip safe)."""
    return format(float(x), ".15g")


def sidecar_path(csv_path) -> str:
    p = str(csv_path)
    return (p[:-4] if p.endswith(".csv") else p) + ".json"


def write_sidecar(csv_path, payload: dict) -> None:
    with open(sidecar_path(csv_path), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows, sidecar: dict | None = None) -> None:
    """Write rows (iterables of already-formatted cells) under a header."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    if sidecar is not None:
        write_sidecar(path, sidecar)
