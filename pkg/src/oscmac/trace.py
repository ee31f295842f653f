"""Trace and metrics persistence.

Traces are CSV with one leading ``#`` header line carrying the config
hash, the seed, and the tool version, so any output file identifies the
run that produced it. Metrics are a single JSON document.
"""

import csv
import io
import json

from . import __version__

TRACE_COLUMNS = ("time_us", "seq", "node", "event", "detail", "residual_j")


def render_trace(rows, config_hash: str, seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash} seed={seed} version={__version__}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_trace(path, rows, config_hash: str, seed: int) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_trace(rows, config_hash, seed))


def write_metrics(path, metrics, config_hash: str, seed: int) -> None:
    doc = {"config_hash": config_hash, "seed": seed, "version": __version__}
    doc.update(metrics.to_dict())
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_trace(path):
    """Parse a trace file back into (header dict, list of row dicts)."""
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline().strip()
        if not header_line.startswith("# "):
            raise ValueError("trace file lacks the # header line")
        header = dict(part.split("=", 1) for part in header_line[2:].split(" "))
        reader = csv.DictReader(fh)
        records = []
        for rec in reader:
            rec["time_us"] = int(rec["time_us"])
            rec["seq"] = int(rec["seq"])
            rec["detail"] = json.loads(rec["detail"])
            records.append(rec)
    return header, records
