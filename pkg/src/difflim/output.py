"""CSV and JSON emission for experiment reports.

Every table goes to ``<experiment>_<table>.csv``.  The first line is a
``#schema=`` comment naming the experiment, table and column layout version,
followed by a header row.  Floats are written with ``repr`` so files are
byte-identical across runs with the same inputs.  The verdict goes to
``<experiment>_verdict.json``.
"""

import csv
import json
import math
import os

import numpy as np

SCHEMA_VERSION = 1


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def table_path(out_dir, experiment, table):
    return os.path.join(out_dir, f"{experiment}_{table}.csv")


def write_table(path, experiment, table):
    with open(path, "w", newline="") as fh:
        fh.write(f"#schema={experiment}/{table.name}/v{SCHEMA_VERSION}:{','.join(table.columns)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_cell(v) for v in row])


def read_table(path):
    """Read a table written by :func:`write_table`; returns ``(schema, columns, rows)`` with strings."""
    with open(path, newline="") as fh:
        schema = fh.readline().rstrip("\n")
        if not schema.startswith("#schema="):
            raise ValueError(f"{path} has no schema line")
        reader = csv.reader(fh)
        columns = next(reader)
        rows = list(reader)
    return schema[len("#schema="):], columns, rows


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return None if not math.isfinite(v) else float(v)
    if v is None or isinstance(v, str):
        return v
    return str(v)


def verdict(report):
    return {
        "experiment": report.experiment,
        "pass": report.passed,
        "criteria": [
            {"name": c.name, "value": _jsonable(c.value), "threshold": _jsonable(c.threshold), "pass": c.passed, "detail": c.detail}
            for c in report.criteria
        ],
        "notes": _jsonable(report.notes),
        "params": _jsonable(report.params),
    }


def refusal_verdict(experiment, reason, params=None):
    return {"experiment": experiment, "pass": False, "refused": reason, "params": _jsonable(params or {})}


def write_verdict(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report(report, out_dir):
    """Write all tables and the verdict; returns the list of files written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for table in report.tables:
        path = table_path(out_dir, report.experiment, table.name)
        write_table(path, report.experiment, table)
        written.append(path)
    path = os.path.join(out_dir, f"{report.experiment}_verdict.json")
    write_verdict(path, verdict(report))
    written.append(path)
    return written
