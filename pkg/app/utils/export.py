"""CSV tables for every artifact the command line writes.

All floats go out with 17 significant digits so every table reads back
to the same doubles.
"""

import json
import logging
import os

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

MELNIKOV_COLUMNS = ["r", "m1_closed", "m1_quad", "m2_closed", "m2_quad", "grazing"]
DISPLACEMENT_COLUMNS = ["r", "h", "epsilon", "P", "d"]
TRAJECTORY_COLUMNS = ["t", "x", "y", "zone"]
EVENT_COLUMNS = ["t", "breakpoint_index", "direction"]
FIT_COLUMNS = ["epsilon", "d", "d_fit", "residual"]
SEARCH_COLUMNS = ["r", "value"]


def melnikov_frame(curve):
    frame = pd.DataFrame([
        {
            "r": s.r,
            "m1_closed": s.m1_closed,
            "m1_quad": s.m1_quad,
            "m2_closed": s.m2_closed,
            "m2_quad": s.m2_quad,
            "grazing": bool(s.grazing),
        }
        for s in curve.samples
    ], columns=MELNIKOV_COLUMNS)
    return frame


def displacement_frame(records):
    return pd.DataFrame([
        {"r": rec.r, "h": rec.h, "epsilon": rec.epsilon, "P": rec.P, "d": rec.d} for rec in records
    ], columns=DISPLACEMENT_COLUMNS)


def trajectory_frame(trajectory):
    return pd.DataFrame({
        "t": np.asarray(trajectory.t, dtype=float),
        "x": np.asarray(trajectory.x, dtype=float),
        "y": np.asarray(trajectory.y, dtype=float),
        "zone": np.asarray(trajectory.zone, dtype=int),
    }, columns=TRAJECTORY_COLUMNS)


def events_frame(events):
    return pd.DataFrame([
        {"t": e.t, "breakpoint_index": e.breakpoint_index, "direction": e.direction} for e in events
    ], columns=EVENT_COLUMNS)


def fit_frame(fit):
    eps = np.asarray(fit.epsilons)
    coefficients = [fit.c1, fit.c2] + ([fit.c3] if fit.c3 is not None else [])
    fitted = sum(c * eps ** (k + 1) for k, c in enumerate(coefficients))
    d = np.asarray(fit.displacements)
    return pd.DataFrame({"epsilon": eps, "d": d, "d_fit": fitted, "residual": d - fitted}, columns=FIT_COLUMNS)


def search_frame(report):
    return pd.DataFrame(report.samples, columns=SEARCH_COLUMNS)


def write_csv(frame, path):
    """Write a table; returns (success, message)."""
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.debug("wrote %d rows to %s", len(frame), path)
        return True, f"Wrote {path}"
    except Exception as e:
        return False, f"Error writing {path}: {str(e)}"


def read_csv(path):
    return pd.read_csv(path, float_precision="round_trip")


def write_json(data, path):
    """Write a JSON document; non-finite floats become null."""
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w') as f:
            json.dump(_finite(data), f, indent=4)
        return True, f"Wrote {path}"
    except Exception as e:
        return False, f"Error writing {path}: {str(e)}"


def _finite(value):
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(item) for item in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value
