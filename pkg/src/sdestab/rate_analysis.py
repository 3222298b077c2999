"""Rate-law fitting, upper-bound shape verdicts and report emission."""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

CSV_COLUMNS = ("n", "p", "terminal_error", "terminal_ci", "sup_error", "sup_ci",
               "replicas", "h", "seed")
DEFAULT_SAFETY = 1.5


class RateModel(str, enum.Enum):
    LOG_POWER = "LOG_POWER"  # C * (log n)^-q
    POWER = "POWER"          # C * n^-q


@dataclass(frozen=True)
class RateFit:
    model: RateModel
    C: float
    q: float
    r_squared: float
    n_range: tuple

    def predict(self, n):
        n = np.asarray(n, dtype=float)
        base = np.log(n) if self.model is RateModel.LOG_POWER else n
        return self.C * base ** (-self.q)

    def to_dict(self):
        return {"model": self.model.value, "C": self.C, "q": self.q, "r2": self.r_squared,
                "n_range": list(self.n_range)}


@dataclass(frozen=True)
class Verdict:
    status: str  # "CONSISTENT" or "VIOLATED"
    witness_n: object
    C_hat: float
    safety: float
    q_claimed: float

    @property
    def consistent(self):
        return self.status == "CONSISTENT"

    def to_dict(self):
        return {"status": self.status, "witness_n": self.witness_n, "C_hat": self.C_hat,
                "safety": self.safety, "q_claimed": self.q_claimed}


def ols_line(x, y):
    """Least-squares line ``y = b0 + b1 x``; returns (b0, b1, r_squared)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.column_stack([np.ones_like(x), x])
    (b0, b1), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (b0 + b1 * x)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    floor = len(y) * (1e-13 * max(1.0, float(np.max(np.abs(y))))) ** 2  # rounding level
    if ss_tot <= floor:
        r2 = 1.0 if ss_res <= floor else 0.0
    else:
        r2 = max(0.0, 1.0 - ss_res / ss_tot)
    return float(b0), float(b1), r2


def _unpack(errors):
    """Normalise (n, value[, ci]) tuples or estimate objects to sorted arrays."""
    ns, vals, cis = [], [], []
    for e in errors:
        if hasattr(e, "n") and hasattr(e, "value"):
            ns.append(e.n)
            vals.append(e.value)
            cis.append(getattr(e, "ci", 0.0))
        else:
            ns.append(e[0])
            vals.append(e[1])
            cis.append(e[2] if len(e) > 2 else 0.0)
    ns = np.asarray(ns, dtype=float)
    order = np.argsort(ns, kind="stable")
    return ns[order], np.asarray(vals, dtype=float)[order], np.asarray(cis, dtype=float)[order]


def fit_rate(n, values, model, min_points=4):
    """Fit ``C * base(n)^-q`` by OLS in log coordinates."""
    model = RateModel(model)
    n = np.asarray(n, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(n) < min_points:
        raise InvalidInputError(f"need at least {min_points} points, got {len(n)}")
    if len(np.unique(n)) != len(n):
        raise InvalidInputError("n values must be distinct")
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise InvalidInputError("all values must be positive and finite")
    if model is RateModel.LOG_POWER:
        if np.any(n <= 2):
            raise InvalidInputError("LOG_POWER model needs n > 2")
        x = np.log(np.log(n))
    else:
        if np.any(n <= 0):
            raise InvalidInputError("POWER model needs n > 0")
        x = np.log(n)
    b0, b1, r2 = ols_line(x, np.log(values))
    return RateFit(model=model, C=math.exp(b0), q=-b1, r_squared=r2,
                   n_range=(float(n.min()), float(n.max())))


def fit_log_rate(errors, model=RateModel.LOG_POWER):
    """Fit measured ``(n, value)`` pairs to ``C (log n)^-q`` or ``C n^-q``."""
    n, vals, _ = _unpack(errors)
    if len(n) < 4:
        raise InvalidInputError(f"fit_log_rate needs >= 4 points, got {len(n)}")
    if np.any(n <= 2):
        raise InvalidInputError("n must exceed 2")
    return fit_rate(n, vals, model, min_points=4)


def bound_verdict(errors, q_claimed, safety=DEFAULT_SAFETY):
    """Test whether errors are compatible with an upper bound ``C (log n)^-q``.

    The constant is calibrated on the smaller-n half of the sweep as
    ``C_hat = max value * (log n)^q``; the verdict is CONSISTENT when the upper
    confidence limit at every n stays below ``safety * C_hat * (log n)^-q``.
    Small errors can never violate an upper bound, only errors that decay
    slower than the claimed shape.
    """
    if safety < 1:
        raise InvalidInputError("safety must be >= 1")
    n, vals, cis = _unpack(errors)
    if len(n) == 0:
        raise InvalidInputError("no errors given")
    if np.any(n <= 2):
        raise InvalidInputError("n must exceed 2")
    shape = np.log(n) ** (-q_claimed)
    k = max(1, math.ceil(len(n) / 2))
    c_hat = float(np.max(vals[:k] / shape[:k]))
    ratio = (vals + cis) / (safety * c_hat * shape) if c_hat > 0 else np.where(vals + cis > 0, np.inf, 0.0)
    worst = int(np.argmax(ratio))
    if ratio[worst] > 1.0:
        n_w = n[worst]
        return Verdict("VIOLATED", int(n_w) if float(n_w).is_integer() else float(n_w),
                       c_hat, safety, q_claimed)
    return Verdict("CONSISTENT", None, c_hat, safety, q_claimed)


def claimed_exponent(p=1.0, sup=False, alpha=None):
    """Claimed log-rate exponent.

    Wiener driver: 1/2 for the terminal first moment, ``p/(4(p+1))`` for the
    p-th moment of the running supremum.  Stable driver (``alpha`` given):
    ``(alpha-1)/2`` for moment order ``alpha-1``.
    """
    if alpha is not None:
        return (alpha - 1.0) / 2.0
    if sup:
        return p / (4.0 * (p + 1.0))
    if p != 1:
        raise InvalidInputError("terminal-moment rate is only stated for p = 1")
    return 0.5


@dataclass
class Experiment:
    """One battery: its estimates plus fit/verdict per tracked statistic."""
    experiment_id: str
    family: str
    driver: str
    moment: dict
    n_list: list
    estimates: list
    fits: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    config_echo: dict = field(default_factory=dict)
    seed: int = 0

    def summary(self):
        return {
            "experiment_id": self.experiment_id,
            "family": self.family,
            "driver": self.driver,
            **self.moment,
            "n_list": list(self.n_list),
            "errors": [_estimate_row(e) for e in self.estimates],
            "fit": {k: v.to_dict() for k, v in sorted(self.fits.items())},
            "verdict": {k: v.to_dict() for k, v in sorted(self.verdicts.items())},
            "config_echo": self.config_echo,
            "seed": self.seed,
        }


def _estimate_row(e):
    if hasattr(e, "to_row"):
        return e.to_row()
    return asdict(e)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(experiments, out_dir, stem="report"):
    """Write ``<stem>.csv`` and ``<stem>.json``; byte-stable for equal inputs."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{stem}.csv"
        json_path = out / f"{stem}.json"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for exp in experiments:
                for e in exp.estimates:
                    row = _estimate_row(e)
                    writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
        payload = {"experiments": [exp.summary() for exp in experiments]}
        with open(json_path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing report under {out}: {exc}") from exc
    return csv_path, json_path
