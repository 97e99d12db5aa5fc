"""Result containers and their JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from .model import Engine

SCHEMA_VERSION = 1
SIGNIFICANT_DIGITS = 12


def round_sig(x, digits: int = SIGNIFICANT_DIGITS):
    """Round a float to ``digits`` significant digits; ``None``/nan/inf become ``None``."""
    if x is None:
        return None
    if isinstance(x, bool) or isinstance(x, int):
        return x
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(format(x, f".{digits}g"))


@dataclass(frozen=True)
class PgfEvaluation:
    phase: int
    z: float
    value: float
    abs_error_estimate: float


@dataclass
class PerformanceReport:
    """Scalar steady-state measures produced by one engine.

    For a single server ``p_vac``, ``p_idle`` and ``p_ser`` are the
    probabilities of vacation, idle-after-vacation and serving.  With ``c``
    servers they partition the phases as: some server on vacation, all back
    but one idle, all back and busy.  ``mean_n1`` collects every phase >= 1.
    """

    engine: Engine
    p00: float
    p10: float
    p11: float
    p_vac: float
    p_idle: float
    p_ser: float
    mean_n0: float
    mean_n1: float
    mean_n_total: float
    sojourn_10: float | None
    sojourn_00: float | None
    mean_sojourn: float
    fraction_served: float
    extra: dict[str, float | None] = field(default_factory=dict)

    MEASURES = (
        "p00", "p10", "p11", "p_vac", "p_idle", "p_ser", "mean_n0", "mean_n1",
        "mean_n_total", "sojourn_10", "sojourn_00", "mean_sojourn", "fraction_served",
    )

    def measures(self) -> dict[str, float | None]:
        return {name: getattr(self, name) for name in self.MEASURES}

    def to_dict(self, params=None, digits: int | None = SIGNIFICANT_DIGITS) -> dict:
        r = (lambda v: round_sig(v, digits)) if digits else (lambda v: v)
        out = {"schema": SCHEMA_VERSION, "engine": self.engine.value}
        if params is not None:
            out["params"] = params.as_dict()
        for name in ("p00", "p10", "p11", "p_vac", "p_idle", "p_ser", "mean_n0", "mean_n1",
                     "mean_n_total", "fraction_served"):
            out[name] = r(getattr(self, name))
        out["sojourn"] = {
            "S_1_0": r(self.sojourn_10),
            "S_0_0": r(self.sojourn_00),
            "mean": r(self.mean_sojourn),
        }
        out["extra"] = {k: r(v) for k, v in sorted(self.extra.items())}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PerformanceReport":
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema {data.get('schema')!r}")
        soj = data["sojourn"]
        return cls(
            engine=Engine(data["engine"]),
            p00=data["p00"], p10=data["p10"], p11=data["p11"],
            p_vac=data["p_vac"], p_idle=data["p_idle"], p_ser=data["p_ser"],
            mean_n0=data["mean_n0"], mean_n1=data["mean_n1"],
            mean_n_total=data["mean_n_total"],
            sojourn_10=soj["S_1_0"], sojourn_00=soj["S_0_0"], mean_sojourn=soj["mean"],
            fraction_served=data["fraction_served"],
            extra=dict(data.get("extra", {})),
        )

    def to_json(self, params=None, digits: int | None = SIGNIFICANT_DIGITS) -> str:
        return json.dumps(self.to_dict(params, digits), indent=2, sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "PerformanceReport":
        return cls.from_dict(json.loads(text))

    def rounded(self, digits: int = SIGNIFICANT_DIGITS) -> "PerformanceReport":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        for name in self.MEASURES:
            values[name] = round_sig(values[name], digits)
        values["extra"] = {k: round_sig(v, digits) for k, v in self.extra.items()}
        return PerformanceReport(**values)


def report_asdict(report: PerformanceReport) -> dict:
    d = asdict(report)
    d["engine"] = report.engine.value
    return d
