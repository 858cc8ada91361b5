"""Reconstruction-threshold bound constants and verdicts.

For a channel M and a tree of mean branching number d, each bound compares
d times a channel constant against 1:

  ks      second eigenvalue squared; d * ks > 1 proves reconstruction.
  fk      the variational constant c(M); d * fk < 1 proves non-reconstruction.
  martin  two-state channels only; d * martin <= 1 proves non-reconstruction.
  mp      two-state channels only; d * mp <= 1 proves non-reconstruction.

Verdicts are tri-state; bounds that do not apply are absent (None), not zero.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

from .channels import Channel, binary_channel, second_eigenvalue
from .errors import ChannelError, NonPositiveEntry
from .variational import OptimizerConfig, compute_c


class Verdict(str, Enum):
    NON_RECONSTRUCTION = "non-reconstruction proven"
    RECONSTRUCTION = "reconstruction proven"
    INCONCLUSIVE = "inconclusive"


class FkResult(NamedTuple):
    verdict: Verdict
    margin: float


def ks_constant(channel: Channel) -> float:
    """Squared modulus of the second eigenvalue."""
    return second_eigenvalue(channel) ** 2


def _check_deltas(delta1: float, delta2: float) -> None:
    for name, d in (("delta1", delta1), ("delta2", delta2)):
        if not (0.0 < d < 1.0):
            raise NonPositiveEntry(f"{name} must lie strictly in (0, 1), got {d!r}")


def mp_constant(delta1: float, delta2: float) -> float:
    """(delta2 - delta1)^2 / min(delta1 + delta2, 2 - delta1 - delta2)."""
    _check_deltas(delta1, delta2)
    return (delta2 - delta1) ** 2 / min(delta1 + delta2, 2.0 - delta1 - delta2)


def martin_constant(delta1: float, delta2: float) -> float:
    """(sqrt((1-delta1) delta2) - sqrt((1-delta2) delta1))^2."""
    _check_deltas(delta1, delta2)
    return (
        math.sqrt((1.0 - delta1) * delta2) - math.sqrt((1.0 - delta2) * delta1)
    ) ** 2


def fk_criterion(channel: Channel, branching: float, *,
                 c_value: float | None = None,
                 config: OptimizerConfig | None = None,
                 threads: int | None = 1) -> FkResult:
    """Non-reconstruction criterion branching * c(M) < 1 (strict).

    Returns the verdict and the margin 1 - branching * c(M); a positive
    margin proves non-reconstruction.
    """
    if branching < 1.0:
        raise ChannelError(f"branching number must be >= 1, got {branching!r}")
    c = compute_c(channel, config, threads).value if c_value is None else float(c_value)
    margin = 1.0 - branching * c
    verdict = Verdict.NON_RECONSTRUCTION if margin > 0.0 else Verdict.INCONCLUSIVE
    return FkResult(verdict, margin)


@dataclass(frozen=True)
class BoundReport:
    channel_desc: str
    branching: float | None
    fk: float
    ks: float
    martin: float | None
    mp: float | None
    verdicts: dict
    delta1: float | None = None
    delta2: float | None = None


def _verdicts(fk: float, ks: float, martin: float | None, mp: float | None,
              branching: float | None) -> dict:
    if branching is None:
        return {}
    d = float(branching)
    out = {
        "fk": (Verdict.NON_RECONSTRUCTION if d * fk < 1.0 else Verdict.INCONCLUSIVE).value,
        "ks": (Verdict.RECONSTRUCTION if d * ks > 1.0 else Verdict.INCONCLUSIVE).value,
    }
    if martin is not None:
        out["martin"] = (
            Verdict.NON_RECONSTRUCTION if d * martin <= 1.0 else Verdict.INCONCLUSIVE
        ).value
    if mp is not None:
        out["mp"] = (
            Verdict.NON_RECONSTRUCTION if d * mp <= 1.0 else Verdict.INCONCLUSIVE
        ).value
    return out


def bound_report(channel: Channel, branching: float | None = None, *,
                 config: OptimizerConfig | None = None,
                 threads: int | None = 1) -> BoundReport:
    """All applicable bound constants for one channel, with verdicts when a
    branching number is given.  martin and mp require q = 2."""
    fk = compute_c(channel, config, threads).value
    ks = ks_constant(channel)
    martin = mp = d1 = d2 = None
    if channel.q == 2:
        d1 = float(channel.matrix[0, 1])
        d2 = float(channel.matrix[1, 1])
        martin = martin_constant(d1, d2)
        mp = mp_constant(d1, d2)
    return BoundReport(
        channel_desc=channel.label or "matrix",
        branching=None if branching is None else float(branching),
        fk=fk,
        ks=ks,
        martin=martin,
        mp=mp,
        verdicts=_verdicts(fk, ks, martin, mp, branching),
        delta1=d1,
        delta2=d2,
    )


DELTA2_GRID = (0.1, 0.2, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


def table1(delta1: float = 0.3, delta2_list: Sequence[float] = DELTA2_GRID,
           branching: float | None = None,
           config: OptimizerConfig | None = None,
           threads: int | None = 1) -> list[BoundReport]:
    """Bound constants for the family of two-state channels with fixed delta1."""
    reports = []
    for d2 in delta2_list:
        ch = binary_channel(delta1, d2)
        reports.append(bound_report(ch, branching, config=config, threads=threads))
    return reports


TABLE_COLUMNS = ("delta2", "ks", "fk", "martin", "mp")


def table_to_csv(reports: Sequence[BoundReport]) -> str:
    """CSV with columns delta2,ks,fk,martin,mp at 4 decimal places."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for r in reports:
        w.writerow([
            f"{r.delta2:.4f}" if r.delta2 is not None else "",
            f"{r.ks:.4f}",
            f"{r.fk:.4f}",
            f"{r.martin:.4f}" if r.martin is not None else "",
            f"{r.mp:.4f}" if r.mp is not None else "",
        ])
    return buf.getvalue()


def table_from_csv(text: str) -> list[dict]:
    """Parse the CSV produced by table_to_csv back into row dicts of floats."""
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty table")
    for row in rows:
        missing = set(TABLE_COLUMNS) - set(row)
        if missing:
            raise ValueError(f"table is missing columns {sorted(missing)}")
    return [
        {k: (float(v) if v not in (None, "") else None) for k, v in row.items()}
        for row in rows
    ]


def report_to_dict(r: BoundReport) -> dict:
    return {
        "channel": r.channel_desc,
        "branching": r.branching,
        "delta1": r.delta1,
        "delta2": r.delta2,
        "constants": {"fk": r.fk, "ks": r.ks, "martin": r.martin, "mp": r.mp},
        "verdicts": r.verdicts,
    }


def reports_to_json(reports: Sequence[BoundReport], **meta) -> str:
    obj = dict(meta)
    obj["reports"] = [report_to_dict(r) for r in reports]
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def reports_from_json(text: str) -> dict:
    """Parse and schema-check a JSON report emitted by reports_to_json."""
    obj = json.loads(text)
    if not isinstance(obj, dict) or "reports" not in obj:
        raise ValueError("bound report JSON needs a top-level 'reports' list")
    for r in obj["reports"]:
        if "constants" not in r or "verdicts" not in r:
            raise ValueError("each report needs 'constants' and 'verdicts'")
        missing = {"fk", "ks", "martin", "mp"} - set(r["constants"])
        if missing:
            raise ValueError(f"report constants missing {sorted(missing)}")
    return obj
