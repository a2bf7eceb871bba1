"""Delay and dependency metrics computed from traces."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .protocols import Scheme
from .trace import Trace, dumps


def completion_delay(t: Trace) -> int | None:
    """Model time from the first controller send to the last label application.

    ``None`` marks an incomplete run.
    """
    s = t.summary
    if not s.get("complete") or s.get("completion_time") is None:
        return None
    return s["completion_time"] - s.get("first_send", 0)


def sequential_rounds(t: Trace) -> int:
    """Length of the longest chain of applications each enabled by the previous one."""
    depth: dict = {}
    best = 0
    for row in t.rows:
        for node, lab, dep in row.get("applied", ()):
            me = (node, dumps(lab))
            prev = 0
            if dep is not None:
                prev = depth.get((dep[0], dumps(dep[1])), 0)
            depth[me] = max(depth.get(me, 0), prev + 1)
            best = max(best, depth[me])
    return best


@dataclass(frozen=True)
class RunReport:
    scheme: str
    n: int
    status: str
    completion_delay: int | None
    message_count: int
    sequential_rounds: int
    violations: int
    alarms: int

    @classmethod
    def of(cls, t: Trace) -> "RunReport":
        s = t.summary
        return cls(
            scheme=s["scheme"],
            n=s.get("n", 0),
            status=s["status"],
            completion_delay=completion_delay(t),
            message_count=s.get("message_count", 0),
            sequential_rounds=sequential_rounds(t),
            violations=s["violation_count"],
            alarms=len(s.get("node_alarms", ())),
        )

    def as_dict(self) -> dict:
        return dict(self.__dict__)

    def table(self) -> str:
        d = self.as_dict()
        if d["completion_delay"] is None:
            d["completion_delay"] = "INCOMPLETE"
        width = max(len(k) for k in d)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in d.items()) + "\n"


def fit(x, y, degree: int) -> dict:
    """Least-squares polynomial fit with its coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    coef = np.polyfit(x, y, degree)
    pred = np.polyval(coef, x)
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return {"coef": [float(c) for c in coef], "r2": r2}


def _chain_delay(args) -> int | None:
    from .scenario import fig1_chain
    from .simulator import run

    l, scheme = args
    return completion_delay(run(fig1_chain(l, Scheme(scheme))))


@dataclass(frozen=True)
class SpeedupTable:
    rows: tuple  # (l, delay_a, delay_b, ratio)
    schemes: tuple
    ratio_fit: dict

    def text(self) -> str:
        a, b = self.schemes
        out = [f"{'l':>6} {a:>18} {b:>18} {'ratio':>8}"]
        for l, da, db, r in self.rows:
            out.append(f"{l:>6} {da:>18} {db:>18} {r:>8.3f}")
        slope, icept = self.ratio_fit["coef"]
        out.append(f"# ratio ~ {slope:.4f}*l + {icept:.4f}  (R^2={self.ratio_fit['r2']:.4f})")
        return "\n".join(out) + "\n"


def speedup_curve(lengths, schemes=(Scheme.CENTRAL_BASELINE, Scheme.DIST_FLOW), workers: int = 1) -> SpeedupTable:
    """Completion delay of two schemes on ring chains and their ratio per length."""
    lengths = list(lengths)
    if any(l < 4 for l in lengths):
        raise ValueError("chain lengths must be >= 4")
    a, b = (Scheme(s) for s in schemes)
    jobs = [(l, s.value) for l in lengths for s in (a, b)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            delays = list(ex.map(_chain_delay, jobs))
    else:
        delays = [_chain_delay(j) for j in jobs]
    rows = []
    for i, l in enumerate(lengths):
        da, db = delays[2 * i], delays[2 * i + 1]
        rows.append((l, da, db, da / db))
    ratio_fit = fit([r[0] for r in rows], [r[3] for r in rows], 1) if len(rows) > 1 else {"coef": [0.0, rows[0][3]], "r2": 1.0}
    return SpeedupTable(tuple(rows), (a.value, b.value), ratio_fit)
