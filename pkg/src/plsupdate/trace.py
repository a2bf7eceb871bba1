"""Trace records and their line-delimited JSON encoding."""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field

from .forwarding import FlowId
from .labeling import FlowLabel, TreeLabel


def label_json(lab):
    if lab is None:
        return None
    if isinstance(lab, FlowLabel):
        f = lab.flow
        return {"flow": [f.tag, f.source, f.destination], "pred": lab.pred, "succ": lab.succ, "dist": lab.dist}
    if isinstance(lab, TreeLabel):
        return {"dest": lab.destination, "parent": lab.parent, "depth": lab.depth, "version": lab.version}
    return lab


def label_from_json(d):
    if d is None or not isinstance(d, dict):
        return d
    if "flow" in d:
        return FlowLabel(FlowId(*d["flow"]), d["pred"], d["succ"], d["dist"])
    return TreeLabel(d["dest"], d["parent"], d["depth"], d["version"])


def message_json(msg) -> dict:
    return {
        "kind": msg.kind.value,
        "src": msg.src,
        "dst": msg.dst,
        "payload": label_json(msg.payload),
        "sent_at": msg.sent_at,
        "deliver_at": msg.deliver_at,
    }


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def payload_hash(msg) -> int:
    return zlib.crc32(dumps([msg.kind.value, label_json(msg.payload)]).encode())


@dataclass
class Trace:
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    applications: list = field(default_factory=list)  # (time, Application)
    final_nodes: tuple = ()

    @property
    def violations(self) -> int:
        return self.summary.get("violation_count", 0)

    @property
    def complete(self) -> bool:
        return bool(self.summary.get("complete"))

    def to_jsonl(self) -> str:
        lines = [dumps(r) for r in self.rows]
        lines.append(dumps({"summary": self.summary}))
        return "\n".join(lines) + "\n"


def read_jsonl(text: str) -> tuple[list, dict]:
    rows, summary = [], {}
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if "summary" in rec:
            summary = rec["summary"]
        else:
            rows.append(rec)
    return rows, summary
