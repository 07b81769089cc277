"""Analysis reports: assembly from a model and rendering as text or JSON.

JSON schema (``schema_version`` 1)::

    {
      "schema_version": 1,
      "file": str,
      "model": {"partials", "steps", "transitions", "stored_actions",
                "continuous_actions", "forcing_actions", "variables": int},
      "warnings": [{"rule", "element", "message"}],
      "gate": {"passed": bool,
               "violations": [{"rule", "partials": [str], "ids": [str], "note"}]},
      "partials": [{
          "name": str, "analyzed": bool, "sound": bool, "skipped": str | null,
          "entries": [str], "tracked": [str],
          "nodes": [{"id", "kind", "label", "reachable": bool,
                     "env": {var: [lo, hi] | "bottom"}}],
          "diagnostics": [{"kind", "node", "detail"}], "notes": [str],
          "iterations": int, "time_ms": float}],
      "timing": {"total_ms": float}
    }

Infinite bounds are the strings ``"-inf"`` and ``"+inf"``. Every flow node is
listed, unreachable ones included.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from ..analysis import AnalysisResult, analyze_partial
from ..concurrency import ConcurrencyReport, gate
from ..model import Continuous, Forcing, Grafcet, ModelError, Stored

SCHEMA_VERSION = 1


@dataclass
class ModelSummary:
    partials: int
    steps: int
    transitions: int
    stored_actions: int
    continuous_actions: int
    forcing_actions: int
    variables: int

    @classmethod
    def of(cls, g: Grafcet) -> "ModelSummary":
        actions = [a for p in g.partials for s in p.steps for a in s.actions]
        return cls(
            partials=len(g.partials),
            steps=sum(len(p.steps) for p in g.partials),
            transitions=sum(len(p.transitions) for p in g.partials),
            stored_actions=sum(isinstance(a, Stored) for a in actions),
            continuous_actions=sum(isinstance(a, Continuous) for a in actions),
            forcing_actions=sum(isinstance(a, Forcing) for a in actions),
            variables=len(g.variables),
        )


@dataclass
class PartialReport:
    name: str
    sound: bool
    result: Optional[AnalysisResult] = None
    skipped: Optional[str] = None
    notes: list[str] = field(default_factory=list)

    @property
    def analyzed(self) -> bool:
        return self.result is not None

    @property
    def diagnostics(self):
        return self.result.diagnostics if self.result else []


@dataclass
class Report:
    file: str
    summary: ModelSummary
    gate: ConcurrencyReport
    partials: list[PartialReport] = field(default_factory=list)
    warnings: list[ModelError] = field(default_factory=list)
    total_time: float = 0.0

    @property
    def gate_passed(self) -> bool:
        return all(self.gate.partial_passed(p.name) for p in self.partials)

    @property
    def violations(self):
        """Gate violations touching the selected partials."""
        names = {p.name for p in self.partials}
        return [v for v in self.gate.violations if names & set(v.partials)]

    @property
    def diagnostic_count(self) -> int:
        return sum(len(p.diagnostics) for p in self.partials)


def build_report(
    g: Grafcet,
    file: str = "<input>",
    *,
    analyze: bool = True,
    only: Optional[str] = None,
    allow_unsound: bool = False,
    jobs: int = 1,
    warnings: Optional[list[ModelError]] = None,
    **options,
) -> Report:
    """Run the gate and, if asked, the analysis of every selected partial.

    ``options`` go to the interpreter (``widen_delay``, ``narrow``, ``max_visits``).
    A partial that fails the gate is analyzed only with ``allow_unsound`` and
    is then marked unsound.
    """
    started = time.perf_counter()
    report = Report(file, ModelSummary.of(g), gate(g), warnings=list(warnings or []))
    selected = [p for p in g.partials if only is None or p.name == only]
    enclosed_by = {name: s.id for q in g.partials for s in q.steps for name in s.encloses}
    todo = []
    for p in selected:
        sound = report.gate.partial_passed(p.name)
        entry = PartialReport(p.name, sound)
        if analyze and p.name in enclosed_by:
            entry.notes.append(
                f"enclosed by step {enclosed_by[p.name]}: tracked variables are taken as 0 on every "
                "re-entry, values left by an earlier activation are not carried over"
            )
        if not analyze:
            entry.skipped = "check only"
        elif not sound and not allow_unsound:
            entry.skipped = "concurrency gate failed"
        else:
            todo.append((entry, p))
        report.partials.append(entry)

    def run(item):
        entry, p = item
        return analyze_partial(p, g, sound=entry.sound, **options)

    if jobs > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, todo))
    else:
        results = [run(item) for item in todo]
    for (entry, _), result in zip(todo, results):
        entry.result = result
    report.total_time = time.perf_counter() - started
    return report


def _rows(result: AnalysisResult):
    for node in result.flow.nodes:
        yield node, result.env_before[node]


def _cells(env, tracked) -> list[str]:
    if env.is_bottom:
        return ["bottom"] * max(len(tracked), 1)
    return [str(env[name]) for name in tracked]


def render_text(report: Report) -> str:
    s = report.summary
    lines = [
        f"file: {report.file}",
        f"model: {s.partials} partials, {s.steps} steps, {s.transitions} transitions, "
        f"{s.stored_actions} stored actions, {s.continuous_actions} continuous actions, "
        f"{s.forcing_actions} forcing orders, {s.variables} variables",
    ]
    for w in report.warnings:
        lines.append(f"warning: {w.rule} {w.element}: {w.message}")
    shown = report.violations
    lines.append("gate: passed" if not shown else f"gate: FAILED ({len(shown)} violations)")
    for v in shown:
        lines.append(f"  {v}")
    for entry in report.partials:
        lines.append("")
        if not entry.analyzed:
            status = "passed" if entry.sound else "failed"
            if entry.skipped == "check only":
                lines.append(f"== {entry.name}: gate {status} ==")
            else:
                lines.append(f"== {entry.name}: gate {status}, not analyzed ({entry.skipped}) ==")
            continue
        r = entry.result
        tag = "" if entry.sound else ", UNSOUND"
        notes = [f"note: {n}" for n in entry.notes]
        lines.append(f"== {entry.name} ({r.iterations} visits, {r.wall_time * 1000:.1f} ms{tag}) ==")
        lines.extend(notes)
        lines.append(" | ".join(["Node", *r.tracked]))
        for node, env in _rows(r):
            lines.append(" | ".join([node.label, *_cells(env, r.tracked)]))
        if r.diagnostics:
            lines.append("diagnostics:")
            for d in r.diagnostics:
                lines.append(f"  {d.kind} {d.node}: {d.detail}")
        else:
            lines.append("diagnostics: none")
    lines.append("")
    lines.append(f"total: {report.total_time * 1000:.1f} ms")
    return "\n".join(lines) + "\n"


def _env_json(env, tracked) -> dict:
    if env.is_bottom:
        return {name: "bottom" for name in tracked}
    return {name: env[name].to_json() for name in tracked}


def report_json(report: Report) -> dict:
    partials = []
    for entry in report.partials:
        item = {
            "name": entry.name,
            "analyzed": entry.analyzed,
            "sound": entry.sound,
            "skipped": entry.skipped,
            "entries": [],
            "tracked": [],
            "nodes": [],
            "diagnostics": [],
            "notes": list(entry.notes),
            "iterations": 0,
            "time_ms": 0.0,
        }
        r = entry.result
        if r is not None:
            item["entries"] = sorted(n.id for n in r.flow.entries | r.flow.forced_entries)
            item["tracked"] = list(r.tracked)
            item["nodes"] = [
                {
                    "id": node.id,
                    "kind": node.kind,
                    "label": node.label,
                    "reachable": not env.is_bottom,
                    "env": _env_json(env, r.tracked),
                }
                for node, env in _rows(r)
            ]
            item["diagnostics"] = [d.to_json() for d in r.diagnostics]
            item["iterations"] = r.iterations
            item["time_ms"] = round(r.wall_time * 1000, 3)
        partials.append(item)
    return {
        "schema_version": SCHEMA_VERSION,
        "file": report.file,
        "model": vars(report.summary).copy(),
        "warnings": [{"rule": w.rule, "element": w.element, "message": w.message} for w in report.warnings],
        "gate": {
            "passed": report.gate_passed,
            "violations": [
                {"rule": v.rule, "partials": list(v.partials), "ids": list(v.ids), "note": v.note}
                for v in report.violations
            ],
        },
        "partials": partials,
        "timing": {"total_ms": round(report.total_time * 1000, 3)},
    }


def emit_report(report: Report, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(report_json(report), indent=2) + "\n"
    if fmt == "text":
        return render_text(report)
    raise ValueError(f"unknown report format {fmt!r}")
