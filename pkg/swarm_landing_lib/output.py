"""
Run artifacts: drone trace CSV, rover CSV, summary JSON and a top-view SVG plot.

Every file is a pure function of the trace (or the reports) it is written from,
so repeated runs produce byte-identical files. The plot is written last and never
feeds back into the CSV or JSON outputs.
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

from lxml import etree

from .constants import (AGENT_COLORS, ROVER_COLOR, ROVER_COLUMNS, SCHEMA_VERSION, SVG_NS,
                        TRACE_COLUMNS)
from .core import log_verbose
from .sim_engine import SimTrace

TRACE_FILE = "trace.csv"
ROVER_FILE = "rover.csv"
SUMMARY_FILE = "summary.json"
TABLE_FILE = "table.txt"
PLOT_FILE = "trajectory.svg"


def _num(value: float) -> str:
    return f"{value:.6f}"


def trace_rows(trace: SimTrace) -> Iterable[List[str]]:
    for record in trace.ticks:
        t = _num(record.t)
        for a in record.agents:
            p, v = a.position, a.velocity
            yield [t, a.id, _num(p.x), _num(p.y), _num(p.z), _num(v.x), _num(v.y), _num(v.z),
                   record.phase.value, "1" if a.motors_on else "0"]


def rover_rows(trace: SimTrace) -> Iterable[List[str]]:
    for record in trace.ticks:
        r = record.rover
        yield [_num(record.t), _num(r.pose.x), _num(r.pose.y), _num(r.pose.theta),
               _num(r.linear_speed), _num(r.angular_speed)]


def write_csv(path: Path, columns: Tuple[str, ...], rows: Iterable[List[str]]) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
    return path


def summary_json(payload: Dict[str, Any]) -> str:
    document = {"schema_version": SCHEMA_VERSION, **payload}
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def _svg(tag: str, parent: Optional[etree._Element] = None, **attrs: Any) -> etree._Element:
    name = f"{{{SVG_NS}}}{tag}"
    values = {k.rstrip("_").replace("_", "-"): str(v) for k, v in attrs.items()}
    if parent is None:
        return etree.Element(name, values, nsmap={None: SVG_NS})
    return etree.SubElement(parent, name, values)


def trajectory_svg(trace: SimTrace, size: int = 600, margin: int = 30) -> bytes:
    """Top view (x right, y up) of every drone path, the rover path and the landing points."""
    paths: Dict[str, List[Tuple[float, float]]] = {a: [] for a in trace.agent_ids}
    for d in trace.scenario.drones:
        paths[d.id].append((d.position[0], d.position[1]))
    rover_path = [(trace.scenario.rover.start[0], trace.scenario.rover.start[1])]
    for record in trace.ticks:
        rover_path.append((record.rover.pose.x, record.rover.pose.y))
        for a in record.agents:
            paths[a.id].append((a.position.x, a.position.y))
    landings = {}
    for agent_id in trace.agent_ids:
        index = trace.touchdown_index(agent_id)
        if index is not None:
            p = trace.ticks[index].agent(agent_id).position
            landings[agent_id] = (p.x, p.y)

    points = rover_path + [p for path in paths.values() for p in path]
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x0, y0 = min(xs), min(ys)
    span = max(max(xs) - x0, max(ys) - y0, 1e-6)
    scale = (size - 2 * margin) / span

    def project(p: Tuple[float, float]) -> Tuple[float, float]:
        return margin + (p[0] - x0) * scale, size - margin - (p[1] - y0) * scale

    def polyline(points_xy: List[Tuple[float, float]]) -> str:
        return " ".join(f"{x:.2f},{y:.2f}" for x, y in map(project, points_xy))

    root = _svg("svg", width=size, height=size, viewBox=f"0 0 {size} {size}")
    title = _svg("title", root)
    title.text = (f"Landing trajectories, rover speed {trace.scenario.rover.speed:g} m/s, "
                  f"seed {trace.seed}, final phase {trace.final_phase.value}")
    _svg("rect", root, x=0, y=0, width=size, height=size, fill="white")

    rover = _svg("g", root, id="rover")
    _svg("polyline", rover, points=polyline(rover_path), fill="none", stroke=ROVER_COLOR,
         stroke_width=3, stroke_dasharray="6,4")

    for agent_id, path in paths.items():
        color = AGENT_COLORS.get(agent_id, "#000000")
        group = _svg("g", root, id=f"drone-{agent_id}")
        _svg("polyline", group, points=polyline(path), fill="none", stroke=color, stroke_width=1.5)
        if agent_id in landings:
            cx, cy = project(landings[agent_id])
            _svg("circle", group, cx=f"{cx:.2f}", cy=f"{cy:.2f}", r=4, fill=color,
                 class_="landing")

    legend = _svg("g", root, id="legend", font_family="sans-serif", font_size=12)
    for row, agent_id in enumerate(list(paths) + ["rover"]):
        label = _svg("text", legend, x=margin, y=margin + 14 * row,
                     fill=AGENT_COLORS.get(agent_id, ROVER_COLOR))
        label.text = agent_id
    return etree.tostring(root, xml_declaration=True, encoding="UTF-8", pretty_print=True)


class OutputWriter:
    """Writes run artifacts below one output directory (a single writer per run directory)."""

    def __init__(self, out_dir: Union[str, Path], plots: bool = True, verbose: bool = False):
        self.out_dir = Path(out_dir)
        self.plots = plots
        self.verbose = verbose

    def _log_verbose(self, message: str):
        if self.verbose:
            log_verbose("Output", message)

    def directory(self, subdir: Optional[str]) -> Path:
        target = self.out_dir / subdir if subdir else self.out_dir
        target.mkdir(parents=True, exist_ok=True)
        return target

    def write_run(self, trace: SimTrace, subdir: Optional[str] = None) -> Dict[str, Path]:
        target = self.directory(subdir)
        files = {
            "trace": write_csv(target / TRACE_FILE, TRACE_COLUMNS, trace_rows(trace)),
            "rover": write_csv(target / ROVER_FILE, ROVER_COLUMNS, rover_rows(trace)),
        }
        if self.plots:
            plot = target / PLOT_FILE
            plot.write_bytes(trajectory_svg(trace))
            files["plot"] = plot
        self._log_verbose(f"Wrote {len(trace.ticks)} ticks for seed {trace.seed} to {target}")
        return files

    def write_summary(self, payload: Dict[str, Any], subdir: Optional[str] = None) -> Path:
        path = self.directory(subdir) / SUMMARY_FILE
        path.write_text(summary_json(payload), encoding="utf-8")
        self._log_verbose(f"Wrote summary to {path}")
        return path

    def write_table(self, table: str, subdir: Optional[str] = None) -> Path:
        path = self.directory(subdir) / TABLE_FILE
        path.write_text(table, encoding="utf-8")
        return path


def run_dirname(trace: SimTrace) -> str:
    return f"run_seed{trace.seed:04d}"


def speed_dirname(speed: float) -> str:
    return f"speed_{speed:g}".replace(".", "p")
