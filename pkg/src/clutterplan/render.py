"""Standalone SVG rendering of scenes and episode logs."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from .actions import PickPlaceAction, PushAction, PushTrajectory
from .physics import PUSH_ONLY, SceneState

SCALE = 1000.0   # px per metre
MARGIN = 20.0
FILL = {"pick_or_push": "#c9d6e8", PUSH_ONLY: "#6b7f99"}


class _Canvas:
    def __init__(self, state: SceneState):
        ws = state.workspace
        self.ws = ws
        self.w = ws.width * SCALE + 2 * MARGIN
        self.h = ws.height * SCALE + 2 * MARGIN
        self.items: list[str] = []

    def xy(self, p) -> tuple[float, float]:
        # SVG y grows downward
        return (MARGIN + (p[0] - self.ws.xmin) * SCALE, MARGIN + (self.ws.ymax - p[1]) * SCALE)

    def poly(self, pts, **attrs):
        s = " ".join("%.2f,%.2f" % self.xy(p) for p in pts)
        self.items.append(f'<polygon points="{s}" {_attrs(attrs)}/>')

    def arrow(self, a, b, label: str | None = None, color: str = "#d62728"):
        (x0, y0), (x1, y1) = self.xy(a), self.xy(b)
        self.items.append(f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" stroke="{color}" '
                          f'stroke-width="2" marker-end="url(#head)" class="push"/>')
        if label is not None:
            self.items.append(f'<text x="{x0:.2f}" y="{y0 - 4:.2f}" font-size="12" fill="{color}" '
                              f'class="step-label">{escape(label)}</text>')

    def svg(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w:.0f}" height="{self.h:.0f}" '
                f'viewBox="0 0 {self.w:.2f} {self.h:.2f}">\n'
                '<defs><marker id="head" markerWidth="8" markerHeight="8" refX="6" refY="3" orient="auto">'
                '<path d="M0,0 L6,3 L0,6 z" fill="#d62728"/></marker></defs>\n')
        return head + "\n".join(self.items) + "\n</svg>\n"


def _attrs(d: dict) -> str:
    return " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in d.items())


def scene_svg(state: SceneState, goal=None, actions=()) -> str:
    cv = _Canvas(state)
    ws = state.workspace
    cv.poly([(ws.xmin, ws.ymin), (ws.xmax, ws.ymin), (ws.xmax, ws.ymax), (ws.xmin, ws.ymax)],
            fill="#fafafa", stroke="#333333", stroke_width=2, **{"class": "workspace"})
    if goal is not None:
        for o in state.objects:
            gp = goal.goal_poses.get(o.object_id)
            if gp is None:
                continue
            for p in o.shape.world_parts(gp):
                cv.poly(p.vertices, fill="none", stroke="#2ca02c", stroke_dasharray="4,3", **{"class": "goal"})
    for o in state.objects:
        target = o.object_id == state.target_id
        for p in o.footprint():
            attrs = {"fill": "#f4a3a3" if target else FILL[o.movability],
                     "stroke": "#c00000" if target else "#222222",
                     "stroke_width": 3 if target else 1,
                     "class": "target" if target else "object"}
            cv.poly(p.vertices, **attrs)
    for i, a in enumerate(actions, 1):
        if isinstance(a, PushAction):
            cv.arrow(a.start, a.end, str(i))
        elif isinstance(a, PickPlaceAction):
            cv.arrow((a.pick.x, a.pick.y), (a.place.x, a.place.y), str(i), "#1f77b4")
        elif isinstance(a, PushTrajectory):
            w = a.waypoints
            cv.arrow((w[0].x, w[0].y), (w[-1].x, w[-1].y), str(i))
    return cv.svg()


def render_svg(state: SceneState, path, goal=None, actions=()) -> None:
    """Write the scene (and optionally goal ghosts and numbered action arrows) to ``path``."""
    Path(path).write_text(scene_svg(state, goal, actions))
