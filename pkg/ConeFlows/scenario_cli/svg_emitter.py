import logging
import math
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ConeFlows.cone_domain import ray_unit, reference_radius
from ConeFlows.schemas import DiagnosticsFrame, FlowMode, ReferenceKind, ScenarioConfig, Side, SvgOptions

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)

SVG_NS = "http://www.w3.org/2000/svg"


class Viewport:
    """Maps world coordinates to pixels with a uniform scale and a flipped y axis."""

    def __init__(self, points: np.ndarray, options: SvgOptions) -> None:
        lo, hi = points.min(axis=0), points.max(axis=0)
        span = np.maximum(hi - lo, 1e-12)
        self.scale = min((options.width - 2 * options.margin) / span[0], (options.height - 2 * options.margin) / span[1])
        self.lo, self.hi = lo, hi
        self.margin = options.margin

    def __call__(self, points: np.ndarray) -> np.ndarray:
        x = self.margin + (points[:, 0] - self.lo[0]) * self.scale
        y = self.margin + (self.hi[1] - points[:, 1]) * self.scale
        return np.column_stack((x, y))


def _points_attr(pixels: np.ndarray) -> str:
    return " ".join(f"{x:.3f},{y:.3f}" for x, y in pixels)


def reference_arc_radius(config: ScenarioConfig, t: float, L0: float) -> float:
    match config.flow.mode:
        case FlowMode.PENALISED:
            return reference_radius(ReferenceKind.STATIONARY, lambda_=config.flow.lambda_)
        case FlowMode.CONSTRAINED:
            return reference_radius(ReferenceKind.FIXED_LENGTH, L0=L0, omega=config.cone.omega)
        case _:
            return reference_radius(ReferenceKind.SELF_SIMILAR, r0=config.init.r0, t=t)


def render_svg(
    state,
    options: Optional[SvgOptions] = None,
    ref_radius: Optional[float] = None,
    frame: Optional[DiagnosticsFrame] = None,
) -> ET.Element:
    options = options or SvgOptions()
    cone, nodes = state.cone, state.curve.nodes
    extent = float(np.max(np.linalg.norm(nodes, axis=1)))
    if ref_radius is not None:
        extent = max(extent, ref_radius)
    rays = [np.array([[0.0, 0.0], 1.15 * extent * ray_unit(cone, side).as_array()]) for side in (Side.MINUS, Side.PLUS)]

    reference = None
    if options.show_reference and ref_radius is not None:
        theta = np.linspace(cone.theta1, cone.theta2, options.reference_samples + 1)
        reference = ref_radius * np.column_stack((np.cos(theta), np.sin(theta)))

    everything = [nodes, *rays] + ([reference] if reference is not None else [])
    view = Viewport(np.vstack(everything), options)

    root = ET.Element("svg", {
        "xmlns": SVG_NS,
        "width": str(options.width),
        "height": str(options.height),
        "viewBox": f"0 0 {options.width} {options.height}",
    })
    ET.SubElement(root, "rect", {"width": "100%", "height": "100%", "fill": "white"})
    for side, ray in zip((Side.MINUS, Side.PLUS), rays):
        ET.SubElement(root, "polyline", {
            "id": f"ray-{side.value}", "points": _points_attr(view(ray)), "stroke": "#555555", "fill": "none",
        })
    if reference is not None:
        ET.SubElement(root, "polyline", {
            "id": "reference", "points": _points_attr(view(reference)),
            "stroke": "#d62728", "stroke-dasharray": "4 3", "fill": "none",
        })
    ET.SubElement(root, "polyline", {
        "id": "curve", "points": _points_attr(view(nodes)), "stroke": "#1f77b4", "stroke-width": "2", "fill": "none",
    })
    tip = view(np.zeros((1, 2)))[0]
    ET.SubElement(root, "circle", {"id": "tip", "cx": f"{tip[0]:.3f}", "cy": f"{tip[1]:.3f}", "r": "2"})

    if options.show_panel:
        lines = [f"t = {state.time:.6g}"]
        if frame is not None:
            lines += [
                f"L = {frame.L:.6g}",
                f"E = {frame.E_lambda:.6g}",
                f"|k_s|^2 = {frame.ks2:.3e}",
                f"omega = {frame.omega_num:.8f}",
            ]
        panel = ET.SubElement(root, "g", {"id": "panel", "font-family": "monospace", "font-size": "12"})
        for row, text in enumerate(lines):
            ET.SubElement(panel, "text", {"x": "8", "y": str(16 + 14 * row)}).text = text
    return root


def emit_svg(
    state,
    path: Union[str, Path],
    options: Optional[SvgOptions] = None,
    ref_radius: Optional[float] = None,
    frame: Optional[DiagnosticsFrame] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tree = ET.ElementTree(render_svg(state, options, ref_radius, frame))
    tree.write(path, encoding="utf-8", xml_declaration=True)
    return path


def emit_frames(result, config: ScenarioConfig, directory: Union[str, Path], options: Optional[SvgOptions] = None) -> list[Path]:
    """One SVG per recorded snapshot, frames/frame_00000.svg onwards."""
    directory = Path(directory)
    frames = result.series.frames
    L0 = frames[0].L if frames else math.nan
    written = []
    for index, snapshot in enumerate(result.snapshots):
        frame = frames[index] if index < len(frames) else None
        radius = reference_arc_radius(config, snapshot.time, L0)
        written.append(emit_svg(snapshot, directory / f"frame_{index:05d}.svg", options, radius, frame))
    LOGGER.info("wrote %d SVG frames to %s", len(written), directory)
    return written
