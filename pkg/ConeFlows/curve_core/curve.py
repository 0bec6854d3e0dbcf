from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ConeFlows.errors import InvalidInputError

MIN_SEGMENTS = 8


class Point2(NamedTuple):
    x: float
    y: float

    @classmethod
    def of(cls, xy) -> "Point2":
        x, y = float(xy[0]), float(xy[1])
        if not (np.isfinite(x) and np.isfinite(y)):
            raise InvalidInputError("Point2 components must be finite")
        return cls(x, y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


class DiscreteCurve:
    """Open planar polyline sampling a curve from the theta1 ray (node 0) to the theta2 ray (node N).

    Nodes are stored as an (N+1, 2) array that is never mutated after construction;
    operations return new curves.
    """

    def __init__(self, nodes) -> None:
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise InvalidInputError("nodes must be an (N+1, 2) array of planar points")
        if nodes.shape[0] - 1 < MIN_SEGMENTS:
            raise InvalidInputError(f"a curve needs at least {MIN_SEGMENTS} segments, got {nodes.shape[0] - 1}")
        if not np.all(np.isfinite(nodes)):
            raise InvalidInputError("curve nodes must be finite")
        segments = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
        if not np.all(segments > 0.0):
            raise InvalidInputError("consecutive nodes coincide (degenerate curve)")
        nodes.setflags(write=False)
        segments.setflags(write=False)
        self._nodes = nodes
        self._segments = segments

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes

    @property
    def n_segments(self) -> int:
        return self._nodes.shape[0] - 1

    @property
    def segment_lengths(self) -> np.ndarray:
        return self._segments

    @property
    def arc_parameter(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self._segments)))

    def endpoint(self, index: int) -> Point2:
        return Point2.of(self._nodes[index])

    def scaled(self, factor: float) -> "DiscreteCurve":
        return DiscreteCurve(factor * self._nodes)

    def rotated(self, angle: float) -> "DiscreteCurve":
        c, s = np.cos(angle), np.sin(angle)
        return DiscreteCurve(self._nodes @ np.array([[c, s], [-s, c]]))

    def __len__(self) -> int:
        return self._nodes.shape[0]

    def __repr__(self) -> str:
        return f"DiscreteCurve(N={self.n_segments}, start={tuple(self._nodes[0])}, end={tuple(self._nodes[-1])})"


@dataclass(frozen=True)
class ScalarField:
    values: np.ndarray
    tag: str = "k"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise InvalidInputError("a scalar field is one value per node")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError(f"scalar field '{self.tag}' has non-finite entries")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    def check_matches(self, curve: DiscreteCurve) -> None:
        if len(self) != len(curve):
            raise InvalidInputError(
                f"field '{self.tag}' has {len(self)} values but the curve has {len(curve)} nodes"
            )


class FrameField(NamedTuple):
    tangent: np.ndarray
    normal: np.ndarray


@dataclass(frozen=True)
class ExtendedNodes:
    """Nodes with `pad` ghost nodes prepended and appended.

    reflect_minus / reflect_plus are the linear maps producing the ghosts at each end
    from interior nodes; vector fields along the curve extend with the same maps.
    """

    points: np.ndarray
    pad: int
    reflect_minus: Optional[np.ndarray] = None
    reflect_plus: Optional[np.ndarray] = None

    @property
    def core(self) -> slice:
        return slice(self.pad, self.points.shape[0] - self.pad)
