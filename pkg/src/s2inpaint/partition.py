"""Equal-area hierarchical quadtree partition of the unit sphere.

Each of the six cube faces is a copy of the square [-1, 1]^2 pushed onto a
spherical cap by the gnomonic cap map ``T(u, v) = (u, v, 1) / sqrt(u^2 + v^2 + 1)``
followed by a fixed rotation. Every rectangle in parameter space is split
into four children of exactly equal spherical area: first along its longer
axis, then each half along the other axis, with the split positions found by
bisection on the closed-form area.

Patches at level ``j`` are indexed canonically by
``face * 4**j + path``, where ``path`` is the base-4 numeral of child digits
(most significant first). Child digit ``iu + 2 * iv`` names the
(low/high-u, low/high-v) quadrant, so the children of index ``p`` live at
``4 * p .. 4 * p + 3``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FACE_NAMES",
    "FACE_ROTATIONS",
    "MAX_LEVEL",
    "Partition",
    "PatchId",
    "ParamRect",
    "build_partition",
    "face_map",
    "locate",
    "locate_index",
    "patch_center",
    "rect_area",
]

MAX_LEVEL = 10
SPLIT_TOL = 1e-13
TIE_RTOL = 1e-9

FACE_NAMES = ("+z", "-z", "+x", "-x", "+y", "-y")

# Rotations taking the +z cap onto each face; entries are exact integers.
FACE_ROTATIONS = np.array(
    [
        [[1, 0, 0], [0, 1, 0], [0, 0, 1]],  # +z: identity
        [[1, 0, 0], [0, -1, 0], [0, 0, -1]],  # -z: pi about x
        [[0, 0, 1], [0, 1, 0], [-1, 0, 0]],  # +x: quarter turn about y
        [[0, 0, -1], [0, 1, 0], [1, 0, 0]],  # -x: quarter turn about y
        [[1, 0, 0], [0, 0, 1], [0, -1, 0]],  # +y: quarter turn about x
        [[1, 0, 0], [0, 0, -1], [0, 1, 0]],  # -y: quarter turn about x
    ],
    dtype=float,
)
FACE_ROTATIONS.setflags(write=False)

# Outward normal (cap center) of each face, i.e. the third rotation column.
_FACE_NORMALS = FACE_ROTATIONS[:, :, 2].copy()


@dataclass(frozen=True)
class PatchId:
    face: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.face < 6:
            raise ValueError(f"face must be in [0, 6), got {self.face}")
        if any(not 0 <= d < 4 for d in self.path):
            raise ValueError(f"path digits must be in [0, 4), got {self.path}")

    @property
    def level(self) -> int:
        return len(self.path)

    @property
    def index(self) -> int:
        idx = self.face
        for d in self.path:
            idx = 4 * idx + d
        return idx

    @classmethod
    def from_index(cls, index: int, level: int) -> "PatchId":
        if not 0 <= index < 6 * 4**level:
            raise ValueError(f"index {index} out of range for level {level}")
        path = []
        for _ in range(level):
            index, d = divmod(index, 4)
            path.append(d)
        return cls(index, tuple(reversed(path)))

    def parent(self) -> "PatchId":
        if not self.path:
            raise ValueError("root face has no parent")
        return PatchId(self.face, self.path[:-1])

    def child(self, digit: int) -> "PatchId":
        return PatchId(self.face, self.path + (digit,))


@dataclass(frozen=True)
class ParamRect:
    face: int
    u_lo: float
    u_hi: float
    v_lo: float
    v_hi: float

    def __post_init__(self):
        if not (-1 <= self.u_lo < self.u_hi <= 1 and -1 <= self.v_lo < self.v_hi <= 1):
            raise ValueError(f"invalid parameter rectangle {self}")

    def contains(self, u: float, v: float) -> bool:
        return self.u_lo <= u <= self.u_hi and self.v_lo <= v <= self.v_hi

    @property
    def diameter(self) -> float:
        return math.hypot(self.u_hi - self.u_lo, self.v_hi - self.v_lo)


def _check_face(face) -> None:
    if not (isinstance(face, (int, np.integer)) and 0 <= face < 6):
        raise ValueError(f"face must be an integer in [0, 6), got {face!r}")


def face_map(face: int, u, v) -> np.ndarray:
    """Map face parameters ``(u, v)`` in [-1, 1]^2 to a unit vector.

    Accepts scalars or broadcastable arrays; the trailing axis of the result
    holds the xyz components.
    """
    _check_face(face)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(u) > 1) or np.any(np.abs(v) > 1) or not (
        np.all(np.isfinite(u)) and np.all(np.isfinite(v))
    ):
        raise ValueError("face parameters must lie in [-1, 1]")
    return _face_map(face, u, v)


def _face_map(face, u, v):
    u, v = np.broadcast_arrays(u, v)
    q = np.stack([u, v, np.ones_like(u)], axis=-1)
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    rot = FACE_ROTATIONS[face]
    if np.ndim(face) == 0:
        return q @ rot.T
    return np.einsum("...ij,...j->...i", rot, q)


def _corner_angle(a, b):
    return np.arctan(a * b / np.sqrt(1.0 + a * a + b * b))


def _area(u_lo, u_hi, v_lo, v_hi):
    return (
        _corner_angle(u_hi, v_hi)
        - _corner_angle(u_lo, v_hi)
        - _corner_angle(u_hi, v_lo)
        + _corner_angle(u_lo, v_lo)
    )


def rect_area(rect: ParamRect) -> float:
    """Spherical area (steradians) of the cap image of a parameter rectangle."""
    return float(_area(rect.u_lo, rect.u_hi, rect.v_lo, rect.v_hi))


def _equal_split(lo, hi, other_lo, other_hi, along_u):
    """Vectorized bisection for the coordinate halving each rectangle's area."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if along_u:
        half = 0.5 * _area(lo, hi, other_lo, other_hi)
        measure = lambda s: _area(lo, s, other_lo, other_hi)  # noqa: E731
    else:
        half = 0.5 * _area(other_lo, other_hi, lo, hi)
        measure = lambda s: _area(other_lo, other_hi, lo, s)  # noqa: E731
    a, b = lo.copy(), hi.copy()
    # Widths start at most 2, so 50 halvings reach well below SPLIT_TOL.
    while np.max(b - a, initial=0.0) > SPLIT_TOL:
        mid = 0.5 * (a + b)
        below = measure(mid) < half
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return 0.5 * (a + b)


@dataclass(frozen=True, eq=False)
class Partition:
    """The full quadtree to level ``J``.

    ``rects[j]`` has shape ``(6 * 4**j, 4)`` with columns
    ``(u_lo, u_hi, v_lo, v_hi)``; the face of row ``i`` is ``i // 4**j``.
    ``splits[j]`` describes how each level-``j`` node was divided: columns
    ``(u_first, first, second_lo, second_hi)`` where ``u_first`` is 1 when
    the first cut runs along u, ``first`` is its position and the two
    ``second_*`` positions cut the low and high halves along the other axis.
    """

    level: int
    rects: tuple[np.ndarray, ...] = field(repr=False)
    splits: tuple[np.ndarray, ...] = field(repr=False)
    centers: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return 6 * 4**self.level

    def faces(self, j: int | None = None) -> np.ndarray:
        j = self.level if j is None else j
        return np.arange(6 * 4**j) // 4**j

    def areas(self, j: int | None = None) -> np.ndarray:
        r = self.rects[self.level if j is None else j]
        return _area(r[:, 0], r[:, 1], r[:, 2], r[:, 3])

    def rect(self, pid: PatchId) -> ParamRect:
        if pid.level > self.level:
            raise KeyError(f"{pid} is deeper than partition level {self.level}")
        r = self.rects[pid.level][pid.index]
        return ParamRect(pid.face, *map(float, r))

    def max_diameter(self, j: int) -> float:
        r = self.rects[j]
        return float(np.max(np.hypot(r[:, 1] - r[:, 0], r[:, 3] - r[:, 2])))

    def to_json(self) -> str:
        doc = {
            "J": self.level,
            "face_order": list(FACE_NAMES),
            "splits": [
                {
                    "level": j,
                    "u_first": s[:, 0].astype(int).tolist(),
                    "first": s[:, 1].tolist(),
                    "second_lo": s[:, 2].tolist(),
                    "second_hi": s[:, 3].tolist(),
                }
                for j, s in enumerate(self.splits)
            ],
        }
        return json.dumps(doc)


def _split_level(rects: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ulo, uhi, vlo, vhi = rects.T
    # Bisection noise makes square cells differ by ~1e-14; treat those as ties.
    u_first = (uhi - ulo) >= (vhi - vlo) * (1.0 - TIE_RTOL)
    n = len(rects)
    first = np.empty(n)
    sec_lo = np.empty(n)
    sec_hi = np.empty(n)
    children = np.empty((n, 4, 4))

    m = u_first
    if m.any():
        s = _equal_split(ulo[m], uhi[m], vlo[m], vhi[m], along_u=True)
        t0 = _equal_split(vlo[m], vhi[m], ulo[m], s, along_u=False)
        t1 = _equal_split(vlo[m], vhi[m], s, uhi[m], along_u=False)
        first[m], sec_lo[m], sec_hi[m] = s, t0, t1
        children[m, 0] = np.stack([ulo[m], s, vlo[m], t0], axis=-1)
        children[m, 1] = np.stack([s, uhi[m], vlo[m], t1], axis=-1)
        children[m, 2] = np.stack([ulo[m], s, t0, vhi[m]], axis=-1)
        children[m, 3] = np.stack([s, uhi[m], t1, vhi[m]], axis=-1)
    m = ~u_first
    if m.any():
        s = _equal_split(vlo[m], vhi[m], ulo[m], uhi[m], along_u=False)
        t0 = _equal_split(ulo[m], uhi[m], vlo[m], s, along_u=True)
        t1 = _equal_split(ulo[m], uhi[m], s, vhi[m], along_u=True)
        first[m], sec_lo[m], sec_hi[m] = s, t0, t1
        children[m, 0] = np.stack([ulo[m], t0, vlo[m], s], axis=-1)
        children[m, 1] = np.stack([t0, uhi[m], vlo[m], s], axis=-1)
        children[m, 2] = np.stack([ulo[m], t1, s, vhi[m]], axis=-1)
        children[m, 3] = np.stack([t1, uhi[m], s, vhi[m]], axis=-1)

    splits = np.stack([u_first.astype(float), first, sec_lo, sec_hi], axis=-1)
    return splits, children.reshape(4 * n, 4)


def build_partition(level: int, max_level: int = MAX_LEVEL) -> Partition:
    if level < 0:
        raise ValueError(f"level must be nonnegative, got {level}")
    if level > max_level:
        raise MemoryError(f"level {level} exceeds the configured maximum {max_level}")
    rects = [np.tile([-1.0, 1.0, -1.0, 1.0], (6, 1))]
    splits = []
    for _ in range(level):
        s, children = _split_level(rects[-1])
        splits.append(s)
        rects.append(children)
    leaf = rects[-1]
    faces = np.arange(len(leaf)) // 4**level
    centers = _face_map(faces, 0.5 * (leaf[:, 0] + leaf[:, 1]), 0.5 * (leaf[:, 2] + leaf[:, 3]))
    for a in (*rects, *splits, centers):
        a.setflags(write=False)
    return Partition(level, tuple(rects), tuple(splits), centers)


def patch_center(partition: Partition, pid: PatchId | int) -> np.ndarray:
    """Unit vector at the parameter midpoint of a leaf patch."""
    if isinstance(pid, PatchId):
        if pid.level != partition.level:
            raise KeyError(f"{pid} is not a leaf of a level-{partition.level} partition")
        idx = pid.index
    else:
        idx = int(pid)
        if not 0 <= idx < partition.size:
            raise KeyError(f"no leaf patch with index {idx}")
    return partition.centers[idx].copy()


def locate_index(partition: Partition, points) -> np.ndarray:
    """Canonical leaf index for each unit vector in ``points`` (shape ``(..., 3)``)."""
    p = np.asarray(points, dtype=float)
    if p.shape[-1:] != (3,):
        raise ValueError("points must have a trailing axis of length 3")
    if not np.all(np.abs(np.linalg.norm(p, axis=-1) - 1.0) <= 1e-9):
        raise ValueError("points must be unit vectors")
    shape = p.shape[:-1]
    p = p.reshape(-1, 3)
    # argmax keeps the first maximum, which is the canonical-order tie-break.
    face = np.argmax(p @ _FACE_NORMALS.T, axis=1)
    q = np.einsum("nji,nj->ni", FACE_ROTATIONS[face], p)
    u = np.clip(q[:, 0] / q[:, 2], -1.0, 1.0)
    v = np.clip(q[:, 1] / q[:, 2], -1.0, 1.0)
    node = face
    for s in partition.splits:
        u_first, first, sec_lo, sec_hi = s[node].T
        u_first = u_first.astype(bool)
        a = np.where(u_first, u, v)
        b = np.where(u_first, v, u)
        hi_a = a >= first
        hi_b = b >= np.where(hi_a, sec_hi, sec_lo)
        iu = np.where(u_first, hi_a, hi_b)
        iv = np.where(u_first, hi_b, hi_a)
        node = 4 * node + iu + 2 * iv
    return node.reshape(shape)


def locate(partition: Partition, p) -> PatchId:
    return PatchId.from_index(int(locate_index(partition, p)), partition.level)
