"""Half-edge arrangement of lines clipped to a square window.

Vertices are identified by the pair of carriers (lines or window sides)
that create them, never by comparing coordinates.  Carrier ids: realization
lines keep their own ids; the window sides bottom, right, top, left get ids
``L, L+1, L+2, L+3`` where ``L`` is the number of lines in the realization.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .geometry import COINCIDENCE_TOL, DIRECTIONS, FAMILY_ANGLES, NORMALS
from .lines import DUPLICATE_TOL, LineRealization

# Window sides traversed counterclockwise: start corner and direction.
_SIDE_START = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
_SIDE_DIR = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
_SIDE_ANGLE = np.array([0.0, math.pi / 2, math.pi, -math.pi / 2])


class DegenerateArrangementError(ValueError):
    """Lines too close to a common point (or to each other) to resolve."""

    def __init__(self, message: str, carriers: tuple[int, ...]):
        super().__init__(message)
        self.carriers = carriers


class FaceOverflowError(AssertionError):
    """An interior face with a vertex count outside 3..6."""


@dataclass(frozen=True)
class Face:
    id: int
    vertices: np.ndarray  # counterclockwise loop
    touches_boundary: bool
    vertex_count: int
    lex_min: np.ndarray
    area: float


@dataclass
class Arrangement:
    R: float
    num_lines: int
    vertex_keys: np.ndarray  # (V, 2) carrier pairs, sorted within a row
    vertex_xy: np.ndarray  # (V, 2)
    edges: np.ndarray  # (E, 2) vertex indices
    he_origin: np.ndarray  # (2E,)
    he_carrier: np.ndarray  # (2E,)
    he_next: np.ndarray  # (2E,)
    he_face: np.ndarray  # (2E,)
    carrier_family: np.ndarray  # family per carrier id; -1 for window sides

    @property
    def num_vertices(self) -> int:
        return len(self.vertex_xy)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_faces(self) -> int:
        """Number of faces including the unbounded one."""
        return int(self.he_face.max()) + 1 if len(self.he_face) else 1

    def euler_characteristic(self) -> int:
        return self.num_vertices - self.num_edges + self.num_faces

    def vertex_on_boundary(self) -> np.ndarray:
        return self.vertex_keys[:, 1] >= self.num_lines

    @cached_property
    def face_vertex_count(self) -> np.ndarray:
        return np.bincount(self.he_face, minlength=self.num_faces)

    @cached_property
    def face_area(self) -> np.ndarray:
        a = self.vertex_xy[self.he_origin]
        b = self.vertex_xy[self.he_origin[self.he_next]]
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        return 0.5 * np.bincount(self.he_face, weights=cross, minlength=self.num_faces)

    @cached_property
    def outer_face(self) -> int:
        return int(np.argmin(self.face_area))

    @cached_property
    def face_touches_boundary(self) -> np.ndarray:
        on = self.vertex_on_boundary()[self.he_origin].astype(int)
        return np.bincount(self.he_face, weights=on, minlength=self.num_faces) > 0

    @cached_property
    def face_lex_min(self) -> np.ndarray:
        xy = self.vertex_xy[self.he_origin]
        order = np.lexsort((xy[:, 1], xy[:, 0], self.he_face))
        faces = self.he_face[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = faces[1:] != faces[:-1]
        out = np.empty((self.num_faces, 2))
        out[faces[first]] = xy[order[first]]
        return out

    def bounded_faces(self) -> np.ndarray:
        ids = np.arange(self.num_faces)
        return ids[ids != self.outer_face]

    def interior_face_ids(self) -> np.ndarray:
        ids = self.bounded_faces()
        return ids[~self.face_touches_boundary[ids]]

    def face_family_counts(self) -> np.ndarray:
        """(F, 3) number of sides per line family of each face."""
        fam = self.carrier_family[self.he_carrier]
        out = np.zeros((self.num_faces, 3), dtype=int)
        keep = fam >= 0
        np.add.at(out, (self.he_face[keep], fam[keep]), 1)
        return out

    def face(self, f: int) -> Face:
        start = int(np.flatnonzero(self.he_face == f)[0])
        loop = [start]
        h = int(self.he_next[start])
        while h != start:
            loop.append(h)
            h = int(self.he_next[h])
        verts = self.vertex_xy[self.he_origin[loop]]
        return Face(
            id=f,
            vertices=verts,
            touches_boundary=bool(self.face_touches_boundary[f]),
            vertex_count=len(loop),
            lex_min=self.face_lex_min[f],
            area=float(self.face_area[f]),
        )

    def faces(self) -> list[Face]:
        """Every bounded face."""
        return [self.face(int(f)) for f in self.bounded_faces()]

    def interior_faces(self) -> list[Face]:
        out = [self.face(int(f)) for f in self.interior_face_ids()]
        bad = [f for f in out if not 3 <= f.vertex_count <= 6]
        if bad:
            raise FaceOverflowError(f"interior face {bad[0].id} has {bad[0].vertex_count} vertices")
        return out

    def face_csv(self) -> str:
        """``face_id,vertex_count,touches_boundary,lex_min_x,lex_min_y,area``."""
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["face_id", "vertex_count", "touches_boundary", "lex_min_x", "lex_min_y", "area"])
        for f in self.bounded_faces():
            x, y = self.face_lex_min[f]
            wr.writerow([
                int(f),
                int(self.face_vertex_count[f]),
                int(self.face_touches_boundary[f]),
                repr(float(x)),
                repr(float(y)),
                repr(float(self.face_area[f])),
            ])
        return buf.getvalue()


def _raise_close(carrier, code_a, code_b, m, what):
    ka = (int(code_a // m), int(code_a % m))
    kb = (int(code_b // m), int(code_b % m))
    carriers = tuple(sorted(set(ka) | set(kb)))
    raise DegenerateArrangementError(
        f"{what} along carrier {int(carrier)}: vertices {ka} and {kb} "
        f"closer than {COINCIDENCE_TOL:g}; lines {carriers}",
        carriers,
    )


def build(realization: LineRealization, tol: float = COINCIDENCE_TOL) -> Arrangement:
    """Arrangement of the realization's lines inside ``[-R, R]^2``.

    Raises :class:`DegenerateArrangementError` when two vertices on one
    carrier come within ``tol`` of each other (three nearly concurrent lines,
    a line through a corner, ...) or two parallel lines nearly coincide.
    """
    R = float(realization.window.half_width)
    L = len(realization.lines)
    m = L + 4  # key code = a * m + b
    fam_all = realization.families if L else np.zeros(0, dtype=int)
    off_all = realization.offsets if L else np.zeros(0)

    # lines meeting the open square; near-corner lines are degenerate
    nrm = NORMALS[fam_all] if L else np.zeros((0, 2))
    support = R * (np.abs(nrm[:, 0]) + np.abs(nrm[:, 1])) if L else np.zeros(0)
    near = np.abs(np.abs(off_all) - support) <= tol
    if np.any(near):
        i = int(np.flatnonzero(near)[0])
        raise DegenerateArrangementError(f"line {i} passes through a window corner", (i,))
    ids = np.flatnonzero(np.abs(off_all) < support)
    fam = fam_all[ids]
    off = off_all[ids]
    for k in range(3):
        o = np.sort(off[fam == k])
        if len(o) > 1 and np.min(np.diff(o)) <= DUPLICATE_TOL:
            raise DegenerateArrangementError(f"two family-{k} lines coincide", ())

    d = DIRECTIONS[fam]
    n = NORMALS[fam]
    base = off[:, None] * n

    # clip each line: parameter range and the window sides it enters/leaves by
    s_lo = np.full(len(ids), -np.inf)
    s_hi = np.full(len(ids), np.inf)
    side_lo = np.full(len(ids), -1)
    side_hi = np.full(len(ids), -1)
    # axis 0 (x): left side 3 at x=-R, right side 1 at x=+R
    # axis 1 (y): bottom side 0 at y=-R, top side 2 at y=+R
    for axis, (neg_side, pos_side) in enumerate(((3, 1), (0, 2))):
        comp = d[:, axis]
        nz = np.abs(comp) > 1e-15
        t_neg = np.where(nz, (-R - base[:, axis]) / np.where(nz, comp, 1), -np.inf)
        t_pos = np.where(nz, (R - base[:, axis]) / np.where(nz, comp, 1), np.inf)
        enter = np.where(comp > 0, t_neg, t_pos)
        leave = np.where(comp > 0, t_pos, t_neg)
        enter_side = np.where(comp > 0, neg_side, pos_side)
        leave_side = np.where(comp > 0, pos_side, neg_side)
        upd = nz & (enter > s_lo)
        s_lo = np.where(upd, enter, s_lo)
        side_lo = np.where(upd, enter_side, side_lo)
        upd = nz & (leave < s_hi)
        s_hi = np.where(upd, leave, s_hi)
        side_hi = np.where(upd, leave_side, side_hi)

    car_list, par_list, code_list, xy_list = [], [], [], []

    def add(carrier, param, a, b, xy):
        lo_, hi_ = np.minimum(a, b), np.maximum(a, b)
        car_list.append(np.asarray(carrier))
        par_list.append(np.asarray(param, dtype=float))
        code_list.append(lo_ * m + hi_)
        xy_list.append(np.asarray(xy, dtype=float).reshape(-1, 2))

    # line-line crossings
    if len(ids) > 1:
        i, j = np.triu_indices(len(ids), 1)
        keep = fam[i] != fam[j]
        i, j = i[keep], j[keep]
        nn = np.einsum("ij,ij->i", n[i], n[j])
        s_i = (off[j] - off[i] * nn) / np.einsum("ij,ij->i", d[i], n[j])
        s_j = (off[i] - off[j] * nn) / np.einsum("ij,ij->i", d[j], n[i])
        xy = base[i] + s_i[:, None] * d[i]
        inside = (np.abs(xy[:, 0]) < R) & (np.abs(xy[:, 1]) < R)
        i, j, s_i, s_j, xy = i[inside], j[inside], s_i[inside], s_j[inside], xy[inside]
        add(ids[i], s_i, ids[i], ids[j], xy)
        add(ids[j], s_j, ids[i], ids[j], xy)

    # line-window hits
    if len(ids):
        for s, side in ((s_lo, side_lo), (s_hi, side_hi)):
            xy = base + s[:, None] * d
            add(ids, s, ids, L + side, xy)
            side_param = np.einsum("ij,ij->i", xy - R * _SIDE_START[side], _SIDE_DIR[side])
            add(L + side, side_param, ids, L + side, xy)

    # corners: corner c is the start of side c and the end of side c-1
    sides = np.arange(4)
    prev = (sides - 1) % 4
    corner_xy = R * _SIDE_START
    add(L + sides, np.zeros(4), L + sides, L + prev, corner_xy)
    add(L + prev, np.full(4, 2 * R), L + sides, L + prev, corner_xy)

    car = np.concatenate(car_list)
    par = np.concatenate(par_list)
    code = np.concatenate(code_list)
    pts = np.concatenate(xy_list)

    codes, first, vid = np.unique(code, return_index=True, return_inverse=True)
    vertex_xy = pts[first]
    vertex_keys = np.stack([codes // m, codes % m], axis=1)

    order = np.lexsort((par, car))
    car_s, par_s, vid_s = car[order], par[order], vid[order]
    same = car_s[1:] == car_s[:-1]
    gap = par_s[1:] - par_s[:-1]
    close = same & (gap <= tol)
    if np.any(close):
        k = int(np.flatnonzero(close)[0])
        _raise_close(car_s[k], codes[vid_s[k]], codes[vid_s[k + 1]], m, "near-coincident vertices")
    e_u = vid_s[:-1][same]
    e_v = vid_s[1:][same]
    e_car = car_s[:-1][same]
    edges = np.stack([e_u, e_v], axis=1)

    # carrier geometry: direction angle of increasing parameter
    carrier_family = np.full(m, -1)
    carrier_family[ids] = fam
    carrier_angle = np.zeros(m)
    carrier_angle[ids] = np.asarray(FAMILY_ANGLES)[fam]
    carrier_angle[L:] = _SIDE_ANGLE

    ne = len(edges)
    he_origin = np.empty(2 * ne, dtype=int)
    he_origin[0::2] = e_u
    he_origin[1::2] = e_v
    he_carrier = np.repeat(e_car, 2)
    ang = np.repeat(carrier_angle[e_car], 2)
    ang[1::2] += math.pi
    ang = np.mod(ang, 2 * math.pi)

    # CCW order around each origin; next(h) = clockwise neighbour of twin(h)
    srt = np.lexsort((ang, he_origin))
    origin_s = he_origin[srt]
    group_start = np.r_[0, np.flatnonzero(origin_s[1:] != origin_s[:-1]) + 1]
    group_len = np.diff(np.r_[group_start, len(srt)])
    start_of = np.repeat(group_start, group_len)
    len_of = np.repeat(group_len, group_len)
    pos = np.arange(len(srt)) - start_of
    pred_sorted = srt[start_of + (pos - 1) % len_of]
    pred = np.empty_like(srt)
    pred[srt] = pred_sorted
    twin = np.arange(2 * ne) ^ 1
    he_next = pred[twin]

    nh = 2 * ne
    g = coo_matrix((np.ones(nh), (np.arange(nh), he_next)), shape=(nh, nh))
    _, he_face = connected_components(g, directed=True, connection="weak")

    return Arrangement(
        R=R,
        num_lines=L,
        vertex_keys=vertex_keys,
        vertex_xy=vertex_xy,
        edges=edges,
        he_origin=he_origin,
        he_carrier=he_carrier,
        he_next=he_next,
        he_face=he_face.astype(int),
        carrier_family=carrier_family,
    )
