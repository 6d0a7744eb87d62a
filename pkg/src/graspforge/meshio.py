"""Triangle mesh container, procedural primitives, and OFF/OBJ parsing.

Meshes are vertex/face index arrays in meters. All primitive builders
produce closed, consistently outward-oriented surfaces; the inside tests
used by the collision oracles rely on that orientation.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GraspForgeError


class ParseError(GraspForgeError):
    """A mesh, affordance, or grasp file failed to parse or validate."""


@dataclass(frozen=True, eq=False)
class TriMesh:
    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray     # (F, 3) int32

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 3)
        f = np.array(self.faces, dtype=np.int32).reshape(-1, 3)
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise ParseError("face index out of range")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def triangles(self) -> np.ndarray:
        """(F, 3, 3) triangle vertex coordinates."""
        return self.vertices[self.faces]

    def transformed(self, rotation: np.ndarray, translation) -> "TriMesh":
        rotation = np.asarray(rotation, dtype=float)
        translation = np.asarray(translation, dtype=float).reshape(3)
        return TriMesh(self.vertices @ rotation.T + translation, self.faces)

    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def diameter(self) -> float:
        lo, hi = self.aabb()
        return float(np.linalg.norm(hi - lo))

    def triangle_areas(self) -> np.ndarray:
        t = self.triangles
        return 0.5 * np.linalg.norm(np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1)

    def signed_volume(self) -> float:
        """Positive for outward-oriented closed surfaces (divergence theorem)."""
        t = self.triangles
        return float(np.einsum("ij,ij->i", t[:, 0], np.cross(t[:, 1], t[:, 2])).sum() / 6.0)


def merge_meshes(meshes) -> TriMesh:
    verts, faces, base = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + base)
        base += len(m.vertices)
    return TriMesh(np.vstack(verts), np.vstack(faces))


# ---------------------------------------------------------------------------
# Primitives (closed, outward-oriented)
# ---------------------------------------------------------------------------

def box_mesh(extents, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Axis-aligned box given full extents (ex, ey, ez)."""
    e = 0.5 * np.asarray(extents, dtype=float)
    c = np.asarray(center, dtype=float)
    signs = np.array([[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], dtype=float)
    verts = c + signs * e
    # Outward-oriented faces over corner indices (x*4 + y*2 + z).
    faces = np.array([
        [0, 1, 3], [0, 3, 2],        # -x
        [4, 6, 7], [4, 7, 5],        # +x
        [0, 4, 5], [0, 5, 1],        # -y
        [2, 3, 7], [2, 7, 6],        # +y
        [0, 2, 6], [0, 6, 4],        # -z
        [1, 5, 7], [1, 7, 3],        # +z
    ], dtype=np.int32)
    return TriMesh(verts, faces)


def oriented_box_mesh(center, axes: np.ndarray, half_extents) -> TriMesh:
    """Box with orthonormal axis columns and per-axis half extents."""
    base = box_mesh(2.0 * np.asarray(half_extents, dtype=float))
    return base.transformed(np.asarray(axes, dtype=float), center)


def cylinder_mesh(radius: float, height: float, segments: int = 20, rows: int = 1,
                  base_z: float = 0.0) -> TriMesh:
    """Closed solid cylinder, axis +z, base at base_z."""
    ang = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
    zs = base_z + np.linspace(0.0, height, rows + 1)
    verts = [np.column_stack([ring, np.full(segments, z)]) for z in zs]
    verts.append(np.array([[0.0, 0.0, base_z], [0.0, 0.0, base_z + height]]))
    verts = np.vstack(verts)
    c_bot, c_top = len(verts) - 2, len(verts) - 1
    faces = []
    for r in range(rows):
        lo, hi = r * segments, (r + 1) * segments
        for i in range(segments):
            j = (i + 1) % segments
            faces.append([lo + i, lo + j, hi + j])
            faces.append([lo + i, hi + j, hi + i])
    top = rows * segments
    for i in range(segments):
        j = (i + 1) % segments
        faces.append([c_bot, j, i])          # bottom cap faces -z
        faces.append([c_top, top + i, top + j])  # top cap faces +z
    return TriMesh(verts, np.array(faces, dtype=np.int32))


def frustum_mesh(r_bottom: float, r_top: float, height: float, segments: int = 18,
                 base_z: float = 0.0) -> TriMesh:
    """Closed truncated cone, axis +z."""
    ang = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    cos, sin = np.cos(ang), np.sin(ang)
    bot = np.column_stack([r_bottom * cos, r_bottom * sin, np.full(segments, base_z)])
    top = np.column_stack([r_top * cos, r_top * sin, np.full(segments, base_z + height)])
    verts = np.vstack([bot, top, [[0.0, 0.0, base_z], [0.0, 0.0, base_z + height]]])
    c_bot, c_top = len(verts) - 2, len(verts) - 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces.append([i, j, segments + j])
        faces.append([i, segments + j, segments + i])
        faces.append([c_bot, j, i])
        faces.append([c_top, segments + i, segments + j])
    return TriMesh(verts, np.array(faces, dtype=np.int32))


def torus_mesh(major_radius: float, tube_radius: float, center=(0.0, 0.0, 0.0),
               n_major: int = 10, n_minor: int = 6, plane: str = "xz") -> TriMesh:
    """Closed torus; plane selects the plane of the major circle."""
    c = np.asarray(center, dtype=float)
    verts = []
    for i in range(n_major):
        u = 2.0 * np.pi * i / n_major
        for j in range(n_minor):
            v = 2.0 * np.pi * j / n_minor
            r = major_radius + tube_radius * np.cos(v)
            if plane == "xz":
                p = np.array([r * np.cos(u), tube_radius * np.sin(v), r * np.sin(u)])
            elif plane == "xy":
                p = np.array([r * np.cos(u), r * np.sin(u), tube_radius * np.sin(v)])
            else:
                raise ValueError(f"unknown torus plane {plane!r}")
            verts.append(c + p)
    faces = []
    for i in range(n_major):
        i2 = (i + 1) % n_major
        for j in range(n_minor):
            j2 = (j + 1) % n_minor
            a, b = i * n_minor + j, i * n_minor + j2
            d, e = i2 * n_minor + j, i2 * n_minor + j2
            faces.append([a, d, e])
            faces.append([a, e, b])
    mesh = TriMesh(np.array(verts), np.array(faces, dtype=np.int32))
    if mesh.signed_volume() < 0:
        mesh = TriMesh(mesh.vertices, mesh.faces[:, ::-1])
    return mesh


def dome_mesh(radius: float, segments: int = 14, rings: int = 3, base_z: float = 0.0) -> TriMesh:
    """Closed hemisphere (dome plus base disk), flat side down at base_z."""
    ang = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    cos, sin = np.cos(ang), np.sin(ang)
    verts = []
    for k in range(rings):
        phi = 0.5 * np.pi * k / rings  # elevation from equator
        r, z = radius * np.cos(phi), radius * np.sin(phi)
        verts.append(np.column_stack([r * cos, r * sin, np.full(segments, base_z + z)]))
    verts = np.vstack(verts + [[[0.0, 0.0, base_z + radius], [0.0, 0.0, base_z]]])
    apex, c_bot = len(verts) - 2, len(verts) - 1
    faces = []
    for k in range(rings - 1):
        lo, hi = k * segments, (k + 1) * segments
        for i in range(segments):
            j = (i + 1) % segments
            faces.append([lo + i, lo + j, hi + j])
            faces.append([lo + i, hi + j, hi + i])
    last = (rings - 1) * segments
    for i in range(segments):
        j = (i + 1) % segments
        faces.append([last + i, last + j, apex])
        faces.append([c_bot, j, i])
    return TriMesh(verts, np.array(faces, dtype=np.int32))


# ---------------------------------------------------------------------------
# OFF / OBJ files
# ---------------------------------------------------------------------------

def load_mesh(path) -> TriMesh:
    """Load an OFF or OBJ triangle mesh (polygons are fan-triangulated)."""
    path = Path(path)
    suffix = path.suffix.lower()
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read mesh file {path}: {exc}") from exc
    if suffix == ".off":
        return _parse_off(text, path)
    if suffix == ".obj":
        return _parse_obj(text, path)
    raise ParseError(f"unsupported mesh format {suffix!r} for {path}")


def _parse_off(text: str, path) -> TriMesh:
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise ParseError(f"{path}: missing OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4  # skip edge count
        verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for _ in range(nf):
            n = int(tokens[pos])
            idx = [int(t) for t in tokens[pos + 1:pos + 1 + n]]
            pos += 1 + n
            for k in range(1, n - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
        return TriMesh(verts, np.array(faces, dtype=np.int32))
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: malformed OFF data: {exc}") from exc


def _parse_obj(text: str, path) -> TriMesh:
    verts, faces = [], []
    try:
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
        if not verts or not faces:
            raise ParseError(f"{path}: OBJ contains no geometry")
        return TriMesh(np.array(verts), np.array(faces, dtype=np.int32))
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: malformed OBJ data: {exc}") from exc


def save_off(mesh: TriMesh, path) -> None:
    lines = ["OFF", f"{len(mesh.vertices)} {len(mesh.faces)} 0"]
    lines.extend(" ".join(repr(float(x)) for x in v) for v in mesh.vertices)
    lines.extend(f"3 {f[0]} {f[1]} {f[2]}" for f in mesh.faces)
    Path(path).write_text("\n".join(lines) + "\n")
