"""
geometry.py - 방 표면 분할 / ADR 브랜치 방향

방의 여섯 면(바닥, 천장, x=0, x=W, y=0, y=L 순서)을 정사각형에 가까운
반사 요소로 분할합니다. 각 면의 한 변을 round(길이/요소크기)개(최소 1개)로
나누므로 실제 요소 크기는 면마다 조금씩 다를 수 있으며, 요소별로 기록됩니다.

광선 추적 커널은 SurfaceMesh(넘파이 배열 묶음)를 사용하고,
discretize()는 같은 메시를 SurfaceElement 목록으로 풀어서 돌려줍니다.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from scene.models import Room, SurfaceElement, Vec3

SURFACE_NAMES: Tuple[str, ...] = ("floor", "ceiling", "wall_x0", "wall_xw", "wall_y0", "wall_yl")


def branch_normal(azimuth_deg: float, elevation_deg: float) -> Vec3:
    """
    ADR 브랜치 법선 (cos El·cos Az, cos El·sin Az, sin El).

    고도각은 수평면에서 위로 잰 각도이므로 El=90°는 천정 방향입니다.
    """
    return Vec3.of(branch_normal_array(azimuth_deg, elevation_deg))


def branch_normal_array(azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    az = np.deg2rad(azimuth_deg)
    el = np.deg2rad(elevation_deg)
    return np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])


@dataclass(frozen=True)
class SurfaceMesh:
    """
    반사 요소 배열 묶음 (N개 요소).

    Attributes:
        centers: (N, 3) 요소 중심
        normals: (N, 3) 안쪽 방향 단위 법선
        areas: (N,) 요소 면적
        reflectance: (N,) 반사율
        surface: (N,) SURFACE_NAMES 인덱스
        elem_size: 요청한 요소 크기
    """
    centers: np.ndarray
    normals: np.ndarray
    areas: np.ndarray
    reflectance: np.ndarray
    surface: np.ndarray
    elem_size: float

    def __len__(self) -> int:
        return int(self.areas.shape[0])

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def surface_area(self, name: str) -> float:
        return float(self.areas[self.surface == SURFACE_NAMES.index(name)].sum())


def _surface_table(room: Room):
    w, l, h = room.dimensions
    rho_wc = room.rho_walls_ceiling
    # (고정 축, 고정 값, 법선, 반사율, (u 축, u 길이), (v 축, v 길이))
    return (
        (2, 0.0, (0.0, 0.0, 1.0), room.rho_floor, (0, w), (1, l)),
        (2, h, (0.0, 0.0, -1.0), rho_wc, (0, w), (1, l)),
        (0, 0.0, (1.0, 0.0, 0.0), rho_wc, (1, l), (2, h)),
        (0, w, (-1.0, 0.0, 0.0), rho_wc, (1, l), (2, h)),
        (1, 0.0, (0.0, 1.0, 0.0), rho_wc, (0, w), (2, h)),
        (1, l, (0.0, -1.0, 0.0), rho_wc, (0, w), (2, h)),
    )


def _tile_count(length: float, elem_size: float) -> int:
    return max(1, int(round(length / elem_size)))


@lru_cache(maxsize=8)
def mesh_surfaces(room: Room, elem_size: float) -> SurfaceMesh:
    """
    방의 여섯 면을 elem_size 크기 요소로 분할한 메시 (읽기 전용 배열).

    각 변은 max(1, round(길이 / elem_size)) 개로 나누고 실제 요소 한 변은 길이 / 개수입니다.
    면적 합은 항상 면 넓이와 같습니다.
    """
    if not elem_size > 0:
        raise ValueError(f"elem_size must be > 0, got {elem_size}")

    centers, normals, areas, rhos, surfaces = [], [], [], [], []
    for idx, (axis, value, normal, rho, (u_axis, u_len), (v_axis, v_len)) in enumerate(_surface_table(room)):
        nu = _tile_count(u_len, elem_size)
        nv = _tile_count(v_len, elem_size)
        du, dv = u_len / nu, v_len / nv
        uu, vv = np.meshgrid((np.arange(nu) + 0.5) * du, (np.arange(nv) + 0.5) * dv, indexing="ij")

        block = np.empty((nu * nv, 3))
        block[:, axis] = value
        block[:, u_axis] = uu.ravel()
        block[:, v_axis] = vv.ravel()

        count = nu * nv
        centers.append(block)
        normals.append(np.tile(np.asarray(normal), (count, 1)))
        areas.append(np.full(count, du * dv))
        rhos.append(np.full(count, rho))
        surfaces.append(np.full(count, idx, dtype=np.int8))

    mesh = SurfaceMesh(
        centers=np.concatenate(centers),
        normals=np.concatenate(normals),
        areas=np.concatenate(areas),
        reflectance=np.concatenate(rhos),
        surface=np.concatenate(surfaces),
        elem_size=float(elem_size),
    )
    for arr in (mesh.centers, mesh.normals, mesh.areas, mesh.reflectance, mesh.surface):
        arr.setflags(write=False)
    return mesh


def discretize(room: Room, elem_size: float) -> List[SurfaceElement]:
    """방 표면을 SurfaceElement 목록으로 분할 (바닥 → 천장 → x 벽 → y 벽 순)."""
    mesh = mesh_surfaces(room, elem_size)
    return [
        SurfaceElement(
            center=Vec3.of(mesh.centers[i]),
            normal=Vec3.of(mesh.normals[i]),
            area=float(mesh.areas[i]),
            reflectance=float(mesh.reflectance[i]),
        )
        for i in range(len(mesh))
    ]
