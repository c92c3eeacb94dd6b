"""
raytrace.py - 램버시안 광선 추적 모듈

(사용자, 브랜치, AP) 링크마다 LOS, 1차 반사, 2차 반사 경로를 합산하여
시간 구간(bin)별 임펄스 응답을 계산합니다.

- 1차 반사: elem_size_bounce1 (기본 5 cm) 요소 메시
- 2차 반사: elem_size_bounce2 (기본 20 cm) 요소 쌍의 이중 합
- 응답은 기하 정보만의 함수(광원 출력 1 W 기준)이며 파장별 출력/감도는 후단에서 곱합니다.
- FOV 는 수신 브랜치에 도달하는 모든 빛(직접광, 반사광)에 적용합니다.

각 링크의 경로 기여는 요소 인덱스 순서로 정렬된 뒤 np.bincount 로 누적되므로
스레드 수와 관계없이 결과가 바이트 단위로 같습니다.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import constants

from scene.geometry import SurfaceMesh, branch_normal_array, mesh_surfaces
from scene.models import LightUnit, ReceiverBranch, Room, Scenario, SurfaceElement, UserPlacement, Vec3

logger = logging.getLogger("OWCSimulator")

SPEED_OF_LIGHT = constants.c
REFLECTOR_ORDER = 1
FOV_TOLERANCE = 1e-12
OVERFLOW_TOLERANCE = 1e-6
MIN_WINDOW_DIAGONALS = 10
_PAIR_CHUNK = 500_000  # 2차 반사 블록당 최대 요소 쌍 수

ProgressCallback = Callable[[int, str], None]


@dataclass(frozen=True)
class BounceConfig:
    """
    광선 추적 설정.

    Attributes:
        max_order: 최대 반사 차수 (0, 1, 2)
        elem_size_bounce1: 1차 반사 요소 크기 (m)
        elem_size_bounce2: 2차 반사 요소 크기 (m)
        time_bin: 시간 구간 폭 (s)
        time_window: 관측 창 (s). None 이면 방 대각선 10배를 빛이 지나는 시간.
            넘어서는 기여가 있으면 응답을 늘리고 경고합니다.
    """
    max_order: int = 2
    elem_size_bounce1: float = 0.05
    elem_size_bounce2: float = 0.20
    time_bin: float = 1e-11
    time_window: Optional[float] = None

    def validate(self) -> None:
        if self.max_order not in (0, 1, 2):
            raise ValueError(f"max_order must be 0, 1 or 2, got {self.max_order}")
        if not self.time_bin > 0:
            raise ValueError(f"time_bin must be > 0, got {self.time_bin}")
        if self.time_window is not None and not self.time_window > 0:
            raise ValueError(f"time_window must be > 0, got {self.time_window}")
        for name in ("elem_size_bounce1", "elem_size_bounce2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def window_for(self, room: Room) -> float:
        """room 에 적용할 관측 창. 대각선 10배 미만이면 ValueError."""
        minimum = MIN_WINDOW_DIAGONALS * room.diagonal / SPEED_OF_LIGHT
        if self.time_window is None:
            return minimum
        if self.time_window < minimum:
            raise ValueError(
                f"time_window {self.time_window * 1e9:.1f} ns is shorter than "
                f"{MIN_WINDOW_DIAGONALS} room diagonals ({minimum * 1e9:.1f} ns)"
            )
        return self.time_window

    def as_dict(self) -> dict:
        return {
            "max_order": self.max_order,
            "elem_size_bounce1": self.elem_size_bounce1,
            "elem_size_bounce2": self.elem_size_bounce2,
            "time_bin": self.time_bin,
            "time_window": self.time_window,
        }


@dataclass(frozen=True)
class PathContribution:
    power_gain: float
    delay: float


@dataclass(frozen=True, eq=False)
class ImpulseResponse:
    """
    시간 구간별 수신 전력 (광원 1 W 기준).

    Attributes:
        bin_width: 구간 폭 (s)
        t0: 첫 구간 시작 시각 (s)
        bins: 구간별 전력 (모두 ≥ 0)
    """
    bin_width: float
    t0: float
    bins: np.ndarray

    @property
    def times(self) -> np.ndarray:
        """구간 중심 시각."""
        return self.t0 + (np.arange(self.bins.shape[0]) + 0.5) * self.bin_width

    @property
    def energy(self) -> float:
        return float(self.bins.sum())

    def identical(self, other: "ImpulseResponse") -> bool:
        return (
            self.bin_width == other.bin_width
            and self.t0 == other.t0
            and self.bins.shape == other.bins.shape
            and self.bins.tobytes() == other.bins.tobytes()
        )

    @classmethod
    def zero(cls, bin_width: float, t0: float = 0.0) -> "ImpulseResponse":
        return cls(bin_width, t0, np.zeros(1))


def lambertian_intensity(m: float, cos_phi):
    """정규화된 차수 m 램버시안 방사 강도 ((m+1)/2π)·cos^m φ (전방 반구 외는 0)."""
    cos_phi = np.asarray(cos_phi, dtype=np.float64)
    return np.where(cos_phi > 0, (m + 1) / (2 * math.pi) * np.power(np.clip(cos_phi, 0, None), m), 0.0)


def lambertian_gain(m: float, d, cos_phi, cos_theta, area):
    """
    램버시안 링크 이득 ((m+1)/(2π d²))·cos^m φ·cos θ·A.

    cos φ 또는 cos θ 가 0 이하이면(평면 뒤쪽) 0 입니다. 배열 입력을 받습니다.
    """
    d = np.asarray(d, dtype=np.float64)
    cos_phi = np.asarray(cos_phi, dtype=np.float64)
    cos_theta = np.asarray(cos_theta, dtype=np.float64)
    visible = (cos_phi > 0) & (cos_theta > 0) & (d > 0)
    safe_d = np.where(d > 0, d, 1.0)
    gain = np.where(
        visible,
        (m + 1) / (2 * math.pi * safe_d * safe_d)
        * np.power(np.clip(cos_phi, 0, None), m) * cos_theta * area,
        0.0,
    )
    return float(gain) if gain.ndim == 0 else gain


def in_fov(branch: ReceiverBranch, arrival_dir) -> Tuple[bool, float]:
    """
    도착 방향(수신기 → 광원 단위 벡터)이 브랜치 FOV 안인지 판정합니다 (경계 포함).

    Returns:
        (FOV 안 여부, cos θ)
    """
    direction = arrival_dir.as_array() if isinstance(arrival_dir, Vec3) else np.asarray(arrival_dir, dtype=float)
    cos_theta = float(branch_normal_array(branch.azimuth_deg, branch.elevation_deg) @ direction)
    return cos_theta >= _cos_fov(branch), cos_theta


def _cos_fov(branch: ReceiverBranch) -> float:
    return math.cos(math.radians(branch.fov_half_angle_deg)) - FOV_TOLERANCE


def los_contribution(ap: LightUnit, user: UserPlacement, branch_index: int) -> PathContribution:
    """직접 경로 기여. FOV 밖이거나 AP 뒤쪽이면 이득 0."""
    vec = user.position.as_array() - ap.position.as_array()
    d = float(np.linalg.norm(vec))
    delay = d / SPEED_OF_LIGHT
    if d == 0:
        return PathContribution(0.0, 0.0)
    branch = user.branches[branch_index]
    visible, cos_theta = in_fov(branch, -vec / d)
    if not visible:
        return PathContribution(0.0, delay)
    cos_phi = float(vec @ ap.normal.as_array()) / d
    gain = lambertian_gain(ap.lambertian_order_m_tx, d, cos_phi, cos_theta, branch.detector_area)
    return PathContribution(gain, delay)


def _as_mesh(elements: Union[SurfaceMesh, Sequence[SurfaceElement]]) -> SurfaceMesh:
    if isinstance(elements, SurfaceMesh):
        return elements
    elements = list(elements)
    return SurfaceMesh(
        centers=np.array([e.center.as_tuple() for e in elements], dtype=np.float64).reshape(-1, 3),
        normals=np.array([e.normal.as_tuple() for e in elements], dtype=np.float64).reshape(-1, 3),
        areas=np.array([e.area for e in elements], dtype=np.float64),
        reflectance=np.array([e.reflectance for e in elements], dtype=np.float64),
        surface=np.zeros(len(elements), dtype=np.int8),
        elem_size=float(math.sqrt(elements[0].area)) if elements else 0.0,
    )


def _source_field(ap: LightUnit, mesh: SurfaceMesh) -> Tuple[np.ndarray, np.ndarray]:
    """AP → 요소 이득(반사율 포함)과 거리."""
    vec = mesh.centers - ap.position.as_array()
    d = np.linalg.norm(vec, axis=1)
    safe_d = np.where(d > 0, d, 1.0)
    cos_phi = (vec @ ap.normal.as_array()) / safe_d
    cos_in = -np.einsum("ij,ij->i", vec, mesh.normals) / safe_d
    gain = lambertian_gain(ap.lambertian_order_m_tx, d, cos_phi, cos_in, mesh.areas) * mesh.reflectance
    return np.atleast_1d(gain), d


def _receiver_field(position: Vec3, branch: ReceiverBranch, mesh: SurfaceMesh
                    ) -> Tuple[np.ndarray, np.ndarray]:
    """요소 → 수신 브랜치 이득(요소는 차수 1 램버시안 재방사)과 거리."""
    vec = position.as_array() - mesh.centers
    d = np.linalg.norm(vec, axis=1)
    safe_d = np.where(d > 0, d, 1.0)
    cos_out = np.einsum("ij,ij->i", vec, mesh.normals) / safe_d
    cos_theta = -(vec @ branch_normal_array(branch.azimuth_deg, branch.elevation_deg)) / safe_d
    gain = lambertian_gain(REFLECTOR_ORDER, d, cos_out, cos_theta, branch.detector_area)
    gain = np.where(cos_theta >= _cos_fov(branch), gain, 0.0)
    return np.atleast_1d(gain), d


@lru_cache(maxsize=32)
def _cached_source_field(ap: LightUnit, room: Room, elem_size: float):
    return _source_field(ap, mesh_surfaces(room, elem_size))


@lru_cache(maxsize=64)
def _cached_receiver_field(position: Vec3, branch: ReceiverBranch, room: Room, elem_size: float):
    return _receiver_field(position, branch, mesh_surfaces(room, elem_size))


def _first_order_arrays(src, rcv) -> Tuple[np.ndarray, np.ndarray]:
    g_a, d_a = src
    g_u, d_u = rcv
    gains = g_a * g_u
    keep = gains > 0
    return gains[keep], (d_a[keep] + d_u[keep]) / SPEED_OF_LIGHT


def _second_order_arrays(mesh: SurfaceMesh, src, rcv) -> Tuple[np.ndarray, np.ndarray]:
    g_a, d_a = src
    g_u, d_u = rcv
    act1 = np.flatnonzero(g_a > 0)
    act2 = np.flatnonzero(g_u > 0)
    if act1.size == 0 or act2.size == 0:
        return np.empty(0), np.empty(0)

    p2 = mesh.centers[act2]
    n2 = mesh.normals[act2]
    a2 = mesh.areas[act2] * mesh.reflectance[act2]
    gu2, du2 = g_u[act2], d_u[act2]

    rows = max(1, _PAIR_CHUNK // act2.size)
    gains, delays = [], []
    for start in range(0, act1.size, rows):
        i1 = act1[start:start + rows]
        diff = p2[None, :, :] - mesh.centers[i1][:, None, :]
        d12 = np.linalg.norm(diff, axis=2)
        safe = np.where(d12 > 0, d12, np.inf)
        cos_out = np.einsum("kjc,kc->kj", diff, mesh.normals[i1]) / safe
        cos_in = -np.einsum("kjc,jc->kj", diff, n2) / safe
        # e1 == e2 또는 같은 평면 위의 쌍은 코사인 조건에서 걸러짐
        form = np.where(
            (cos_out > 0) & (cos_in > 0),
            (REFLECTOR_ORDER + 1) / (2 * math.pi * safe * safe) * cos_out * cos_in * a2[None, :],
            0.0,
        )
        g = g_a[i1][:, None] * form * gu2[None, :]
        keep = g > 0
        gains.append(g[keep])
        delays.append(((d_a[i1][:, None] + d12 + du2[None, :]) / SPEED_OF_LIGHT)[keep])
    return np.concatenate(gains), np.concatenate(delays)


def first_order_response(ap: LightUnit, user: UserPlacement, branch_index: int,
                         elements: Union[SurfaceMesh, Sequence[SurfaceElement]]) -> List[PathContribution]:
    """1차 반사 경로 기여 (이득이 0인 요소는 제외, 요소 순서 유지)."""
    mesh = _as_mesh(elements)
    branch = user.branches[branch_index]
    gains, delays = _first_order_arrays(_source_field(ap, mesh), _receiver_field(user.position, branch, mesh))
    return [PathContribution(float(g), float(t)) for g, t in zip(gains, delays)]


def second_order_response(ap: LightUnit, user: UserPlacement, branch_index: int,
                          elements: Union[SurfaceMesh, Sequence[SurfaceElement]]) -> List[PathContribution]:
    """2차 반사 경로 기여 (요소 쌍 e1 ≠ e2, FOV 는 수신기에서만 적용)."""
    mesh = _as_mesh(elements)
    branch = user.branches[branch_index]
    gains, delays = _second_order_arrays(
        mesh, _source_field(ap, mesh), _receiver_field(user.position, branch, mesh)
    )
    return [PathContribution(float(g), float(t)) for g, t in zip(gains, delays)]


def _accumulate(gains: np.ndarray, delays: np.ndarray, d_los: float, bin_width: float) -> ImpulseResponse:
    t0 = math.floor(d_los / SPEED_OF_LIGHT / bin_width) * bin_width
    if gains.size == 0:
        return ImpulseResponse.zero(bin_width, t0)
    idx = np.floor((delays - t0) / bin_width).astype(np.int64)
    np.clip(idx, 0, None, out=idx)
    bins = np.bincount(idx, weights=gains, minlength=1)
    return ImpulseResponse(bin_width, t0, bins)


def overflow_fraction(ir: ImpulseResponse, time_window: float) -> float:
    """관측 창 밖에 있는 에너지 비율."""
    total = ir.energy
    if total <= 0:
        return 0.0
    cut = int(math.ceil(time_window / ir.bin_width))
    return float(ir.bins[cut:].sum()) / total


def impulse_response(scene: Scenario, ap: LightUnit, user: UserPlacement, branch_index: int,
                     cfg: BounceConfig, warn: bool = True) -> ImpulseResponse:
    """
    한 링크의 임펄스 응답 (LOS + 1차 + 2차 반사).

    관측 창을 넘는 기여도 모두 담도록 응답 길이를 늘리며, 창 밖 에너지 비율이
    1e-6 을 넘으면 경고를 남깁니다.
    """
    cfg.validate()
    branch = user.branches[branch_index]
    parts_g, parts_t = [], []

    los = los_contribution(ap, user, branch_index)
    if los.power_gain > 0:
        parts_g.append(np.array([los.power_gain]))
        parts_t.append(np.array([los.delay]))

    if cfg.max_order >= 1:
        g, t = _first_order_arrays(
            _cached_source_field(ap, scene.room, cfg.elem_size_bounce1),
            _cached_receiver_field(user.position, branch, scene.room, cfg.elem_size_bounce1),
        )
        parts_g.append(g)
        parts_t.append(t)

    if cfg.max_order >= 2:
        g, t = _second_order_arrays(
            mesh_surfaces(scene.room, cfg.elem_size_bounce2),
            _cached_source_field(ap, scene.room, cfg.elem_size_bounce2),
            _cached_receiver_field(user.position, branch, scene.room, cfg.elem_size_bounce2),
        )
        parts_g.append(g)
        parts_t.append(t)

    gains = np.concatenate(parts_g) if parts_g else np.empty(0)
    delays = np.concatenate(parts_t) if parts_t else np.empty(0)
    d_los = float(np.linalg.norm(user.position.as_array() - ap.position.as_array()))
    ir = _accumulate(gains, delays, d_los, cfg.time_bin)

    if warn:
        window = cfg.time_window if cfg.time_window is not None else cfg.window_for(scene.room)
        frac = overflow_fraction(ir, window)
        if frac > OVERFLOW_TOLERANCE:
            logger.warning(
                f"Impulse response for user {user.user_id} branch {branch_index + 1} AP {ap.id} "
                f"extends past the {window * 1e9:.1f} ns window ({frac:.2e} of energy); window extended"
            )
    return ir


def trace_scenario(scenario: Scenario, cfg: BounceConfig, workers: Optional[int] = None,
                   progress: Optional[ProgressCallback] = None) -> List[List[List[ImpulseResponse]]]:
    """
    시나리오의 모든 (사용자, 브랜치, AP) 링크를 추적합니다.

    링크 단위로 스레드 풀에 분배하고 결과는 인덱스 위치에 놓으므로
    workers 값과 관계없이 같은 결과를 냅니다. 관측 창이 방 대각선 10배보다
    짧으면 추적 전에 ValueError 를 냅니다.

    Returns:
        irs[u][b][a]
    """
    cfg.validate()
    cfg.window_for(scenario.room)
    links = [
        (u, b, a)
        for u in range(len(scenario.users))
        for b in range(len(scenario.users[u].branches))
        for a in range(len(scenario.units))
    ]
    workers = workers or os.cpu_count() or 1

    # 메시는 공유 캐시에 먼저 만들어 둠
    mesh_surfaces(scenario.room, cfg.elem_size_bounce1)
    mesh_surfaces(scenario.room, cfg.elem_size_bounce2)

    def _trace(link):
        u, b, a = link
        return impulse_response(scenario, scenario.units[a], scenario.users[u], b, cfg, warn=False)

    results: List[ImpulseResponse] = []
    total = len(links)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for i, ir in enumerate(pool.map(_trace, links), start=1):
            results.append(ir)
            if progress and (i == total or i % max(1, total // 20) == 0):
                progress(int(i * 100 / total), f"Traced {i}/{total} links")

    irs: List[List[List[ImpulseResponse]]] = [
        [[None] * len(scenario.units) for _ in scenario.users[u].branches]  # type: ignore[list-item]
        for u in range(len(scenario.users))
    ]
    for (u, b, a), ir in zip(links, results):
        irs[u][b][a] = ir
    return irs
