"""
models.py - 시나리오 도메인 타입

방, 조명 유닛(AP), 파장 대역, ADR 수신기 가지, 사용자 배치, 시나리오 전체를
불변(frozen) 데이터 클래스로 정의합니다. 기본값은 시스템 파라미터 표를 따릅니다.
- 방: 4 m x 8 m x 3 m, 벽/천장 반사율 0.8, 바닥 0.3
- 조명 유닛 8개, 유닛당 RYGB LD 12개
- 수신기: 4면 ADR (Az 0/90/180/270, El 60, FOV 25, 20 mm²)
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from linkbudget import NoiseModel, pa_to_amps


# 단위 변환 (직렬화 왕복이 비트 단위로 일치하도록 한 곳에서만 변환)
def mm2_to_m2(area_mm2: float) -> float:
    return area_mm2 / 1e6


def m2_to_mm2(area_m2: float) -> float:
    return float(f"{area_m2 * 1e6:.12g}")


@dataclass(frozen=True)
class Vec3:
    """오른손 좌표계의 3차원 벡터 (m). 바닥 z=0, 천장 z=height."""
    x: float
    y: float
    z: float

    @classmethod
    def of(cls, values: Iterable[float]) -> "Vec3":
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.as_array())))


@dataclass(frozen=True)
class Room:
    """
    빈 직육면체 방.

    Attributes:
        width_x, length_y, height_z: 방 크기 (m)
        rho_walls_ceiling: 벽/천장 반사율
        rho_floor: 바닥 반사율
        elem_size_bounce1: 1차 반사용 반사 요소 한 변 (m)
        elem_size_bounce2: 2차 반사용 반사 요소 한 변 (m)
        cf_height: 통신 바닥(CF) 높이 (m)
    """
    width_x: float = 4.0
    length_y: float = 8.0
    height_z: float = 3.0
    rho_walls_ceiling: float = 0.8
    rho_floor: float = 0.3
    elem_size_bounce1: float = 0.05
    elem_size_bounce2: float = 0.20
    cf_height: float = 1.0

    @property
    def dimensions(self) -> Tuple[float, float, float]:
        return (self.width_x, self.length_y, self.height_z)

    @property
    def center(self) -> np.ndarray:
        return np.array(self.dimensions, dtype=np.float64) / 2.0

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.dimensions))

    @property
    def surface_area(self) -> float:
        w, l, h = self.dimensions
        return 2 * (w * l) + 2 * (l * h) + 2 * (w * h)

    def contains(self, point: Vec3, tol: float = 1e-9) -> bool:
        return (
            -tol <= point.x <= self.width_x + tol
            and -tol <= point.y <= self.length_y + tol
            and -tol <= point.z <= self.height_z + tol
        )


@dataclass(frozen=True)
class SurfaceElement:
    """반사 요소 한 개. 법선은 방 안쪽을 향합니다."""
    center: Vec3
    normal: Vec3
    area: float
    reflectance: float
    lambertian_order_m: int = 1


class Wavelength(Enum):
    """RYGB 파장 대역. 정의 순서가 동률 처리용 사전식 순서(R<Y<G<B)입니다."""
    RED = "red"
    YELLOW = "yellow"
    GREEN = "green"
    BLUE = "blue"

    @property
    def order(self) -> int:
        return _WAVELENGTH_ORDER[self]

    @property
    def label(self) -> str:
        return self.value.capitalize()

    @classmethod
    def parse(cls, name: str) -> "Wavelength":
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValueError(
                f"Unknown wavelength: {name}. Available: {[w.value for w in cls]}"
            ) from None


_WAVELENGTH_ORDER: Dict[Wavelength, int] = {w: i for i, w in enumerate(Wavelength)}


@dataclass(frozen=True)
class WavelengthBand:
    """파장별 LD 한 개의 광출력(W)과 수광 감도(A/W)."""
    wavelength: Wavelength
    power_per_ld: float
    responsivity: float


# LD 한 개 기준: 0.8 + 0.5 + 0.3 + 0.3 = 1.9 W
DEFAULT_BANDS: Tuple[WavelengthBand, ...] = (
    WavelengthBand(Wavelength.RED, 0.8, 0.4),
    WavelengthBand(Wavelength.YELLOW, 0.5, 0.35),
    WavelengthBand(Wavelength.GREEN, 0.3, 0.3),
    WavelengthBand(Wavelength.BLUE, 0.3, 0.2),
)


@dataclass(frozen=True)
class LightUnit:
    """
    천장 조명 유닛 (AP).

    유닛 안의 LD 배치는 주어지지 않으므로 파장별로 한 점에 모인
    램버시안 점광원 하나로 취급합니다 (출력 = num_lds x power_per_ld).
    """
    id: int
    position: Vec3
    normal: Vec3 = Vec3(0.0, 0.0, -1.0)
    num_lds: int = 12
    lambertian_order_m_tx: float = 1.0

    def unit_power(self, band: WavelengthBand) -> float:
        return self.num_lds * band.power_per_ld


DEFAULT_UNIT_POSITIONS: Tuple[Tuple[float, float, float], ...] = (
    (1.0, 1.0, 3.0), (1.0, 3.0, 3.0), (1.0, 5.0, 3.0), (1.0, 7.0, 3.0),
    (3.0, 1.0, 3.0), (3.0, 3.0, 3.0), (3.0, 5.0, 3.0), (3.0, 7.0, 3.0),
)


@dataclass(frozen=True)
class ReceiverBranch:
    """ADR 가지 하나: 방위각/고도각(도), FOV 반각(도), 수광 면적(m²)."""
    azimuth_deg: float
    elevation_deg: float
    fov_half_angle_deg: float
    detector_area: float


DEFAULT_BRANCHES: Tuple[ReceiverBranch, ...] = tuple(
    ReceiverBranch(az, 60.0, 25.0, mm2_to_m2(20.0)) for az in (0.0, 90.0, 180.0, 270.0)
)

ADR_BRANCH_COUNT = 4


@dataclass(frozen=True)
class UserPlacement:
    """사용자 수신기 위치와 ADR 가지 목록."""
    user_id: int
    position: Vec3
    branches: Tuple[ReceiverBranch, ...] = DEFAULT_BRANCHES


OBJECTIVES = ("db_sum", "linear_sum")
TIEBREAKS = ("lexicographic",)


@dataclass(frozen=True)
class SolverOptions:
    objective: str = "db_sum"
    tiebreak: str = "lexicographic"


DEFAULT_NOISE = NoiseModel(noise_density=pa_to_amps(4.47), receiver_bandwidth=5e9)
DEFAULT_RATE_BPS = 7.1e9
ELEMENT_TILING_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Scenario:
    """
    실험 한 건의 전체 설명.

    Attributes:
        name: 시나리오 이름
        room: 방 기하 정보
        units: 조명 유닛 (AP) 목록
        users: 사용자 배치 목록
        receiver: 모든 사용자가 공유하는 ADR 가지 구성
        bands: 파장 대역 목록 (R, Y, G, B 순)
        noise: 수신기 잡음 모델
        configured_rate_bps: 고정 데이터 전송률
        solver: 목적 함수 / 동률 처리 옵션
        rate_overrides_bps: 사용자별 전송률 재정의 ((user_id, bps), ...)
    """
    name: str
    room: Room = field(default_factory=Room)
    units: Tuple[LightUnit, ...] = ()
    users: Tuple[UserPlacement, ...] = ()
    receiver: Tuple[ReceiverBranch, ...] = DEFAULT_BRANCHES
    bands: Tuple[WavelengthBand, ...] = DEFAULT_BANDS
    noise: NoiseModel = DEFAULT_NOISE
    configured_rate_bps: float = DEFAULT_RATE_BPS
    solver: SolverOptions = field(default_factory=SolverOptions)
    rate_overrides_bps: Tuple[Tuple[int, float], ...] = ()

    @property
    def user_ids(self) -> Tuple[int, ...]:
        return tuple(u.user_id for u in self.users)

    @property
    def ap_ids(self) -> Tuple[int, ...]:
        return tuple(u.id for u in self.units)

    @property
    def wavelengths(self) -> Tuple[Wavelength, ...]:
        return tuple(b.wavelength for b in self.bands)

    def band(self, wavelength: Wavelength) -> WavelengthBand:
        for b in self.bands:
            if b.wavelength == wavelength:
                return b
        raise KeyError(wavelength)

    def rate_for(self, user_id: int) -> float:
        """사용자의 목표 전송률 (재정의가 있으면 재정의 값)."""
        for uid, bps in self.rate_overrides_bps:
            if uid == user_id:
                return bps
        return self.configured_rate_bps


def default_units(positions: Optional[Iterable[Tuple[float, float, float]]] = None
                  ) -> Tuple[LightUnit, ...]:
    positions = DEFAULT_UNIT_POSITIONS if positions is None else positions
    return tuple(LightUnit(id=i + 1, position=Vec3.of(p)) for i, p in enumerate(positions))


def validate_scenario(scenario: Scenario) -> list:
    """
    시나리오 불변식을 검사하여 위반 목록을 반환합니다.

    Returns:
        "필드.경로: 메시지" 문자열 목록 (비어 있으면 유효)
    """
    errors = []
    room = scenario.room

    for name in ("width_x", "length_y", "height_z", "elem_size_bounce1", "elem_size_bounce2"):
        value = getattr(room, name)
        if not np.isfinite(value) or value <= 0:
            errors.append(f"room.{name}: must be > 0")
    for name in ("rho_walls_ceiling", "rho_floor"):
        value = getattr(room, name)
        if not 0.0 <= value <= 1.0:
            errors.append(f"room.{name}: reflectance must be in [0, 1]")
    if not 0.0 <= room.cf_height < room.height_z:
        errors.append("room.cf_height: must satisfy 0 <= cf_height < height")
    # 방 요소 크기는 각 변을 정수 개로 나눠야 함 (명령행 해상도 프리셋은 mesh_surfaces 가 반올림)
    for name in ("elem_size_bounce1", "elem_size_bounce2"):
        size = getattr(room, name)
        if not size > 0:
            continue
        for dim_name, length in zip(("width_x", "length_y", "height_z"), room.dimensions):
            count = length / size
            if round(count) < 1 or abs(count - round(count)) > ELEMENT_TILING_TOLERANCE:
                errors.append(f"room.{name}: {size} m elements do not divide {dim_name} = {length} m")

    ap_ids = [u.id for u in scenario.units]
    if len(set(ap_ids)) != len(ap_ids):
        errors.append("units: AP ids must be unique")
    for i, unit in enumerate(scenario.units):
        path = f"units[{i}]"
        if not unit.position.is_finite():
            errors.append(f"{path}.pos: non-finite component")
        elif abs(unit.position.z - room.height_z) > 1e-9:
            errors.append(f"{path}.pos: unit must be on the ceiling (z = {room.height_z})")
        elif not room.contains(unit.position):
            errors.append(f"{path}.pos: position outside room")
        if unit.num_lds < 1:
            errors.append(f"{path}.num_lds: must be >= 1")
        if unit.lambertian_order_m_tx < 1:
            errors.append(f"{path}.m_tx: Lambertian order must be >= 1")

    if len(scenario.receiver) != ADR_BRANCH_COUNT:
        errors.append(
            f"receiver.branches: expected {ADR_BRANCH_COUNT} branches, got {len(scenario.receiver)}"
        )
    for i, br in enumerate(scenario.receiver):
        path = f"receiver.branches[{i}]"
        if not 0.0 <= br.azimuth_deg < 360.0:
            errors.append(f"{path}.az: must be in [0, 360)")
        if not 0.0 < br.elevation_deg <= 90.0:
            errors.append(f"{path}.el: must be in (0, 90]")
        if not 0.0 < br.fov_half_angle_deg <= 90.0:
            errors.append(f"{path}.fov: must be in (0, 90]")
        if br.detector_area <= 0:
            errors.append(f"{path}.area_mm2: must be > 0")

    seen_bands = set()
    for band in scenario.bands:
        path = f"wavelengths.{band.wavelength.value}"
        if band.wavelength in seen_bands:
            errors.append(f"{path}: duplicate wavelength")
        seen_bands.add(band.wavelength)
        if band.power_per_ld < 0:
            errors.append(f"{path}.power_w: must be >= 0")
        if not 0.0 < band.responsivity <= 1.0:
            errors.append(f"{path}.resp: responsivity must be in (0, 1]")

    if scenario.noise.noise_density <= 0:
        errors.append("receiver.noise_density_pa_sqrthz: must be > 0")
    if scenario.noise.receiver_bandwidth <= 0:
        errors.append("receiver.bandwidth_hz: must be > 0")

    user_ids = [u.user_id for u in scenario.users]
    if not user_ids:
        errors.append("users: at least one user is required")
    if len(set(user_ids)) != len(user_ids):
        errors.append("users: user ids must be unique")
    for i, user in enumerate(scenario.users):
        path = f"users[{i}]"
        if not user.position.is_finite():
            errors.append(f"{path}.pos: non-finite component")
        elif not room.contains(user.position):
            errors.append(f"{path}.pos: position outside room")
        if len(user.branches) != ADR_BRANCH_COUNT:
            errors.append(
                f"{path}.branches: expected {ADR_BRANCH_COUNT} branches, got {len(user.branches)}"
            )

    if not scenario.configured_rate_bps > 0:
        errors.append("rate_bps: configured rate must be > 0")
    for uid, bps in scenario.rate_overrides_bps:
        if uid not in user_ids:
            errors.append(f"rate_overrides_bps.{uid}: unknown user id")
        if not bps > 0:
            errors.append(f"rate_overrides_bps.{uid}: rate must be > 0")

    if scenario.solver.objective not in OBJECTIVES:
        errors.append(f"solver.objective: must be one of {list(OBJECTIVES)}")
    if scenario.solver.tiebreak not in TIEBREAKS:
        errors.append(f"solver.tiebreak: must be one of {list(TIEBREAKS)}")

    return errors
