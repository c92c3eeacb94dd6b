"""
parser.py - 시나리오 파일 파싱 / 직렬화 모듈

JSON 형태의 시나리오 파일을 읽어 검증된 Scenario 로 만들고,
반대로 Scenario 를 같은 스키마의 정규(canonical) 텍스트로 직렬화합니다.

스키마 (생략한 키는 시스템 파라미터 기본값으로 채움):
    name, room{width,length,height,rho_walls_ceiling,rho_floor,elem1,elem2,cf_height},
    units[{id,pos,num_lds,m_tx}], wavelengths{red:{power_w,resp},...},
    receiver{branches[{az,el,fov,area_mm2}], noise_density_pa_sqrthz, bandwidth_hz,
             ambient_shot_noise},
    users[{id,pos}], rate_bps, rate_overrides_bps{user_id: bps},
    solver{objective,tiebreak}

수광 면적만 mm² 단위이며 읽을 때 m² 로 변환합니다.
사용자 pos 에 (x, y) 두 값만 주면 z 는 통신 바닥 높이(cf_height)입니다.
"""

import hashlib
import json
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from errors import ScenarioParseError, ScenarioValidationError
from linkbudget import NoiseModel, amps_to_pa, pa_to_amps
from scene.models import (
    DEFAULT_BANDS,
    DEFAULT_BRANCHES,
    DEFAULT_NOISE,
    DEFAULT_RATE_BPS,
    LightUnit,
    ReceiverBranch,
    Room,
    Scenario,
    SolverOptions,
    UserPlacement,
    Vec3,
    Wavelength,
    WavelengthBand,
    default_units,
    m2_to_mm2,
    mm2_to_m2,
    validate_scenario,
)

logger = logging.getLogger("OWCSimulator")

_ROOM_KEYS = {
    "width": "width_x",
    "length": "length_y",
    "height": "height_z",
    "rho_walls_ceiling": "rho_walls_ceiling",
    "rho_floor": "rho_floor",
    "elem1": "elem_size_bounce1",
    "elem2": "elem_size_bounce2",
    "cf_height": "cf_height",
}
_TOP_LEVEL_KEYS = {
    "name", "room", "units", "wavelengths", "receiver", "users",
    "rate_bps", "rate_overrides_bps", "solver",
}
_OBJECTIVE_ALIASES = {"db": "db_sum", "linear": "linear_sum"}


class _Collector:
    """필드 경로별 위반 사항 수집기."""

    def __init__(self):
        self.errors: List[str] = []

    def add(self, path: str, message: str) -> None:
        self.errors.append(f"{path}: {message}")

    def number(self, data: Dict[str, Any], key: str, path: str, default: float) -> float:
        if key not in data:
            return default
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.add(f"{path}.{key}" if path else key, f"expected a number, got {value!r}")
            return default
        return float(value)

    def integer(self, data: Dict[str, Any], key: str, path: str, default: int) -> int:
        if key not in data:
            return default
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, int):
            self.add(f"{path}.{key}", f"expected an integer, got {value!r}")
            return default
        return value

    def mapping(self, data: Dict[str, Any], key: str) -> Dict[str, Any]:
        value = data.get(key, {})
        if not isinstance(value, dict):
            self.add(key, "expected an object")
            return {}
        return value


class ScenarioParser:
    """
    시나리오 파일 파서.

    파일 인코딩은 utf-8 → utf-8-sig → cp949 → euc-kr 순으로 시도합니다.
    """

    ENCODINGS = ("utf-8", "utf-8-sig", "cp949", "euc-kr")

    def parse(self, filepath: Path) -> Scenario:
        """
        시나리오 파일을 읽어 검증된 Scenario 를 반환합니다.

        Raises:
            ScenarioParseError: 파일을 읽을 수 없거나 JSON 이 아님
            ScenarioValidationError: 불변식 위반 (필드 경로 포함)
        """
        filepath = Path(filepath)
        if not filepath.is_file():
            raise ScenarioParseError(f"Scenario file not found: {filepath}")

        for enc in self.ENCODINGS:
            try:
                text = filepath.read_text(encoding=enc)
                break
            except UnicodeDecodeError:
                continue
        else:
            raise ScenarioParseError(f"Unsupported file encoding: {filepath}")

        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioParseError(f"Malformed scenario file {filepath}: {e}") from e

        scenario = self.parse_dict(data)
        logger.debug(f"Loaded scenario '{scenario.name}' from {filepath}")
        return scenario

    def parse_dict(self, data: Any) -> Scenario:
        if not isinstance(data, dict):
            raise ScenarioParseError("Scenario root must be an object")

        c = _Collector()
        for key in sorted(set(data) - _TOP_LEVEL_KEYS):
            logger.warning(f"Ignoring unknown scenario key: {key}")

        name = data.get("name")
        if not isinstance(name, str) or not name.strip():
            c.add("name", "required non-empty string")
            name = "unnamed"

        room = self._parse_room(c, c.mapping(data, "room"))
        units = self._parse_units(c, data.get("units"), room)
        bands = self._parse_bands(c, c.mapping(data, "wavelengths"))
        receiver, noise = self._parse_receiver(c, c.mapping(data, "receiver"))
        users = self._parse_users(c, data.get("users"), room, receiver)
        rate = c.number(data, "rate_bps", "", DEFAULT_RATE_BPS)
        overrides = self._parse_overrides(c, data.get("rate_overrides_bps", {}))
        solver = self._parse_solver(c, c.mapping(data, "solver"))

        scenario = Scenario(
            name=name,
            room=room,
            units=units,
            users=users,
            receiver=receiver,
            bands=bands,
            noise=noise,
            configured_rate_bps=rate,
            solver=solver,
            rate_overrides_bps=overrides,
        )
        violations = c.errors + validate_scenario(scenario)
        if violations:
            raise ScenarioValidationError(violations)
        return scenario

    def _parse_room(self, c: _Collector, data: Dict[str, Any]) -> Room:
        defaults = Room()
        kwargs = {
            attr: c.number(data, key, "room", getattr(defaults, attr))
            for key, attr in _ROOM_KEYS.items()
        }
        for key in sorted(set(data) - set(_ROOM_KEYS)):
            c.add(f"room.{key}", "unknown key")
        return Room(**kwargs)

    @staticmethod
    def _parse_position(c: _Collector, value: Any, path: str, default_z: Optional[float]) -> Vec3:
        if not isinstance(value, (list, tuple)) or len(value) not in (2, 3) or \
                any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            c.add(path, "expected [x, y, z]")
            return Vec3(0.0, 0.0, 0.0)
        if len(value) == 2:
            if default_z is None:
                c.add(path, "expected [x, y, z]")
                return Vec3(0.0, 0.0, 0.0)
            return Vec3(float(value[0]), float(value[1]), float(default_z))
        return Vec3.of(value)

    def _parse_units(self, c: _Collector, data: Any, room: Room) -> Tuple[LightUnit, ...]:
        if data is None:
            return default_units()
        if not isinstance(data, list):
            c.add("units", "expected a list")
            return default_units()
        units = []
        for i, item in enumerate(data):
            path = f"units[{i}]"
            if not isinstance(item, dict):
                c.add(path, "expected an object")
                continue
            units.append(LightUnit(
                id=c.integer(item, "id", path, i + 1),
                position=self._parse_position(c, item.get("pos"), f"{path}.pos", room.height_z),
                num_lds=c.integer(item, "num_lds", path, 12),
                lambertian_order_m_tx=c.number(item, "m_tx", path, 1.0),
            ))
        return tuple(units)

    def _parse_bands(self, c: _Collector, data: Dict[str, Any]) -> Tuple[WavelengthBand, ...]:
        given: Dict[Wavelength, WavelengthBand] = {}
        for key, item in data.items():
            path = f"wavelengths.{key}"
            try:
                wavelength = Wavelength.parse(key)
            except ValueError as e:
                c.add(path, str(e))
                continue
            if not isinstance(item, dict):
                c.add(path, "expected an object")
                continue
            default = next(b for b in DEFAULT_BANDS if b.wavelength == wavelength)
            given[wavelength] = WavelengthBand(
                wavelength,
                c.number(item, "power_w", path, default.power_per_ld),
                c.number(item, "resp", path, default.responsivity),
            )
        return tuple(given.get(b.wavelength, b) for b in DEFAULT_BANDS)

    def _parse_receiver(self, c: _Collector, data: Dict[str, Any]
                        ) -> Tuple[Tuple[ReceiverBranch, ...], NoiseModel]:
        branches = DEFAULT_BRANCHES
        raw = data.get("branches")
        if raw is not None:
            if not isinstance(raw, list):
                c.add("receiver.branches", "expected a list")
            else:
                parsed = []
                for i, item in enumerate(raw):
                    path = f"receiver.branches[{i}]"
                    if not isinstance(item, dict):
                        c.add(path, "expected an object")
                        continue
                    base = DEFAULT_BRANCHES[i % len(DEFAULT_BRANCHES)]
                    parsed.append(ReceiverBranch(
                        azimuth_deg=c.number(item, "az", path, base.azimuth_deg),
                        elevation_deg=c.number(item, "el", path, base.elevation_deg),
                        fov_half_angle_deg=c.number(item, "fov", path, base.fov_half_angle_deg),
                        detector_area=mm2_to_m2(
                            c.number(item, "area_mm2", path, m2_to_mm2(base.detector_area))
                        ),
                    ))
                branches = tuple(parsed)

        density = DEFAULT_NOISE.noise_density
        if "noise_density_pa_sqrthz" in data:
            density = pa_to_amps(c.number(data, "noise_density_pa_sqrthz", "receiver", 0.0))
        ambient = data.get("ambient_shot_noise", True)
        if not isinstance(ambient, bool):
            c.add("receiver.ambient_shot_noise", "expected true/false")
            ambient = True
        noise = replace(
            DEFAULT_NOISE,
            noise_density=density,
            receiver_bandwidth=c.number(data, "bandwidth_hz", "receiver", DEFAULT_NOISE.receiver_bandwidth),
            ambient_shot_noise=ambient,
        )
        return branches, noise

    def _parse_users(self, c: _Collector, data: Any, room: Room,
                     receiver: Tuple[ReceiverBranch, ...]) -> Tuple[UserPlacement, ...]:
        if data is None:
            return ()
        if not isinstance(data, list):
            c.add("users", "expected a list")
            return ()
        users = []
        for i, item in enumerate(data):
            path = f"users[{i}]"
            if not isinstance(item, dict):
                c.add(path, "expected an object")
                continue
            users.append(UserPlacement(
                user_id=c.integer(item, "id", path, i + 1),
                position=self._parse_position(c, item.get("pos"), f"{path}.pos", room.cf_height),
                branches=receiver,
            ))
        return tuple(users)

    @staticmethod
    def _parse_overrides(c: _Collector, data: Any) -> Tuple[Tuple[int, float], ...]:
        if not isinstance(data, dict):
            c.add("rate_overrides_bps", "expected an object {user_id: bps}")
            return ()
        overrides = []
        for key, value in data.items():
            path = f"rate_overrides_bps.{key}"
            try:
                uid = int(key)
            except (TypeError, ValueError):
                c.add(path, "user id must be an integer")
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                c.add(path, f"expected a number, got {value!r}")
                continue
            overrides.append((uid, float(value)))
        return tuple(sorted(overrides))

    @staticmethod
    def _parse_solver(c: _Collector, data: Dict[str, Any]) -> SolverOptions:
        objective = str(data.get("objective", "db_sum"))
        objective = _OBJECTIVE_ALIASES.get(objective, objective)
        return SolverOptions(objective=objective, tiebreak=str(data.get("tiebreak", "lexicographic")))


def load_scenario(path: Path) -> Scenario:
    """시나리오 파일 로드 (ScenarioParser.parse 단축 함수)."""
    return ScenarioParser().parse(Path(path))


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    """Scenario → 파일 스키마 딕셔너리 (모든 필드 명시)."""
    room = scenario.room
    return {
        "name": scenario.name,
        "room": {key: getattr(room, attr) for key, attr in _ROOM_KEYS.items()},
        "units": [
            {
                "id": u.id,
                "pos": list(u.position.as_tuple()),
                "num_lds": u.num_lds,
                "m_tx": u.lambertian_order_m_tx,
            }
            for u in scenario.units
        ],
        "wavelengths": {
            b.wavelength.value: {"power_w": b.power_per_ld, "resp": b.responsivity}
            for b in scenario.bands
        },
        "receiver": {
            "branches": [
                {
                    "az": br.azimuth_deg,
                    "el": br.elevation_deg,
                    "fov": br.fov_half_angle_deg,
                    "area_mm2": m2_to_mm2(br.detector_area),
                }
                for br in scenario.receiver
            ],
            "noise_density_pa_sqrthz": amps_to_pa(scenario.noise.noise_density),
            "bandwidth_hz": scenario.noise.receiver_bandwidth,
            "ambient_shot_noise": scenario.noise.ambient_shot_noise,
        },
        "users": [{"id": u.user_id, "pos": list(u.position.as_tuple())} for u in scenario.users],
        "rate_bps": scenario.configured_rate_bps,
        "rate_overrides_bps": {str(uid): bps for uid, bps in scenario.rate_overrides_bps},
        "solver": {"objective": scenario.solver.objective, "tiebreak": scenario.solver.tiebreak},
    }


def canonical_json(scenario: Scenario) -> str:
    """키 정렬 + 공백 없는 정규 JSON (해시 입력)."""
    return json.dumps(scenario_to_dict(scenario), sort_keys=True, separators=(",", ":"))


def scenario_hash(scenario: Scenario) -> str:
    """정규 형식의 SHA-256 16진 문자열."""
    return hashlib.sha256(canonical_json(scenario).encode("utf-8")).hexdigest()


def dump_scenario(scenario: Scenario, path: Path) -> Path:
    """시나리오를 사람이 읽기 쉬운 JSON 파일로 저장."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(scenario_to_dict(scenario), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    return path
