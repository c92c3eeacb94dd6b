"""
builtin.py - 내장 시나리오 (회의 테이블 / 칵테일 파티 #1 / #2)

사용자 10명의 위치와 발표된 최적 할당(AP, 브랜치, 파장)을 그대로 담고 있습니다.
- 회의 테이블, 칵테일 파티 #1: 수신기 대역폭 5 GHz
- 칵테일 파티 #2: 수신기 대역폭 2.5 GHz
- 보고된 전송률 예외: 칵테일 #1 사용자 5 = 5.4 Gb/s, 칵테일 #2 사용자 1 = 3.2 Gb/s
"""

from dataclasses import dataclass, replace
from typing import Dict, Tuple

from errors import UnknownScenarioError
from scene.models import (
    DEFAULT_BRANCHES,
    DEFAULT_NOISE,
    Room,
    Scenario,
    UserPlacement,
    Vec3,
    Wavelength,
    default_units,
)


@dataclass(frozen=True)
class ReferenceLink:
    """발표된 할당 한 줄 (branch 는 1부터 시작)."""
    user_id: int
    ap_id: int
    branch: int
    wavelength: Wavelength


_R, _Y, _G, _B = Wavelength.RED, Wavelength.YELLOW, Wavelength.GREEN, Wavelength.BLUE

# name → (사용자 (x, y), 수신기 대역폭, 전송률 예외, 발표된 (AP, 브랜치, 파장))
_BUILTINS: Dict[str, tuple] = {
    "conference_table": (
        ((1.5, 2.5), (1.5, 3.5), (1.5, 5.5), (1.5, 4.5), (2.0, 2.5),
         (2.0, 5.5), (2.5, 2.5), (2.5, 3.5), (2.5, 5.5), (2.5, 4.5)),
        5e9,
        (),
        ((1, 4, _R), (2, 3, _R), (4, 2, _R), (3, 3, _R), (2, 3, _Y),
         (3, 3, _Y), (6, 1, _R), (6, 1, _Y), (7, 1, _R), (7, 1, _Y)),
    ),
    "cocktail1": (
        ((0.5, 0.5), (0.5, 1.0), (0.5, 1.5), (1.0, 0.75), (1.0, 1.25),
         (1.75, 3.25), (1.75, 3.75), (1.75, 4.25), (2.25, 3.5), (2.25, 4.0)),
        5e9,
        ((5, 5.4e9),),
        ((1, 1, _G), (1, 1, _Y), (2, 2, _Y), (5, 1, _R), (1, 4, _R),
         (2, 3, _R), (6, 1, _Y), (3, 2, _R), (6, 1, _R), (7, 2, _R)),
    ),
    "cocktail2": (
        ((0.5, 0.5), (0.5, 1.0), (0.5, 1.5), (0.5, 2.0), (1.0, 0.75),
         (1.0, 1.25), (1.0, 1.75), (1.75, 3.75), (1.75, 4.25), (2.25, 4.0)),
        2.5e9,
        ((1, 3.2e9),),
        ((1, 1, _B), (1, 1, _Y), (1, 4, _G), (2, 2, _Y), (5, 1, _R),
         (1, 4, _R), (2, 2, _R), (6, 1, _R), (3, 2, _R), (7, 2, _R)),
    ),
}

BUILTIN_NAMES: Tuple[str, ...] = tuple(_BUILTINS)


def _lookup(name: str) -> tuple:
    if name not in _BUILTINS:
        raise UnknownScenarioError(f"Unknown scenario: {name}. Available: {list(BUILTIN_NAMES)}")
    return _BUILTINS[name]


def builtin_scenario(name: str) -> Scenario:
    """
    내장 시나리오를 생성합니다.

    Raises:
        UnknownScenarioError: 세 가지 이름 외의 값
    """
    positions, bandwidth, overrides, _ = _lookup(name)
    room = Room()
    users = tuple(
        UserPlacement(user_id=i + 1, position=Vec3(x, y, room.cf_height), branches=DEFAULT_BRANCHES)
        for i, (x, y) in enumerate(positions)
    )
    return Scenario(
        name=name,
        room=room,
        units=default_units(),
        users=users,
        noise=replace(DEFAULT_NOISE, receiver_bandwidth=bandwidth),
        rate_overrides_bps=overrides,
    )


def reference_assignment(name: str) -> Tuple[ReferenceLink, ...]:
    """발표된 최적 할당 (사용자 1..10 순서)."""
    _, _, _, rows = _lookup(name)
    return tuple(
        ReferenceLink(user_id=i + 1, ap_id=ap, branch=branch, wavelength=w)
        for i, (ap, branch, w) in enumerate(rows)
    )


def is_builtin(name: str) -> bool:
    return name in _BUILTINS


def truncate_users(scenario: Scenario, n: int) -> Scenario:
    """앞쪽 n명의 사용자만 남긴 시나리오 (작은 인스턴스 교차 검증용)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    kept = scenario.users[:n]
    kept_ids = {u.user_id for u in kept}
    return replace(
        scenario,
        users=kept,
        rate_overrides_bps=tuple(o for o in scenario.rate_overrides_bps if o[0] in kept_ids),
    )
