"""
errors.py - 시뮬레이터 예외 정의 모듈

입력 오류(시나리오 파싱/검증, 알 수 없는 이름 등)는 ValueError도 함께 상속하여
호출 측에서 일반적인 값 오류로도 처리할 수 있게 합니다.
CLI는 이 계층을 종료 코드(1 검증 / 2 할당 불가 / 3 내부 오류)로 변환합니다.
"""

from typing import Iterable, List


class OWCError(Exception):
    """시뮬레이터 공통 예외."""


class ScenarioParseError(OWCError, ValueError):
    """시나리오 파일을 읽거나 파싱할 수 없음."""


class ScenarioValidationError(OWCError, ValueError):
    """
    시나리오 불변식 위반.

    Attributes:
        violations: "필드.경로: 메시지" 형식의 위반 목록
    """

    def __init__(self, violations: Iterable[str]):
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations))


class UnknownScenarioError(OWCError, ValueError):
    """내장 시나리오 이름이 아님."""


class ZeroChannelError(OWCError, ValueError):
    """DC 이득이 0인 채널에서 대역폭/지연 확산을 요청함."""


class DegenerateLinkError(OWCError, ValueError):
    """신호 광전류가 0인 링크의 SINR 요청."""


class AssignmentConflictError(OWCError, ValueError):
    """두 사용자가 같은 (AP, 파장)을 공유함."""


class InfeasibleAllocationError(OWCError):
    """사용자 수가 (AP, 파장) 쌍의 수보다 많음."""

    def __init__(self, num_users: int, num_aps: int, num_wavelengths: int):
        self.num_users = num_users
        self.num_pairs = num_aps * num_wavelengths
        super().__init__(
            f"Infeasible allocation: {num_users} users > "
            f"{num_aps} APs x {num_wavelengths} wavelengths = {self.num_pairs} pairs"
        )


class InstanceTooLargeError(OWCError):
    """전수 탐색 범위 초과."""


class ShapeMismatchError(OWCError, ValueError):
    """비교 대상 할당의 사용자 구성이 다름."""


class MissingInputError(OWCError, FileNotFoundError):
    """report 단계에 필요한 입력 파일이 없음."""

    def __init__(self, missing: Iterable[str]):
        self.missing: List[str] = list(missing)
        super().__init__(f"Missing required inputs: {', '.join(self.missing)}")


class OutputLockedError(OWCError):
    """다른 프로세스가 출력 디렉터리를 사용 중."""


class BoundViolationError(OWCError, AssertionError):
    """분기 한정 노드 상한이 후손 목적값보다 작음 (디버그 계측)."""
