"""
linkbudget.py - 링크 버짓 / SINR 계산 모듈

WDMA 간섭 분류(신호 / 동일 파장 간섭 / 조명 전용)와 산탄(shot)·전치증폭기 잡음을
이용해 사용자별 SINR을 계산하고, OOK BER과 15.6 dB 임계값, 지원 전송률을 제공합니다.

광전류 = 수광 감도(A/W) x 수신 광전력(W). 산탄 잡음은 브랜치에 입사하는
전체 광전류(신호 + 간섭 + 조명 전용 빛)로 결정되며, 간섭은 Σ I² 로 분모에 더해집니다.
"""

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Hashable, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np
from scipy import constants
from scipy.special import erfc

from errors import AssignmentConflictError, DegenerateLinkError

if TYPE_CHECKING:
    from scene.models import Wavelength

ELECTRON_CHARGE = constants.e  # 1.602176634e-19 C
OOK_THRESHOLD_DB = 15.6
TARGET_BER = 1e-9
DEFAULT_KAPPA = 1.42  # 7.1 Gb/s / 5 GHz

ArrayLike = Union[float, np.ndarray]


def pa_to_amps(density_pa: float) -> float:
    """pA/√Hz → A/√Hz"""
    return density_pa / 1e12


def amps_to_pa(density: float) -> float:
    """A/√Hz → pA/√Hz (12 유효숫자로 정규화)"""
    return float(f"{density * 1e12:.12g}")


@dataclass(frozen=True)
class NoiseModel:
    """
    수신기 잡음 모델.

    Attributes:
        noise_density: 전치증폭기 입력 환산 잡음 전류 밀도 (A/√Hz)
        receiver_bandwidth: 수신기(잡음) 대역폭 (Hz)
        electron_charge: 전자 전하량 (C)
        ambient_shot_noise: False면 조명 전용 빛이 산탄 잡음에 기여하지 않음
        shot_noise: False면 산탄 잡음 자체를 끔 (스케일 불변성 검증용 테스트 모드)
    """
    noise_density: float
    receiver_bandwidth: float
    electron_charge: float = ELECTRON_CHARGE
    ambient_shot_noise: bool = True
    shot_noise: bool = True

    @property
    def preamp_variance(self) -> float:
        return preamp_noise_var(self.noise_density, self.receiver_bandwidth)


def shot_noise_var(total_photocurrent: ArrayLike, bandwidth: float,
                   charge: float = ELECTRON_CHARGE) -> ArrayLike:
    """산탄 잡음 분산 2·q·I·B (A²)"""
    return 2.0 * charge * total_photocurrent * bandwidth


def preamp_noise_var(density: float, bandwidth: float) -> float:
    """전치증폭기 잡음 분산 density²·B (A²)"""
    return density * density * bandwidth


@dataclass
class LinkBudget:
    """한 사용자·브랜치의 광전류 구성."""
    user_id: int
    branch: int
    ap: int
    wavelength: "Wavelength"
    signal_photocurrent: float
    interference_photocurrents: List[float] = field(default_factory=list)
    ambient_photocurrent: float = 0.0
    sinr_db: Optional[float] = None

    @property
    def total_photocurrent(self) -> float:
        return self.signal_photocurrent + sum(self.interference_photocurrents) + self.ambient_photocurrent


def noise_denominator(signal: ArrayLike, interference_sum: ArrayLike,
                      interference_sq_sum: ArrayLike, ambient: ArrayLike,
                      noise: NoiseModel) -> ArrayLike:
    """
    SINR 분모 σ_shot² + σ_preamp² + Σ I² (배열 입력 가능).

    Args:
        signal: 신호 광전류
        interference_sum: 간섭 광전류 합 (산탄 잡음용)
        interference_sq_sum: 간섭 광전류 제곱합
        ambient: 조명 전용 광전류
    """
    denom = noise.preamp_variance + interference_sq_sum
    if noise.shot_noise:
        incident = signal + interference_sum
        if noise.ambient_shot_noise:
            incident = incident + ambient
        denom = denom + shot_noise_var(incident, noise.receiver_bandwidth, noise.electron_charge)
    return denom


def sinr_linear(budget: LinkBudget, noise: NoiseModel) -> float:
    signal = budget.signal_photocurrent
    if signal <= 0:
        raise DegenerateLinkError(
            f"Zero signal photocurrent for user {budget.user_id} "
            f"(AP {budget.ap}, branch {budget.branch})"
        )
    interferers = np.asarray(budget.interference_photocurrents, dtype=np.float64)
    denom = noise_denominator(
        signal, float(interferers.sum()), float(np.square(interferers).sum()),
        budget.ambient_photocurrent, noise,
    )
    return signal * signal / denom


def sinr(budget: LinkBudget, noise: NoiseModel) -> float:
    """SINR (dB). 신호가 0이면 DegenerateLinkError."""
    value = 10.0 * math.log10(sinr_linear(budget, noise))
    budget.sinr_db = value
    return value


def linear_to_db(value: ArrayLike, floor_db: Optional[float] = None) -> ArrayLike:
    """10·log10. floor_db가 주어지면 0 이하/작은 값은 floor_db로 고정."""
    arr = np.asarray(value, dtype=np.float64)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(arr)
    if floor_db is not None:
        out = np.maximum(out, floor_db)
    return float(out) if out.ndim == 0 else out


def ber_ook(sinr_lin: ArrayLike) -> ArrayLike:
    """OOK 비트 오류율 Q(√SINR), Q(x) = 0.5·erfc(x/√2)"""
    result = 0.5 * erfc(np.sqrt(sinr_lin) / math.sqrt(2.0))
    return float(result) if np.ndim(result) == 0 else result


def meets_threshold(sinr_db: float, threshold_db: float = OOK_THRESHOLD_DB) -> bool:
    return bool(sinr_db >= threshold_db)


def supported_rate(bw_channel: float, bw_receiver: float, configured_rate: float,
                   kappa: float = DEFAULT_KAPPA) -> float:
    """지원 전송률 = min(설정 전송률, kappa · min(채널 대역폭, 수신기 대역폭))"""
    if kappa <= 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    usable = min(bw_channel, bw_receiver)
    if math.isnan(usable):
        usable = 0.0
    return min(configured_rate, kappa * usable)


@dataclass(frozen=True)
class LinkClassification:
    """사용자 한 명 기준의 (AP, 파장) 방사 분류."""
    signal: Tuple[int, Hashable]
    interfering: Tuple[Tuple[int, Hashable], ...]
    illumination: Tuple[Tuple[int, Hashable], ...]


def check_exclusive(assignment: Mapping[int, Tuple[int, Hashable]]) -> None:
    """(AP, 파장) → 사용자 매핑이 단사인지 검사."""
    owners: Dict[Tuple[int, Hashable], int] = {}
    for user_id, pair in assignment.items():
        if pair in owners:
            raise AssignmentConflictError(
                f"Users {owners[pair]} and {user_id} share AP {pair[0]} / {pair[1]}"
            )
        owners[pair] = user_id


def classify_links(assignment: Mapping[int, Tuple[int, Hashable]], user_id: int,
                   ap_ids: Iterable[int], wavelengths: Iterable[Hashable]) -> LinkClassification:
    """
    사용자 user_id 가 받는 모든 방사를 신호 / 간섭 / 조명 전용으로 분류합니다.

    Args:
        assignment: user_id → (ap_id, wavelength)
        user_id: 대상 사용자
        ap_ids, wavelengths: 방에 있는 전체 AP / 파장

    Raises:
        AssignmentConflictError: 두 사용자가 같은 (AP, 파장)을 공유할 때
    """
    check_exclusive(assignment)
    if user_id not in assignment:
        raise KeyError(f"User {user_id} has no assignment")

    signal = assignment[user_id]
    _, wavelength = signal
    used = {pair for uid, pair in assignment.items() if uid != user_id}

    interfering = []
    illumination = []
    for ap in ap_ids:
        for w in wavelengths:
            pair = (ap, w)
            if pair == signal:
                continue
            if w == wavelength and pair in used:
                interfering.append(pair)
            else:
                illumination.append(pair)
    return LinkClassification(signal, tuple(interfering), tuple(illumination))
