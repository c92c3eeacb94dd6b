"""
metrics.py - 채널 지표 / 채널 행렬 모듈

임펄스 응답에서 DC 이득, 주파수 응답, 3-dB 대역폭, RMS 지연 확산을 계산하고
시나리오 전체의 (사용자 x 브랜치 x AP) 채널 행렬을 만들어 캐시에 저장합니다.

3-dB 대역폭 규약:
- optical (기본): |H(f)|/|H(0)| ≤ 1/√2 가 되는 최소 주파수
- electrical: |H(f)|/|H(0)| ≤ 1/2 가 되는 최소 주파수
10 MHz 간격으로 50 GHz 까지 훑은 뒤 1 MHz 폭까지 이분 탐색합니다.
"""

import hashlib
import io
import json
import logging
import math
import struct
import time
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from errors import ZeroChannelError
from raytrace import BounceConfig, ImpulseResponse, ProgressCallback, trace_scenario
from scene.models import Scenario, Wavelength
from scene.parser import canonical_json

if TYPE_CHECKING:
    from file_storage import ChannelCache

logger = logging.getLogger("OWCSimulator")

CACHE_FORMAT_VERSION = 2
BW_CONVENTIONS = {"optical": 1.0 / math.sqrt(2.0), "electrical": 0.5}
BW_SCAN_STEP = 10e6
BW_SCAN_MAX = 50e9
BW_RESOLUTION = 1e6
_SCAN_CHUNK = 64
_CFG_LENGTH = struct.Struct("<I")


def dc_gain(ir: ImpulseResponse) -> float:
    """H(0) = 모든 구간 전력의 합."""
    return float(ir.bins.sum())


def _nonzero(ir: ImpulseResponse) -> Tuple[np.ndarray, np.ndarray]:
    idx = np.flatnonzero(ir.bins)
    return ir.bins[idx], ir.t0 + (idx + 0.5) * ir.bin_width


def frequency_response(ir: ImpulseResponse, f):
    """H(f) = Σ p_k·exp(−j2πf t_k) (구간 중심 시각 기준 직접 합)."""
    p, t = _nonzero(ir)
    freqs = np.atleast_1d(np.asarray(f, dtype=np.float64))
    h = np.exp(-2j * np.pi * np.outer(freqs, t)) @ p if p.size else np.zeros(freqs.shape, dtype=complex)
    return complex(h[0]) if np.ndim(f) == 0 else h


def _ratio(p: np.ndarray, t: np.ndarray, h0: float, freqs: np.ndarray) -> np.ndarray:
    return np.abs(np.exp(-2j * np.pi * np.outer(freqs, t)) @ p) / h0


def bandwidth_3db(ir: ImpulseResponse, convention: str = "optical") -> float:
    """
    3-dB 채널 대역폭 (Hz).

    Returns:
        교차 주파수 (1 MHz 분해능의 구간 중점). 50 GHz 까지 교차가 없으면 math.inf

    Raises:
        ZeroChannelError: DC 이득이 0
    """
    if convention not in BW_CONVENTIONS:
        raise ValueError(f"Unknown bandwidth convention: {convention}. Available: {list(BW_CONVENTIONS)}")
    h0 = dc_gain(ir)
    if h0 <= 0:
        raise ZeroChannelError("bandwidth_3db requires a channel with non-zero DC gain")
    threshold = BW_CONVENTIONS[convention]
    p, t = _nonzero(ir)
    # 시간 원점을 빼도 |H(f)| 는 변하지 않음
    t = t - t[0]

    steps = int(round(BW_SCAN_MAX / BW_SCAN_STEP))
    lo = 0.0
    hi = None
    for start in range(1, steps + 1, _SCAN_CHUNK):
        grid = np.arange(start, min(start + _SCAN_CHUNK, steps + 1)) * BW_SCAN_STEP
        below = np.flatnonzero(_ratio(p, t, h0, grid) <= threshold)
        if below.size:
            hi = float(grid[below[0]])
            lo = hi - BW_SCAN_STEP
            break
    if hi is None:
        return math.inf

    while hi - lo > BW_RESOLUTION:
        mid = 0.5 * (lo + hi)
        if _ratio(p, t, h0, np.array([mid]))[0] <= threshold:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def rms_delay_spread(ir: ImpulseResponse) -> float:
    """RMS 지연 확산 √(Σp(t−τ̄)²/Σp) (s)."""
    p, t = _nonzero(ir)
    total = float(p.sum())
    if total <= 0:
        raise ZeroChannelError("rms_delay_spread requires a channel with non-zero DC gain")
    mean = float(p @ t) / total
    return math.sqrt(max(float(p @ np.square(t - mean)) / total, 0.0))


@dataclass(eq=False)
class ChannelMatrix:
    """
    시나리오 전체 채널 행렬.

    Attributes:
        user_ids: (U,) 사용자 ID
        ap_ids: (A,) AP ID
        wavelengths: 파장 순서 (R, Y, G, B)
        unit_power: (A, W) AP 파장별 광출력 (W)
        responsivity: (W,) 수광 감도 (A/W)
        dc_gain, bw_3db, delay_spread: (U, 4, A). 이득 0 인 링크는 NaN
        irs: irs[u][b][a] 임펄스 응답
        bw_convention: 대역폭 규약
    """
    user_ids: np.ndarray
    ap_ids: np.ndarray
    wavelengths: Tuple[Wavelength, ...]
    unit_power: np.ndarray
    responsivity: np.ndarray
    dc_gain: np.ndarray
    bw_3db: np.ndarray
    delay_spread: np.ndarray
    irs: List[List[List[ImpulseResponse]]]
    bw_convention: str = "optical"

    @property
    def shape(self) -> Tuple[int, int, int]:
        return tuple(self.dc_gain.shape)  # type: ignore[return-value]

    @property
    def num_users(self) -> int:
        return int(self.dc_gain.shape[0])

    @property
    def num_branches(self) -> int:
        return int(self.dc_gain.shape[1])

    @property
    def num_aps(self) -> int:
        return int(self.dc_gain.shape[2])

    @classmethod
    def from_gains(cls, dc_gain: np.ndarray, unit_power: np.ndarray, responsivity: np.ndarray,
                   wavelengths: Sequence[Wavelength], user_ids: Optional[Sequence[int]] = None,
                   ap_ids: Optional[Sequence[int]] = None, bin_width: float = 1e-11) -> "ChannelMatrix":
        """DC 이득 (U, B, A)만으로 만든 행렬 (링크마다 단일 임펄스)."""
        gain = np.asarray(dc_gain, dtype=np.float64)
        n_u, n_b, n_a = gain.shape
        irs = [[[ImpulseResponse(bin_width, 0.0, np.array([gain[u, b, a]]))
                 for a in range(n_a)] for b in range(n_b)] for u in range(n_u)]
        positive = gain > 0
        return cls(
            user_ids=np.asarray(user_ids if user_ids is not None else range(1, n_u + 1), dtype=np.int64),
            ap_ids=np.asarray(ap_ids if ap_ids is not None else range(1, n_a + 1), dtype=np.int64),
            wavelengths=tuple(wavelengths),
            unit_power=np.asarray(unit_power, dtype=np.float64).reshape(n_a, len(wavelengths)),
            responsivity=np.asarray(responsivity, dtype=np.float64),
            dc_gain=gain,
            bw_3db=np.where(positive, math.inf, np.nan),
            delay_spread=np.where(positive, 0.0, np.nan),
            irs=irs,
        )

    def photocurrents(self) -> np.ndarray:
        """C[u, b, a, w] = R_w · P_{a,w} · H[u, b, a] (A)."""
        return (
            self.dc_gain[:, :, :, None]
            * self.unit_power[None, None, :, :]
            * self.responsivity[None, None, None, :]
        )

    def to_bytes(self) -> bytes:
        """npz 직렬화 (pickle 미사용)."""
        flat = [ir for per_user in self.irs for per_branch in per_user for ir in per_branch]
        lengths = np.array([ir.bins.shape[0] for ir in flat], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
        buf = io.BytesIO()
        np.savez(
            buf,
            user_ids=self.user_ids,
            ap_ids=self.ap_ids,
            wavelengths=np.array([w.value for w in self.wavelengths]),
            unit_power=self.unit_power,
            responsivity=self.responsivity,
            dc_gain=self.dc_gain,
            bw_3db=self.bw_3db,
            delay_spread=self.delay_spread,
            ir_offsets=offsets,
            ir_t0=np.array([ir.t0 for ir in flat], dtype=np.float64),
            ir_bin_width=np.array([ir.bin_width for ir in flat], dtype=np.float64),
            ir_bins=np.concatenate([ir.bins for ir in flat]) if flat else np.zeros(0),
            bw_convention=np.array(self.bw_convention),
        )
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, payload: bytes) -> "ChannelMatrix":
        with np.load(io.BytesIO(payload), allow_pickle=False) as data:
            dc = data["dc_gain"]
            offsets, t0s, widths, bins = data["ir_offsets"], data["ir_t0"], data["ir_bin_width"], data["ir_bins"]
            u_n, b_n, a_n = dc.shape
            irs, k = [], 0
            for _ in range(u_n):
                per_user = []
                for _ in range(b_n):
                    per_branch = []
                    for _ in range(a_n):
                        per_branch.append(ImpulseResponse(
                            float(widths[k]), float(t0s[k]), bins[offsets[k]:offsets[k + 1]].copy()
                        ))
                        k += 1
                    per_user.append(per_branch)
                irs.append(per_user)
            return cls(
                user_ids=data["user_ids"],
                ap_ids=data["ap_ids"],
                wavelengths=tuple(Wavelength(str(w)) for w in data["wavelengths"]),
                unit_power=data["unit_power"],
                responsivity=data["responsivity"],
                dc_gain=dc,
                bw_3db=data["bw_3db"],
                delay_spread=data["delay_spread"],
                irs=irs,
                bw_convention=str(data["bw_convention"]),
            )

    def identical(self, other: "ChannelMatrix") -> bool:
        return self.to_bytes() == other.to_bytes()


@dataclass(frozen=True)
class CacheEntry:
    """
    캐시 파일 한 개의 내용.

    key 는 cache_key() 값(시나리오, 추적 설정, 대역폭 규약, 형식 버전의 SHA-256)입니다.
    본문: u32 설정 JSON 길이 | 설정 JSON | 채널 행렬 npz.
    """
    key: bytes
    cfg: BounceConfig
    matrix: ChannelMatrix
    version: int = CACHE_FORMAT_VERSION

    def body(self) -> bytes:
        cfg_json = json.dumps(self.cfg.as_dict(), sort_keys=True).encode("utf-8")
        return _CFG_LENGTH.pack(len(cfg_json)) + cfg_json + self.matrix.to_bytes()

    @classmethod
    def from_body(cls, key: bytes, body: bytes, version: int = CACHE_FORMAT_VERSION) -> "CacheEntry":
        if len(body) < _CFG_LENGTH.size:
            raise ValueError("truncated body")
        (cfg_len,) = _CFG_LENGTH.unpack_from(body)
        start = _CFG_LENGTH.size
        try:
            cfg = BounceConfig(**json.loads(body[start:start + cfg_len].decode("utf-8")))
        except (ValueError, TypeError) as e:
            raise ValueError(f"bad trace config: {e}") from None
        return cls(key=key, cfg=cfg, matrix=ChannelMatrix.from_bytes(body[start + cfg_len:]), version=version)


def cache_key(scenario: Scenario, cfg: BounceConfig, bw_convention: str = "optical") -> bytes:
    """추적 결과에 영향을 주는 모든 입력의 SHA-256 (32 bytes)."""
    material = json.dumps(
        {
            "scenario": canonical_json(scenario),
            "cfg": cfg.as_dict(),
            "bw_convention": bw_convention,
            "version": CACHE_FORMAT_VERSION,
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(material.encode("utf-8")).digest()


def link_metrics(irs: Sequence[Sequence[Sequence[ImpulseResponse]]], convention: str
                 ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """링크별 (DC 이득, 대역폭, 지연 확산). 이득 0 링크의 대역폭/지연 확산은 NaN."""
    shape = (len(irs), len(irs[0]) if irs else 0, len(irs[0][0]) if irs and irs[0] else 0)
    gain = np.zeros(shape)
    bw = np.full(shape, np.nan)
    spread = np.full(shape, np.nan)
    for u, per_user in enumerate(irs):
        for b, per_branch in enumerate(per_user):
            for a, ir in enumerate(per_branch):
                gain[u, b, a] = dc_gain(ir)
                if gain[u, b, a] > 0:
                    bw[u, b, a] = bandwidth_3db(ir, convention)
                    spread[u, b, a] = rms_delay_spread(ir)
    return gain, bw, spread


def build_channel_matrix(scenario: Scenario, cfg: BounceConfig, cache: Optional["ChannelCache"] = None,
                         bw_convention: str = "optical", workers: Optional[int] = None,
                         progress: Optional[ProgressCallback] = None) -> ChannelMatrix:
    """
    시나리오의 모든 링크를 추적하여 채널 행렬을 만듭니다.

    캐시가 주어지면 같은 입력 해시의 파일을 먼저 찾고, 새로 계산한 결과를 저장합니다.
    캐시 읽기/쓰기 실패는 경고 후 재계산으로 대신합니다.
    """
    if bw_convention not in BW_CONVENTIONS:
        raise ValueError(f"Unknown bandwidth convention: {bw_convention}. Available: {list(BW_CONVENTIONS)}")
    key = cache_key(scenario, cfg, bw_convention)

    if cache is not None:
        entry = cache.load(scenario.name, key)
        if entry is not None:
            logger.info(f"Channel matrix for '{scenario.name}' served from cache")
            if progress:
                progress(100, "Loaded channel matrix from cache")
            return entry.matrix

    started = time.perf_counter()
    logger.info(
        f"Tracing '{scenario.name}': {len(scenario.users)} users x 4 branches x {len(scenario.units)} APs "
        f"(order {cfg.max_order}, elements {cfg.elem_size_bounce1}/{cfg.elem_size_bounce2} m)"
    )
    irs = trace_scenario(scenario, cfg, workers=workers, progress=progress)
    traced = time.perf_counter()
    gain, bw, spread = link_metrics(irs, bw_convention)
    logger.info(
        f"Trace finished in {traced - started:.1f}s, metrics in {time.perf_counter() - traced:.1f}s"
    )

    matrix = ChannelMatrix(
        user_ids=np.array(scenario.user_ids, dtype=np.int64),
        ap_ids=np.array(scenario.ap_ids, dtype=np.int64),
        wavelengths=scenario.wavelengths,
        unit_power=np.array([[unit.unit_power(band) for band in scenario.bands] for unit in scenario.units],
                            dtype=np.float64).reshape(len(scenario.units), len(scenario.bands)),
        responsivity=np.array([band.responsivity for band in scenario.bands], dtype=np.float64),
        dc_gain=gain,
        bw_3db=bw,
        delay_spread=spread,
        irs=irs,
        bw_convention=bw_convention,
    )
    if cache is not None:
        cache.store(scenario.name, CacheEntry(key=key, cfg=cfg, matrix=matrix))
    return matrix
