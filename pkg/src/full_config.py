"""
full_config.py - 시뮬레이터 설정 관리 모듈

이 모듈은 프로젝트 전역에서 사용되는 설정값들을 중앙에서 관리합니다.
- 해상도 프리셋 (paper: 5 cm / 20 cm, desk: 20 cm / 80 cm)
- 디렉터리 경로 설정 (캐시, 실행 이력 DB, 로그)
- 기본 대역폭 규약 / kappa / 작업 스레드 수
- 로깅 설정
"""

from typing import Dict, Optional
from dataclasses import dataclass
import os
import logging
from pathlib import Path

CURRENT_DIR = Path(__file__).resolve().parent
BASE_DIR = CURRENT_DIR.parent

# .env.local 파일 로드 (프로젝트 루트에서)
try:
    from dotenv import load_dotenv

    env_local = BASE_DIR / '.env.local'
    env_file = BASE_DIR / '.env'
    # 우선순위: .env.local > .env
    if env_local.exists():
        load_dotenv(env_local, override=True)
    elif env_file.exists():
        load_dotenv(env_file, override=True)
except ImportError:
    pass  # python-dotenv가 설치되지 않은 경우 환경변수만 사용

LOGGER_NAME = "OWCSimulator"
TOOL_VERSION = "1.0.0"


@dataclass(frozen=True)
class ResolutionPreset:
    """반사 요소 크기 프리셋."""
    name: str
    elem_size_bounce1: float
    elem_size_bounce2: float
    description: str = ""


RESOLUTION_PRESETS: Dict[str, ResolutionPreset] = {
    "paper": ResolutionPreset(
        name="paper",
        elem_size_bounce1=0.05,
        elem_size_bounce2=0.20,
        description="5 cm / 20 cm elements (full resolution)",
    ),
    "desk": ResolutionPreset(
        name="desk",
        elem_size_bounce1=0.20,
        elem_size_bounce2=0.80,
        description="20 cm / 80 cm elements (fast runs, CI)",
    ),
}

# 해상도별 회의 테이블 대역폭 허용 범위 (Hz)
BANDWIDTH_BRACKETS: Dict[str, tuple] = {
    "paper": (4.5e9, 13.0e9),
    "desk": (3.0e9, 15.0e9),
}


def _env_float(key: str, default: float) -> float:
    raw = os.getenv(key, "").strip()
    if not raw:
        return default
    try:
        return float(raw)
    except ValueError:
        logging.getLogger(LOGGER_NAME).warning(f"Ignoring invalid {key}={raw!r}")
        return default


class Config:
    """시뮬레이터 설정을 관리하는 싱글톤 클래스."""

    DEFAULT_RESOLUTION = "desk"
    DEFAULT_BW_CONVENTION = "optical"
    DEFAULT_KAPPA = 1.42

    def __init__(self):
        _raw = os.getenv("OWC_RESOLUTION")
        cand = str(_raw).strip() if _raw is not None else ""
        self.resolution: str = cand if cand in RESOLUTION_PRESETS else self.DEFAULT_RESOLUTION

        self.base_dir: Path = BASE_DIR
        self.data_dir: Path = Path(os.getenv("OWC_DATA_DIR") or self.base_dir / 'data')
        self.cache_dir: Path = Path(os.getenv("OWC_CACHE_DIR") or self.data_dir / 'cache')
        self.logs_dir: Path = Path(os.getenv("OWC_LOG_DIR") or self.base_dir / 'logs')

        workers = os.getenv("OWC_WORKERS", "").strip()
        self.workers: Optional[int] = int(workers) if workers.isdigit() and int(workers) > 0 else None
        self.kappa: float = _env_float("OWC_KAPPA", self.DEFAULT_KAPPA)
        bw = os.getenv("OWC_BW_CONVENTION", "").strip()
        self.bw_convention: str = bw if bw in ("optical", "electrical") else self.DEFAULT_BW_CONVENTION

        self._setup_logging()

    def set_resolution(self, resolution: str) -> None:
        if resolution not in RESOLUTION_PRESETS:
            raise ValueError(f"Unknown resolution: {resolution}. Available: {list(RESOLUTION_PRESETS.keys())}")
        self.resolution = resolution

    def get_resolution_info(self, resolution: Optional[str] = None) -> ResolutionPreset:
        resolution = resolution or self.resolution
        if resolution not in RESOLUTION_PRESETS:
            raise ValueError(f"Unknown resolution: {resolution}. Available: {list(RESOLUTION_PRESETS.keys())}")
        return RESOLUTION_PRESETS[resolution]

    def _setup_logging(self) -> None:
        logger = logging.getLogger(LOGGER_NAME)
        if getattr(logger, "_owc_configured", False):
            return  # 프로세스당 한 번만 핸들러 부착

        logger.setLevel(logging.DEBUG)
        logger.propagate = False

        # 콘솔 핸들러 (간단한 로그)
        console_handler = logging.StreamHandler()
        console_handler.setLevel(logging.WARNING)  # 콘솔에는 경고 이상만
        console_handler.setFormatter(logging.Formatter('%(message)s'))
        logger.addHandler(console_handler)

        try:
            self.logs_dir.mkdir(parents=True, exist_ok=True)
        except OSError:
            logger.warning(f"Log directory unavailable, console logging only: {self.logs_dir}")
            logger._owc_configured = True  # type: ignore[attr-defined]
            return

        # 로그 파일 경로 (날짜별)
        from datetime import datetime
        stamp = datetime.now().strftime('%Y%m%d')

        # 파일 핸들러 (상세 로그 - DEBUG 이상)
        file_handler = logging.FileHandler(self.logs_dir / f"simulator_{stamp}.log", encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        ))

        # INFO 전용 파일 핸들러 (진행 상황/소요 시간 확인용)
        info_handler = logging.FileHandler(self.logs_dir / f"info_{stamp}.log", encoding='utf-8')
        info_handler.setLevel(logging.INFO)
        info_handler.addFilter(lambda record: record.levelno == logging.INFO)
        info_handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        ))

        logger.addHandler(file_handler)
        logger.addHandler(info_handler)
        logger._owc_configured = True  # type: ignore[attr-defined]

    @property
    def logger(self) -> logging.Logger:
        return logging.getLogger(LOGGER_NAME)


config = Config()
