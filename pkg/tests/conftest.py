"""공용 테스트 픽스처."""
import os
import sys
import tempfile
from pathlib import Path

# src 를 Python 경로에 추가
SRC_DIR = Path(__file__).resolve().parent.parent / "src"
sys.path.insert(0, str(SRC_DIR))

# 로그 파일이 저장소 logs/ 에 쌓이지 않도록 설정 로드 전에 지정
os.environ.setdefault("OWC_LOG_DIR", tempfile.mkdtemp(prefix="owc-logs-"))

import numpy as np  # noqa: E402
import pytest  # noqa: E402

import file_storage  # noqa: E402
from db import reset_db  # noqa: E402
from full_config import config  # noqa: E402
from linkbudget import NoiseModel  # noqa: E402
from metrics import ChannelMatrix  # noqa: E402
from raytrace import BounceConfig  # noqa: E402
from scene import Scenario, UserPlacement, Vec3, Wavelength  # noqa: E402
from scene.models import default_units  # noqa: E402


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """실행 이력 DB / 채널 캐시를 테스트별 임시 디렉토리로 격리."""
    monkeypatch.setattr(config, "data_dir", tmp_path / "data")
    monkeypatch.setattr(config, "cache_dir", tmp_path / "cache")
    monkeypatch.setattr(config, "resolution", config.resolution)
    monkeypatch.setattr(file_storage, "_cache_instance", None)
    reset_db()
    yield config
    reset_db()


@pytest.fixture
def coarse_cfg():
    """빠른 테스트용 거친 반사 요소 (50 cm / 100 cm)."""
    return BounceConfig(max_order=2, elem_size_bounce1=0.5, elem_size_bounce2=1.0)


@pytest.fixture
def two_user_scenario():
    users = (
        UserPlacement(user_id=1, position=Vec3(2.5, 1.0, 1.0)),
        UserPlacement(user_id=2, position=Vec3(1.5, 4.5, 1.0)),
    )
    return Scenario(name="two_users", units=default_units(), users=users)


@pytest.fixture
def test_noise():
    """광전류 ~1e-6 A 에서 SINR 이 수십 dB 가 되는 잡음 모델."""
    return NoiseModel(noise_density=1e-12, receiver_bandwidth=1e9)


def gains_matrix(gains, wavelengths=(Wavelength.RED, Wavelength.YELLOW)) -> ChannelMatrix:
    """DC 이득 (U, B, A) 로 단위 출력 / 단위 감도 채널 행렬 생성."""
    gains = np.asarray(gains, dtype=np.float64)
    n_a = gains.shape[2]
    return ChannelMatrix.from_gains(
        gains,
        unit_power=np.ones((n_a, len(wavelengths))),
        responsivity=np.ones(len(wavelengths)),
        wavelengths=wavelengths,
    )
