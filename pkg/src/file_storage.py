"""
file_storage.py - 실행 결과 / 채널 캐시 파일 저장 모듈

디렉토리 구조:
    <out_dir>/                  # 실행 한 건의 출력 (--out)
    ├── channel.csv             # simulate: 링크별 DC 이득, 대역폭, 지연 확산
    ├── allocation.csv          # allocate: 사용자별 할당과 SINR
    ├── objective.txt
    ├── vs_table2.txt           # 내장 시나리오일 때 발표된 할당과 비교
    ├── fig3_bandwidth.csv      # report
    ├── fig4_sinr.csv
    ├── fig5_rate.csv
    ├── calibration.txt         # calibrate
    ├── scenario.json           # simulate 에 사용한 시나리오 (정규화 JSON)
    └── manifest.json           # 단계별 정보를 병합하는 단일 매니페스트

    <cache_dir>/
    └── <시나리오>.owcm          # 채널 행렬 캐시 ("OWCM" 헤더 + 추적 설정 + npz)
"""

import csv
import json
import logging
import math
import os
import re
import struct
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence

from errors import MissingInputError, OutputLockedError
from metrics import CACHE_FORMAT_VERSION, CacheEntry

logger = logging.getLogger("OWCSimulator")

CHANNEL_CSV = "channel.csv"
ALLOCATION_CSV = "allocation.csv"
OBJECTIVE_TXT = "objective.txt"
VS_TABLE2_TXT = "vs_table2.txt"
CALIBRATION_TXT = "calibration.txt"
FIG3_CSV = "fig3_bandwidth.csv"
FIG4_CSV = "fig4_sinr.csv"
FIG5_CSV = "fig5_rate.csv"
SCENARIO_JSON = "scenario.json"
MANIFEST_JSON = "manifest.json"

CACHE_MAGIC = b"OWCM"
_HEADER = struct.Struct("<4sI32sQ")


def format_value(value: Any) -> str:
    """로케일과 무관한 CSV 값 표기 (float 는 최단 왕복 표현, inf / nan)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        value = float(value)  # np.float64 의 repr 은 "np.float64(...)"
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if hasattr(value, "item"):  # numpy 스칼라
        return format_value(value.item())
    return str(value)


def sanitize_name(name: str) -> str:
    """파일명에 사용할 수 없는 문자 제거."""
    return re.sub(r'[<>:"/\\|?*]', '_', name).strip() or "scenario"


class RunStorage:
    """실행 출력 디렉토리 관리 클래스."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    @contextmanager
    def lock(self) -> Iterator[None]:
        """디렉토리 단일 진입 잠금 (.lock 파일, O_CREAT|O_EXCL)."""
        lock_path = self.out_dir / ".lock"
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise OutputLockedError(f"Output directory is in use by another run: {self.out_dir}") from None
        try:
            os.write(fd, str(os.getpid()).encode("ascii"))
            os.close(fd)
            yield
        finally:
            try:
                lock_path.unlink()
            except FileNotFoundError:
                pass

    # ==================== CSV / 텍스트 ====================

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        filepath = self.path(name)
        with open(filepath, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(v) for v in row])
        return filepath

    def read_csv(self, name: str) -> List[Dict[str, str]]:
        self.require([name])
        with open(self.path(name), "r", encoding="utf-8", newline="") as f:
            return list(csv.DictReader(f))

    def write_text(self, name: str, text: str) -> Path:
        filepath = self.path(name)
        filepath.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
        return filepath

    def read_text(self, name: str) -> str:
        self.require([name])
        return self.path(name).read_text(encoding="utf-8")

    def require(self, names: Iterable[str]) -> None:
        """필요한 입력 파일이 모두 있는지 확인."""
        missing = [n for n in names if not self.path(n).is_file()]
        if missing:
            raise MissingInputError(missing)

    # ==================== Manifest ====================

    def read_manifest(self) -> Dict[str, Any]:
        filepath = self.path(MANIFEST_JSON)
        if not filepath.exists():
            return {}
        try:
            return json.loads(filepath.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            logger.warning(f"Corrupt manifest replaced: {filepath}")
            return {}

    def update_manifest(self, stage: str, data: Dict[str, Any], **top_level: Any) -> Path:
        """
        manifest.json 에 단계 정보를 병합합니다 (디렉토리당 매니페스트 1개).

        Args:
            stage: "simulate", "allocate", "report", "calibrate"
            data: 단계별 정보 (설정, 소요 시간 등)
            top_level: 최상위 키 갱신 (tool_version, scenario_hash 등)
        """
        manifest = self.read_manifest()
        manifest.update(top_level)
        manifest.setdefault("stages", {})[stage] = data
        filepath = self.path(MANIFEST_JSON)
        tmp = filepath.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, filepath)
        return filepath


class ChannelCache:
    """
    채널 행렬 캐시.

    파일 형식: magic "OWCM" | u32 버전 | 32 byte 입력 해시 | u64 길이 | CacheEntry 본문.
    쓰기는 임시 파일 + os.replace 로 원자적이며, 동시에 한 프로세스만 쓰도록
    <파일>.lock 을 사용합니다. 캐시 디렉토리는 언제 지워도 안전합니다.
    """

    def __init__(self, cache_dir: Path):
        self.cache_dir = Path(cache_dir)

    def path_for(self, name: str) -> Path:
        return self.cache_dir / f"{sanitize_name(name)}.owcm"

    def load(self, name: str, key: bytes) -> Optional[CacheEntry]:
        """해시가 일치하는 캐시 항목이 있으면 반환, 없거나 읽기 실패면 None."""
        filepath = self.path_for(name)
        if not filepath.exists():
            return None
        try:
            raw = filepath.read_bytes()
            if len(raw) < _HEADER.size:
                raise ValueError("truncated header")
            magic, version, stored_key, length = _HEADER.unpack_from(raw)
            if magic != CACHE_MAGIC:
                raise ValueError("bad magic")
            if version != CACHE_FORMAT_VERSION or stored_key != key:
                logger.debug(f"Cache miss for '{name}' (version/hash changed)")
                return None
            body = raw[_HEADER.size:]
            if len(body) != length:
                raise ValueError("length mismatch")
            return CacheEntry.from_body(stored_key, body, version)
        except (OSError, ValueError, KeyError) as e:
            logger.warning(f"Ignoring unreadable cache file {filepath}: {e}")
            return None

    def store(self, name: str, entry: CacheEntry) -> Optional[Path]:
        """캐시 저장. 다른 프로세스가 쓰는 중이거나 실패하면 경고 후 None."""
        filepath = self.path_for(name)
        lock_path = filepath.with_suffix(".owcm.lock")
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            logger.warning(f"Cache file {filepath} is being written by another process; skipping")
            return None
        except OSError as e:
            logger.warning(f"Could not write cache {filepath}: {e}")
            return None

        tmp = filepath.with_suffix(f".owcm.{os.getpid()}.tmp")
        try:
            os.close(fd)
            payload = entry.body()
            with open(tmp, "wb") as f:
                f.write(_HEADER.pack(CACHE_MAGIC, entry.version, entry.key, len(payload)))
                f.write(payload)
            os.replace(tmp, filepath)
            logger.debug(f"Cached channel matrix: {filepath} ({len(payload):,}B)")
            return filepath
        except OSError as e:
            logger.warning(f"Could not write cache {filepath}: {e}")
            return None
        finally:
            for leftover in (tmp, lock_path):
                try:
                    leftover.unlink()
                except FileNotFoundError:
                    pass

    def clear(self) -> int:
        """캐시 파일 삭제. 삭제한 파일 수 반환."""
        removed = 0
        if self.cache_dir.exists():
            for filepath in self.cache_dir.glob("*.owcm"):
                filepath.unlink()
                removed += 1
        return removed


# 싱글톤 인스턴스
_cache_instance: Optional[ChannelCache] = None


def get_cache(cache_dir: Optional[Path] = None) -> ChannelCache:
    """ChannelCache 싱글톤 인스턴스 반환 (다른 디렉토리를 주면 교체)."""
    global _cache_instance
    if cache_dir is not None and (_cache_instance is None or _cache_instance.cache_dir != Path(cache_dir)):
        _cache_instance = ChannelCache(Path(cache_dir))
    elif _cache_instance is None:
        from full_config import config
        _cache_instance = ChannelCache(config.cache_dir)
    return _cache_instance
