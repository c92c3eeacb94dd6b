"""실행 출력 / 채널 캐시 저장 테스트."""
import json
import math

import numpy as np
import pytest

import file_storage
from errors import MissingInputError, OutputLockedError
from file_storage import (
    CHANNEL_CSV,
    MANIFEST_JSON,
    ChannelCache,
    RunStorage,
    format_value,
    get_cache,
    sanitize_name,
)
from metrics import CACHE_FORMAT_VERSION, CacheEntry
from raytrace import BounceConfig
from conftest import gains_matrix

KEY = bytes(range(32))
CFG = BounceConfig(max_order=1, elem_size_bounce1=0.5, elem_size_bounce2=1.0)


def _entry():
    return CacheEntry(KEY, CFG, gains_matrix([[[1e-6, 2e-6]]]))


class TestFormatValue:
    @pytest.mark.parametrize("value, expected", [
        (True, "true"),
        (False, "false"),
        (0.1, "0.1"),
        (math.inf, "inf"),
        (-math.inf, "-inf"),
        (math.nan, "nan"),
        (np.float64(2.5e9), "2500000000.0"),
        (np.int64(7), "7"),
        ("red", "red"),
    ])
    def test_values(self, value, expected):
        assert format_value(value) == expected

    def test_float_round_trips(self):
        value = 1 / 3
        assert float(format_value(value)) == value


def test_sanitize_name():
    assert sanitize_name('a/b:c*') == "a_b_c_"
    assert sanitize_name("  ") == "scenario"


class TestRunStorage:
    def test_csv_round_trip(self, tmp_path):
        storage = RunStorage(tmp_path / "run")
        storage.write_csv(CHANNEL_CSV, ("user", "gain"), [(1, 1e-7), (2, math.inf)])
        assert storage.path(CHANNEL_CSV).read_text(encoding="utf-8") == "user,gain\n1,1e-07\n2,inf\n"
        assert storage.read_csv(CHANNEL_CSV) == [{"user": "1", "gain": "1e-07"}, {"user": "2", "gain": "inf"}]

    def test_text_gets_trailing_newline(self, tmp_path):
        storage = RunStorage(tmp_path)
        storage.write_text("objective.txt", "value: 1.0")
        assert storage.read_text("objective.txt") == "value: 1.0\n"

    def test_require_lists_every_missing_file(self, tmp_path):
        storage = RunStorage(tmp_path)
        storage.write_text("a.txt", "x")
        with pytest.raises(MissingInputError) as exc:
            storage.require(["a.txt", "b.csv", "c.csv"])
        assert exc.value.missing == ["b.csv", "c.csv"]

    def test_lock_is_exclusive_and_released(self, tmp_path):
        storage = RunStorage(tmp_path)
        with storage.lock():
            assert (tmp_path / ".lock").exists()
            with pytest.raises(OutputLockedError):
                with RunStorage(tmp_path).lock():
                    pass
        assert not (tmp_path / ".lock").exists()

    def test_lock_released_on_error(self, tmp_path):
        storage = RunStorage(tmp_path)
        with pytest.raises(RuntimeError):
            with storage.lock():
                raise RuntimeError("boom")
        with storage.lock():
            pass

    def test_manifest_merges_stages(self, tmp_path):
        storage = RunStorage(tmp_path)
        storage.update_manifest("simulate", {"bounces": 2}, tool_version="1.0.0")
        storage.update_manifest("allocate", {"solver": "exact"})
        manifest = json.loads(storage.path(MANIFEST_JSON).read_text(encoding="utf-8"))
        assert manifest["tool_version"] == "1.0.0"
        assert set(manifest["stages"]) == {"simulate", "allocate"}
        assert list(tmp_path.glob("*.json")) == [storage.path(MANIFEST_JSON)]

    def test_corrupt_manifest_is_replaced(self, tmp_path, mocker):
        storage = RunStorage(tmp_path)
        storage.path(MANIFEST_JSON).write_text("{oops", encoding="utf-8")
        warn = mocker.patch.object(file_storage.logger, "warning")
        assert storage.read_manifest() == {}
        warn.assert_called_once()


class TestChannelCache:
    def test_store_and_load(self, tmp_path):
        cache = ChannelCache(tmp_path / "cache")
        matrix = gains_matrix([[[1e-6, 2e-6]]])
        path = cache.store("회의실/A", CacheEntry(KEY, CFG, matrix))
        assert path == cache.path_for("회의실/A")
        assert path.name == "회의실_A.owcm"
        assert path.read_bytes()[:4] == b"OWCM"
        entry = cache.load("회의실/A", KEY)
        assert entry.matrix.identical(matrix)
        assert (entry.key, entry.cfg, entry.version) == (KEY, CFG, CACHE_FORMAT_VERSION)
        assert not list(cache.cache_dir.glob("*.lock"))
        assert not list(cache.cache_dir.glob("*.tmp"))

    def test_missing_and_key_mismatch(self, tmp_path):
        cache = ChannelCache(tmp_path)
        assert cache.load("none", KEY) is None
        cache.store("s", _entry())
        assert cache.load("s", bytes(32)) is None

    def test_truncated_file_warns(self, tmp_path, mocker):
        cache = ChannelCache(tmp_path)
        path = cache.store("s", _entry())
        path.write_bytes(path.read_bytes()[:-10])
        warn = mocker.patch.object(file_storage.logger, "warning")
        assert cache.load("s", KEY) is None
        assert "length mismatch" in warn.call_args.args[0]

    def test_damaged_trace_config_warns(self, tmp_path, mocker):
        cache = ChannelCache(tmp_path)
        path = cache.store("s", _entry())
        raw = bytearray(path.read_bytes())
        header = 4 + 4 + 32 + 8
        cfg_len = int.from_bytes(raw[header:header + 4], "little")
        raw[header + 4:header + 4 + cfg_len] = b"x" * cfg_len
        path.write_bytes(bytes(raw))
        warn = mocker.patch.object(file_storage.logger, "warning")
        assert cache.load("s", KEY) is None
        assert "bad trace config" in warn.call_args.args[0]

    def test_concurrent_writer_is_skipped(self, tmp_path, mocker):
        cache = ChannelCache(tmp_path)
        (tmp_path / "s.owcm.lock").write_text("123", encoding="ascii")
        warn = mocker.patch.object(file_storage.logger, "warning")
        assert cache.store("s", _entry()) is None
        assert not cache.path_for("s").exists()
        warn.assert_called_once()

    def test_clear(self, tmp_path):
        cache = ChannelCache(tmp_path)
        cache.store("a", _entry())
        cache.store("b", _entry())
        assert cache.clear() == 2
        assert cache.load("a", KEY) is None

    def test_get_cache_singleton(self, tmp_path, isolated_config):
        assert get_cache() is get_cache()
        assert get_cache().cache_dir == isolated_config.cache_dir
        other = get_cache(tmp_path / "other")
        assert other.cache_dir == tmp_path / "other"
        assert get_cache() is other
