"""실행 이력 DB 테스트."""
from db import Database, Run, RunUser, get_db, reset_db


def _user(user_id, sinr_db=20.0):
    return {
        "user_id": user_id, "ap_id": 1, "wavelength": "red", "branch": 4,
        "sinr_db": sinr_db, "meets_threshold": sinr_db >= 15.6, "supported_rate_bps": 7.1e9,
    }


class TestDatabase:
    def test_default_path_under_data_dir(self, isolated_config):
        db = Database()
        assert db.db_path == str(isolated_config.data_dir / "db" / "run_history.db")

    def test_run_lifecycle(self, tmp_path):
        db = Database(str(tmp_path / "h.db"))
        run_id = db.start_run("allocate", "cocktail1", resolution="desk", bounces=2, solver="exact")
        db.finish_run(run_id, "success", objective="db_sum", objective_value=123.5, users_below_threshold=1)
        run = db.get_recent_runs()[0]
        assert isinstance(run, Run)
        assert (run.id, run.status, run.command, run.solver) == (run_id, "success", "allocate", "exact")
        assert run.objective_value == 123.5
        assert run.finished_at is not None
        assert run.error_message is None

    def test_failed_run(self, tmp_path):
        db = Database(str(tmp_path / "h.db"))
        run_id = db.start_run("simulate", "conference_table")
        db.finish_run(run_id, "failed", error_message="boom")
        run = db.get_recent_runs()[0]
        assert run.status == "failed"
        assert run.error_message == "boom"

    def test_finish_unknown_run_is_ignored(self, tmp_path):
        db = Database(str(tmp_path / "h.db"))
        db.finish_run(999, "success")
        assert db.get_recent_runs() == []

    def test_run_users(self, tmp_path):
        db = Database(str(tmp_path / "h.db"))
        run_id = db.start_run("allocate", "cocktail2")
        assert db.add_run_users(run_id, [_user(2, 10.0), _user(1)]) == 2
        users = db.get_run_users(run_id)
        assert [u.user_id for u in users] == [1, 2]
        assert all(isinstance(u, RunUser) for u in users)
        assert users[1].meets_threshold is False

    def test_recent_runs_newest_first(self, tmp_path):
        db = Database(str(tmp_path / "h.db"))
        ids = [db.start_run("simulate", f"s{i}") for i in range(5)]
        assert [r.id for r in db.get_recent_runs(limit=3)] == ids[::-1][:3]

    def test_stats(self, tmp_path):
        db = Database(str(tmp_path / "h.db"))
        for name, status in [("cocktail1", "success"), ("cocktail1", "failed"), ("cocktail2", "success")]:
            db.finish_run(db.start_run("allocate", name), status)
        assert db.get_stats() == {
            "total_runs": 3,
            "failed_runs": 1,
            "runs_per_scenario": {"cocktail1": 2, "cocktail2": 1},
        }


class TestSingleton:
    def test_reuse_and_reset(self, tmp_path):
        first = get_db()
        assert get_db() is first
        other = get_db(str(tmp_path / "other.db"))
        assert other is not first
        assert get_db(force_new=True) is not other
        reset_db()
        assert get_db() is not first
