"""Database connection and session management."""
from pathlib import Path
from datetime import datetime
from typing import Optional, List, Dict, Any, Iterable
from contextlib import contextmanager

from sqlalchemy import create_engine, func, event
from sqlalchemy.orm import sessionmaker

from .models import Base, Run, RunUser


class Database:
    """SQLite 실행 이력 데이터베이스 관리 클래스."""

    def __init__(self, db_path: Optional[str] = None):
        if db_path is None:
            # 기본 경로: <data_dir>/db/run_history.db
            from full_config import config
            db_dir = config.data_dir / "db"
            db_dir.mkdir(parents=True, exist_ok=True)
            db_path = str(db_dir / "run_history.db")
        else:
            Path(db_path).parent.mkdir(parents=True, exist_ok=True)

        self.db_path = db_path

        # SQLite 최적화 설정
        self.engine = create_engine(
            f"sqlite:///{db_path}",
            echo=False,
            connect_args={
                "check_same_thread": False,
                "timeout": 30
            }
        )

        # WAL 모드
        @event.listens_for(self.engine, "connect")
        def set_sqlite_pragma(dbapi_connection, connection_record):
            cursor = dbapi_connection.cursor()
            cursor.execute("PRAGMA journal_mode=WAL")
            cursor.execute("PRAGMA synchronous=NORMAL")
            cursor.close()

        self.SessionLocal = sessionmaker(bind=self.engine, expire_on_commit=False)

        # 테이블 생성
        Base.metadata.create_all(self.engine)

    @contextmanager
    def get_session(self):
        """세션 컨텍스트 매니저."""
        session = self.SessionLocal()
        try:
            yield session
            session.commit()
        except Exception:
            session.rollback()
            raise
        finally:
            session.close()

    # ==================== Run 관련 ====================

    def start_run(self, command: str, scenario_name: str, **fields: Any) -> int:
        """실행 시작 기록. 생성된 run id 반환."""
        with self.get_session() as session:
            run = Run(command=command, scenario_name=scenario_name, status='running', **fields)
            session.add(run)
            session.flush()
            return run.id

    def finish_run(self, run_id: int, status: str, error_message: Optional[str] = None,
                   **fields: Any) -> None:
        """실행 종료 기록 (status: 'success' / 'failed')."""
        with self.get_session() as session:
            run = session.query(Run).filter(Run.id == run_id).first()
            if not run:
                return
            run.status = status
            run.error_message = error_message
            run.finished_at = datetime.now()
            for key, value in fields.items():
                setattr(run, key, value)

    def add_run_users(self, run_id: int, rows: Iterable[Dict[str, Any]]) -> int:
        """사용자별 할당 결과 저장. 저장한 행 수 반환."""
        with self.get_session() as session:
            count = 0
            for row in rows:
                session.add(RunUser(run_id=run_id, **row))
                count += 1
            return count

    def get_recent_runs(self, limit: int = 20) -> List[Run]:
        """최근 실행 목록 (최신순)."""
        with self.get_session() as session:
            return session.query(Run).order_by(Run.id.desc()).limit(limit).all()

    def get_run_users(self, run_id: int) -> List[RunUser]:
        with self.get_session() as session:
            return (
                session.query(RunUser)
                .filter(RunUser.run_id == run_id)
                .order_by(RunUser.user_id)
                .all()
            )

    # ==================== 통계 관련 ====================

    def get_stats(self) -> Dict[str, Any]:
        """실행 이력 통계."""
        with self.get_session() as session:
            total = session.query(func.count(Run.id)).scalar()
            failed = session.query(func.count(Run.id)).filter(Run.status == 'failed').scalar()
            per_scenario = dict(
                session.query(Run.scenario_name, func.count(Run.id))
                .group_by(Run.scenario_name)
                .all()
            )
            return {
                'total_runs': total,
                'failed_runs': failed,
                'runs_per_scenario': per_scenario,
            }


# 싱글톤 인스턴스
_db_instance: Optional[Database] = None
_db_path: Optional[str] = None


def get_db(db_path: Optional[str] = None, force_new: bool = False) -> Database:
    """데이터베이스 인스턴스 반환."""
    global _db_instance, _db_path

    # 새 인스턴스 강제 생성
    if force_new:
        _db_instance = Database(db_path)
        _db_path = db_path
        return _db_instance

    # 경로가 변경되었으면 새 인스턴스 생성
    if db_path is not None and db_path != _db_path:
        _db_instance = Database(db_path)
        _db_path = db_path
        return _db_instance

    # 기존 인스턴스 재사용
    if _db_instance is None:
        _db_instance = Database(db_path)
        _db_path = db_path

    return _db_instance


def reset_db():
    """데이터베이스 인스턴스 리셋."""
    global _db_instance, _db_path
    if _db_instance is not None:
        _db_instance.engine.dispose()
    _db_instance = None
    _db_path = None
