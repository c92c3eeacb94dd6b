"""SQLAlchemy models for simulation run history."""
from datetime import datetime
from sqlalchemy import Column, Integer, String, Text, DateTime, Float, Boolean, ForeignKey
from sqlalchemy.orm import declarative_base, relationship

Base = declarative_base()


class Run(Base):
    """실행 이력 테이블."""
    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True, autoincrement=True)
    command = Column(String(32), nullable=False)  # 'simulate', 'allocate', 'calibrate'
    scenario_name = Column(String(255), nullable=False)
    scenario_hash = Column(String(64))
    resolution = Column(String(32))
    bounces = Column(Integer)
    objective = Column(String(32))
    solver = Column(String(32))
    out_dir = Column(String(512))
    objective_value = Column(Float)
    users_below_threshold = Column(Integer)
    status = Column(String(32), nullable=False, default='running')  # 'success', 'failed'
    error_message = Column(Text)
    started_at = Column(DateTime, default=datetime.now)
    finished_at = Column(DateTime)

    # Relationships
    users = relationship("RunUser", back_populates="run", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<Run(id={self.id}, command='{self.command}', scenario='{self.scenario_name}')>"


class RunUser(Base):
    """실행별 사용자 할당 결과 테이블."""
    __tablename__ = 'run_users'

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey('runs.id'), nullable=False)
    user_id = Column(Integer, nullable=False)
    ap_id = Column(Integer)
    wavelength = Column(String(16))
    branch = Column(Integer)
    sinr_db = Column(Float)
    meets_threshold = Column(Boolean)
    supported_rate_bps = Column(Float)

    # Relationships
    run = relationship("Run", back_populates="users")

    def __repr__(self):
        return f"<RunUser(run_id={self.run_id}, user={self.user_id}, ap={self.ap_id})>"
