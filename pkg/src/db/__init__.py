"""Database package for simulation run history."""
from .database import Database, get_db, reset_db
from .models import Base, Run, RunUser

__all__ = ['Database', 'get_db', 'reset_db', 'Base', 'Run', 'RunUser']
