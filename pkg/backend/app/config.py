import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel

load_dotenv()

BACKEND_DIR = Path(__file__).resolve().parent.parent


class Settings(BaseModel):
    log_level: str = "INFO"
    workers: int = os.cpu_count() or 1
    output_dir: str = "runs"
    scenes_dir: str = str(BACKEND_DIR / "scenes")
    chunk_size: int = 256
    seed: int = 0


def get_settings() -> Settings:
    """Read process settings from the environment (and a .env file if present)"""
    env = {
        "log_level": os.getenv("OFFWOS_LOG_LEVEL"),
        "workers": os.getenv("OFFWOS_WORKERS"),
        "output_dir": os.getenv("OFFWOS_OUTPUT_DIR"),
        "scenes_dir": os.getenv("OFFWOS_SCENES_DIR"),
        "chunk_size": os.getenv("OFFWOS_CHUNK_SIZE"),
        "seed": os.getenv("OFFWOS_SEED"),
    }
    return Settings(**{key: value for key, value in env.items() if value is not None})
