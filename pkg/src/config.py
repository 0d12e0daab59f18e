import os
from dotenv import load_dotenv

load_dotenv()


class Settings:
    DENSE_BUDGET: int = int(os.getenv("LAB_DENSE_BUDGET", "20000000"))
    NET_MAX_POINTS: int = int(os.getenv("LAB_NET_MAX_POINTS", "100000"))
    WORKERS: int = int(os.getenv("LAB_WORKERS", "1"))
    SEED: int = int(os.getenv("LAB_SEED", "0"))
    LOG_LEVEL: str = os.getenv("LAB_LOG_LEVEL", "INFO")
    LOG_FILE: str = os.getenv("LAB_LOG_FILE", "data/lab.log")
    OUTPUT_DIR: str = os.getenv("LAB_OUTPUT_DIR", "data/results")


settings = Settings()
