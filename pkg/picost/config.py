"""Configuration management for the Picost workbench"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Base directories
BASE_DIR = Path(__file__).parent.parent
LOGS_DIR = Path(os.getenv("PICOST_LOGS_DIR", str(BASE_DIR / "logs")))
CORPUS_DIR = Path(__file__).parent / "corpus"

# Ensure directories exist
LOGS_DIR.mkdir(parents=True, exist_ok=True)

# Logging Configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FORMAT = '%(asctime)s.%(msecs)03d | %(levelname)s | %(funcName)s | %(message)s'
LOG_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

# Exploration bounds
TAU_DEPTH = int(os.getenv("PICOST_TAU_DEPTH", "64"))
WEIGHT_CAP = int(os.getenv("PICOST_WEIGHT_CAP", "512"))
STATE_CAP = int(os.getenv("PICOST_STATE_CAP", "20000"))
CREDIT_CAP = int(os.getenv("PICOST_CREDIT_CAP", "32"))

# Execution defaults
BARB_DEPTH = int(os.getenv("PICOST_BARB_DEPTH", "16"))
RUN_STEPS = int(os.getenv("PICOST_RUN_STEPS", "200"))

# Witness verification: pairs reached beyond the listed instances that are checked too
WITNESS_CLOSURE = int(os.getenv("PICOST_WITNESS_CLOSURE", "200"))


def get_log_file(name: str) -> Path:
    """Get log file path for a specific component"""
    return LOGS_DIR / f"{name}.log"


def get_corpus_file(name: str) -> Path:
    """Get a shipped corpus file (programs, environments, witness families)"""
    path = CORPUS_DIR / name
    if not path.exists():
        raise FileNotFoundError(f"No corpus file named {name} in {CORPUS_DIR}")
    return path
