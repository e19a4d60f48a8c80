"""Configuration settings for the secret-sharing rate toolkit."""
import os
from pathlib import Path
from dotenv import load_dotenv

# Base directory
BASE_DIR = Path(__file__).parent

# Load environment variables from .env file
env_path = BASE_DIR / ".env"
load_dotenv(dotenv_path=env_path)

# Package version embedded in every report
VERSION = "0.3.0"

# Channel-format plugins directory
CHANNELS_DIR = BASE_DIR / "channels"

# JSON Schema documents for channel and access-structure files
SCHEMAS_DIR = BASE_DIR / "schemas"

# Logs directory
LOGS_DIR = Path(os.getenv("SSS_LOGS_DIR", str(BASE_DIR / "logs")))

# Default output directory for reports when --out is a bare file name
REPORTS_DIR = Path(os.getenv("SSS_REPORTS_DIR", str(BASE_DIR / "reports")))

# Logging
LOG_LEVEL = os.getenv("SSS_LOG_LEVEL", "INFO").upper()
LOG_TO_FILE = os.getenv("SSS_LOG_TO_FILE", "false").lower() in ("1", "true", "yes")

# Monte Carlo trials per estimate
MONTE_CARLO_TRIALS = int(os.getenv("SSS_TRIALS", "10000"))

# Largest state space evaluated by exact enumeration
EXACT_ENUMERATION_LIMIT = int(os.getenv("SSS_EXACT_LIMIT", str(2 ** 20)))

# Largest classical joint (atoms) smoothed by LP / projected descent.
# Above it the unsmoothed value is used and the report is flagged.
SMOOTHING_ATOM_LIMIT = int(os.getenv("SSS_SMOOTHING_ATOMS", "4096"))

# Optimizer
OPTIMIZER_STARTS = int(os.getenv("SSS_OPTIMIZER_STARTS", "16"))
OPTIMIZER_WORKERS = int(os.getenv("SSS_OPTIMIZER_WORKERS", "4"))

# Hash-seed space: families larger than this are replaced by a sampled pool
SEED_POOL_LIMIT = int(os.getenv("SSS_SEED_POOL", "256"))

# Candidate encoders the compound source code is picked from
HASH_CANDIDATES = int(os.getenv("SSS_HASH_CANDIDATES", "4"))

# Largest syndrome alphabet swept exhaustively during encoder selection
SYNDROME_SWEEP_LIMIT = int(os.getenv("SSS_SYNDROME_SWEEP", "64"))

# Dense quantum operators are capped at this dimension
MAX_QUANTUM_DIM = 64

# Create necessary directories
LOGS_DIR.mkdir(parents=True, exist_ok=True)
REPORTS_DIR.mkdir(parents=True, exist_ok=True)
