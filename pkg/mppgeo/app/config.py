"""
Runtime configuration for mppgeo
Process-level defaults from the environment (optionally a .env file)
"""

import os
import logging

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

load_dotenv()

LOG_LEVEL = os.getenv("MPPGEO_LOG_LEVEL", "INFO").upper()

# Parallel workers for sweeps and per-datum shooting
N_JOBS = int(os.getenv("MPPGEO_N_JOBS", "1"))

# Smallest admissible singular value of a frame
FRAME_TOL = float(os.getenv("MPPGEO_FRAME_TOL", "1e-12"))

# Minimal admissible separation of landmarks
LANDMARK_SEPARATION_TOL = float(os.getenv("MPPGEO_LANDMARK_TOL", "1e-12"))

OUTPUT_DIR = os.getenv("MPPGEO_OUTPUT_DIR", "output")

# Shooting defaults
SHOOTING_RESTARTS = int(os.getenv("MPPGEO_RESTARTS", "8"))
SHOOTING_TOL = 1e-8
FD_STEP = 1e-6
LM_DAMPING = 1e-3


def configure_logging(level: str = LOG_LEVEL):
    """Configure root logging once, for the CLI entry point"""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    logger.debug(f"Logging configured at {level}")
