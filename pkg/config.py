import os
from datetime import datetime
from pathlib import Path

import numpy as np
from dotenv import load_dotenv

load_dotenv()


# Analysis defaults
DEFAULT_R_GRID = tuple(float(r) for r in np.round(np.arange(-5.0, 5.0 + 0.25, 0.5), 10))
DEFAULT_MIN_LEVEL = 4
DEFAULT_FILTER = "Db4"
DEFAULT_BOUNDARY = "periodic"
DEFAULT_EPS_FLOOR = 1e-12
DEFAULT_REVERSAL_AVERAGE = "fluctuation"
MIN_SERIES_LENGTH = 64
MIN_FIT_SCALES = 3

# Tolerance used when flagging h(r) increasing in r
H_MONOTONE_TOLERANCE = 0.02


# Network defaults
DEFAULT_BREAKPOINTS = (1.72, 3.36, 4.77, 5.45, 6.08)
DEFAULT_TOP_K = 6
DEFAULT_SWEEP_POINTS = 200


# Synthetic generators
CASCADE_MIN_LEVELS = 8
CASCADE_MAX_LEVELS = 24


# Workers
DEFAULT_WORKERS = int(os.getenv("WBMFDFA_WORKERS", os.cpu_count() or 1))


# Paths
PATH_TO_OUTPUT = Path(
    os.getenv("WBMFDFA_OUTPUT_DIR", Path(Path(__file__).parent, "data/output"))
)
PATH_TO_LOG_DIR = Path(
    os.getenv("WBMFDFA_LOG_DIR", Path(Path(__file__).parent, "data/logs"))
)
PATH_TO_LOGS = Path(
    PATH_TO_LOG_DIR,
    f"{datetime.now().strftime('%Y%m%d%H%M%S')}_wbmfdfa.log",
)
