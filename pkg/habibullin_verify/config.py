import logging
import os
from typing import Optional

from dotenv import load_dotenv
from mpmath import iv, mp
from pydantic import BaseModel, Field, field_validator

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

VERSION = "1.0.0"

# Significant decimal digits per precision mode
PRECISION_MODES = {
    "standard": 40,
    "extended": 80,
}


class Settings(BaseModel):
    """Run-time defaults, read from the environment (or a .env file)"""

    precision_mode: str = "standard"
    tolerance: float = Field(default=1e-12, gt=0)
    knot_width: float = Field(default=1e-17, gt=0)
    max_evaluations: int = Field(default=200_000, gt=0)
    log_level: str = "WARNING"
    timestamp: Optional[str] = None

    @field_validator("precision_mode")
    @classmethod
    def _known_mode(cls, value: str) -> str:
        value = value.strip().lower()
        if value not in PRECISION_MODES:
            raise ValueError(
                f"Unknown precision mode '{value}'; expected one of {sorted(PRECISION_MODES)}"
            )
        return value


def load_settings() -> Settings:
    return Settings(
        precision_mode=os.getenv("HABIBULLIN_PRECISION", "standard"),
        tolerance=float(os.getenv("HABIBULLIN_TOL", "1e-12")),
        knot_width=float(os.getenv("HABIBULLIN_KNOT_WIDTH", "1e-17")),
        max_evaluations=int(os.getenv("HABIBULLIN_MAX_EVALUATIONS", "200000")),
        log_level=os.getenv("HABIBULLIN_LOG_LEVEL", "WARNING"),
        timestamp=os.getenv("SOURCE_DATE_EPOCH") or None,
    )


def configure_precision(mode: str = "standard") -> int:
    """
    Set the working precision of both mpmath contexts.

    Called once at start-up. Every other module reads the precision but never
    changes it, so concurrent computations all see the same context.
    """
    dps = PRECISION_MODES[mode]
    mp.dps = dps
    iv.dps = dps
    logger.debug("Working precision set to %d digits (%s)", dps, mode)
    return dps


def current_precision_mode() -> str:
    for mode, dps in PRECISION_MODES.items():
        if mp.dps == dps:
            return mode
    return "custom"
