"""
Configuration management for qbattery.

Handles environment variables, output locations and the numerical defaults
shared by the simulator, the optimizer and the command-line interface.
"""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

# Load environment variables from .env file
load_dotenv()


class QBatteryConfig(BaseModel):
    """Configuration model for the qbattery application."""

    # Output location for CLI data files
    output_dir: Path = Field(
        default_factory=lambda: Path(os.getenv("OUTPUT_DIR", "results")),
    )

    # Idle qubits are detuned this far from the battery, in units of g
    park_detuning: float = Field(
        default_factory=lambda: float(os.getenv("PARK_DETUNING", "50")),
    )

    # Optimizer settings
    multistart_count: int = Field(
        default_factory=lambda: int(os.getenv("MULTISTART_COUNT", "32")),
        ge=1,
    )
    max_evaluations: int = Field(
        default_factory=lambda: int(os.getenv("MAX_EVALUATIONS", "5000")),
        ge=1,
    )
    random_seed: int = Field(
        default_factory=lambda: int(os.getenv("RANDOM_SEED", "1234")),
    )

    # Threads used for multistarts and sweep grid points
    worker_threads: int = Field(
        default_factory=lambda: int(os.getenv("QBATTERY_THREADS", "1")),
        ge=1,
    )

    # Logging level
    log_level: str = Field(default_factory=lambda: os.getenv("LOG_LEVEL", "INFO"))

    model_config = ConfigDict(validate_assignment=True)

    def ensure_output_dir(self) -> Path:
        """Create the output directory if it doesn't exist."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir


# Global config instance
config = QBatteryConfig()

# Configure logging
logging.basicConfig(
    level=getattr(logging, config.log_level.upper()),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)

logger.info(f"qbattery configuration loaded. Output dir: {config.output_dir}")
