from pathlib import Path
from typing import Annotated, Literal

from pydantic import field_validator
from pydantic_settings import BaseSettings, NoDecode


def _split(v: str) -> list[str]:
    return [part.strip() for part in v.split(",") if part.strip()]


class Settings(BaseSettings):
    model_config = {"env_prefix": "LANDSCAPE_"}

    # Landscape input: a spec file or inline eigenvalue lists
    spec_path: Path | None = None
    rho_eigenvalues: Annotated[list[float] | None, NoDecode] = None
    obs_eigenvalues: Annotated[list[float] | None, NoDecode] = None

    # Analysis parameters
    eps: Annotated[list[float], NoDecode] = [0.1]
    trials: int = 1000
    seed: int = 0
    grid_points: int = 200
    zmax: int = 200
    fit_window: Annotated[tuple[int, int], NoDecode] = (50, 200)
    slack_tolerance: float = 1e-9
    conjecture_sizes: Annotated[list[int], NoDecode] = [4, 6, 8, 12]

    # Output and limits
    output_format: Literal["json", "csv", "table"] = "json"
    max_tables: int = 1_000_000

    # Workers
    threads: int = 4
    batch_size: int = 10_000
    max_batch_elements: int = 2_000_000

    quick: bool = False
    log_level: str = "INFO"

    @field_validator("rho_eigenvalues", "obs_eigenvalues", mode="before")
    @classmethod
    def parse_float_list(cls, v: str | list[float] | None) -> list[float] | None:
        """Parse comma-separated numbers: '0.1,0.05' -> [0.1, 0.05]."""
        if isinstance(v, str):
            parts = _split(v)
            return [float(p) for p in parts] if parts else None
        return v

    @field_validator("eps", mode="before")
    @classmethod
    def parse_eps(cls, v: str | float | list[float]) -> list[float]:
        if isinstance(v, str):
            return [float(p) for p in _split(v)] or [0.1]
        if isinstance(v, (int, float)):
            return [float(v)]
        return v

    @field_validator("conjecture_sizes", mode="before")
    @classmethod
    def parse_sizes(cls, v: str | list[int]) -> list[int]:
        if isinstance(v, str):
            return [int(p) for p in _split(v)] or [4, 6, 8, 12]
        return v

    @field_validator("fit_window", mode="before")
    @classmethod
    def parse_window(cls, v: str | tuple[int, int]) -> tuple[int, int]:
        if isinstance(v, str):
            parts = [int(p) for p in _split(v)]
            if len(parts) != 2:
                raise ValueError("fit_window needs two integers: 'low,high'")
            return parts[0], parts[1]
        return v

    @field_validator("eps")
    @classmethod
    def check_eps(cls, v: list[float]) -> list[float]:
        if not v or any(e <= 0 for e in v):
            raise ValueError("eps values must be > 0")
        return v

    @field_validator(
        "trials", "grid_points", "zmax", "max_tables", "threads", "batch_size", "max_batch_elements"
    )
    @classmethod
    def check_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v
