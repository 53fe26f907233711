"""Configuration settings for the toolkit."""

from argparse import Namespace
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables (prefix CITY3DQA_), a .env file or defaults."""

    # --- Oracle ---
    NEAR_RADIUS: float = 100.0  # meters
    TIE_TOLERANCE: float = 1e-9  # meters

    # --- Scene graph ---
    FRONT_BEARING: float = 90.0  # degrees counterclockwise from +x
    EDGE_POLICY: Literal["all_pairs", "k_nearest"] = "all_pairs"
    EDGE_K: int = 8

    # --- Generation ---
    SYNONYM_PROBABILITY: float = 0.3
    PER_TEMPLATE_LIMIT: int = 20
    JOBS: int = 1

    # --- Splits (train/val/test) ---
    SPLIT_RATIOS: list[float] = [0.69, 0.17, 0.14]
    SEED: int = 0
    TRAIN_CITIES: list[str] = ["Longhua", "Wuhu", "Qingdao", "Yingrenshi"]
    VAL_CITIES: list[str] = ["Lihu"]
    TEST_CITIES: list[str] = ["Yuehai"]

    # --- Ingestion ---
    CHUNK_RECORDS: int = 1 << 18

    # --- Paraphrase endpoint ---
    LLM_ENDPOINT: str | None = None
    LLM_MODEL: str = "gpt-3.5-turbo"
    LLM_TEMPERATURE: float = 0.7
    LLM_TIMEOUT: float = 30.0
    LLM_MAX_IN_FLIGHT: int = 4
    LLM_KEY: str | None = None

    # --- Logging ---
    LOG_LEVEL: str = "WARNING"
    RUN_LOG_URL: str | None = None
    RUN_LOG_RETENTION_DAYS: int = 90

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="CITY3DQA_", extra="ignore"
    )


def load_settings(env_file: str | Path | None = None) -> Settings:
    """Load settings, optionally from an explicit env-style file instead of `.env`.

    Args:
        env_file (str | Path | None): Settings file passed with --config.

    Returns:
        Settings: Resolved settings.
    """
    if env_file is None:
        return Settings()
    return Settings(_env_file=str(env_file))


class CliConfig(BaseModel):
    """Validated merge of settings and command-line flags for one CLI invocation."""

    model_config = ConfigDict(frozen=True)

    inputs: list[Path] = []
    lexicon: Path | None = None
    regions: Path | None = None
    output: Path | None = None

    seed: int = 0
    near_radius: float = Field(100.0, gt=0)
    tie_tolerance: float = Field(1e-9, ge=0)
    front_bearing: float = Field(90.0, ge=0, lt=360)
    edge_policy: Literal["all_pairs", "k_nearest"] = "all_pairs"
    edge_k: int = Field(8, ge=1)
    synonym_probability: float = Field(0.3, ge=0, le=1)
    per_template_limit: int = Field(20, ge=0)
    jobs: int = Field(1, ge=1)
    chunk_records: int = Field(1 << 18, ge=1)

    split_ratios: tuple[float, float, float] = (0.69, 0.17, 0.14)
    train_cities: list[str] = []
    val_cities: list[str] = []
    test_cities: list[str] = []

    llm_endpoint: str | None = None
    llm_model: str = "gpt-3.5-turbo"
    llm_temperature: float = Field(0.7, ge=0)
    llm_timeout: float = Field(30.0, gt=0)
    llm_max_in_flight: int = Field(4, ge=1)
    llm_key: str | None = Field(None, repr=False)

    @field_validator("split_ratios")
    @classmethod
    def _positive_ratios(cls, value: tuple[float, float, float]) -> tuple[float, float, float]:
        if any(r <= 0 for r in value):
            raise ValueError("split ratios must be positive")
        return value

    @classmethod
    def from_sources(cls, base: Settings, args: Namespace | None = None) -> "CliConfig":
        """Merge settings with parsed flags; flags that were given win.

        Args:
            base (Settings): Loaded settings.
            args (Namespace | None): Parsed argparse namespace.

        Returns:
            CliConfig: The validated configuration.
        """
        values = {
            "near_radius": base.NEAR_RADIUS,
            "tie_tolerance": base.TIE_TOLERANCE,
            "front_bearing": base.FRONT_BEARING,
            "edge_policy": base.EDGE_POLICY,
            "edge_k": base.EDGE_K,
            "synonym_probability": base.SYNONYM_PROBABILITY,
            "per_template_limit": base.PER_TEMPLATE_LIMIT,
            "jobs": base.JOBS,
            "chunk_records": base.CHUNK_RECORDS,
            "seed": base.SEED,
            "split_ratios": tuple(base.SPLIT_RATIOS),
            "train_cities": base.TRAIN_CITIES,
            "val_cities": base.VAL_CITIES,
            "test_cities": base.TEST_CITIES,
            "llm_endpoint": base.LLM_ENDPOINT,
            "llm_model": base.LLM_MODEL,
            "llm_temperature": base.LLM_TEMPERATURE,
            "llm_timeout": base.LLM_TIMEOUT,
            "llm_max_in_flight": base.LLM_MAX_IN_FLIGHT,
            "llm_key": base.LLM_KEY,
        }
        if args is not None:
            for key in cls.model_fields:
                flag = getattr(args, key, None)
                if flag is not None:
                    values[key] = tuple(flag) if key == "split_ratios" else flag
        return cls.model_validate(values)
