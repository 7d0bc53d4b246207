#!/usr/bin/env python3
"""
實驗配置
========

ExperimentConfig 以 pydantic 驗證所有欄位，未知鍵與超出範圍的值都會被拒絕。

來源優先順序（低 → 高）：
1. 內建預設（距離／方位基準情境）
2. 情境預設組（rb / rbd）
3. 配置文件（UTF-8，`key = value`，`#` 為註解）
4. 命令列參數

環境變數：
- PKF_OUTPUT_DIR: 預設輸出目錄
- PKF_THREADS: 工作執行緒上限（由 resource_monitor 讀取）
"""

import os
from pathlib import Path
from typing import Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .debug import debug_log
from .filters import FilterKind
from .models import DebiasMode, ObservedCase, ScenarioParams
from .utils.error_handler import ConfigError


CASE_PRESETS: dict[str, dict[str, Any]] = {
    "rb": {},
    "rbd": {"sigma_rdot": 0.1},
}

DEBIAS_ALIASES = {
    "closed": DebiasMode.CLOSED_FORM.value,
    "mult": DebiasMode.NUMERICAL_MULTIPLICATIVE.value,
    "add": DebiasMode.NUMERICAL_ADDITIVE.value,
}

DEFAULT_OUTPUT_DIR = "pkf_results"


def _default_output_dir() -> str:
    return os.getenv("PKF_OUTPUT_DIR", DEFAULT_OUTPUT_DIR)


class ExperimentConfig(BaseModel):
    """一組蒙地卡羅實驗的完整配置"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    case: Annotated[Literal["rb", "rbd"], Field(description="rb：距離／方位；rbd：另含距離變化率")] = "rb"
    update_period: Annotated[float, Field(gt=0, description="更新週期（秒）")] = 2.0
    n_updates: Annotated[int, Field(ge=1)] = 100
    sigma_r: Annotated[float, Field(gt=0)] = 30.0
    sigma_alpha: Annotated[float, Field(gt=0)] = 0.0873
    sigma_rdot: Annotated[float, Field(gt=0)] = 10.0
    sigma_cdot: Annotated[float, Field(gt=0)] = 10.0
    rho: Annotated[float, Field(gt=-1, lt=1)] = -0.2
    q: Annotated[float, Field(ge=0, description="過程雜訊強度（m²/s³）")] = 0.44**2
    init_range_mean: Annotated[float, Field(gt=0)] = 4000.0
    init_range_std: Annotated[float, Field(ge=0)] = 30.0
    speed_scale: Annotated[float, Field(ge=0)] = 10.0
    init_position_std: Annotated[float, Field(gt=0)] = 30.0
    init_velocity_std: Annotated[float, Field(gt=0)] = 10.0
    perturb_initial: bool = True

    trials: Annotated[int, Field(ge=1)] = 1000
    seed: Annotated[int, Field(ge=0)] = 0
    experiments: Annotated[int, Field(ge=1)] = 1
    filters: tuple[str, ...] = ("pkf", "spkf", "ekf")
    debias_mode: Literal[
        "closed_form", "numerical_multiplicative", "numerical_additive"
    ] = "closed_form"
    track_loss_threshold: Annotated[float, Field(gt=0, description="失追門檻（公尺）")] = 1000.0
    track_loss_window: Annotated[int, Field(ge=1)] = 10
    anees_excludes_lost: bool = False
    confidence_level: Annotated[float, Field(gt=0, lt=1)] = 0.95
    output_dir: str = Field(default_factory=_default_output_dir)
    threads: Annotated[int | None, Field(ge=1)] = None

    @field_validator("filters", mode="before")
    @classmethod
    def _split_filters(cls, value: Any) -> tuple[str, ...]:
        if isinstance(value, str):
            value = value.split(",")
        names: list[str] = []
        for item in value:
            name = str(item).strip().lower()
            if not name:
                continue
            if name not in {kind.value for kind in FilterKind}:
                raise ValueError(f"unknown filter {name!r} (choose from pkf, spkf, ekf)")
            if name not in names:
                names.append(name)
        if not names:
            raise ValueError("at least one filter must be selected")
        return tuple(names)

    @field_validator("debias_mode", mode="before")
    @classmethod
    def _debias_alias(cls, value: Any) -> Any:
        if isinstance(value, str):
            return DEBIAS_ALIASES.get(value.strip().lower(), value.strip().lower())
        return value

    @property
    def observed_count(self) -> int:
        return ObservedCase(self.case).observed_count

    def scenario(self) -> ScenarioParams:
        """sim 模組使用的情境參數"""
        return ScenarioParams(
            T=self.update_period,
            n_updates=self.n_updates,
            sigma_r=self.sigma_r,
            sigma_alpha=self.sigma_alpha,
            sigma_rdot=self.sigma_rdot,
            sigma_cdot=self.sigma_cdot,
            rho=self.rho,
            q=self.q,
            init_range_mean=self.init_range_mean,
            init_range_std=self.init_range_std,
            speed_scale=self.speed_scale,
            init_position_std=self.init_position_std,
            init_velocity_std=self.init_velocity_std,
            perturb_initial=self.perturb_initial,
            case=ObservedCase(self.case),
        )

    def to_text(self) -> str:
        """以 `key = value` 形式輸出，鍵依字母排序；可再被 parse_config 讀回"""
        lines = []
        for key, value in sorted(self.model_dump().items()):
            if key in ("output_dir", "threads"):
                continue
            if isinstance(value, tuple):
                value = ",".join(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def read_config_file(path: str | Path) -> dict[str, str]:
    """
    讀取 `key = value` 配置文件

    Args:
        path: 文件路徑

    Returns:
        dict[str, str]: 原始字串值，型別轉換交給 pydantic

    Raises:
        ConfigError: 文件無法讀取或格式錯誤
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read config file: {e}", {"file_path": str(path)}) from e

    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {number}: expected 'key = value', got {raw.strip()!r}",
                {"file_path": str(path), "line": number},
            )
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {number}: empty key", {"file_path": str(path), "line": number})
        values[key] = value
    debug_log(f"讀取配置文件 {path}：{len(values)} 個鍵")
    return values


def parse_config(
    path: str | Path | None = None, overrides: dict[str, Any] | None = None
) -> ExperimentConfig:
    """
    合併預設、情境預設組、配置文件與命令列參數

    Args:
        path: 配置文件（可選）
        overrides: 命令列提供的值；值為 None 的鍵會被忽略

    Returns:
        ExperimentConfig: 驗證後的配置

    Raises:
        ConfigError: 未知鍵、超出範圍或格式錯誤
    """
    file_values = read_config_file(path) if path else {}
    flag_values = {k: v for k, v in (overrides or {}).items() if v is not None}

    case = str(flag_values.get("case") or file_values.get("case") or "rb").strip().lower()
    if case not in CASE_PRESETS:
        raise ConfigError(f"unknown case {case!r} (choose from rb, rbd)", {"key": "case"})

    merged = {**CASE_PRESETS[case], **file_values, **flag_values, "case": case}
    try:
        return ExperimentConfig(**merged)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}", {"operation": "parse_config"}) from e
