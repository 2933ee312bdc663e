"""
应用配置管理
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from quverse.utils.exceptions import ConfigurationError


class PairingRule(str, Enum):
    """世界与本征向量的配对规则"""

    POSITIONAL = "positional"
    MAX_COMPONENT = "max-component"


class PriorKind(str, Enum):
    """贝叶斯先验来源"""

    UNIFORM = "uniform"
    FILE = "file"


class UnfoldSettings(BaseSettings):
    """结构展开配置"""

    depth_cap: int = Field(default=12, ge=1)
    node_cap: int = Field(default=1_000_000, ge=1)

    model_config = SettingsConfigDict(env_prefix="QUVERSE_UNFOLD__")


class NumericSettings(BaseSettings):
    """数值容差配置"""

    # 相对谱半径
    eps_degenerate: float = Field(default=1e-8, ge=0.0)
    eps_zero: float = Field(default=1e-12, ge=0.0)
    symmetry_tol: float = Field(default=1e-12, ge=0.0)
    orthonormal_tol: float = Field(default=1e-10, ge=0.0)
    jacobi_max_sweeps: int = Field(default=100, ge=1)
    powerset_cap: int = Field(default=20, ge=1)
    lattice_dump_cap: int = Field(default=16, ge=1)

    model_config = SettingsConfigDict(env_prefix="QUVERSE_NUMERIC__")


class SelectionSettings(BaseSettings):
    """状态选择与解释配置"""

    pairing_rule: PairingRule = Field(default=PairingRule.POSITIONAL)
    prior: PriorKind = Field(default=PriorKind.UNIFORM)
    prior_file: Optional[str] = Field(default=None)

    model_config = SettingsConfigDict(env_prefix="QUVERSE_SELECTION__")


class LoggingSettings(BaseSettings):
    """日志配置"""

    level: str = Field(default="WARNING")
    format: str = Field(default="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    to_file: bool = Field(default=False)
    file_path: str = Field(default="logs/quverse.log")
    max_file_size: int = Field(default=10 * 1024 * 1024)  # 10MB
    backup_count: int = Field(default=5)

    model_config = SettingsConfigDict(env_prefix="QUVERSE_LOGGING__")


class AppSettings(BaseSettings):
    """应用主配置"""

    app_name: str = Field(default="quverse")
    version: str = Field(default="1.0.0")

    # 子配置
    unfold: UnfoldSettings = Field(default_factory=UnfoldSettings)
    numeric: NumericSettings = Field(default_factory=NumericSettings)
    selection: SelectionSettings = Field(default_factory=SelectionSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)

    model_config = SettingsConfigDict(
        env_prefix="QUVERSE_",
        env_nested_delimiter="__",
        env_file=[".env", ".env.development"],
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    def to_flat_dict(self) -> Dict[str, Any]:
        """展开为 section.key 形式的字典，用于随结果保存"""
        flat: Dict[str, Any] = {}
        for section in ("unfold", "numeric", "selection", "logging"):
            for key, value in getattr(self, section).model_dump(mode="json").items():
                flat[f"{section}.{key}"] = value
        return flat


# 全局配置实例
_settings: Optional[AppSettings] = None


def get_settings() -> AppSettings:
    """获取应用配置"""
    global _settings
    if _settings is None:
        _settings = AppSettings()
    return _settings


def set_settings(settings: AppSettings) -> None:
    """替换全局配置（CLI加载配置文件后调用）"""
    global _settings
    _settings = settings


def parse_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """
    解析 key=value 配置文件

    Args:
        path: 配置文件路径，支持 `#` 注释与 `section.key = value`

    Returns:
        Dict[str, str]: 原始键值对
    """
    entries: Dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ConfigurationError(f"无法读取配置文件: {path}", details={"path": str(path), "error": str(e)})

    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(
                f"配置文件格式错误: {path}:{lineno}",
                details={"path": str(path), "line": lineno}
            )
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip().strip('"').strip("'")
    return entries


def load_settings(
    config_file: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None
) -> AppSettings:
    """
    构建配置：环境变量 < 配置文件 < 命令行参数

    Args:
        config_file: 可选的 key=value 配置文件
        overrides: 命令行覆盖项，键为 section.key，值为 None 时忽略

    Returns:
        AppSettings: 校验后的配置实例
    """
    base = AppSettings()
    merged: Dict[str, Dict[str, Any]] = {
        section: getattr(base, section).model_dump()
        for section in ("unfold", "numeric", "selection", "logging")
    }

    layers = []
    if config_file is not None:
        layers.append(parse_config_file(config_file))
    if overrides:
        layers.append({k: v for k, v in overrides.items() if v is not None})

    for layer in layers:
        for dotted, value in layer.items():
            section, _, key = dotted.partition(".")
            if section not in merged or not key:
                raise ConfigurationError(f"未知配置项: {dotted}", details={"key": dotted})
            merged[section][key] = value

    try:
        return AppSettings(
            unfold=UnfoldSettings(**merged["unfold"]),
            numeric=NumericSettings(**merged["numeric"]),
            selection=SelectionSettings(**merged["selection"]),
            logging=LoggingSettings(**merged["logging"]),
        )
    except ValidationError as e:
        raise ConfigurationError("配置校验失败", details={"errors": e.errors(include_url=False)})
