"""
INI 配置加载
configparser 读取 → Pydantic 校验；所有失败都转成带 section.key 的 ConfigError
"""

import configparser
from pathlib import Path
from typing import Union

from pydantic import ValidationError

from .models import RunConfig
from ..core.errors import ConfigError
from ..utils.logger import get_logger

logger = get_logger("config")

SECTIONS = tuple(RunConfig.model_fields)


def _format_validation(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        key = ".".join(str(p) for p in item["loc"]) or "<root>"
        lines.append(f"{key}: {item['msg']}")
    return "; ".join(lines)


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"{source}:{e.lineno}: 重复的键 {e.section}.{e.option}") from e
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"{source}:{e.lineno}: 重复的 section [{e.section}]") from e
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError(f"{source}:{e.lineno}: 缺少 section 头") from e
    except configparser.ParsingError as e:
        where = ", ".join(f"第 {lineno} 行" for lineno, _ in e.errors)
        raise ConfigError(f"{source}: 无法解析（{where}）") from e

    unknown = [s for s in parser.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"{source}: 未知的 section: {', '.join(unknown)}")

    # 缺失的 section 以空表参与校验，报错时才能指到具体的键
    data = {name: {} for name in SECTIONS}
    for name in parser.sections():
        data[name] = {key: value for key, value in parser.items(name) if value != ""}

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{source}: {_format_validation(e)}") from e

    logger.debug(f"📋 配置已加载: {source}")
    return config


def parse_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"无法读取配置文件 {path}: {e}") from e
    config = parse_config_text(text, source=str(path))
    logger.info(f"📋 读取配置: {path}")
    return config
