"""
报告输出
ReportSink 是输出端的抽象：控制台摘要或 JSON 文件
"""

import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel

from .logger import get_logger

logger = get_logger("reporter")


def _payload(report: Union[BaseModel, Dict[str, Any]]) -> Dict[str, Any]:
    return report.model_dump(mode="json") if isinstance(report, BaseModel) else report


class ReportSink(ABC):
    @abstractmethod
    def emit(self, name: str, report: Union[BaseModel, Dict[str, Any]]) -> Optional[Path]:
        """输出一份报告；写文件的实现返回文件路径"""


class ConsoleSink(ReportSink):
    """只在日志中打印一行摘要"""

    def emit(self, name, report):
        data = _payload(report)
        verdict = next((data[k] for k in ("passed", "admissible_global", "detected") if k in data), None)
        mark = {True: "✅", False: "❌", None: "📄"}[verdict if isinstance(verdict, bool) else None]
        logger.info(f"{mark} 报告 {name}: " + ", ".join(
            f"{k}={v}" for k, v in data.items() if not isinstance(v, (list, dict))))
        return None


class JsonFileSink(ReportSink):
    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.console = ConsoleSink()

    def emit(self, name, report):
        path = self.out_dir / f"{name}.json"
        text = json.dumps(_payload(report), indent=2, ensure_ascii=False, allow_nan=True)
        path.write_text(text + "\n", encoding="utf-8")
        self.console.emit(name, report)
        logger.debug(f"📝 已写入 {path}")
        return path


def sink_factory(kind: str, out_dir: Union[str, Path]) -> ReportSink:
    kind = (kind or "json").lower()
    if kind == "json":
        return JsonFileSink(out_dir)
    if kind == "console":
        return ConsoleSink()
    logger.warning(f"⚠️ 未知的报告类型 '{kind}'，改用控制台输出")
    return ConsoleSink()
