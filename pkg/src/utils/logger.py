#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
日志管理模块
为求解器提供统一的日志配置：彩色控制台输出 + 可选的滚动文件日志
"""

import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Dict, Optional, Union

PACKAGE_LOGGER = "swsolver"


def get_project_root() -> Path:
    """项目根目录（src 的上一级）"""
    return Path(__file__).resolve().parent.parent.parent


class ColoredFormatter(logging.Formatter):
    """彩色日志格式化器"""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[35m',
        'RESET': '\033[0m'
    }

    EMOJI = {
        'DEBUG': '🔍',
        'INFO': 'ℹ️',
        'WARNING': '⚠️',
        'ERROR': '❌',
        'CRITICAL': '🚨'
    }

    def format(self, record: logging.LogRecord) -> str:
        # 复制一份，避免污染其他处理器看到的 record
        record = logging.makeLogRecord(record.__dict__)
        level = record.levelname
        if level in self.EMOJI:
            record.msg = f"{self.EMOJI[level]} {record.msg}"
        if level in self.COLORS:
            record.levelname = f"{self.COLORS[level]}{level}{self.COLORS['RESET']}"
        return super().format(record)


class LogManager:
    """日志管理器

    处理器挂在包日志器 ``swsolver`` 上，不清理根日志器，
    因此 pytest 的 caplog 等外部处理器仍能收到记录。
    """

    THIRD_PARTY = ['numpy', 'scipy', 'matplotlib', 'sympy', 'PIL']

    def __init__(self, app_name: str = "swsolver",
                 log_dir: Optional[Union[str, Path]] = None,
                 level: str = "INFO"):
        self.app_name = app_name
        self.loggers: Dict[str, logging.Logger] = {}
        self.handlers: Dict[str, logging.Handler] = {}
        self.log_dir = Path(log_dir) if log_dir is not None else None
        self.log_file: Optional[Path] = None
        self.error_log_file: Optional[Path] = None

        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            self.log_file = self.log_dir / f"{app_name.lower()}.log"
            self.error_log_file = self.log_dir / f"{app_name.lower()}_error.log"

        self._setup_logging(level)

    def _setup_logging(self, level: str):
        package_logger = logging.getLogger(PACKAGE_LOGGER)
        package_logger.setLevel(logging.DEBUG)

        # 重复初始化时先卸下旧处理器
        for handler in package_logger.handlers[:]:
            package_logger.removeHandler(handler)
            handler.close()

        self._create_handlers(package_logger)
        self._setup_third_party_logging()
        self.set_level(level)

    def _create_handlers(self, package_logger: logging.Logger):
        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setLevel(logging.INFO)
        console_handler.setFormatter(ColoredFormatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%H:%M:%S'
        ))
        package_logger.addHandler(console_handler)
        self.handlers['console'] = console_handler

        if self.log_file is None:
            return

        file_handler = logging.handlers.RotatingFileHandler(
            self.log_file,
            maxBytes=10 * 1024 * 1024,
            backupCount=5,
            encoding='utf-8'
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        ))

        error_handler = logging.handlers.RotatingFileHandler(
            self.error_log_file,
            maxBytes=5 * 1024 * 1024,
            backupCount=3,
            encoding='utf-8'
        )
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        ))

        package_logger.addHandler(file_handler)
        package_logger.addHandler(error_handler)
        self.handlers['file'] = file_handler
        self.handlers['error'] = error_handler

    def _setup_third_party_logging(self):
        for logger_name in self.THIRD_PARTY:
            third_party = logging.getLogger(logger_name)
            third_party.setLevel(logging.WARNING)
            third_party.propagate = False

    def get_logger(self, name: str) -> logging.Logger:
        if name not in self.loggers:
            self.loggers[name] = logging.getLogger(f"{PACKAGE_LOGGER}.{name}")
        return self.loggers[name]

    def set_level(self, level: str):
        """设置控制台输出级别"""
        numeric = logging.getLevelName(level.upper())
        if not isinstance(numeric, int):
            self.get_logger('logger').warning(f"未知日志级别 '{level}'，保持 INFO")
            return
        console = self.handlers.get('console')
        if console is not None:
            console.setLevel(numeric)

    def log_startup(self, command: str = ""):
        logger = self.get_logger('startup')
        logger.info(f"🚀 求解器启动 {command}".rstrip())
        if self.log_dir is not None:
            logger.info(f"📝 日志目录: {self.log_dir}")
        logger.debug(f"🐍 Python版本: {sys.version}")
        logger.debug(f"💻 操作系统: {sys.platform}")

    def log_shutdown(self):
        logger = self.get_logger('shutdown')
        logger.info("🛑 求解器结束")
        for handler in logging.getLogger(PACKAGE_LOGGER).handlers:
            handler.flush()

    def close(self):
        """关闭文件处理器（测试中临时目录需要释放文件句柄）"""
        package_logger = logging.getLogger(PACKAGE_LOGGER)
        for handler in self.handlers.values():
            package_logger.removeHandler(handler)
            handler.close()
        self.handlers.clear()


# 全局日志管理器实例
_log_manager: Optional[LogManager] = None


def get_logger(name: str) -> logging.Logger:
    """获取日志记录器；模块导入时调用，不安装任何处理器"""
    if _log_manager is not None:
        return _log_manager.get_logger(name)
    return logging.getLogger(f"{PACKAGE_LOGGER}.{name}")


def setup_logging(app_name: str = "swsolver",
                  log_dir: Optional[Union[str, Path]] = None,
                  level: str = "INFO") -> LogManager:
    """设置日志系统"""
    global _log_manager
    if _log_manager is not None:
        _log_manager.close()
    _log_manager = LogManager(app_name, log_dir=log_dir, level=level)
    return _log_manager
