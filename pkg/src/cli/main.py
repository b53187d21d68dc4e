"""
命令行入口

    python run_solver.py check    -c config.ini
    python run_solver.py solve    -c config.ini -o output/
    python run_solver.py compare  -c config.ini
    python run_solver.py breaking -c config.ini

退出码：0 成功，2 可解性失败，3 不收敛，4 不变量破坏，5 配置错误
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .runner import COMMANDS, SolverRunner
from ..config.loader import parse_config
from ..core.errors import ConfigError
from ..utils.logger import get_logger, get_project_root, setup_logging

logger = get_logger("main")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swsolver",
        description="浅水方程附加变量法求解器",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  %(prog)s check -c config.ini            # 只检查初值条件
  %(prog)s solve -c config.ini -o out     # 全局延拓并输出 CSV 与审计报告
  %(prog)s compare -c config.ini          # 额外运行参考解并输出误差表
  %(prog)s breaking -c breaking.ini       # 破碎检测
        """
    )
    parser.add_argument("command", choices=COMMANDS, help="要执行的流水线")
    parser.add_argument("-c", "--config", type=str, default=str(get_project_root() / "config.ini"),
                        help="配置文件路径 (默认: 项目根目录下的 config.ini)")
    parser.add_argument("-o", "--output", type=str, help="输出目录（覆盖 output.dir）")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="控制台日志级别（覆盖 output.log_level）")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level or "INFO")

    try:
        config = parse_config(args.config)
    except ConfigError as e:
        logger.error(f"❌ 配置错误: {e}")
        return e.exit_code

    out_dir = Path(args.output) if args.output else Path(config.output.dir)
    manager = setup_logging(log_dir=out_dir / "logs" if config.output.log_to_file else None,
                            level=args.log_level or config.output.log_level)
    manager.log_startup(args.command)
    try:
        runner = SolverRunner(config, base_dir=Path(args.config).resolve().parent, out_dir=out_dir)
        code = runner.run(args.command)
    except KeyboardInterrupt:
        logger.warning("⚠️ 用户中断")
        code = 130
    finally:
        manager.log_shutdown()
    logger.info(f"🏁 退出码 {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
