import os
import sys
from pathlib import Path

from loguru import logger

# 移除默认的处理器，以便进行自定义配置
logger.remove()

# 定义日志格式，包含时间、级别、模块、函数、行号和消息，并添加颜色
log_format = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
    "<level>{message}</level>"
)

# 日志目录可通过环境变量 DMORL_LOG_DIR 覆盖
LOG_DIR = Path(os.environ.get("DMORL_LOG_DIR", "logs"))

# 控制台输出
logger.add(
    sys.stdout,
    colorize=True,
    format=log_format,
    level="INFO",
)
# 文件输出，按天轮换
logger.add(
    LOG_DIR / "app.log",
    rotation="1 day",
    retention="7 days",
    encoding="utf-8",
    format=log_format,
    level="DEBUG",
)


def add_run_sink(out_dir: Path) -> int:
    """
    Adds a DEBUG sink writing to ``<out_dir>/train.log`` for one run.

    Returns:
        The loguru handler id, to be passed to ``logger.remove`` at run end.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return logger.add(
        out_dir / "train.log",
        encoding="utf-8",
        format=log_format,
        level="DEBUG",
    )


# 导出配置好的logger实例
__all__ = ["logger", "add_run_sink"]
