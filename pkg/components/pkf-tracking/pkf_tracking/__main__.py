#!/usr/bin/env python3
"""
PKF Tracking - 主程式入口
=========================

此檔案允許套件透過 `python -m pkf_tracking` 執行。

使用方法:
  python -m pkf_tracking run --trials 200 --case rbd   # 執行蒙地卡羅實驗
  python -m pkf_tracking version                       # 顯示版本資訊

退出碼：0 完成；2 配置錯誤；1 其他失敗。濾波器發散不會讓程式失敗。
"""

import argparse
import os
import sys


# 已有專屬參數的配置鍵
_DEDICATED_KEYS = {
    "case",
    "trials",
    "seed",
    "filters",
    "debias_mode",
    "output_dir",
    "experiments",
    "threads",
}


def build_parser() -> argparse.ArgumentParser:
    from .config import ExperimentConfig

    parser = argparse.ArgumentParser(
        prog="pkf-tracking",
        description="PKF Tracking - 轉換量測精度 Kalman 濾波器的蒙地卡羅實驗",
    )
    subparsers = parser.add_subparsers(dest="command", help="可用命令")

    run_parser = subparsers.add_parser("run", help="執行蒙地卡羅實驗")
    run_parser.add_argument("--config", help="配置文件路徑（key = value）")
    run_parser.add_argument("--case", choices=["rb", "rbd"], help="rb：距離／方位；rbd：另含距離變化率")
    run_parser.add_argument("--trials", type=int, help="每次實驗的試驗數")
    run_parser.add_argument("--seed", type=int, help="根種子")
    run_parser.add_argument("--filters", help="以逗號分隔，例如 pkf,spkf,ekf")
    run_parser.add_argument(
        "--debias", dest="debias_mode", choices=["closed", "mult", "add"], help="去偏形式"
    )
    run_parser.add_argument("--out", dest="output_dir", help="輸出目錄（預設取 PKF_OUTPUT_DIR）")
    run_parser.add_argument("--experiments", type=int, help="相同參數重複的實驗次數")
    run_parser.add_argument("--threads", type=int, help="工作執行緒數（覆寫 PKF_THREADS）")
    run_parser.add_argument("--debug", action="store_true", help="輸出調試日誌到 stderr")

    # 其餘配置鍵一律提供 --kebab-case 參數，型別交給 pydantic 轉換
    scenario_group = run_parser.add_argument_group("情境參數")
    for name, field in ExperimentConfig.model_fields.items():
        if name in _DEDICATED_KEYS:
            continue
        scenario_group.add_argument(
            f"--{name.replace('_', '-')}", dest=name, metavar="VALUE", help=field.description
        )

    subparsers.add_parser("version", help="顯示版本資訊")
    return parser


def main(argv: list[str] | None = None) -> int:
    """主程式入口點"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "run":
        return run_command(args)
    if args.command == "version":
        show_version()
        return 0

    parser.print_help()
    return 1


def run_command(args: argparse.Namespace) -> int:
    """解析配置並執行實驗"""
    if args.debug:
        os.environ["PKF_DEBUG"] = "true"

    from .config import parse_config
    from .experiment import run_experiment
    from .utils.error_handler import ConfigError, ErrorHandler

    overrides = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "config", "debug")
    }

    try:
        config = parse_config(args.config, overrides)
    except ConfigError as e:
        print(ErrorHandler.format_user_error(e), file=sys.stderr)
        return 2

    try:
        outcomes = run_experiment(config)
    except Exception as e:
        response = ErrorHandler.create_error_response(
            e, {"operation": "run_experiment"}, include_solutions=True
        )
        print(f"{response['message']} [{response['error_id']}]", file=sys.stderr)
        for solution in response.get("solutions", []):
            print(f"  - {solution}", file=sys.stderr)
        return 1

    losses = "; ".join(
        f"{name} lost {series.lost}/{series.trials}"
        for outcome in outcomes
        for name, series in outcome.metrics.items()
    )
    print(f"completed {len(outcomes)} experiment(s) in {config.output_dir}: {losses}")
    return 0


def show_version():
    """顯示版本資訊"""
    from . import __author__, __version__

    print(f"PKF Tracking v{__version__}")
    print(f"作者: {__author__}")


if __name__ == "__main__":
    sys.exit(main())
