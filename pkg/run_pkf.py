import os
import sys
import warnings

# =======================================================
# PKF Tracking 啟動腳本
# 作用：
# 1. 把 components/pkf-tracking 加入 sys.path，免安裝即可執行
# 2. 可選：PKF_STDERR_LOG 指定時，把 stderr（調試日誌）重定向到文件
# 3. stdout 只保留最終的一行結果摘要
# =======================================================


def _redirect_stderr(log_path: str) -> None:
    try:
        sys.stderr = open(log_path, "a", encoding="utf-8", buffering=1)
    except OSError as e:
        sys.stderr.write(f"cannot open stderr log {log_path}: {e}\n")


def run() -> int:
    project_root = os.path.dirname(os.path.abspath(__file__))

    log_path = os.getenv("PKF_STDERR_LOG")
    if log_path:
        _redirect_stderr(log_path)

    # numpy 在試驗邊界被轉成例外處理，這裡不需要重複的警告
    warnings.filterwarnings("ignore", category=RuntimeWarning, module="numpy.*")

    component_dir = os.path.join(project_root, "components", "pkf-tracking")
    if component_dir not in sys.path:
        sys.path.insert(0, component_dir)

    from pkf_tracking.__main__ import main

    return main()


if __name__ == "__main__":
    sys.exit(run())
