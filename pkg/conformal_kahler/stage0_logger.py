#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
日誌輸出：LoggerPrint 同時寫到 stderr 與（可選的）檔案

stdout 只留給報告本身。
"""

import logging
import os
import sys
import tempfile
import unittest
from typing import Optional


class LoggerPrint:
    """自定義日志記錄器，同時輸出到控制台和文件"""

    def __init__(self, log_file: Optional[str] = None, level: str = "INFO",
                 name: str = 'conformal_kahler'):
        self.log_file = log_file
        self.logger = logging.getLogger(name)
        self.logger.setLevel(getattr(logging, level.upper(), logging.INFO))

        # 清除已有的處理器
        for handler in self.logger.handlers[:]:
            self.logger.removeHandler(handler)
            handler.close()

        formatter = logging.Formatter('%(message)s')

        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        self.logger.addHandler(console_handler)

        if log_file:
            directory = os.path.dirname(os.path.abspath(log_file))
            os.makedirs(directory, exist_ok=True)
            file_handler = logging.FileHandler(log_file, encoding='utf-8')
            file_handler.setFormatter(formatter)
            self.logger.addHandler(file_handler)

    def print(self, message: str):
        """同時記錄到文件和控制台"""
        self.logger.info(message)

    def banner(self, title: str):
        self.print("=" * 80)
        self.print(title)
        self.print("=" * 80)

    def check(self, label: str, ok: bool, detail: str = ""):
        mark = "✅" if ok else "❌"
        self.print(f"{mark} {label}{f' ({detail})' if detail else ''}")

    def close(self):
        for handler in self.logger.handlers[:]:
            self.logger.removeHandler(handler)
            handler.close()


def configure_library_logging(level: str = "INFO", log_file: Optional[str] = None) -> LoggerPrint:
    """核心與分析模組共用 'core' / 'analysis' logger，轉接到 LoggerPrint 的處理器"""
    printer = LoggerPrint(log_file, level)
    for name in ('core', 'analysis'):
        lib = logging.getLogger(name)
        lib.setLevel(printer.logger.level)
        for handler in lib.handlers[:]:
            lib.removeHandler(handler)
        for handler in printer.logger.handlers:
            lib.addHandler(handler)
        lib.propagate = False
    return printer


class TestLoggerPrint(unittest.TestCase):

    def test_file_output(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'logs', 'run.log')
            printer = LoggerPrint(path, name='conformal_kahler.test')
            printer.banner("fixture checks")
            printer.check("flat6d", True)
            printer.check("example6d", False, "det nonzero")
            printer.close()
            with open(path, encoding='utf-8') as f:
                text = f.read()
            self.assertIn("=" * 80, text)
            self.assertIn("✅ flat6d", text)
            self.assertIn("❌ example6d (det nonzero)", text)

    def test_level_filter(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'quiet.log')
            printer = LoggerPrint(path, level="WARNING", name='conformal_kahler.quiet')
            printer.print("hidden")
            printer.logger.warning("shown")
            printer.close()
            with open(path, encoding='utf-8') as f:
                self.assertEqual(f.read().strip(), "shown")


if __name__ == '__main__':
    unittest.main()
