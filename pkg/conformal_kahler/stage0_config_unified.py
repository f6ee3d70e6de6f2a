#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
共形 Kähler 工具包統一配置文件

巢狀字典 + 點號鍵存取；CK_* 環境變數（可放在 .env）覆寫預設值。
"""

import os
import unittest
from typing import Any, Dict, Optional

from dotenv import load_dotenv

# 載入 .env 文件
load_dotenv()

COMMANDS = ("report", "obstruction", "cky-check", "kahler-check", "tractor-check")

# 環境變數 → (配置鍵, 型別)
ENV_OVERRIDES = {
    "CK_JET_ORDER": ("jets.default_order", int),
    "CK_FLOAT_PRECISION": ("float_backend.precision", int),
    "CK_FLOAT_EPSILON": ("float_backend.epsilon", float),
    "CK_RANK_CUTOFF": ("float_backend.rank_cutoff", float),
    "CK_FD_STEP": ("float_backend.fd_step", float),
    "CK_RANDOM_SEED": ("obstruction.random_seed", int),
    "CK_LOG_LEVEL": ("system.log_level", str),
    "CK_LOG_FILE": ("system.log_file", str),
}


def _deep_merge(base: Dict[str, Any], updates: Dict[str, Any]):
    for key, value in updates.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_merge(base[key], value)
        else:
            base[key] = value


class ConformalKahlerConfig:
    """配置管理器"""

    def __init__(self, use_env: bool = True):
        # 基礎路徑
        self.base_dir = os.path.dirname(os.path.abspath(__file__))
        self.project_root = os.path.dirname(self.base_dir)

        self._config = {
            # 路徑配置
            "paths": {
                "fixtures": "fixtures",
                "malformed": "fixtures/malformed",
                "output_base": "workflow_results",
                "acceptance": "workflow_results/acceptance",
            },

            # 檔名配置
            "filenames": {
                "acceptance_csv": "fixture_checks_{timestamp}.csv",
            },

            # Jet 階數
            "jets": {
                "default_order": 4,
                "minimum_order": {
                    "report": 3,
                    "obstruction": 2,
                    "cky-check": 4,
                    "kahler-check": 4,
                    "tractor-check": 4,
                },
            },

            # 浮點後端
            "float_backend": {
                "precision": 53,
                "epsilon": 1e-9,
                "rank_cutoff": 1e-8,
                "fd_step": 1e-6,
            },

            # 障礙計算
            "obstruction": {
                "random_seed": 42,
                "bivector_bound": 5,          # 隨機雙向量元素落在 ±5
                "kahler_check_bivectors": 3,  # kahler-check 附帶的隨機雙向量數
            },

            # 報告
            "report": {
                "schema": "conformal-kahler-report/1",
                "listing_limit": 20,          # 每個殘差最多列出的非零分量
                "json_indent": 2,
            },

            # 輸出配置
            "output": {
                "timestamp_format": "%Y%m%d_%H%M%S",
            },

            # 系統配置
            "system": {
                "log_level": "INFO",
                "log_file": None,
                "create_dirs": True,
            },
        }
        if use_env:
            self._apply_env()

    def _apply_env(self):
        for variable, (key, kind) in ENV_OVERRIDES.items():
            raw = os.getenv(variable)
            if raw is None or raw == "":
                continue
            try:
                value = kind(raw)
            except ValueError:
                raise ValueError(f"environment variable {variable}={raw!r} is not a valid {kind.__name__}")
            self.set(key, value)

    def get(self, key: str, default=None) -> Any:
        """獲取配置項"""
        value = self._config
        for k in key.split('.'):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def set(self, key: str, value: Any):
        keys = key.split('.')
        node = self._config
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value

    def get_path(self, path_key: str, filename_key: Optional[str] = None, **kwargs) -> str:
        """
        獲取完整的檔案路徑

        Args:
            path_key: 路徑配置鍵 (如 'acceptance')
            filename_key: 檔名配置鍵 (如 'acceptance_csv')，可選
            **kwargs: 用於格式化檔名的參數 (如 timestamp)
        """
        dir_path = self.get(f'paths.{path_key}')
        if dir_path is None:
            raise KeyError(f"Path key '{path_key}' not found in config")
        full_path = os.path.join(self.project_root, dir_path)
        if filename_key:
            filename = self.get(f'filenames.{filename_key}')
            if filename is None:
                raise KeyError(f"Filename key '{filename_key}' not found in config")
            if kwargs:
                filename = filename.format(**kwargs)
            full_path = os.path.join(full_path, filename)
        return full_path

    def ensure_output_dir(self, path_key: str) -> str:
        dir_path = self.get_path(path_key)
        if self.get('system.create_dirs'):
            os.makedirs(dir_path, exist_ok=True)
        return dir_path

    def minimum_order(self, command: str) -> int:
        return int(self.get(f'jets.minimum_order.{command}', 0))

    def update_config(self, updates: Dict[str, Any]):
        """深層合併更新"""
        _deep_merge(self._config, updates)

    def validate(self):
        """檢查數值範圍，不合法時 ValueError"""
        if self.get('jets.default_order') < 0:
            raise ValueError("jets.default_order must be >= 0")
        if not self.get('float_backend.epsilon') > 0:
            raise ValueError("float_backend.epsilon must be > 0")
        if not 0 < self.get('float_backend.rank_cutoff') < 1:
            raise ValueError("float_backend.rank_cutoff must lie in (0, 1)")
        if not self.get('float_backend.fd_step') > 0:
            raise ValueError("float_backend.fd_step must be > 0")
        if self.get('obstruction.bivector_bound') < 1:
            raise ValueError("obstruction.bivector_bound must be >= 1")
        for command in COMMANDS:
            if self.minimum_order(command) < 0:
                raise ValueError(f"minimum order for {command} must be >= 0")
        return True


# ============================================================
# 測試
# ============================================================

class TestConfig(unittest.TestCase):

    def test_defaults(self):
        config = ConformalKahlerConfig(use_env=False)
        self.assertEqual(config.get('jets.default_order'), 4)
        self.assertEqual(config.minimum_order('obstruction'), 2)
        self.assertEqual(config.get('report.listing_limit'), 20)
        self.assertIsNone(config.get('no.such.key'))
        self.assertTrue(config.validate())

    def test_env_override(self):
        old = os.environ.get("CK_JET_ORDER")
        os.environ["CK_JET_ORDER"] = "6"
        try:
            self.assertEqual(ConformalKahlerConfig().get('jets.default_order'), 6)
        finally:
            if old is None:
                del os.environ["CK_JET_ORDER"]
            else:
                os.environ["CK_JET_ORDER"] = old

    def test_bad_env_value(self):
        old = os.environ.get("CK_FLOAT_EPSILON")
        os.environ["CK_FLOAT_EPSILON"] = "tiny"
        try:
            with self.assertRaises(ValueError):
                ConformalKahlerConfig()
        finally:
            if old is None:
                del os.environ["CK_FLOAT_EPSILON"]
            else:
                os.environ["CK_FLOAT_EPSILON"] = old

    def test_deep_merge_keeps_siblings(self):
        config = ConformalKahlerConfig(use_env=False)
        config.update_config({"float_backend": {"epsilon": 1e-6}})
        self.assertEqual(config.get('float_backend.epsilon'), 1e-6)
        self.assertEqual(config.get('float_backend.precision'), 53)
        config.update_config({"float_backend": {"epsilon": -1.0}})
        with self.assertRaises(ValueError):
            config.validate()

    def test_paths(self):
        config = ConformalKahlerConfig(use_env=False)
        path = config.get_path('acceptance', 'acceptance_csv', timestamp='20261018_120000')
        self.assertTrue(path.endswith(os.path.join('workflow_results', 'acceptance', 'fixture_checks_20261018_120000.csv')))
        with self.assertRaises(KeyError):
            config.get_path('nowhere')


if __name__ == "__main__":
    unittest.main()
