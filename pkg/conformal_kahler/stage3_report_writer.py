#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
報告輸出：正規 JSON、文字檢視、pandas 摘要表

JSON 以 sort_keys 與固定縮排輸出，Exact 模式下同一輸入逐位元組相同。
"""

import json
import os
import tempfile
import unittest
from typing import Any, Dict, Iterator, List, Optional, Tuple

import pandas as pd

from conformal_kahler.stage0_config_unified import ConformalKahlerConfig
from conformal_kahler.stage2_analysis_pipeline import AnalysisResult

SUMMARY_COLUMNS = ["section", "check", "zero", "nonzero_count", "value"]


def build_report(result: AnalysisResult, config: Optional[ConformalKahlerConfig] = None) -> Dict[str, Any]:
    config = config or ConformalKahlerConfig()
    problem = result.spec.echo()
    problem["jet_order_requested"] = result.order_requested
    problem["jet_order_used"] = result.order_used
    return {
        "schema": config.get('report.schema'),
        "command": result.command,
        "problem": problem,
        "sections": result.sections,
        "verdict": result.verdict,
    }


def to_json(report: Dict[str, Any], indent: int = 2) -> str:
    return json.dumps(report, sort_keys=True, ensure_ascii=False, indent=indent) + "\n"


# ============================================================
# 摘要表
# ============================================================

def _residual_rows(node: Any, path: Tuple[str, ...]) -> Iterator[Dict[str, Any]]:
    """走訪區段樹：含 'zero' 的字典是殘差列表"""
    if isinstance(node, dict):
        if "zero" in node and "nonzero_count" in node:
            yield {"section": path[0], "check": ".".join(path[1:]) or path[0],
                   "zero": node["zero"], "nonzero_count": node["nonzero_count"], "value": ""}
            return
        for key in sorted(node):
            yield from _residual_rows(node[key], path + (key,))


def _plain(value) -> str:
    if isinstance(value, dict) and "value" in value:
        return str(value["value"])
    return str(value)


def summary_rows(report: Dict[str, Any]) -> List[Dict[str, Any]]:
    rows = []
    sections = report["sections"]
    for name in sorted(sections):
        section = sections[name]
        if name == "obstruction":
            for item in section["bivectors"]:
                rows.append({"section": name, "check": f"det[{item['label']}]",
                             "zero": not item["obstructed"], "nonzero_count": int(item["obstructed"]),
                             "value": _plain(item["det"])})
            continue
        if name == "curvature":
            for key in ("weyl_vanishes", "cotton_vanishes"):
                if section.get(key) is not None:
                    rows.append({"section": name, "check": key, "zero": section[key],
                                 "nonzero_count": int(not section[key]), "value": ""})
            rows.append({"section": name, "check": "weyl_norm_squared", "zero": None,
                         "nonzero_count": None, "value": _plain(section["weyl_norm_squared"])})
            continue
        rows.extend(_residual_rows(section, (name,)))
    return rows


def summary_table(report: Dict[str, Any]) -> pd.DataFrame:
    return pd.DataFrame(summary_rows(report), columns=SUMMARY_COLUMNS)


def write_summary_csv(report: Dict[str, Any], path: str) -> str:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    summary_table(report).to_csv(path, index=False, encoding='utf-8')
    return path


# ============================================================
# 文字檢視
# ============================================================

def render_text(report: Dict[str, Any]) -> str:
    problem = report["problem"]
    lines = ["=" * 80,
             f"{report['command']}: {problem['name']} (n={problem['dimension']}, "
             f"jet order {problem['jet_order_used']}, backend {problem['backend']['mode']})",
             "=" * 80]
    for row in summary_rows(report):
        if row["zero"] is None:
            lines.append(f"   {row['section']}.{row['check']}: {row['value']}")
            continue
        mark = "✅" if row["zero"] else "❌"
        value = f" = {row['value']}" if row["value"] else ""
        count = "" if row["zero"] else f" ({row['nonzero_count']} nonzero)"
        lines.append(f"{mark} {row['section']}.{row['check']}{value}{count}")
    verdict = report["verdict"]
    lines.append("-" * 80)
    lines.append(f"verdict: {verdict['kind']}")
    if verdict.get("note"):
        lines.append(f"   {verdict['note']}")
    for detail in verdict.get("details", []):
        lines.append(f"   ❌ {detail['residual']}: {detail['equation']}")
    lines.append("=" * 80)
    return "\n".join(lines) + "\n"


def write_report(report: Dict[str, Any], fmt: str = "json", output: Optional[str] = None,
                 indent: int = 2) -> str:
    """回傳輸出文字；給了 output 時同時寫檔"""
    text = to_json(report, indent) if fmt == "json" else render_text(report)
    if output:
        directory = os.path.dirname(os.path.abspath(output))
        os.makedirs(directory, exist_ok=True)
        with open(output, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
    return text


# ============================================================
# 測試
# ============================================================

def _sample_report() -> Dict[str, Any]:
    residual = {"zero": False, "nonzero_count": 1,
                "components": [{"index": "t,x", "at_point": "0", "jet": "2 * dy", "order": 3}]}
    return {
        "schema": "conformal-kahler-report/1",
        "command": "cky-check",
        "problem": {"name": "sample", "dimension": 6, "jet_order_used": 4,
                    "backend": {"mode": "exact"}},
        "sections": {
            "cky": {"connection": {"slot1": residual,
                                   "slot2a": {"zero": True, "nonzero_count": 0, "components": []}},
                    "section_source": "derived"},
            "obstruction": {"basis_size": 15, "bivectors": [
                {"label": "file", "det": "9639/17592186044416 * c^15", "obstructed": True}]},
        },
        "verdict": {"kind": "ResidualsNonzero",
                    "details": [{"residual": "connection.slot1", "equation": "first prolongation equation"}]},
    }


class TestReportWriter(unittest.TestCase):

    def test_json_is_canonical(self):
        report = _sample_report()
        text = to_json(report)
        shuffled = dict(reversed(list(report.items())))
        self.assertEqual(text, to_json(shuffled))
        self.assertTrue(text.endswith("}\n"))
        self.assertIn('"det": "9639/17592186044416 * c^15"', text)

    def test_summary_rows(self):
        table = summary_table(_sample_report())
        self.assertEqual(list(table.columns), SUMMARY_COLUMNS)
        checks = dict(zip(table["check"], table["zero"]))
        self.assertEqual(checks["connection.slot1"], False)
        self.assertEqual(checks["connection.slot2a"], True)
        self.assertEqual(checks["det[file]"], False)

    def test_text_view(self):
        text = render_text(_sample_report())
        self.assertIn("=" * 80, text)
        self.assertIn("❌ cky.connection.slot1 (1 nonzero)", text)
        self.assertIn("✅ cky.connection.slot2a", text)
        self.assertIn("verdict: ResidualsNonzero", text)

    def test_write_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            output = os.path.join(tmp, "reports", "sample.json")
            write_report(_sample_report(), "json", output)
            with open(output, encoding='utf-8') as f:
                self.assertEqual(json.load(f)["command"], "cky-check")
            csv_path = write_summary_csv(_sample_report(), os.path.join(tmp, "summary.csv"))
            self.assertEqual(len(pd.read_csv(csv_path)), 3)


if __name__ == '__main__':
    unittest.main()
