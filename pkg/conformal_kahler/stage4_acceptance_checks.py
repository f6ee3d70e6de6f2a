#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
內建 fixture 驗證：每個 fixture 跑指定命令並比對判定，輸出 ✅/❌ 表

    python -m conformal_kahler.stage4_acceptance_checks [--only NAME ...] [--summary-csv FILE]
"""

import argparse
import io
import json
import os
import sys
import tempfile
import time
import unittest
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Dict, Optional, Sequence

import pandas as pd

from core.exceptions import (
    DecimalLiteralInExactMode,
    DegenerateMetricAtPoint,
    DimensionTooSmall,
    ExpressionSyntaxError,
    MissingParameterValue,
    NonAntisymmetricBivector,
    NonAntisymmetricInput,
    NonPositiveConformalFactor,
    NonRiemannianMetric,
    NonSymmetricMetric,
    OddDimension,
    SchemaError,
    UndeclaredIdentifier,
)
from conformal_kahler.stage0_config_unified import ConformalKahlerConfig
from conformal_kahler.stage0_logger import LoggerPrint
from conformal_kahler.stage1_metric_ingest import load_problem_file
from conformal_kahler.stage2_analysis_pipeline import (
    INCONCLUSIVE,
    OBSTRUCTED,
    VERIFIED,
    AnalysisOptions,
    run_analysis,
)
from conformal_kahler.stage3_report_writer import build_report
from conformal_kahler.tool_ck_cli import EXIT_INPUT, EXIT_OK, run

GOLDEN_DET = "9639/17592186044416 * c^15"
GOLDEN_TRACES = {1: "0", 2: "-23/32 * c^2", 3: "135/128 * c^3"}

# 檔名 → 應該拋出的錯誤類別（精確類別，不接受父類別）
MALFORMED_EXPECTATIONS = {
    "odd_dimension.json": OddDimension,
    "dimension_two.json": DimensionTooSmall,
    "syntax_error.json": ExpressionSyntaxError,
    "undeclared_identifier.json": UndeclaredIdentifier,
    "degenerate_metric.json": DegenerateMetricAtPoint,
    "non_riemannian.json": NonRiemannianMetric,
    "non_symmetric.json": NonSymmetricMetric,
    "bad_conformal_factor.json": NonPositiveConformalFactor,
    "decimal_exact.json": DecimalLiteralInExactMode,
    "missing_metric.json": SchemaError,
    "not_json.json": SchemaError,
    "bivector_not_antisymmetric.json": NonAntisymmetricBivector,
    "float_missing_parameter.json": MissingParameterValue,
    "float_nonfinite.json": SchemaError,
    "division_by_zero.json": SchemaError,
    "omega_diagonal.json": NonAntisymmetricInput,
    "short_point.json": SchemaError,
    "negative_exponent.json": ExpressionSyntaxError,
    "unknown_key.json": SchemaError,
}


def _golden_obstruction(report) -> Optional[str]:
    item = report["sections"]["obstruction"]["bivectors"][0]
    if item["det"] != GOLDEN_DET:
        return f"det = {item['det']}"
    for k, expected in GOLDEN_TRACES.items():
        if item["traces"][k - 1] != expected:
            return f"s{k} = {item['traces'][k - 1]}"
    return None


def _all_dets_zero(report) -> Optional[str]:
    bad = [item["label"] for item in report["sections"]["obstruction"]["bivectors"] if item["det"] != "0"]
    return f"nonzero det for {bad}" if bad else None


def _weyl_vanishes(report) -> Optional[str]:
    return None if report["sections"]["curvature"]["weyl_vanishes"] else "Weyl tensor nonzero"


@dataclass
class FixtureCheck:
    fixture: str
    command: str
    expected: str
    options: AnalysisOptions = field(default_factory=AnalysisOptions)
    extra: Optional[Callable[[Dict], Optional[str]]] = None

    @property
    def name(self) -> str:
        flags = f" --random-bivectors {self.options.random_bivectors}" if self.options.random_bivectors else ""
        return f"{self.command} {self.fixture}{flags}"


FIXTURE_SUITE = [
    FixtureCheck("flat6d", "obstruction", INCONCLUSIVE, extra=_all_dets_zero),
    FixtureCheck("flat6d", "obstruction", INCONCLUSIVE, AnalysisOptions(random_bivectors=10), _all_dets_zero),
    FixtureCheck("example6d", "obstruction", OBSTRUCTED, extra=_golden_obstruction),
    FixtureCheck("confflat6d", "report", INCONCLUSIVE, extra=_weyl_vanishes),
    FixtureCheck("flat8d", "obstruction", INCONCLUSIVE, AnalysisOptions(random_bivectors=2), _all_dets_zero),
    FixtureCheck("witness6d", "cky-check", VERIFIED),
    FixtureCheck("witness6d", "kahler-check", VERIFIED, AnalysisOptions(random_bivectors=10), _all_dets_zero),
    FixtureCheck("witness6d", "tractor-check", VERIFIED),
    FixtureCheck("witness6d_curved", "cky-check", VERIFIED),
    FixtureCheck("witness6d_curved", "kahler-check", VERIFIED, AnalysisOptions(random_bivectors=10), _all_dets_zero),
    FixtureCheck("productkahler6d", "cky-check", VERIFIED),
    FixtureCheck("productkahler6d", "tractor-check", VERIFIED),
]


def fixture_path(config: ConformalKahlerConfig, name: str) -> str:
    return os.path.join(config.get_path('fixtures'), f"{name}.json")


def run_check(check: FixtureCheck, config: ConformalKahlerConfig) -> Dict:
    started = time.time()
    row = {"check": check.name, "expected": check.expected, "actual": "", "passed": False, "detail": ""}
    try:
        spec = load_problem_file(fixture_path(config, check.fixture), config=config)
        report = build_report(run_analysis(spec, check.command, check.options, config), config)
        row["actual"] = report["verdict"]["kind"]
        problem = check.extra(report) if check.extra else None
        row["passed"] = row["actual"] == check.expected and problem is None
        row["detail"] = problem or ""
    except Exception as exc:
        row["actual"] = type(exc).__name__
        row["detail"] = str(exc)
    row["seconds"] = round(time.time() - started, 2)
    return row


def run_fixture_suite(config: Optional[ConformalKahlerConfig] = None, only: Sequence[str] = (),
                      printer: Optional[LoggerPrint] = None) -> pd.DataFrame:
    config = config or ConformalKahlerConfig()
    printer = printer or LoggerPrint(name='conformal_kahler.acceptance')
    checks = [c for c in FIXTURE_SUITE if not only or c.fixture in only]
    printer.banner(f"fixture checks ({len(checks)})")
    rows = []
    for check in checks:
        row = run_check(check, config)
        printer.check(check.name, row["passed"],
                      row["detail"] or (f"{row['actual']}, {row['seconds']}s"))
        rows.append(row)
    table = pd.DataFrame(rows, columns=["check", "expected", "actual", "passed", "detail", "seconds"])
    printer.print("=" * 80)
    printer.print(f"passed {int(table['passed'].sum())}/{len(table)}")
    return table


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="內建 fixture 驗證")
    parser.add_argument('--only', nargs='*', default=[], help='只跑這些 fixture')
    parser.add_argument('--summary-csv', nargs='?', const='', metavar='FILE',
                        help='寫出結果表（不給檔名時寫到 workflow_results/acceptance/）')
    args = parser.parse_args(argv)
    config = ConformalKahlerConfig()
    printer = LoggerPrint(config.get('system.log_file'), config.get('system.log_level'),
                          'conformal_kahler.acceptance')
    table = run_fixture_suite(config, args.only, printer)
    if args.summary_csv is not None:
        path = args.summary_csv
        if not path:
            config.ensure_output_dir('acceptance')
            stamp = datetime.now().strftime(config.get('output.timestamp_format'))
            path = config.get_path('acceptance', 'acceptance_csv', timestamp=stamp)
        table.to_csv(path, index=False, encoding='utf-8')
        printer.print(f"💾 results saved to {path}")
    printer.close()
    return 0 if bool(table['passed'].all()) else 1


# ============================================================
# 測試
# ============================================================

_CONFIG = ConformalKahlerConfig(use_env=False)


def _cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


class TestMalformedCorpus(unittest.TestCase):

    def test_corpus_is_complete(self):
        directory = _CONFIG.get_path('malformed')
        files = sorted(f for f in os.listdir(directory) if f.endswith('.json'))
        self.assertGreaterEqual(len(files), 12)
        self.assertEqual(files, sorted(MALFORMED_EXPECTATIONS))

    def test_specific_errors(self):
        directory = _CONFIG.get_path('malformed')
        for filename, expected in MALFORMED_EXPECTATIONS.items():
            with self.subTest(filename=filename):
                with self.assertRaises(expected) as ctx:
                    load_problem_file(os.path.join(directory, filename), config=_CONFIG)
                self.assertIs(type(ctx.exception), expected)

    def test_cli_exit_codes(self):
        directory = _CONFIG.get_path('malformed')
        for filename in MALFORMED_EXPECTATIONS:
            with self.subTest(filename=filename):
                code, out, err = _cli("report", os.path.join(directory, filename))
                self.assertEqual(code, EXIT_INPUT)
                self.assertEqual(out, "")
                self.assertTrue(err.startswith("error:"))

    def test_syntax_error_names_key_and_position(self):
        code, _, err = _cli("report", os.path.join(_CONFIG.get_path('malformed'), "syntax_error.json"))
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("metric[x,y]", err)
        self.assertIn("column 4", err)


class TestCli(unittest.TestCase):

    def test_flat_random_bivectors(self):
        code, out, _ = _cli("obstruction", fixture_path(_CONFIG, "flat6d"), "--random-bivectors", "10")
        self.assertEqual(code, EXIT_OK)
        report = json.loads(out)
        self.assertEqual(report["verdict"]["kind"], INCONCLUSIVE)
        self.assertEqual(len(report["sections"]["obstruction"]["bivectors"]), 11)
        self.assertTrue(all(item["det"] == "0" for item in report["sections"]["obstruction"]["bivectors"]))

    def test_byte_identical_output(self):
        args = ("obstruction", fixture_path(_CONFIG, "flat6d"), "--random-bivectors", "2", "--seed", "7")
        self.assertEqual(_cli(*args)[1], _cli(*args)[1])

    def test_text_format_and_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            output = os.path.join(tmp, "flat.txt")
            summary = os.path.join(tmp, "flat.csv")
            code, out, _ = _cli("report", fixture_path(_CONFIG, "flat6d"), "--format", "text",
                                "--output", output, "--summary-csv", summary)
            self.assertEqual(code, EXIT_OK)
            self.assertIn("verdict: Inconclusive", out)
            with open(output, encoding='utf-8') as f:
                self.assertEqual(f.read(), out)
            self.assertIn("weyl_vanishes", set(pd.read_csv(summary)["check"]))

    def test_jet_order_recorded(self):
        code, out, _ = _cli("report", fixture_path(_CONFIG, "flat6d"), "--jet-order", "1")
        self.assertEqual(code, EXIT_OK)
        problem = json.loads(out)["problem"]
        self.assertEqual(problem["jet_order_requested"], 1)
        self.assertEqual(problem["jet_order_used"], 3)

    def test_input_errors(self):
        self.assertEqual(_cli("obstruction", "no/such/file.json")[0], EXIT_INPUT)
        self.assertEqual(_cli("obstruction", fixture_path(_CONFIG, "flat6d"), "--point", "w=1")[0], EXIT_INPUT)
        self.assertEqual(_cli("levitate", fixture_path(_CONFIG, "flat6d"))[0], EXIT_INPUT)
        self.assertEqual(_cli("obstruction", fixture_path(_CONFIG, "witness6d"))[0], EXIT_INPUT)

    def test_float_backend_with_parameter(self):
        code, out, _ = _cli("obstruction", fixture_path(_CONFIG, "example6d"), "--backend", "float",
                            "--param", "c=1")
        self.assertEqual(code, EXIT_OK)
        report = json.loads(out)
        det = report["sections"]["obstruction"]["bivectors"][0]["det"]
        self.assertAlmostEqual(float(det["value"]), 9639 / 17592186044416, delta=1e-11)
        self.assertEqual(report["problem"]["backend"]["mode"], "float")


class TestFixtureSuite(unittest.TestCase):

    def test_golden_obstruction(self):
        code, out, _ = _cli("obstruction", fixture_path(_CONFIG, "example6d"))
        self.assertEqual(code, EXIT_OK)
        self.assertIn('"det": "9639/17592186044416 * c^15"', out)
        report = json.loads(out)
        self.assertEqual(report["verdict"]["kind"], OBSTRUCTED)
        self.assertIsNone(_golden_obstruction(report))

    def test_witness_checks(self):
        for check in FIXTURE_SUITE:
            if check.fixture == "witness6d" and check.command != "kahler-check":
                with self.subTest(check=check.name):
                    row = run_check(check, _CONFIG)
                    self.assertTrue(row["passed"], row)

    def test_kahler_check_cli(self):
        code, out, _ = _cli("kahler-check", fixture_path(_CONFIG, "witness6d"))
        self.assertEqual(code, EXIT_OK)
        report = json.loads(out)
        self.assertEqual(report["verdict"]["kind"], VERIFIED)
        self.assertTrue(report["sections"]["kahler"]["x_hook_i_hook_phi"]["zero"])


if __name__ == "__main__":
    sys.exit(main())
