#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
共形 Kähler 分析 CLI

退出碼：0 = 分析完成（判定寫在報告中），2 = 輸入錯誤，3 = 內部不變量不一致。
stdout 只輸出報告，日誌走 stderr。
"""

import argparse
import sys
import traceback
from typing import Optional, Sequence

from core.exceptions import ConformalKahlerError, InvariantViolation
from conformal_kahler.stage0_config_unified import COMMANDS, ConformalKahlerConfig
from conformal_kahler.stage0_logger import configure_library_logging
from conformal_kahler.stage1_metric_ingest import ProblemOverrides, load_problem_file
from conformal_kahler.stage2_analysis_pipeline import AnalysisOptions, run_analysis
from conformal_kahler.stage3_report_writer import build_report, write_report, write_summary_csv

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ck",
        description="共形 Kähler 判定工具：障礙行列式、延拓聯絡、tractor 檢查",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
使用範例:
  %(prog)s obstruction fixtures/example6d.json
  %(prog)s obstruction fixtures/flat6d.json --random-bivectors 10
  %(prog)s cky-check fixtures/witness6d.json --format text
  %(prog)s kahler-check fixtures/witness6d.json --output workflow_results/reports/witness6d.json
  %(prog)s tractor-check fixtures/witness6d.json --sigma "1/(1 + x)"
  %(prog)s report fixtures/example6d.json --backend float --param c=1/3
        """)
    parser.add_argument('command', choices=COMMANDS, help='分析命令')
    parser.add_argument('problem', help='問題檔 (JSON)')
    parser.add_argument('--jet-order', type=int, help='覆寫檔案中的 jet 階數（不足時自動提高）')
    parser.add_argument('--backend', choices=['exact', 'float'], help='純量後端')
    parser.add_argument('--point', metavar='x=…,y=…', help='覆寫基點座標')
    parser.add_argument('--param', action='append', default=[], metavar='c=1/3', help='指定參數值（可重複）')
    parser.add_argument('--random-bivectors', type=int, default=0, metavar='K', help='隨機雙向量個數')
    parser.add_argument('--seed', type=int, help='隨機雙向量種子（預設取自配置）')
    parser.add_argument('--per-pair', action='store_true', help='列出每個指標對的行列式與秩')
    parser.add_argument('--sigma', metavar='EXPR', help='明確給定尺度 σ（tractor / kahler 檢查）')
    parser.add_argument('--format', choices=['json', 'text'], default='json', help='輸出格式')
    parser.add_argument('--output', '-o', metavar='FILE', help='報告寫入檔案（同時輸出到 stdout）')
    parser.add_argument('--summary-csv', metavar='FILE', help='摘要表寫成 CSV')
    parser.add_argument('--log-level', help='日誌等級（預設取自配置）')
    return parser


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK

    config = ConformalKahlerConfig()
    printer = configure_library_logging(args.log_level or config.get('system.log_level'),
                                        config.get('system.log_file'))
    try:
        if args.random_bivectors < 0:
            raise ConformalKahlerError("--random-bivectors must be >= 0")
        config.validate()
        overrides = ProblemOverrides(point=args.point, params=args.param, backend=args.backend,
                                     jet_order=args.jet_order, sigma=args.sigma)
        spec = load_problem_file(args.problem, overrides, config)
        options = AnalysisOptions(random_bivectors=args.random_bivectors, seed=args.seed,
                                  per_pair=args.per_pair)
        result = run_analysis(spec, args.command, options, config)
        report = build_report(result, config)
        stdout.write(write_report(report, args.format, args.output, config.get('report.json_indent')))
        if args.summary_csv:
            write_summary_csv(report, args.summary_csv)
            printer.print(f"summary written to {args.summary_csv}")
        return EXIT_OK
    except InvariantViolation as exc:
        stderr.write(f"internal invariant violated: {exc}\n")
        return EXIT_INVARIANT
    except ConformalKahlerError as exc:
        stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return exc.exit_code if exc.exit_code in (EXIT_INPUT, EXIT_INVARIANT) else EXIT_INPUT
    except ValueError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except Exception:  # pragma: no cover
        stderr.write("internal error:\n" + traceback.format_exc())
        return EXIT_INVARIANT
    finally:
        printer.close()


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
