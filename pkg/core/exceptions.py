#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
共形 Kähler 工具包錯誤類別

InputError 子類別對應 CLI 退出碼 2（輸入問題），
InvariantViolation 對應退出碼 3（內部交叉檢查不一致，屬於程式錯誤）。
"""


class ConformalKahlerError(Exception):
    """所有錯誤的基底類別"""

    exit_code = 1

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def __str__(self):
        if not self.details:
            return self.message
        extra = ", ".join(f"{k}={v}" for k, v in sorted(self.details.items()))
        return f"{self.message} ({extra})"


# ============================================================
# 輸入錯誤 | Input errors (exit 2)
# ============================================================

class InputError(ConformalKahlerError):
    exit_code = 2


class ExpressionSyntaxError(InputError):
    """運算式語法錯誤，附帶行列位置"""

    def __init__(self, message: str, line: int, column: int, text: str = ""):
        super().__init__(message, line=line, column=column)
        self.line = line
        self.column = column
        self.text = text

    def __str__(self):
        return f"{self.message} at line {self.line}, column {self.column}"


class DecimalLiteralInExactMode(ExpressionSyntaxError):
    pass


class UndeclaredIdentifier(InputError):
    pass


class SchemaError(InputError):
    pass


class MissingParameterValue(SchemaError):
    pass


class NonSymmetricMetric(SchemaError):
    pass


class NonAntisymmetricInput(SchemaError):
    pass


class NonAntisymmetricBivector(NonAntisymmetricInput):
    pass


class OddDimension(InputError):
    pass


class DimensionTooSmall(InputError):
    pass


class DegenerateMetricAtPoint(InputError):
    pass


class NonRiemannianMetric(InputError):
    pass


class NonPositiveConformalFactor(InputError):
    pass


class NotKahlerInput(InputError):
    pass


class NonPerfectSquareConstantTerm(InputError):
    pass


class NonPositive(InputError):
    pass


class DegenerateOmega(InputError):
    pass


# ============================================================
# 分析錯誤 | Analysis errors
# ============================================================

class AnalysisError(ConformalKahlerError):
    exit_code = 2


class BasePointMismatch(AnalysisError):
    pass


class OrderMismatch(AnalysisError):
    pass


class DivisionByNonUnit(AnalysisError):
    pass


class OrderExhausted(AnalysisError):
    pass


class SlotMismatch(AnalysisError):
    pass


class ScaleMismatch(AnalysisError):
    pass


class InconsistentTraceCount(AnalysisError):
    pass


class DimensionFour(AnalysisError):
    """n = 4 時 Σ 公式不適用（該條件在四維自動成立）"""
    pass


class SampleNotOnVariety(AnalysisError):
    pass


# ============================================================
# 內部不變量 | Internal invariants (exit 3)
# ============================================================

class InvariantViolation(ConformalKahlerError):
    exit_code = 3
