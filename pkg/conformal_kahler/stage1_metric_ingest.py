#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
度量問題檔讀取器

運算式文法（遞迴下降）：
    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | base ('^' uint)?
    base   := number | ident | '(' expr ')'
一元負號作用在整個 factor 上，所以 -x^2 = -(x^2)。

問題檔為 JSON；度量以 "a,b" 指標對對應運算式字串，ds² = g_ab dx^a dx^b
兩種順序都計入，印出的交叉項 f·dx dy 代表 g_xy = g_yx = f/2。
"""

import itertools
import json
import math
import os
import re
import unittest
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.curvature import check_conformal_factor
from core.exact_scalars import EXACT, FLOAT, Jet, JetSpace, ScalarBackend, to_rational
from core.exceptions import (
    DecimalLiteralInExactMode,
    DegenerateMetricAtPoint,
    DimensionTooSmall,
    DivisionByNonUnit,
    ExpressionSyntaxError,
    MissingParameterValue,
    NonAntisymmetricBivector,
    NonAntisymmetricInput,
    NonRiemannianMetric,
    NonSymmetricMetric,
    OddDimension,
    OrderExhausted,
    SchemaError,
    UndeclaredIdentifier,
)
from core.tensor_core import MetricJet, Tensor, _permutation_sign, constant_matrix
from conformal_kahler.stage0_config_unified import ConformalKahlerConfig

IDENTIFIER = re.compile(r'[A-Za-z_][A-Za-z0-9_]*')
TOP_LEVEL_KEYS = {
    "name", "dimension", "coordinates", "parameters", "parameter_values", "metric", "point",
    "jet_order", "omega", "bivector", "conformal_factor", "sigma", "section", "backend",
}
SECTION_SLOTS = {"K": 1, "mu": 3, "Sigma": 2}


# ============================================================
# 語法樹
# ============================================================

@dataclass(frozen=True)
class Span:
    line: int
    column: int


@dataclass(frozen=True)
class Number:
    text: str
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Identifier:
    name: str
    kind: str                     # 'coordinate' | 'parameter'
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Negate:
    operand: Any
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: Any
    right: Any
    span: Optional[Span] = field(default=None, compare=False)

    @property
    def needs_unit_check(self) -> bool:
        return self.op == '/'


@dataclass(frozen=True)
class Power:
    base: Any
    exponent: int
    span: Optional[Span] = field(default=None, compare=False)


Expression = Any

_PRECEDENCE = {'+': 1, '-': 1, '*': 2, '/': 2}


def _precedence(node) -> int:
    if isinstance(node, BinaryOp):
        return _PRECEDENCE[node.op]
    if isinstance(node, Negate):
        return 3
    if isinstance(node, Power):
        return 4
    return 5


def pretty(node) -> str:
    """正規化輸出；parse(pretty(e)) == e"""
    if isinstance(node, Number):
        return node.text
    if isinstance(node, Identifier):
        return node.name
    if isinstance(node, Negate):
        inner = pretty(node.operand)
        return "-" + (f"({inner})" if _precedence(node.operand) < 3 else inner)
    if isinstance(node, Power):
        inner = pretty(node.base)
        return (f"({inner})" if _precedence(node.base) < 5 else inner) + f"^{node.exponent}"
    level = _PRECEDENCE[node.op]
    left = pretty(node.left)
    right = pretty(node.right)
    if _precedence(node.left) < level:
        left = f"({left})"
    if _precedence(node.right) <= level:
        right = f"({right})"
    if level == 1:
        return f"{left} {node.op} {right}"
    return f"{left}{node.op}{right}"


# ============================================================
# 詞法與語法分析
# ============================================================

@dataclass
class Token:
    kind: str          # NUMBER | DECIMAL | IDENT | OP | LPAREN | RPAREN | EOF
    text: str
    span: Span


_TOKEN_PATTERN = re.compile(r'(?P<DECIMAL>\d+\.\d*|\.\d+)|(?P<NUMBER>\d+)|(?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)'
                            r'|(?P<OP>[-+*/^])|(?P<LPAREN>\()|(?P<RPAREN>\))|(?P<SPACE>[ \t\r]+)|(?P<NEWLINE>\n)')


def tokenize(text: str) -> List[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_PATTERN.match(text, pos)
        if match is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, text)
        kind = match.lastgroup
        if kind == 'NEWLINE':
            line, line_start = line + 1, match.end()
        elif kind != 'SPACE':
            tokens.append(Token(kind, match.group(), Span(line, pos - line_start + 1)))
        pos = match.end()
    tokens.append(Token('EOF', '', Span(line, pos - line_start + 1)))
    return tokens


class ExpressionParser:
    """遞迴下降剖析器，每個節點帶來源位置"""

    def __init__(self, text: str, coordinates: Sequence[str], parameters: Sequence[str],
                 allow_decimal: bool = False):
        self.text = text
        self.coordinates = set(coordinates)
        self.parameters = set(parameters)
        self.allow_decimal = allow_decimal
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def _error(self, message: str, token: Optional[Token] = None):
        token = token or self.current
        found = repr(token.text) if token.kind != 'EOF' else "end of input"
        return ExpressionSyntaxError(f"{message}, found {found}", token.span.line, token.span.column, self.text)

    def parse(self):
        node = self._expr()
        if self.current.kind != 'EOF':
            raise self._error("expected an operator or end of input")
        return node

    def _expr(self):
        node = self._term()
        while self.current.kind == 'OP' and self.current.text in '+-':
            op = self._advance()
            node = BinaryOp(op.text, node, self._term(), op.span)
        return node

    def _term(self):
        node = self._factor()
        while self.current.kind == 'OP' and self.current.text in '*/':
            op = self._advance()
            node = BinaryOp(op.text, node, self._factor(), op.span)
        return node

    def _factor(self):
        if self.current.kind == 'OP' and self.current.text == '-':
            op = self._advance()
            return Negate(self._factor(), op.span)
        node = self._base()
        if self.current.kind == 'OP' and self.current.text == '^':
            caret = self._advance()
            if self.current.kind != 'NUMBER':
                raise self._error("exponent must be a non-negative integer literal")
            node = Power(node, int(self._advance().text), caret.span)
        return node

    def _base(self):
        token = self.current
        if token.kind == 'NUMBER':
            self._advance()
            return Number(token.text, token.span)
        if token.kind == 'DECIMAL':
            if not self.allow_decimal:
                raise DecimalLiteralInExactMode(
                    f"decimal literal {token.text!r} is not allowed in exact mode",
                    token.span.line, token.span.column, self.text)
            self._advance()
            return Number(token.text, token.span)
        if token.kind == 'IDENT':
            self._advance()
            if token.text in self.coordinates:
                return Identifier(token.text, 'coordinate', token.span)
            if token.text in self.parameters:
                return Identifier(token.text, 'parameter', token.span)
            raise UndeclaredIdentifier(f"identifier {token.text!r} is neither a coordinate nor a parameter",
                                       name=token.text, line=token.span.line, column=token.span.column)
        if token.kind == 'LPAREN':
            self._advance()
            node = self._expr()
            if self.current.kind != 'RPAREN':
                raise self._error("expected ')'")
            self._advance()
            return node
        raise self._error("expected a number, identifier or '('")


def parse_expression(text: str, coordinates: Sequence[str], parameters: Sequence[str] = (),
                     allow_decimal: bool = False):
    if not isinstance(text, str):
        raise SchemaError("expressions must be strings", value=repr(text))
    return ExpressionParser(text, coordinates, parameters, allow_decimal).parse()


# ============================================================
# 求值
# ============================================================

def evaluate(node, space: JetSpace, order: int, parameter_values: Optional[Dict[str, Any]] = None) -> Jet:
    """運算式 → Jet；除法的分母必須是單位元"""
    values = parameter_values or {}
    if isinstance(node, Number):
        return space.constant(node.text, order)
    if isinstance(node, Identifier):
        if node.kind == 'coordinate':
            return space.coordinate(space.coordinates.index(node.name), order)
        if node.name in values:
            return space.constant(values[node.name], order)
        return space.parameter(node.name, order)
    if isinstance(node, Negate):
        return -evaluate(node.operand, space, order, values)
    if isinstance(node, Power):
        return evaluate(node.base, space, order, values) ** node.exponent
    left = evaluate(node.left, space, order, values)
    right = evaluate(node.right, space, order, values)
    if node.op == '+':
        return left + right
    if node.op == '-':
        return left - right
    if node.op == '*':
        return left * right
    if not right.is_unit():
        span = node.span or Span(0, 0)
        raise DivisionByNonUnit("denominator vanishes or depends on a parameter at the point",
                                denominator=pretty(node.right), line=span.line, column=span.column)
    return left / right


# ============================================================
# 問題規格
# ============================================================

@dataclass
class ProblemSpec:
    name: str
    dimension: int
    coordinates: List[str]
    parameters: List[str]
    parameter_values: Dict[str, str]
    metric: Dict[Tuple[int, int], Any]
    point: List[str]
    jet_order: int
    backend: ScalarBackend
    omega: Optional[Dict[Tuple[int, int], Any]] = None
    bivector: Optional[List[List[str]]] = None
    conformal_factor: Optional[Any] = None
    sigma: Optional[Any] = None
    section: Optional[Dict[str, Dict[Tuple[int, ...], Any]]] = None
    source: str = "<memory>"

    @property
    def symbolic_parameters(self) -> List[str]:
        return [p for p in self.parameters if p not in self.parameter_values]

    def space(self) -> JetSpace:
        return JetSpace(self.coordinates, self.symbolic_parameters, self.point, self.backend)

    def _jet(self, node, space: JetSpace, order: int) -> Jet:
        return evaluate(node, space, order, self.parameter_values)

    def metric_jet(self, space: JetSpace, order: int, label: str = "g") -> MetricJet:
        g = Tensor.from_function(space, 'dd', order, lambda a, b: (
            self._jet(self.metric[(a, b)], space, order) if (a, b) in self.metric else None))
        return MetricJet(g, label)

    def _antisymmetric(self, entries, space: JetSpace, order: int, rank: int, weight: int = 0) -> Tensor:
        values = {}
        for idx, node in entries.items():
            jet = self._jet(node, space, order)
            for perm in itertools.permutations(range(rank)):
                target = tuple(idx[p] for p in perm)
                values[target] = jet if _permutation_sign(perm) > 0 else -jet
        valence = 'd' * rank
        return Tensor.from_function(space, valence, order, lambda *idx: values.get(idx), weight)

    def omega_tensor(self, space: JetSpace, order: int) -> Optional[Tensor]:
        if self.omega is None:
            return None
        return self._antisymmetric(self.omega, space, order, 2, weight=3)

    def factor_jet(self, space: JetSpace, order: int) -> Optional[Jet]:
        return None if self.conformal_factor is None else self._jet(self.conformal_factor, space, order)

    def sigma_jet(self, space: JetSpace, order: int) -> Optional[Jet]:
        return None if self.sigma is None else self._jet(self.sigma, space, order)

    def section_tensors(self, space: JetSpace, order: int) -> Dict[str, Tensor]:
        result = {}
        for slot, entries in (self.section or {}).items():
            if slot == "K":
                result[slot] = Tensor.from_function(space, 'd', order, lambda a: (
                    self._jet(entries[(a,)], space, order) if (a,) in entries else None), 1)
            else:
                result[slot] = self._antisymmetric(entries, space, order, SECTION_SLOTS[slot],
                                                   weight=3 if slot == "mu" else 1)
        return result

    def bivector_entries(self) -> Optional[List[List]]:
        if self.bivector is None:
            return None
        return [[self.backend.convert(v) for v in row] for row in self.bivector]

    def echo(self) -> Dict[str, Any]:
        """報告中的問題回顯"""
        return {
            "name": self.name,
            "source": os.path.basename(self.source),
            "dimension": self.dimension,
            "coordinates": list(self.coordinates),
            "parameters": list(self.parameters),
            "parameter_values": dict(sorted(self.parameter_values.items())),
            "point": list(self.point),
            "jet_order": self.jet_order,
            "backend": self.backend.tag(),
            "metric": {f"{self.coordinates[a]},{self.coordinates[b]}": pretty(node)
                       for (a, b), node in sorted(self.metric.items()) if a <= b},
            "has_omega": self.omega is not None,
            "has_bivector": self.bivector is not None,
            "conformal_factor": None if self.conformal_factor is None else pretty(self.conformal_factor),
            "sigma": None if self.sigma is None else pretty(self.sigma),
        }


# ============================================================
# 讀取與驗證
# ============================================================

@dataclass
class ProblemOverrides:
    """CLI 覆寫：--point、--param、--backend、--jet-order、--sigma"""
    point: Optional[str] = None
    params: Sequence[str] = ()
    backend: Optional[str] = None
    jet_order: Optional[int] = None
    sigma: Optional[str] = None


def _require(condition: bool, message: str, **details):
    if not condition:
        raise SchemaError(message, **details)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _parse_backend(raw, config: ConformalKahlerConfig) -> ScalarBackend:
    precision = config.get('float_backend.precision')
    epsilon = config.get('float_backend.epsilon')
    if raw is None or raw == EXACT:
        return ScalarBackend.exact()
    if raw == FLOAT:
        return ScalarBackend.floating(precision, epsilon)
    if isinstance(raw, dict):
        mode = raw.get("mode", EXACT)
        if mode == EXACT:
            return ScalarBackend.exact()
        if mode == FLOAT:
            try:
                return ScalarBackend.floating(raw.get("precision", precision), raw.get("epsilon", epsilon))
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"invalid float backend settings: {exc}", key="backend")
    raise SchemaError("backend must be 'exact', 'float' or an object with a 'mode'", key="backend",
                      value=repr(raw))


def _literal(value, backend: ScalarBackend, key: str) -> str:
    """有理數字面值（浮點模式也接受有限小數），回傳正規字串"""
    if _is_int(value):
        return str(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            to_rational(text)
            return text
        except ValueError:
            if not backend.is_exact:
                try:
                    number = float(text)
                except ValueError:
                    number = None
                if number is not None and math.isfinite(number):
                    return text
    if isinstance(value, float) and not backend.is_exact and math.isfinite(value):
        return repr(value)
    raise SchemaError("expected a finite rational literal (integer or \"p/q\")", key=key, value=repr(value))


def _index(token: str, coordinates: Sequence[str], key: str) -> int:
    token = token.strip()
    if token in coordinates:
        return coordinates.index(token)
    if token.isdigit() and int(token) < len(coordinates):
        return int(token)
    raise SchemaError("index is neither a coordinate name nor a valid 0-based index", key=key, index=token)


def _index_map(raw, coordinates: Sequence[str], rank: int, key: str) -> Dict[Tuple[int, ...], Any]:
    _require(isinstance(raw, dict), f"'{key}' must be an object mapping index tuples to values", key=key)
    result = {}
    for label, value in raw.items():
        parts = label.split(',')
        _require(len(parts) == rank, f"'{key}' keys need {rank} comma-separated indices", key=f"{key}[{label}]")
        result[tuple(_index(p, coordinates, f"{key}[{label}]") for p in parts)] = value
    return result


def _parse_entry(text, spec_keys: Dict[str, Any], where: str):
    try:
        return parse_expression(text, spec_keys["coordinates"], spec_keys["parameters"],
                                allow_decimal=not spec_keys["backend"].is_exact)
    except ExpressionSyntaxError as exc:
        exc.message = f"{where}: {exc.message}"
        raise
    except UndeclaredIdentifier as exc:
        exc.message = f"{where}: {exc.message}"
        raise


def _check_evaluable(node, space: JetSpace, values: Dict[str, str], where: str) -> Jet:
    """在零階求值一次，除法與階數錯誤轉成輸入錯誤"""
    try:
        return evaluate(node, space, 0, values)
    except (DivisionByNonUnit, OrderExhausted) as exc:
        raise SchemaError(f"{where}: {exc.message}", **exc.details) from exc


def _parse_point_override(text: str, coordinates: Sequence[str], point: List) -> List:
    point = list(point)
    for item in text.split(','):
        if not item.strip():
            continue
        _require('=' in item, "--point expects name=value pairs", value=item)
        name, value = item.split('=', 1)
        _require(name.strip() in coordinates, "--point names an unknown coordinate", coordinate=name.strip())
        point[coordinates.index(name.strip())] = value.strip()
    return point


def _apply_overrides(raw: Dict[str, Any], overrides: Optional[ProblemOverrides]) -> Dict[str, Any]:
    if overrides is None:
        return raw
    raw = dict(raw)
    if overrides.backend is not None:
        raw["backend"] = overrides.backend
    if overrides.jet_order is not None:
        raw["jet_order"] = overrides.jet_order
    if overrides.sigma is not None:
        raw["sigma"] = overrides.sigma
    if overrides.params:
        values = dict(raw.get("parameter_values") or {})
        for item in overrides.params:
            _require('=' in item, "--param expects name=value", value=item)
            name, value = item.split('=', 1)
            values[name.strip()] = value.strip()
        raw["parameter_values"] = values
    if overrides.point is not None:
        coordinates = raw.get("coordinates") or []
        raw["point"] = _parse_point_override(overrides.point, list(coordinates),
                                             raw.get("point") or [0] * len(coordinates))
    return raw


def load_problem(data, source: str = "<memory>", overrides: Optional[ProblemOverrides] = None,
                 config: Optional[ConformalKahlerConfig] = None) -> ProblemSpec:
    """
    讀取並驗證問題檔（bytes 或 str）

    錯誤：SchemaError、OddDimension、DimensionTooSmall、DegenerateMetricAtPoint、
    NonRiemannianMetric、NonPositiveConformalFactor 等，全部屬於 InputError。
    """
    config = config or ConformalKahlerConfig()
    if isinstance(data, bytes):
        try:
            data = data.decode('utf-8')
        except UnicodeDecodeError as exc:
            raise SchemaError("problem file is not UTF-8", source=source) from exc
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", source=source, line=exc.lineno, column=exc.colno)
    _require(isinstance(raw, dict), "problem file must be a JSON object", source=source)
    raw = _apply_overrides(raw, overrides)

    unknown = sorted(set(raw) - TOP_LEVEL_KEYS)
    _require(not unknown, "unknown top-level keys", keys=unknown)
    for key in ("dimension", "coordinates", "metric", "point"):
        _require(key in raw, f"missing required key '{key}'", key=key)

    n = raw["dimension"]
    _require(_is_int(n), "'dimension' must be an integer", key="dimension")
    if n % 2:
        raise OddDimension("dimension must be even", dimension=n)
    if n < 4:
        raise DimensionTooSmall("dimension must be at least 4", dimension=n)

    coordinates = raw["coordinates"]
    _require(isinstance(coordinates, list) and len(coordinates) == n,
             "'coordinates' must list one name per dimension", key="coordinates")
    _require(all(isinstance(c, str) and IDENTIFIER.fullmatch(c) for c in coordinates),
             "coordinate names must be identifiers", key="coordinates")
    _require(len(set(coordinates)) == n, "coordinate names must be distinct", key="coordinates")

    parameters = raw.get("parameters") or []
    _require(isinstance(parameters, list) and all(isinstance(p, str) and IDENTIFIER.fullmatch(p)
                                                  for p in parameters),
             "'parameters' must be a list of identifiers", key="parameters")
    _require(len(set(parameters)) == len(parameters) and not set(parameters) & set(coordinates),
             "parameter names must be distinct from each other and from coordinates", key="parameters")

    backend = _parse_backend(raw.get("backend"), config)

    raw_values = raw.get("parameter_values") or {}
    _require(isinstance(raw_values, dict), "'parameter_values' must be an object", key="parameter_values")
    for name in raw_values:
        _require(name in parameters, "value given for an undeclared parameter", key=f"parameter_values[{name}]")
    parameter_values = {name: _literal(v, backend, f"parameter_values[{name}]") for name, v in raw_values.items()}
    if not backend.is_exact:
        missing = [p for p in parameters if p not in parameter_values]
        if missing:
            raise MissingParameterValue("float backend needs a value for every parameter", parameters=missing)

    point = raw["point"]
    _require(isinstance(point, list) and len(point) == n, "'point' must list one value per coordinate", key="point")
    point = [_literal(v, backend, f"point[{i}]") for i, v in enumerate(point)]

    jet_order = raw.get("jet_order", config.get('jets.default_order'))
    _require(_is_int(jet_order) and jet_order >= 0, "'jet_order' must be a non-negative integer", key="jet_order")

    keys = {"coordinates": coordinates, "parameters": parameters, "backend": backend}

    # 度量：下三角加對角，完整矩陣必須逐字對稱
    metric = {}
    for (a, b), text in _index_map(raw["metric"], coordinates, 2, "metric").items():
        where = f"metric[{coordinates[a]},{coordinates[b]}]"
        node = _parse_entry(text, keys, where)
        for idx in ((a, b), (b, a)):
            if idx in metric and metric[idx] != node:
                raise NonSymmetricMetric(f"{where}: both orderings given with different expressions",
                                         index=(coordinates[a], coordinates[b]))
            metric[idx] = node

    omega = None
    if raw.get("omega") is not None:
        omega = {}
        for (a, b), text in _index_map(raw["omega"], coordinates, 2, "omega").items():
            node = _parse_entry(text, keys, f"omega[{coordinates[a]},{coordinates[b]}]")
            if a == b:
                if node != Number("0"):
                    raise NonAntisymmetricInput("omega has a diagonal entry", index=(coordinates[a],) * 2)
                continue
            key = (min(a, b), max(a, b))
            if a < b:
                value = node
            else:
                value = node.operand if isinstance(node, Negate) else Negate(node)
            if key in omega and omega[key] != value:
                raise NonAntisymmetricInput("omega: both orderings given and they are not negatives",
                                            index=(coordinates[a], coordinates[b]))
            omega[key] = value

    bivector = None
    if raw.get("bivector") is not None:
        entries = _index_map(raw["bivector"], coordinates, 2, "bivector")
        matrix = [["0"] * n for _ in range(n)]
        seen = set()
        for (a, b), value in entries.items():
            text = _literal(value, backend, f"bivector[{coordinates[a]},{coordinates[b]}]")
            number = backend.convert(text)
            if a == b and number:
                raise NonAntisymmetricBivector("bivector has a diagonal entry", index=(coordinates[a],) * 2)
            if (b, a) in seen and backend.convert(matrix[b][a]) != -number:
                raise NonAntisymmetricBivector("bivector: both orderings given and they are not negatives",
                                               index=(coordinates[a], coordinates[b]))
            seen.add((a, b))
            matrix[a][b] = text
            if (b, a) not in seen:
                matrix[b][a] = "0" if not number else (text[1:] if text.startswith("-") else f"-{text}")
        bivector = matrix

    factor = None
    if raw.get("conformal_factor") is not None:
        factor = _parse_entry(raw["conformal_factor"], keys, "conformal_factor")

    sigma = None
    if raw.get("sigma") is not None:
        sigma = _parse_entry(raw["sigma"], keys, "sigma")

    section = None
    if raw.get("section") is not None:
        _require(isinstance(raw["section"], dict), "'section' must be an object", key="section")
        section = {}
        for slot, entries in raw["section"].items():
            _require(slot in SECTION_SLOTS, "section slots are K, mu and Sigma", key=f"section.{slot}")
            rank = SECTION_SLOTS[slot]
            parsed = {}
            for idx, text in _index_map(entries, coordinates, rank, f"section.{slot}").items():
                if rank > 1 and len(set(idx)) < rank:
                    raise NonAntisymmetricInput(f"section.{slot} has a repeated index", index=idx)
                order = sorted(range(rank), key=lambda i: idx[i])
                node = _parse_entry(text, keys, f"section.{slot}[{','.join(coordinates[i] for i in idx)}]")
                if rank > 1 and _permutation_sign(order) < 0:
                    node = Negate(node)
                parsed[tuple(sorted(idx))] = node
            section[slot] = parsed

    spec = ProblemSpec(
        name=raw.get("name") or os.path.splitext(os.path.basename(source))[0],
        dimension=n,
        coordinates=list(coordinates),
        parameters=list(parameters),
        parameter_values=parameter_values,
        metric=metric,
        point=point,
        jet_order=jet_order,
        backend=backend,
        omega=omega,
        bivector=bivector,
        conformal_factor=factor,
        sigma=sigma,
        section=section,
        source=source,
    )
    _validate_at_point(spec)
    return spec


def _validate_at_point(spec: ProblemSpec):
    """基點上的檢查：度量可逆且正定、共形因子為正、所有除法可做"""
    space = spec.space()
    values = spec.parameter_values
    for (a, b), node in spec.metric.items():
        _check_evaluable(node, space, values, f"metric[{spec.coordinates[a]},{spec.coordinates[b]}]")
    for (a, b), node in (spec.omega or {}).items():
        _check_evaluable(node, space, values, f"omega[{spec.coordinates[a]},{spec.coordinates[b]}]")
    for slot, entries in (spec.section or {}).items():
        for idx, node in entries.items():
            _check_evaluable(node, space, values, f"section.{slot}{list(idx)}")
    if spec.sigma is not None:
        _check_evaluable(spec.sigma, space, values, "sigma")

    metric0 = spec.metric_jet(space, 0)
    rows = constant_matrix(metric0.g)
    eigenvalues = np.linalg.eigvalsh(np.array([[float(v) for v in row] for row in rows]))
    if eigenvalues.min() <= 0:
        raise NonRiemannianMetric("metric is not positive definite at the point",
                                  smallest_eigenvalue=float(eigenvalues.min()))
    if spec.conformal_factor is not None:
        check_conformal_factor(_check_evaluable(spec.conformal_factor, space, values, "conformal_factor"))


def load_problem_file(path: str, overrides: Optional[ProblemOverrides] = None,
                      config: Optional[ConformalKahlerConfig] = None) -> ProblemSpec:
    try:
        with open(path, 'rb') as f:
            data = f.read()
    except OSError as exc:
        raise SchemaError(f"cannot read problem file: {exc.strerror}", path=path) from exc
    return load_problem(data, path, overrides, config)


def with_order(spec: ProblemSpec, order: int) -> ProblemSpec:
    return replace(spec, jet_order=order)


# ============================================================
# 測試
# ============================================================

_FLAT = {
    "dimension": 6,
    "coordinates": ["t", "x", "y", "z", "u", "v"],
    "metric": {f"{c},{c}": "1" for c in ["t", "x", "y", "z", "u", "v"]},
    "point": [0, 0, 0, 0, 0, 0],
}


def _with(**changes) -> str:
    raw = json.loads(json.dumps(_FLAT))
    raw.update(changes)
    return json.dumps(raw)


class TestExpressionParser(unittest.TestCase):

    coords = ['t', 'x', 'y', 'z', 'u', 'v']

    def test_literal(self):
        self.assertEqual(parse_expression("1", self.coords), Number("1"))

    def test_example_cross_term(self):
        node = parse_expression("c*(t^2 + y*t)", self.coords, ['c'])
        expected = BinaryOp('*', Identifier('c', 'parameter'),
                            BinaryOp('+', Power(Identifier('t', 'coordinate'), 2),
                                     BinaryOp('*', Identifier('y', 'coordinate'), Identifier('t', 'coordinate'))))
        self.assertEqual(node, expected)

    def test_syntax_error_position(self):
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            parse_expression("x +* y", self.coords)
        self.assertEqual((ctx.exception.line, ctx.exception.column), (1, 4))

    def test_errors(self):
        with self.assertRaises(UndeclaredIdentifier):
            parse_expression("x + w", self.coords)
        with self.assertRaises(DecimalLiteralInExactMode):
            parse_expression("1.5*x", self.coords)
        self.assertEqual(parse_expression("1.5*x", self.coords, allow_decimal=True),
                         BinaryOp('*', Number("1.5"), Identifier('x', 'coordinate')))
        for bad in ("x^-1", "(x + y", "x y", "", "x^2^3", "x $ y"):
            with self.assertRaises(ExpressionSyntaxError, msg=bad):
                parse_expression(bad, self.coords)

    def test_unary_minus_binds_looser_than_power(self):
        node = parse_expression("-x^2", self.coords)
        self.assertEqual(node, Negate(Power(Identifier('x', 'coordinate'), 2)))
        self.assertEqual(pretty(node), "-x^2")

    def test_pretty_parenthesizes(self):
        for text in ("(x - y) - (z - t)", "x/(y*z)", "(-x)^3", "-(x + y)", "x - y - z", "(x^2)^3"):
            node = parse_expression(text, self.coords)
            self.assertEqual(parse_expression(pretty(node), self.coords), node, text)
        self.assertEqual(pretty(parse_expression("((x))*(y)", self.coords)), "x*y")

    def test_evaluate(self):
        space = JetSpace(self.coords, ['c'], [0] * 6)
        t, y = space.coordinate(0, 2), space.coordinate(2, 2)
        jet = evaluate(parse_expression("c*(t^2 + y*t)", self.coords, ['c']), space, 2)
        self.assertEqual(jet, space.parameter('c', 2) * (t * t + y * t))
        inverse = evaluate(parse_expression("1/(1 + x)", self.coords), space, 3)
        x = space.coordinate(1, 3)
        self.assertEqual(inverse * (1 + x), space.one(3))
        with self.assertRaises(DivisionByNonUnit):
            evaluate(parse_expression("1/x", self.coords), space, 2)
        with self.assertRaises(DivisionByNonUnit):
            evaluate(parse_expression("1/c", self.coords, ['c']), space, 2)


class TestLoadProblem(unittest.TestCase):

    def test_flat(self):
        spec = load_problem(_with())
        self.assertEqual(spec.dimension, 6)
        self.assertEqual(spec.jet_order, 4)
        metric = spec.metric_jet(spec.space(), 2)
        self.assertTrue(metric.identity_check().is_zero())

    def test_cross_term_convention(self):
        metric = dict(_FLAT["metric"])
        metric["x,y"] = "c*(t^2 + y*t)/2"
        spec = load_problem(_with(metric=metric, parameters=["c"]))
        m = spec.metric_jet(spec.space(), 2)
        self.assertEqual(m.g[1, 2], m.g[2, 1])
        self.assertFalse(m.g[1, 2].is_zero())

    def test_dimension_errors(self):
        with self.assertRaises(OddDimension):
            load_problem(_with(dimension=5))
        with self.assertRaises(DimensionTooSmall):
            load_problem(json.dumps({"dimension": 2, "coordinates": ["x", "y"],
                                     "metric": {"x,x": "1", "y,y": "1"}, "point": [0, 0]}))

    def test_metric_errors(self):
        metric = dict(_FLAT["metric"])
        metric["t,t"] = "t"
        with self.assertRaises(DegenerateMetricAtPoint):
            load_problem(_with(metric=metric))
        metric["t,t"] = "-1"
        with self.assertRaises(NonRiemannianMetric):
            load_problem(_with(metric=metric))
        metric = dict(_FLAT["metric"], **{"x,y": "x", "y,x": "y"})
        with self.assertRaises(NonSymmetricMetric):
            load_problem(_with(metric=metric))

    def test_schema_errors(self):
        with self.assertRaises(SchemaError):
            load_problem("{not json")
        with self.assertRaises(SchemaError):
            load_problem(_with(point=[0, 0]))
        with self.assertRaises(SchemaError):
            load_problem(_with(colour="blue"))
        metric = dict(_FLAT["metric"], **{"x,x": "1/x"})
        with self.assertRaises(SchemaError) as ctx:
            load_problem(_with(metric=metric))
        self.assertIn("metric[x,x]", str(ctx.exception))

    def test_omega_and_bivector(self):
        spec = load_problem(_with(omega={"t,x": "1", "y,z": "1", "v,u": "-1"},
                                  bivector={"x,y": 2, "z,u": "1"}))
        omega = spec.omega_tensor(spec.space(), 1)
        self.assertEqual(omega[4, 5], spec.space().one(1))
        self.assertEqual(omega[5, 4], -spec.space().one(1))
        self.assertEqual(spec.bivector[2][1], "-2")
        with self.assertRaises(NonAntisymmetricInput):
            load_problem(_with(omega={"t,x": "1", "x,t": "1"}))
        consistent = load_problem(_with(omega={"t,x": "1", "x,t": "-1"}))
        self.assertEqual(consistent.omega, {(0, 1): Number("1")})
        with self.assertRaises(NonAntisymmetricBivector):
            load_problem(_with(bivector={"x,y": 2, "y,x": 2}))

    def test_float_backend(self):
        metric = dict(_FLAT["metric"], **{"x,y": "c*t/2"})
        with self.assertRaises(MissingParameterValue):
            load_problem(_with(metric=metric, parameters=["c"], backend="float"))
        spec = load_problem(_with(metric=metric, parameters=["c"], backend="float",
                                  parameter_values={"c": "0.5"}))
        self.assertEqual(spec.symbolic_parameters, [])
        self.assertFalse(spec.backend.is_exact)

    def test_non_finite_literals(self):
        metric = dict(_FLAT["metric"], **{"x,y": "c*t/2"})
        for value in ("nan", "-inf", "Infinity", float("inf"), float("nan")):
            with self.assertRaises(SchemaError) as ctx:
                load_problem(_with(metric=metric, parameters=["c"], backend="float",
                                   parameter_values={"c": value}))
            self.assertIn("parameter_values[c]", str(ctx.exception))
        with self.assertRaises(SchemaError):
            load_problem(_with(backend="float", bivector={"x,y": "inf"}))
        with self.assertRaises(SchemaError):
            load_problem(_with(backend="float", point=[0, "nan", 0, 0, 0, 0]))
        with self.assertRaises(SchemaError):
            load_problem(_with(metric=metric, parameters=["c"], backend="float"),
                         overrides=ProblemOverrides(params=["c=inf"]))

    def test_overrides(self):
        overrides = ProblemOverrides(point="x=1/2", jet_order=2, params=["c=1/3"])
        metric = dict(_FLAT["metric"], **{"x,y": "c*t/2"})
        spec = load_problem(_with(metric=metric, parameters=["c"]), overrides=overrides)
        self.assertEqual(spec.point[1], "1/2")
        self.assertEqual(spec.jet_order, 2)
        self.assertEqual(spec.parameter_values, {"c": "1/3"})
        with self.assertRaises(SchemaError):
            load_problem(_with(), overrides=ProblemOverrides(point="w=1"))

    def test_conformal_factor_checked(self):
        from core.exceptions import NonPositiveConformalFactor
        with self.assertRaises(NonPositiveConformalFactor):
            load_problem(_with(conformal_factor="x"))
        spec = load_problem(_with(conformal_factor="1 + x"))
        self.assertEqual(pretty(spec.conformal_factor), "1 + x")

    def test_section_orientation(self):
        spec = load_problem(_with(section={"mu": {"x,t,y": "1"}, "K": {"z": "2"}}))
        tensors = spec.section_tensors(spec.space(), 1)
        one = spec.space().one(1)
        self.assertEqual(tensors["mu"][1, 0, 2], one)
        self.assertEqual(tensors["mu"][0, 1, 2], -one)
        self.assertEqual(tensors["K"][3], one * 2)


try:
    from hypothesis import given, settings, seed
    from hypothesis import strategies as st

    _leaves = st.one_of(
        st.integers(min_value=0, max_value=20).map(lambda k: Number(str(k))),
        st.sampled_from(['x', 'y']).map(lambda s: Identifier(s, 'coordinate')),
        st.just(Identifier('c', 'parameter')),
    )
    _trees = st.recursive(_leaves, lambda inner: st.one_of(
        inner.map(Negate),
        st.tuples(inner, st.integers(min_value=0, max_value=3)).map(lambda p: Power(*p)),
        st.tuples(st.sampled_from('+-*/'), inner, inner).map(lambda p: BinaryOp(*p)),
    ), max_leaves=12)

    class TestPrettyRoundTrip(unittest.TestCase):

        @seed(21)
        @settings(max_examples=200, deadline=None)
        @given(_trees)
        def test_parse_pretty_identity(self, tree):
            self.assertEqual(parse_expression(pretty(tree), ['x', 'y'], ['c']), tree)

except ImportError:  # pragma: no cover
    pass


if __name__ == '__main__':
    unittest.main()
