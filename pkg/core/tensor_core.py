#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
張量核心：以 Jet 為元素的稠密分量陣列

- Tensor：numpy object 陣列 + 指標型別字串（'u' 上標 / 'd' 下標）+ 共形權重註記
- MetricJet：g、g⁻¹（Jet 反矩陣）與 det g
- jet_einsum：只走非零分量的稀疏縮併（numpy.einsum 不支援 object 元素的截斷乘法）
- move_and_contract / alternate / symmetrize / covariant_derivative

括號一律正規化：T_[ab] = ½(T_ab − T_ba)。
協變導數的新指標放在第一個位置：(∇t)_{a i1 i2 ...} = ∇_a t_{i1 i2 ...}。
"""

import itertools
import logging
import math
import unittest
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from core.exact_scalars import Jet, JetSpace, ScalarBackend, format_param_poly
from core.exceptions import (
    DegenerateMetricAtPoint,
    InvariantViolation,
    NonSymmetricMetric,
    OrderExhausted,
    SlotMismatch,
)

logger = logging.getLogger(__name__)

SYMMETRIC = 'sym'
ANTISYMMETRIC = 'anti'


def _permutation_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


class Tensor:
    """
    稠密分量張量

    所有分量都是同一 JetSpace、同一階數的 Jet。
    symmetry 註記如 (('anti', (0, 1)),) 在建構時驗證，不用於壓縮儲存。
    """

    __slots__ = ('space', 'n', 'valence', 'components', 'weight', 'symmetry')

    def __init__(self, space: JetSpace, valence: str, components: np.ndarray,
                 weight: int = 0, symmetry: Sequence = (), verify: bool = True):
        if any(v not in 'ud' for v in valence):
            raise SlotMismatch("valence must be a string of 'u'/'d'", valence=valence)
        n = space.n
        if components.shape != (n,) * len(valence):
            raise SlotMismatch("component array does not match rank",
                               shape=components.shape, valence=valence)
        self.space = space
        self.n = n
        self.valence = valence
        self.components = components
        self.weight = weight
        self.symmetry = tuple((kind, tuple(slots)) for kind, slots in symmetry)
        if verify and self.symmetry:
            self.verify_symmetry()

    # ---------- 建構 ----------

    @classmethod
    def zeros(cls, space: JetSpace, valence: str, order: int, weight: int = 0) -> 'Tensor':
        comps = np.empty((space.n,) * len(valence), dtype=object)
        for idx in itertools.product(range(space.n), repeat=len(valence)):
            comps[idx] = space.zero(order)
        return cls(space, valence, comps, weight)

    @classmethod
    def from_function(cls, space: JetSpace, valence: str, order: int,
                      fn: Callable[..., Optional[Jet]], weight: int = 0,
                      symmetry: Sequence = ()) -> 'Tensor':
        comps = np.empty((space.n,) * len(valence), dtype=object)
        for idx in itertools.product(range(space.n), repeat=len(valence)):
            value = fn(*idx)
            if value is None:
                value = space.zero(order)
            elif not isinstance(value, Jet):
                value = space.constant(value, order)
            comps[idx] = value.truncate(order)
        return cls(space, valence, comps, weight, symmetry)

    @classmethod
    def from_entries(cls, space: JetSpace, valence: str, order: int,
                     entries: Dict[Tuple[int, ...], Jet], weight: int = 0,
                     symmetry: Sequence = ()) -> 'Tensor':
        return cls.from_function(space, valence, order, lambda *idx: entries.get(idx),
                                 weight, symmetry)

    # ---------- 屬性 ----------

    @property
    def rank(self) -> int:
        return len(self.valence)

    @property
    def order(self) -> int:
        return min(j.order for j in self.components.flat)

    def __getitem__(self, idx) -> Jet:
        return self.components[idx]

    def items(self) -> Iterable[Tuple[Tuple[int, ...], Jet]]:
        for idx in itertools.product(range(self.n), repeat=self.rank):
            yield idx, self.components[idx]

    def nonzero_items(self) -> List[Tuple[Tuple[int, ...], Jet]]:
        return [(idx, j) for idx, j in self.items() if j.poly]

    def __repr__(self):
        return f"Tensor(valence={self.valence!r}, order={self.order}, weight={self.weight})"

    # ---------- 算術（自動截斷到共同階數） ----------

    def truncate(self, order: int) -> 'Tensor':
        if order < 0:
            raise OrderExhausted("tensor order exhausted", order=order)
        if all(j.order <= order for j in self.components.flat):
            return self
        comps = np.empty(self.components.shape, dtype=object)
        for idx, j in self.items():
            comps[idx] = j.truncate(order)
        return Tensor(self.space, self.valence, comps, self.weight, self.symmetry, verify=False)

    def at_point(self) -> 'Tensor':
        return self.truncate(0)

    def _aligned(self, other: 'Tensor'):
        if self.valence != other.valence:
            raise SlotMismatch("valence mismatch", left=self.valence, right=other.valence)
        order = min(self.order, other.order)
        return self.truncate(order), other.truncate(order)

    def __add__(self, other: 'Tensor') -> 'Tensor':
        a, b = self._aligned(other)
        return Tensor(self.space, self.valence, a.components + b.components, self.weight, verify=False)

    def __sub__(self, other: 'Tensor') -> 'Tensor':
        a, b = self._aligned(other)
        return Tensor(self.space, self.valence, a.components - b.components, self.weight, verify=False)

    def __neg__(self) -> 'Tensor':
        return Tensor(self.space, self.valence, -self.components, self.weight, self.symmetry, verify=False)

    def scale(self, factor) -> 'Tensor':
        """乘上純量（有理數或 Jet）"""
        if isinstance(factor, Jet):
            order = min(self.order, factor.order)
            base = self.truncate(order)
            f = factor.truncate(order)
            comps = np.empty(base.components.shape, dtype=object)
            for idx, j in base.items():
                comps[idx] = j * f
            return Tensor(self.space, self.valence, comps, self.weight, verify=False)
        value = self.space.backend.convert(factor)
        comps = np.empty(self.components.shape, dtype=object)
        for idx, j in self.items():
            comps[idx] = j * value
        return Tensor(self.space, self.valence, comps, self.weight, self.symmetry, verify=False)

    def with_weight(self, weight: int) -> 'Tensor':
        return Tensor(self.space, self.valence, self.components, weight, self.symmetry, verify=False)

    def with_symmetry(self, symmetry: Sequence) -> 'Tensor':
        return Tensor(self.space, self.valence, self.components, self.weight, symmetry)

    def transpose(self, axes: Sequence[int]) -> 'Tensor':
        valence = "".join(self.valence[a] for a in axes)
        comps = np.transpose(self.components, axes).copy()
        return Tensor(self.space, valence, comps, self.weight, verify=False)

    # ---------- 判定 ----------

    def is_zero(self) -> bool:
        return all(j.is_zero() for j in self.components.flat)

    def max_abs(self) -> float:
        return max((j.max_abs() for j in self.components.flat), default=0.0)

    def equals(self, other: 'Tensor') -> bool:
        return (self - other).is_zero()

    def verify_symmetry(self):
        for kind, slots in self.symmetry:
            sign = 1 if kind == SYMMETRIC else -1
            for s, t in itertools.combinations(slots, 2):
                axes = list(range(self.rank))
                axes[s], axes[t] = axes[t], axes[s]
                swapped = np.transpose(self.components, axes)
                for idx in itertools.product(range(self.n), repeat=self.rank):
                    diff = self.components[idx] - swapped[idx] * sign
                    if not diff.is_zero():
                        raise InvariantViolation(
                            "declared symmetry does not hold",
                            kind=kind, slots=(s, t), index=idx)


# ============================================================
# 稀疏縮併
# ============================================================

def jet_einsum(subscripts: str, *operands: Tensor, valence: Optional[str] = None,
               weight: Optional[int] = None):
    """
    einsum 風格的縮併，例如 "ab,bc->ac"

    只走非零分量；各運算元先截斷到共同階數。輸出為空字串時回傳 Jet。
    """
    lhs, out = subscripts.replace(' ', '').split('->')
    inputs = lhs.split(',')
    if len(inputs) != len(operands):
        raise SlotMismatch("subscripts do not match operand count", subscripts=subscripts)
    for letters, op in zip(inputs, operands):
        if len(letters) != op.rank:
            raise SlotMismatch("subscript length does not match rank",
                               subscripts=letters, valence=op.valence)
    space = operands[0].space
    order = min(op.order for op in operands)

    # 依已綁定的字母建立索引表
    bound: List[str] = []
    tables = []
    for letters, op in zip(inputs, operands):
        shared = [pos for pos, ch in enumerate(letters) if ch in bound]
        table: Dict[Tuple[int, ...], list] = {}
        for idx, jet in op.nonzero_items():
            if any(idx[p] != idx[q] for p in range(len(letters)) for q in range(p)
                   if letters[p] == letters[q]):
                continue
            key = tuple(idx[p] for p in shared)
            table.setdefault(key, []).append((idx, jet.truncate(order)))
        tables.append((letters, shared, table))
        for ch in letters:
            if ch not in bound:
                bound.append(ch)

    acc: Dict[Tuple[int, ...], Jet] = {}

    def recurse(k: int, binding: Dict[str, int], product: Optional[Jet]):
        if k == len(tables):
            key = tuple(binding[ch] for ch in out)
            acc[key] = product if key not in acc else acc[key] + product
            return
        letters, shared, table = tables[k]
        key = tuple(binding[letters[p]] for p in shared)
        for idx, jet in table.get(key, ()):
            nxt = dict(binding)
            for ch, v in zip(letters, idx):
                nxt[ch] = v
            recurse(k + 1, nxt, jet if product is None else product * jet)

    recurse(0, {}, None)

    if out == '':
        return acc.get((), space.zero(order))

    if valence is None:
        variance = {}
        for letters, op in zip(inputs, operands):
            for ch, v in zip(letters, op.valence):
                variance.setdefault(ch, v)
        valence = "".join(variance[ch] for ch in out)
    if weight is None:
        weight = sum(op.weight for op in operands)
    comps = np.empty((space.n,) * len(out), dtype=object)
    for idx in itertools.product(range(space.n), repeat=len(out)):
        comps[idx] = acc.get(idx, space.zero(order))
    return Tensor(space, valence, comps, weight, verify=False)


def tensor_product(a: Tensor, b: Tensor) -> Tensor:
    letters = 'abcdefghijklmnop'
    la, lb = letters[:a.rank], letters[a.rank:a.rank + b.rank]
    return jet_einsum(f"{la},{lb}->{la}{lb}", a, b)


# ============================================================
# 度量
# ============================================================

class MetricJet:
    """
    度量 Jet：g_ab、g^ab 與 det g

    g 的常數部分必須是不含參數的可逆矩陣（參數不可出現在分母）。
    label 作為 tractor 計算的尺度標籤。
    """

    def __init__(self, g: Tensor, label: str = 'g'):
        if g.valence != 'dd':
            raise SlotMismatch("metric must be a down-down tensor", valence=g.valence)
        for a in range(g.n):
            for b in range(a):
                if not (g[a, b] - g[b, a]).is_zero():
                    raise NonSymmetricMetric("metric is not symmetric", index=(a, b))
        self.space = g.space
        self.n = g.n
        self.label = label
        self.g = Tensor(g.space, 'dd', g.components, 2, ((SYMMETRIC, (0, 1)),), verify=False)
        self.g_inv, self.det = _jet_matrix_inverse(self.g)

    @property
    def order(self) -> int:
        return self.g.order

    def truncate(self, order: int) -> 'MetricJet':
        if order >= self.order:
            return self
        return MetricJet(self.g.truncate(order), self.label)

    def identity_check(self) -> Tensor:
        """g·g⁻¹ − δ，應為零"""
        prod = jet_einsum("ab,bc->ac", self.g, self.g_inv, valence='du')
        delta = kronecker(self.space, prod.order, 'du')
        return prod - delta


def constant_matrix(t: Tensor) -> List[List]:
    """基點上的常數矩陣；元素必須不含參數"""
    rows = []
    for a in range(t.n):
        row = []
        for b in range(t.n):
            head = t[a, b].constant_term()
            if head and not head.is_ground:
                raise DegenerateMetricAtPoint(
                    "metric constant term depends on a parameter",
                    index=(a, b), value=format_param_poly(head))
            row.append(head.LC if head else t.space.backend.domain.zero)
        rows.append(row)
    return rows


def _jet_matrix_inverse(g: Tensor):
    """Neumann 級數 g⁻¹ = Σ (−A⁻¹H)^j A⁻¹，A 為常數部分"""
    space, n, order = g.space, g.n, g.order
    domain = space.backend.domain
    rows = constant_matrix(g)
    dm = DomainMatrix(rows, (n, n), domain)
    det0 = dm.det()
    if not det0:
        raise DegenerateMetricAtPoint("metric is singular at the base point")
    inv0 = dm.inv().to_list()
    a_inv = [[space.constant(inv0[i][j], order) for j in range(n)] for i in range(n)]
    h = [[g[i, j] - space.constant(rows[i][j], order) for j in range(n)] for i in range(n)]

    def matmul(x, y):
        return [[sum((x[i][k] * y[k][j] for k in range(n) if x[i][k].poly and y[k][j].poly),
                     space.zero(order)) for j in range(n)] for i in range(n)]

    step = [[-e for e in row] for row in matmul(a_inv, h)]
    term = a_inv
    total = a_inv
    for _ in range(order):
        term = matmul(step, term)
        total = [[total[i][j] + term[i][j] for j in range(n)] for i in range(n)]

    comps = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            comps[i, j] = total[i][j]
    g_inv = Tensor(space, 'uu', comps, weight=-2, symmetry=((SYMMETRIC, (0, 1)),))

    # 行列式：依序消去，主元的常數項為前導主子式比值
    work = [[g[i, j] for j in range(n)] for i in range(n)]
    det = space.one(order)
    for k in range(n):
        pivot = work[k][k]
        if not pivot.is_unit():
            # 換列到常數項可逆的位置
            for r in range(k + 1, n):
                if work[r][k].is_unit():
                    work[k], work[r] = work[r], work[k]
                    det = -det
                    pivot = work[k][k]
                    break
            else:
                raise DegenerateMetricAtPoint("no invertible pivot while computing det g")
        det = det * pivot
        inv_pivot = pivot.inverse()
        for r in range(k + 1, n):
            if not work[r][k].poly:
                continue
            factor = work[r][k] * inv_pivot
            for c in range(k, n):
                work[r][c] = work[r][c] - factor * work[k][c]
    return g_inv, det


def kronecker(space: JetSpace, order: int, valence: str = 'du') -> Tensor:
    return Tensor.from_function(space, valence, order, lambda a, b: 1 if a == b else None)


def flat_metric(space: JetSpace, order: int, label: str = 'flat') -> MetricJet:
    g = Tensor.from_function(space, 'dd', order, lambda a, b: 1 if a == b else None)
    return MetricJet(g, label)


# ============================================================
# 指標操作
# ============================================================

_LETTERS = 'abcdefghijklmnopqrstuvw'


def raise_index(t: Tensor, slot: int, m: MetricJet) -> Tensor:
    if t.valence[slot] != 'd':
        raise SlotMismatch("can only raise a down slot", slot=slot, valence=t.valence)
    letters = _LETTERS[:t.rank]
    new = 'z'
    src = letters[:slot] + 'y' + letters[slot + 1:]
    dst = letters[:slot] + new + letters[slot + 1:]
    valence = t.valence[:slot] + 'u' + t.valence[slot + 1:]
    return jet_einsum(f"{new}y,{src}->{dst}", m.g_inv, t, valence=valence, weight=t.weight - 2)


def lower_index(t: Tensor, slot: int, m: MetricJet) -> Tensor:
    if t.valence[slot] != 'u':
        raise SlotMismatch("can only lower an up slot", slot=slot, valence=t.valence)
    letters = _LETTERS[:t.rank]
    src = letters[:slot] + 'y' + letters[slot + 1:]
    dst = letters[:slot] + 'z' + letters[slot + 1:]
    valence = t.valence[:slot] + 'd' + t.valence[slot + 1:]
    return jet_einsum(f"zy,{src}->{dst}", m.g, t, valence=valence, weight=t.weight + 2)


def contract(t: Tensor, slot_a: int, slot_b: int) -> Tensor:
    if slot_a == slot_b or {t.valence[slot_a], t.valence[slot_b]} != {'u', 'd'}:
        raise SlotMismatch("contraction needs one up and one down slot",
                           slots=(slot_a, slot_b), valence=t.valence)
    letters = list(_LETTERS[:t.rank])
    letters[slot_b] = letters[slot_a]
    out = "".join(ch for i, ch in enumerate(letters) if i not in (slot_a, slot_b))
    valence = "".join(v for i, v in enumerate(t.valence) if i not in (slot_a, slot_b))
    return jet_einsum(f"{''.join(letters)}->{out}", t, valence=valence, weight=t.weight)


def move_and_contract(t: Tensor, plan: Sequence[Tuple], m: MetricJet):
    """
    依序執行 ('raise', slot) / ('lower', slot) / ('contract', i, j)

    縮併後 slot 編號依剩餘指標重新計算。
    """
    result = t
    for step in plan:
        kind = step[0]
        if kind == 'raise':
            result = raise_index(result, step[1], m)
        elif kind == 'lower':
            result = lower_index(result, step[1], m)
        elif kind == 'contract':
            if result.rank < 2:
                raise SlotMismatch("nothing left to contract")
            result = contract(result, step[1], step[2])
            if isinstance(result, Jet):
                return result
        else:
            raise SlotMismatch(f"unknown plan step {kind!r}")
    return result


def full_contraction(a: Tensor, b: Tensor, m: MetricJet) -> Jet:
    """a_{i..} b^{i..}（兩者皆全下標）"""
    raised = b
    for slot in range(b.rank):
        raised = raise_index(raised, slot, m)
    letters = _LETTERS[:a.rank]
    return jet_einsum(f"{letters},{letters}->", a, raised)


def _project(t: Tensor, slots: Sequence[int], signed: bool) -> Tensor:
    slots = list(slots)
    if len({t.valence[s] for s in slots}) > 1:
        raise SlotMismatch("(anti)symmetrized slots must share variance",
                           slots=slots, valence=t.valence)
    k = len(slots)
    total = None
    for perm in itertools.permutations(range(k)):
        axes = list(range(t.rank))
        for i, p in enumerate(perm):
            axes[slots[i]] = slots[p]
        comps = np.transpose(t.components, axes)
        if signed and _permutation_sign(perm) < 0:
            comps = -comps
        total = comps if total is None else total + comps
    factor = t.space.backend.convert(QQ(1, math.factorial(k)))
    out = np.empty(t.components.shape, dtype=object)
    for idx in itertools.product(range(t.n), repeat=t.rank):
        out[idx] = total[idx] * factor
    kind = ANTISYMMETRIC if signed else SYMMETRIC
    return Tensor(t.space, t.valence, out, t.weight, ((kind, tuple(slots)),), verify=False)


def alternate(t: Tensor, slots: Sequence[int]) -> Tensor:
    """正規化反對稱化：Σ sgn(π) t_π / k!"""
    return _project(t, slots, signed=True)


def symmetrize(t: Tensor, slots: Sequence[int]) -> Tensor:
    return _project(t, slots, signed=False)


# ============================================================
# Christoffel 與協變導數
# ============================================================

def partial_derivative(t: Tensor) -> Tensor:
    """∂_a t_{...}，新指標在第一位"""
    if t.order < 1:
        raise OrderExhausted("tensor order exhausted before differentiation", order=t.order)
    comps = np.empty((t.n,) * (t.rank + 1), dtype=object)
    for idx, jet in t.items():
        for a in range(t.n):
            comps[(a,) + idx] = jet.partial(a)
    return Tensor(t.space, 'd' + t.valence, comps, t.weight, verify=False)


def christoffel_symbols(m: MetricJet) -> Tensor:
    """Γ^a_bc = ½ g^ad (∂_b g_dc + ∂_c g_db − ∂_d g_bc)"""
    dg = partial_derivative(m.g)            # dg[d, b, c] = ∂_d g_bc
    half = m.space.backend.convert(QQ(1, 2))
    order = dg.order
    first = Tensor.from_function(
        m.space, 'ddd', order,
        lambda d, b, c: (dg[b, d, c] + dg[c, d, b] - dg[d, b, c]) * half)
    gamma = jet_einsum("ad,dbc->abc", m.g_inv, first, valence='udd', weight=0)
    return gamma.with_symmetry(((SYMMETRIC, (1, 2)),))


def covariant_derivative(t: Tensor, gamma: Tensor) -> Tensor:
    """
    Levi-Civita 協變導數，輸出階數 = min(t.order − 1, Γ.order)

    (∇_a t)_{..i..} = ∂_a t − Γ^e_{a i} t_{..e..}（下標）+ Γ^i_{a e} t^{..e..}（上標）
    """
    if t.order < 1:
        raise OrderExhausted("field order exhausted before covariant differentiation",
                             order=t.order)
    result = partial_derivative(t)
    letters = _LETTERS[:t.rank]
    out = 'z' + letters
    for slot, var in enumerate(t.valence):
        src = letters[:slot] + 'y' + letters[slot + 1:]
        if var == 'd':
            term = jet_einsum(f"yz{letters[slot]},{src}->{out}", gamma, t,
                              valence=result.valence, weight=t.weight)
            result = result - term
        else:
            term = jet_einsum(f"{letters[slot]}zy,{src}->{out}", gamma, t,
                              valence=result.valence, weight=t.weight)
            result = result + term
    return result


def covariant_derivative_scalar(f: Jet, valence_weight: int = 0) -> Tensor:
    """純量的 ∇_a f = ∂_a f"""
    space = f.space
    comps = np.empty((space.n,), dtype=object)
    for a in range(space.n):
        comps[a] = f.partial(a)
    return Tensor(space, 'd', comps, valence_weight, verify=False)


def trace(t: Tensor, m: MetricJet) -> Jet:
    """g^ab t_ab"""
    return jet_einsum("ab,ab->", m.g_inv, t)


# ============================================================
# 測試
# ============================================================

def _example_metric(order: int = 3, parameters=('c',), c_value=None, backend=None):
    """g = Σdx² + c(t²+yt)dxdy + c(t²+tu)dudv，交叉項各半分配；給了 c_value 時 c 代入數值"""
    if c_value is not None:
        parameters = ()
    space = JetSpace(['t', 'x', 'y', 'z', 'u', 'v'], list(parameters), [0] * 6, backend)
    t, x, y, z, u, v = (space.coordinate(i, order) for i in range(6))
    c = space.parameter('c', order) if c_value is None else space.constant(c_value, order)
    half = QQ(1, 2)
    gxy = c * (t * t + y * t) * half
    guv = c * (t * t + t * u) * half

    def entry(a, b):
        if a == b:
            return 1
        if {a, b} == {1, 2}:
            return gxy
        if {a, b} == {4, 5}:
            return guv
        return None

    return space, MetricJet(Tensor.from_function(space, 'dd', order, entry))


class TestIndexGymnastics(unittest.TestCase):

    def setUp(self):
        self.space = JetSpace(['x1', 'y1', 'x2', 'y2', 'x3', 'y3'], [], [0] * 6)
        self.flat = flat_metric(self.space, 2)
        pairs = {(0, 1): 1, (1, 0): -1, (2, 3): 1, (3, 2): -1, (4, 5): 1, (5, 4): -1}
        self.J = Tensor.from_function(self.space, 'dd', 2, lambda a, b: pairs.get((a, b)),
                                      symmetry=((ANTISYMMETRIC, (0, 1)),))

    def test_lower_identity_gives_metric(self):
        delta = kronecker(self.space, 2, 'ud')
        lowered = move_and_contract(delta, [('lower', 0)], self.flat)
        self.assertTrue(lowered.equals(self.flat.g))
        self.assertEqual(lowered.valence, 'dd')

    def test_symplectic_norm(self):
        norm = full_contraction(self.J, self.J, self.flat)
        self.assertEqual(format_param_poly(norm.constant_term()), "6")

    def test_raise_then_lower_round_trip(self):
        space, metric = _example_metric(3)
        x = space.coordinate(1, 3)
        t = space.coordinate(0, 3)
        form = Tensor.from_function(space, 'd', 3, lambda a: x * t + a)
        up = raise_index(form, 0, metric)
        back = lower_index(up, 0, metric)
        self.assertTrue(back.equals(form))

    def test_weight_bookkeeping(self):
        form = Tensor.from_function(self.space, 'dd', 2, lambda a, b: 1 if a < b else None, weight=3)
        raised = raise_index(form, 0, self.flat)
        self.assertEqual(raised.weight, 1)
        self.assertEqual(lower_index(raised, 0, self.flat).weight, 3)

    def test_slot_mismatch(self):
        with self.assertRaises(SlotMismatch):
            raise_index(raise_index(self.J, 0, self.flat), 0, self.flat)
        with self.assertRaises(SlotMismatch):
            contract(self.J, 0, 1)
        mixed = raise_index(self.J, 0, self.flat)
        with self.assertRaises(SlotMismatch):
            alternate(mixed, (0, 1))

    def test_metric_inverse_identity(self):
        _, metric = _example_metric(3)
        self.assertTrue(metric.identity_check().is_zero())
        self.assertEqual(format_param_poly(metric.det.constant_term()), "1")


class TestBrackets(unittest.TestCase):

    def setUp(self):
        self.space = JetSpace(['a0', 'a1', 'a2', 'a3'], [], [0] * 4)
        self.metric = flat_metric(self.space, 1)

    def test_alternate_symmetric_is_zero(self):
        sym = Tensor.from_function(self.space, 'dd', 1, lambda a, b: a + b + 1)
        self.assertTrue(alternate(sym, (0, 1)).is_zero())

    def test_bracket_normalization(self):
        K = Tensor.from_function(self.space, 'd', 1, lambda a: a + 2)
        gK = tensor_product(self.metric.g, K)
        twice = alternate(gK, (1, 2)).scale(2)
        expected = Tensor.from_function(
            self.space, 'ddd', 1,
            lambda a, b, c: self.metric.g[a, b] * K[c] - self.metric.g[a, c] * K[b])
        self.assertTrue(twice.equals(expected))

    def test_three_slot_alternation_is_projector(self):
        T = Tensor.from_function(self.space, 'ddd', 1, lambda a, b, c: a * b * b - 2 * c * a + b * c * c * c + 1)
        once = alternate(T, (0, 1, 2))
        twice = alternate(once, (0, 1, 2))
        self.assertTrue(once.equals(twice))
        self.assertFalse(once.is_zero())


class TestCovariantDerivative(unittest.TestCase):

    def test_flat_metric_is_parallel(self):
        space = JetSpace(['x', 'y', 'z', 'w'], [], [0] * 4)
        metric = flat_metric(space, 2)
        gamma = christoffel_symbols(metric)
        self.assertTrue(gamma.is_zero())
        self.assertTrue(covariant_derivative(metric.g, gamma).is_zero())

    def test_example_metric_compatibility(self):
        _, metric = _example_metric(3)
        gamma = christoffel_symbols(metric)
        nabla_g = covariant_derivative(metric.g, gamma)
        self.assertEqual(nabla_g.order, 2)
        self.assertTrue(nabla_g.is_zero())
        nabla_ginv = covariant_derivative(metric.g_inv, gamma)
        self.assertTrue(nabla_ginv.is_zero())

    def test_leibniz_rule(self):
        space, metric = _example_metric(3)
        gamma = christoffel_symbols(metric)
        t = space.coordinate(0, 3)
        y = space.coordinate(2, 3)
        alpha = Tensor.from_function(space, 'd', 3, lambda a: t * (a + 1) + y * y)
        beta = Tensor.from_function(space, 'd', 3, lambda a: y * t - a)
        lhs = covariant_derivative(tensor_product(alpha, beta), gamma)
        da, db = covariant_derivative(alpha, gamma), covariant_derivative(beta, gamma)
        rhs = jet_einsum("za,b->zab", da, beta) + jet_einsum("a,zb->zab", alpha, db)
        self.assertTrue(lhs.equals(rhs))


if __name__ == '__main__':
    unittest.main()
