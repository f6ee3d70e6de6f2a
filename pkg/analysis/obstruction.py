#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Weyl 代數障礙：β 映射、β_X、跡冪次 s_k、行列式

兩條獨立的行列式路徑互相驗證：
  1. 跡 → Newton 遞迴（等價於 Bell 多項式），並具體建出 ℬ 矩陣
  2. 無分數 Bareiss 消去（精確模式）/ scipy（浮點模式）

二形式基底為 a<b 的字典序配對；矩陣元素
  M[(a,b),(c,d)] = K_ab^cd − K_ab^dc
使 (Lφ)_ab = Σ_{c<d} M[(a,b),(c,d)] φ_cd 對 φ 的全指標和成立。

所有計算都在基點上進行，元素為參數多項式（ParamPoly）。
"""

import itertools
import logging
import math
import time
import unittest
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla
from sympy.polys.domains import QQ

from core.curvature import CurvaturePack, curvature_pack, kulkarni_nomizu, weyl_part
from core.exact_scalars import JetSpace, ScalarBackend, format_param_poly, max_abs_coefficient
from core.exceptions import (
    InconsistentTraceCount,
    InvariantViolation,
    NonAntisymmetricBivector,
)
from core.tensor_core import (
    MetricJet,
    Tensor,
    _example_metric,
    flat_metric,
    jet_einsum,
    raise_index,
)

logger = logging.getLogger(__name__)


class TwoFormBasis:
    """Λ² 的 a<b 配對基底，N = n(n−1)/2"""

    def __init__(self, n: int):
        self.n = n
        self.pairs: List[Tuple[int, int]] = list(itertools.combinations(range(n), 2))
        self.N = len(self.pairs)
        self.position: Dict[Tuple[int, int], int] = {p: i for i, p in enumerate(self.pairs)}
        if self.N != n * (n - 1) // 2:
            raise InvariantViolation("pair basis size mismatch", n=n, N=self.N)

    def __len__(self):
        return self.N

    def labels(self, coordinates: Sequence[str]) -> List[str]:
        return [f"{coordinates[a]}{coordinates[b]}" for a, b in self.pairs]


@dataclass
class BetaMatrix:
    entries: List[List]
    basis: TwoFormBasis
    bivector: np.ndarray
    ring: object

    def trace(self):
        return sum((self.entries[i][i] for i in range(self.basis.N)), self.ring.zero)


@dataclass
class ObstructionReport:
    n: int
    bivector: np.ndarray
    traces: List
    det: object
    det_oracle: object
    det_bell: object
    consistent: bool
    backend: ScalarBackend
    per_pair: Optional[List[Dict]] = None
    elapsed: float = 0.0

    @property
    def N(self) -> int:
        return len(self.traces)

    @property
    def obstructed(self) -> bool:
        return not is_zero_value(self.det, self.backend)


# ============================================================
# 基點數值
# ============================================================

def is_zero_value(value, backend: ScalarBackend) -> bool:
    if backend.is_exact:
        return not value
    return max_abs_coefficient(value) <= backend.epsilon


def point_values(t: Tensor) -> np.ndarray:
    """張量在基點的值（ParamPoly 陣列）"""
    out = np.empty(t.components.shape, dtype=object)
    for idx, jet in t.items():
        out[idx] = jet.constant_term()
    return out


def weyl_point(pack: CurvaturePack) -> np.ndarray:
    """C_abc^d 在基點"""
    metric0 = pack.metric.truncate(0)
    return point_values(raise_index(pack.weyl.at_point(), 3, metric0))


def bivector_array(space: JetSpace, entries) -> np.ndarray:
    """把 n×n 有理數矩陣轉成 X^ab，檢查反對稱"""
    n = space.n
    X = np.empty((n, n), dtype=object)
    for a in range(n):
        for b in range(n):
            X[a, b] = space.backend.convert(entries[a][b])
    for a in range(n):
        for b in range(a, n):
            if not is_zero_value(space.param_ring.ground_new(X[a, b] + X[b, a]), space.backend):
                raise NonAntisymmetricBivector("bivector is not antisymmetric", index=(a, b))
    return X


def random_bivectors(n: int, count: int, seed: int = 42, bound: int = 5) -> List[List[List]]:
    """整數元素落在 ±bound 的反對稱矩陣"""
    rng = np.random.default_rng(seed)
    result = []
    for _ in range(count):
        upper = rng.integers(-bound, bound + 1, size=(n, n))
        X = [[QQ(0)] * n for _ in range(n)]
        for a in range(n):
            for b in range(a + 1, n):
                X[a][b] = QQ(int(upper[a, b]))
                X[b][a] = -X[a][b]
        result.append(X)
    return result


# ============================================================
# β 映射
# ============================================================

def beta_entry(Cm: np.ndarray, e, f, a, b, c, d, half):
    """β_efab^cd = C_ef[a^c δ^d_b] + C_ab[e^c δ^d_f]"""
    value = Cm[0, 0, 0, 0].ring.zero
    if d == b:
        value = value + Cm[e, f, a, c]
    if d == a:
        value = value - Cm[e, f, b, c]
    if d == f:
        value = value + Cm[a, b, e, c]
    if d == e:
        value = value - Cm[a, b, f, c]
    return value.mul_ground(half)


def pair_matrix(kernel, basis: TwoFormBasis) -> List[List]:
    """K_ab^cd → a<b 基底上的矩陣"""
    return [[kernel(a, b, c, d) - kernel(a, b, d, c) for (c, d) in basis.pairs]
            for (a, b) in basis.pairs]


def beta_x_components(space: JetSpace, Cm: np.ndarray, X: np.ndarray):
    """
    (β_X)_ab^cd = ½(XC_a^c δ^d_b − XC_b^c δ^d_a) + C_abe^c X^ed，XC_a^c = X^ef C_efa^c
    """
    n = space.n
    ring = space.param_ring
    half = space.backend.convert(QQ(1, 2))
    support = [(e, f) for e in range(n) for f in range(n) if X[e, f]]
    xc = [[sum((Cm[e, f, a, c].mul_ground(X[e, f]) for e, f in support), ring.zero)
           for c in range(n)] for a in range(n)]
    cx = np.empty((n,) * 4, dtype=object)
    for a, b, c, d in itertools.product(range(n), repeat=4):
        value = sum((Cm[a, b, e, c].mul_ground(X[e, d]) for e in range(n) if X[e, d]), ring.zero)
        if d == b:
            value = value + xc[a][c].mul_ground(half)
        if d == a:
            value = value - xc[b][c].mul_ground(half)
        cx[a, b, c, d] = value
    return cx


def beta_matrix(space: JetSpace, Cm: np.ndarray, X: np.ndarray) -> BetaMatrix:
    basis = TwoFormBasis(space.n)
    components = beta_x_components(space, Cm, X)
    entries = pair_matrix(lambda a, b, c, d: components[a, b, c, d], basis)
    beta = BetaMatrix(entries, basis, X, space.param_ring)
    tr = beta.trace()
    if not is_zero_value(tr, space.backend):
        raise InvariantViolation("trace of beta_X is not zero", trace=format_param_poly(tr))
    return beta


def beta_apply(space: JetSpace, Cm: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """β_bcad^ef ω_ef（全指標和）"""
    n = space.n
    half = space.backend.convert(QQ(1, 2))
    support = [(e, f) for e in range(n) for f in range(n) if omega[e, f]]
    out = np.empty((n,) * 4, dtype=object)
    for b, c, a, d in itertools.product(range(n), repeat=4):
        out[b, c, a, d] = sum((beta_entry(Cm, b, c, a, d, e, f, half) * omega[e, f]
                               for e, f in support), space.param_ring.zero)
    return out


def weyl_constraint_residual(weyl_mixed: Tensor, omega: Tensor) -> Tensor:
    """C_bc[a^e ω_d]e + C_ad[b^e ω_c]e，輸出指標順序 (b, c, a, d)"""
    half = QQ(1, 2)
    first = jet_einsum("bcae,de->bcad", weyl_mixed, omega, valence='dddd')
    second = jet_einsum("adbe,ce->bcad", weyl_mixed, omega, valence='dddd')
    return ((first - first.transpose((0, 1, 3, 2))).scale(half)
            + (second - second.transpose((1, 0, 2, 3))).scale(half))


def commutator_residual(weyl: Tensor, omega: Tensor, m: MetricJet) -> List[List]:
    """
    [C, ω] 作為 Λ² 上的 N×N 矩陣

    C(φ)_ab = C^cd_ab φ_cd，ω(φ)_ab = ω_[a^c φ_b]c
    """
    metric0 = m.truncate(0)
    space = m.space
    ring = space.param_ring
    basis = TwoFormBasis(space.n)
    half = space.backend.convert(QQ(1, 2))
    c_up = point_values(raise_index(raise_index(weyl.at_point(), 0, metric0), 1, metric0))
    w_mixed = point_values(raise_index(omega.at_point(), 1, metric0))

    def omega_kernel(a, b, c, d):
        value = ring.zero
        if b == c:
            value = value + w_mixed[a, d]
        if a == c:
            value = value - w_mixed[b, d]
        return value.mul_ground(half)

    c_mat = pair_matrix(lambda a, b, c, d: c_up[c, d, a, b], basis)
    w_mat = pair_matrix(omega_kernel, basis)
    left = matmul(c_mat, w_mat, ring)
    right = matmul(w_mat, c_mat, ring)
    return [[left[i][j] - right[i][j] for j in range(basis.N)] for i in range(basis.N)]


def matrix_is_zero(matrix: List[List], backend: ScalarBackend) -> bool:
    return all(is_zero_value(v, backend) for row in matrix for v in row)


# ============================================================
# 跡與行列式
# ============================================================

def matmul(A: List[List], B: List[List], ring) -> List[List]:
    size = len(A)
    cols = len(B[0]) if B else 0
    nonzero_b = [[(k, B[k][j]) for k in range(len(B)) if B[k][j]] for j in range(cols)]
    return [[sum((A[i][k] * bkj for k, bkj in nonzero_b[j] if A[i][k]), ring.zero)
             for j in range(cols)] for i in range(size)]


def trace_powers(matrix: List[List], upto: int, ring) -> List:
    """s_k = Tr(M^k)，k = 1..upto"""
    size = len(matrix)
    power = matrix
    traces = []
    for k in range(1, upto + 1):
        if k > 1:
            power = matmul(power, matrix, ring)
        traces.append(sum((power[i][i] for i in range(size)), ring.zero))
    return traces


def obstruction_det(traces: Sequence, N: int, ring):
    """
    Newton 恆等式：e_0 = 1，k e_k = Σ_{i=1..k} (−1)^{i−1} e_{k−i} s_i，det = e_N
    """
    if len(traces) != N:
        raise InconsistentTraceCount("need exactly N power traces", expected=N, given=len(traces))
    e = [ring.one]
    for k in range(1, N + 1):
        acc = ring.zero
        for i in range(1, k + 1):
            term = e[k - i] * traces[i - 1]
            acc = acc + term if i % 2 == 1 else acc - term
        e.append(acc.quo_ground(ring.domain.convert(k)))
    return e[N]


def bell_matrix(traces: Sequence, N: int, ring) -> List[List]:
    """
    下 Hessenberg：ℬ[i][j] = s_{i−j+1} (j ≤ i)，ℬ[i][i+1] = i+1，第一列乘 1/N!
    """
    if len(traces) != N:
        raise InconsistentTraceCount("need exactly N power traces", expected=N, given=len(traces))
    rows = []
    for i in range(N):
        row = []
        for j in range(N):
            if j <= i:
                row.append(traces[i - j])
            elif j == i + 1:
                row.append(ring.ground_new(ring.domain.convert(i + 1)))
            else:
                row.append(ring.zero)
        rows.append(row)
    scale = ring.domain.convert(QQ(1, math.factorial(N)))
    rows[0] = [v.mul_ground(scale) for v in rows[0]]
    return rows


def _fraction_free_echelon(matrix: List[List], ring):
    """Bareiss 無分數消去；回傳 (消去後矩陣, 秩, 換列符號)"""
    A = [list(row) for row in matrix]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    sign = 1
    previous = ring.one
    rank = 0
    for k in range(cols):
        if rank == rows:
            break
        pivot_row = next((i for i in range(rank, rows) if A[i][k]), None)
        if pivot_row is None:
            continue
        if pivot_row != rank:
            A[pivot_row], A[rank] = A[rank], A[pivot_row]
            sign = -sign
        pivot = A[rank][k]
        for i in range(rank + 1, rows):
            lead = A[i][k]
            for j in range(k + 1, cols):
                A[i][j] = (pivot * A[i][j] - lead * A[rank][j]).exquo(previous)
            A[i][k] = ring.zero
        previous = pivot
        rank += 1
    return A, rank, sign


def _float_array(matrix: List[List]) -> np.ndarray:
    return np.array([[float(v.LC) if v else 0.0 for v in row] for row in matrix], dtype=float)


def det_oracle(matrix: List[List], ring):
    """
    獨立的行列式：精確模式用 Bareiss，浮點模式用 scipy.linalg.det
    """
    size = len(matrix)
    if size == 0:
        return ring.one
    if ring.domain != QQ:
        return ring.ground_new(ring.domain.convert(float(sla.det(_float_array(matrix)))))
    A, rank, sign = _fraction_free_echelon(matrix, ring)
    if rank < size:
        return ring.zero
    return A[size - 1][size - 1] if sign > 0 else -A[size - 1][size - 1]


def matrix_rank(matrix: List[List], ring, cutoff: float = 1e-8) -> int:
    if ring.domain != QQ:
        values = sla.svdvals(_float_array(matrix))
        if not len(values) or values[0] == 0.0:
            return 0
        return int(np.sum(values > cutoff * values[0]))
    return _fraction_free_echelon(matrix, ring)[1]


def dets_agree(left, right, backend: ScalarBackend) -> bool:
    if backend.is_exact:
        return left == right
    a = float(left.LC) if left else 0.0
    b = float(right.LC) if right else 0.0
    return abs(a - b) <= backend.epsilon * max(1.0, abs(a), abs(b))


def per_pair_determinants(space: JetSpace, Cm: np.ndarray, rank_cutoff: float = 1e-8) -> List[Dict]:
    """固定 [bc]，矩陣 β_bc(ad)^(ef) 的行列式與秩"""
    basis = TwoFormBasis(space.n)
    half = space.backend.convert(QQ(1, 2))
    ring = space.param_ring
    result = []
    for b, c in basis.pairs:
        matrix = pair_matrix(lambda a, d, e, f: beta_entry(Cm, b, c, a, d, e, f, half), basis)
        result.append({
            "pair": (b, c),
            "det": det_oracle(matrix, ring),
            "rank": matrix_rank(matrix, ring, rank_cutoff),
        })
    return result


def s2_double_contraction(space: JetSpace, Cm: np.ndarray, X: np.ndarray):
    """X^ab X^cd β_abpq^rs β_cdrs^pq，直接由六指標 β 計算"""
    n = space.n
    half = space.backend.convert(QQ(1, 2))
    ring = space.param_ring
    support = [(e, f) for e in range(n) for f in range(n) if X[e, f]]
    full = np.empty((n,) * 4, dtype=object)
    for p, q, r, s in itertools.product(range(n), repeat=4):
        full[p, q, r, s] = sum((beta_entry(Cm, e, f, p, q, r, s, half).mul_ground(X[e, f])
                                for e, f in support), ring.zero)
    total = ring.zero
    for p, q, r, s in itertools.product(range(n), repeat=4):
        if full[p, q, r, s] and full[r, s, p, q]:
            total = total + full[p, q, r, s] * full[r, s, p, q]
    return total


# ============================================================
# 整合
# ============================================================

def obstruction_report(pack: CurvaturePack, X_entries, per_pair: bool = False,
                       rank_cutoff: float = 1e-8) -> ObstructionReport:
    """對單一雙向量 X 計算 s_k、三條行列式並交叉比對"""
    started = time.time()
    space = pack.metric.space
    backend = space.backend
    ring = space.param_ring
    X = bivector_array(space, X_entries)
    Cm = weyl_point(pack)
    beta = beta_matrix(space, Cm, X)
    N = beta.basis.N
    traces = trace_powers(beta.entries, N, ring)
    det = obstruction_det(traces, N, ring)
    oracle = det_oracle(beta.entries, ring)
    bell = det_oracle(bell_matrix(traces, N, ring), ring)
    consistent = dets_agree(det, oracle, backend) and dets_agree(det, bell, backend)
    if not consistent:
        raise InvariantViolation("determinant paths disagree",
                                 newton=format_param_poly(det),
                                 elimination=format_param_poly(oracle),
                                 bell=format_param_poly(bell))
    pairs = per_pair_determinants(space, Cm, rank_cutoff) if per_pair else None
    elapsed = time.time() - started
    logger.info(f"obstruction n={space.n} N={N} det={format_param_poly(det)} ({elapsed:.2f}s)")
    return ObstructionReport(space.n, X, traces, det, oracle, bell, consistent, backend, pairs, elapsed)


# ============================================================
# 測試
# ============================================================

def _example_bivector(n: int = 6):
    """X = 2∂x∧∂y + ∂z∧∂u，座標順序 (t, x, y, z, u, v)"""
    X = [[0] * n for _ in range(n)]
    X[1][2], X[2][1] = 2, -2
    X[3][4], X[4][3] = 1, -1
    return X


def _random_weyl(space: JetSpace, rng: np.random.Generator) -> Tensor:
    metric = flat_metric(space, 0)

    def symmetric():
        raw = rng.integers(-3, 4, size=(space.n, space.n))
        sym = raw + raw.T
        return Tensor.from_function(space, 'dd', 0, lambda a, b: int(sym[a, b]))

    riemann = kulkarni_nomizu(symmetric(), symmetric()) + kulkarni_nomizu(symmetric(), symmetric())
    return weyl_part(riemann, metric)


def _random_two_form(space: JetSpace, rng: np.random.Generator) -> Tensor:
    raw = rng.integers(-4, 5, size=(space.n, space.n))
    return Tensor.from_function(space, 'dd', 0, lambda a, b: int(raw[a, b] - raw[b, a]))


class TestObstructionGolden(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        space, metric = _example_metric(2)
        cls.space = space
        cls.pack = curvature_pack(metric, with_cotton=False)
        cls.Cm = weyl_point(cls.pack)
        cls.X = bivector_array(space, _example_bivector())
        cls.report = obstruction_report(cls.pack, _example_bivector())

    def test_golden_determinant(self):
        self.assertEqual(format_param_poly(self.report.det), "9639/17592186044416 * c^15")
        self.assertEqual(self.report.det, self.report.det_oracle)
        self.assertEqual(self.report.det, self.report.det_bell)
        self.assertTrue(self.report.obstructed)

    def test_golden_traces(self):
        s = self.report.traces
        self.assertEqual(len(s), 15)
        self.assertFalse(s[0])
        self.assertEqual(format_param_poly(s[1]), "-23/32 * c^2")
        self.assertEqual(format_param_poly(s[2]), "135/128 * c^3")

    def test_s2_double_contraction(self):
        value = s2_double_contraction(self.space, self.Cm, self.X)
        self.assertEqual(value, self.report.traces[1])

    def test_beta_matrix_matches_six_index_beta(self):
        half = QQ(1, 2)
        basis = TwoFormBasis(6)
        beta = beta_matrix(self.space, self.Cm, self.X)
        ring = self.space.param_ring
        support = [(e, f) for e in range(6) for f in range(6) if self.X[e, f]]

        def kernel(a, b, c, d):
            return sum((beta_entry(self.Cm, e, f, a, b, c, d, half).mul_ground(self.X[e, f])
                        for e, f in support), ring.zero)

        self.assertEqual(beta.entries, pair_matrix(kernel, basis))

    def test_homogeneity_in_bivector(self):
        scaled = [[QQ(3, 2) * v for v in row] for row in _example_bivector()]
        report = obstruction_report(self.pack, scaled)
        self.assertEqual(report.det, self.report.det.mul_ground(QQ(3, 2) ** 15))

    def test_linearity_in_bivector(self):
        X1 = bivector_array(self.space, _example_bivector())
        X2 = bivector_array(self.space, random_bivectors(6, 1, seed=5)[0])
        total = beta_matrix(self.space, self.Cm, X1 + X2).entries
        first = beta_matrix(self.space, self.Cm, X1).entries
        second = beta_matrix(self.space, self.Cm, X2).entries
        self.assertEqual(total, [[first[i][j] + second[i][j] for j in range(15)] for i in range(15)])

    def test_per_pair_determinants_vanish(self):
        pairs = per_pair_determinants(self.space, self.Cm)
        self.assertEqual(len(pairs), 15)
        self.assertTrue(all(not entry["det"] for entry in pairs))
        self.assertEqual(max(entry["rank"] for entry in pairs), 13)

    def test_float_backend_agrees(self):
        # c = 1
        flt_space = JetSpace(['t', 'x', 'y', 'z', 'u', 'v'], [], [0] * 6, ScalarBackend.floating())
        t, x, y, z, u, v = (flt_space.coordinate(i, 2) for i in range(6))
        gxy = (t * t + y * t) * QQ(1, 2)
        guv = (t * t + t * u) * QQ(1, 2)
        g = Tensor.from_function(flt_space, 'dd', 2, lambda a, b: 1 if a == b else (
            gxy if {a, b} == {1, 2} else (guv if {a, b} == {4, 5} else None)))
        report = obstruction_report(curvature_pack(MetricJet(g), with_cotton=False), _example_bivector())
        self.assertAlmostEqual(float(report.det.LC) * 2 ** 44, 9639.0, delta=1.0)

    def test_float_per_pair_rank_cutoff(self):
        space, metric = _example_metric(2, c_value=1, backend=ScalarBackend.floating())
        Cm = weyl_point(curvature_pack(metric, with_cotton=False))
        pairs = per_pair_determinants(space, Cm)
        self.assertEqual(max(entry["rank"] for entry in pairs), 13)
        self.assertTrue(all(entry["rank"] == 0 for entry in per_pair_determinants(space, Cm, rank_cutoff=1.0)))


class TestObstructionTrivial(unittest.TestCase):

    def test_flat_metric_gives_zero(self):
        space = JetSpace([f"x{i}" for i in range(6)], [], [0] * 6)
        pack = curvature_pack(flat_metric(space, 2), with_cotton=False)
        report = obstruction_report(pack, _example_bivector(), per_pair=True)
        self.assertFalse(report.det)
        self.assertTrue(all(not v for v in report.traces))
        self.assertTrue(all(not entry["det"] for entry in report.per_pair))
        self.assertFalse(report.obstructed)

    def test_conformally_flat_per_pair_zero(self):
        space = JetSpace([f"x{i}" for i in range(6)], [], [0] * 6)
        omega = 1 + space.coordinate(0, 2)
        g = Tensor.from_function(space, 'dd', 2, lambda a, b: omega * omega if a == b else None)
        pack = curvature_pack(MetricJet(g), with_cotton=False)
        pairs = per_pair_determinants(space, weyl_point(pack))
        self.assertTrue(all(not entry["det"] for entry in pairs))

    def test_non_antisymmetric_bivector(self):
        space = JetSpace([f"x{i}" for i in range(6)], [], [0] * 6)
        X = _example_bivector()
        X[0][1] = 1
        with self.assertRaises(NonAntisymmetricBivector):
            bivector_array(space, X)

    def test_trace_count_mismatch(self):
        ring = JetSpace(['x'], [], [0]).param_ring
        with self.assertRaises(InconsistentTraceCount):
            obstruction_det([ring.zero] * 3, 4, ring)

    def test_zero_traces_give_zero_det(self):
        ring = JetSpace(['x'], ['c'], [0]).param_ring
        self.assertFalse(obstruction_det([ring.zero] * 5, 5, ring))


class TestDeterminantPaths(unittest.TestCase):

    def test_oracle_small_cases(self):
        ring = JetSpace(['x'], ['c'], [0]).param_ring
        c = ring.gens[0]
        identity = [[ring.one if i == j else ring.zero for j in range(4)] for i in range(4)]
        self.assertEqual(det_oracle(identity, ring), ring.one)
        diag = [[c, ring.zero, ring.zero], [ring.zero, c ** 2, ring.zero], [ring.zero, ring.zero, ring.one]]
        self.assertEqual(det_oracle(diag, ring), c ** 3)

    def test_random_matrices_trace_path_equals_elimination(self):
        ring = JetSpace(['x'], [], [0]).param_ring
        rng = np.random.default_rng(2024)
        for trial in range(100):
            size = int(rng.integers(6, 16))
            nums = rng.integers(-9, 10, size=(size, size))
            dens = rng.integers(1, 5, size=(size, size))
            matrix = [[ring.ground_new(QQ(int(nums[i, j]), int(dens[i, j]))) for j in range(size)]
                      for i in range(size)]
            traces = trace_powers(matrix, size, ring)
            newton = obstruction_det(traces, size, ring)
            self.assertEqual(newton, det_oracle(matrix, ring), msg=f"trial {trial}")
            self.assertEqual(newton, det_oracle(bell_matrix(traces, size, ring), ring))

    def test_rank_deficient_matrix(self):
        ring = JetSpace(['x'], [], [0]).param_ring
        one, two = ring.one, ring.ground_new(QQ(2))
        matrix = [[one, two, one], [two, two * two, two], [one, one, one]]
        self.assertFalse(det_oracle(matrix, ring))
        self.assertEqual(matrix_rank(matrix, ring), 2)


class TestWeylCommutatorEquivalence(unittest.TestCase):

    def test_flat_and_zero_omega(self):
        space = JetSpace([f"x{i}" for i in range(6)], [], [0] * 6)
        metric = flat_metric(space, 0)
        zero_weyl = Tensor.zeros(space, 'dddd', 0)
        omega = _random_two_form(space, np.random.default_rng(1))
        residual = weyl_constraint_residual(raise_index(zero_weyl, 3, metric), omega)
        self.assertTrue(residual.is_zero())
        self.assertTrue(matrix_is_zero(commutator_residual(zero_weyl, omega, metric), space.backend))

    def test_residual_equals_minus_beta_action(self):
        space = JetSpace([f"x{i}" for i in range(6)], [], [0] * 6)
        metric = flat_metric(space, 0)
        rng = np.random.default_rng(3)
        weyl = _random_weyl(space, rng)
        omega = _random_two_form(space, rng)
        mixed = raise_index(weyl, 3, metric)
        residual = point_values(weyl_constraint_residual(mixed, omega))
        action = beta_apply(space, point_values(mixed), point_values(omega))
        for idx in itertools.product(range(6), repeat=4):
            self.assertEqual(residual[idx], -action[idx])

    def test_random_samples_are_not_kahler(self):
        space = JetSpace([f"x{i}" for i in range(6)], [], [0] * 6)
        metric = flat_metric(space, 0)
        rng = np.random.default_rng(17)
        for _ in range(50):
            weyl = _random_weyl(space, rng)
            omega = _random_two_form(space, rng)
            residual_zero = weyl_constraint_residual(raise_index(weyl, 3, metric), omega).is_zero()
            commutator_zero = matrix_is_zero(commutator_residual(weyl, omega, metric), space.backend)
            self.assertEqual(residual_zero, commutator_zero)

    def test_circle_averaged_samples_commute_with_j(self):
        backend = ScalarBackend.floating()
        space = JetSpace([f"x{i}" for i in range(6)], [], [0] * 6, backend)
        exact_space = JetSpace([f"x{i}" for i in range(6)], [], [0] * 6)
        metric = flat_metric(space, 0)
        J = np.zeros((6, 6))
        for i in range(3):
            J[2 * i, 2 * i + 1], J[2 * i + 1, 2 * i] = 1.0, -1.0
        omega = Tensor.from_function(space, 'dd', 0, lambda a, b: float(J[a, b]) or None)
        rng = np.random.default_rng(29)
        for _ in range(20):
            exact = _random_weyl(exact_space, rng)
            C = np.array([float(j.constant_term().LC) if j.poly else 0.0
                          for j in exact.components.flat]).reshape((6,) * 4)
            averaged = np.zeros_like(C)
            for k in range(6):
                theta = 2.0 * math.pi * k / 6.0
                R = np.cos(theta) * np.eye(6) + np.sin(theta) * J.T
                averaged += np.einsum('efgh,ea,fb,gc,hd->abcd', C, R, R, R, R) / 6.0
            weyl = Tensor.from_function(space, 'dddd', 0, lambda a, b, c, d: float(averaged[a, b, c, d]))
            residual = weyl_constraint_residual(raise_index(weyl, 3, metric), omega)
            self.assertTrue(residual.is_zero())
            self.assertTrue(matrix_is_zero(commutator_residual(weyl, omega, metric), backend))


if __name__ == '__main__':
    unittest.main()
