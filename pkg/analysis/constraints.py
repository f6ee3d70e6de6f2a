#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
非線性代數條件 𝒬(Ψ) = 0：從一般延拓平行截面中挑出 Kähler 見證

|ω|² 一律指完整縮併 ω_ab ω^ab（tractor 模組的 σ² = |ω|²/n 是另一個量）。

    alg1        ω_ab ω^b_c + (1/n)|ω|² g_ac
    mufromK     μ_abc + (n/|ω|²) cyc(ω_ab W_c)，W_c = K^e ω_ec
    sigma       Σ_ab − (Σ 公式)
    alg2        |ω|² μ_abc − (n/(n−2)) cyc(ω_bc V_a)，V_a = μ_apq ω^pq
    kkmm        (n−2) W_a + V_a
    muK         μ_abc K^c
    hermitian   ½(ω^a_b Σ_ca − ω^a_c Σ_ba)
"""

import itertools
import logging
import math
import unittest
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy import linalg as sla
from sympy import Matrix
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from analysis.cky_prolong import (
    ProlongationSection,
    build_witness,
    product_kahler,
    standard_symplectic,
    zero_section_slots,
)
from core.curvature import CurvaturePack, curvature_pack
from core.exact_scalars import Jet, JetSpace
from core.exceptions import DegenerateOmega, DimensionFour, SampleNotOnVariety
from core.tensor_core import (
    MetricJet,
    Tensor,
    alternate,
    flat_metric,
    full_contraction,
    jet_einsum,
    raise_index,
)

logger = logging.getLogger(__name__)

CONSTRAINT_NAMES = ("alg1", "mufromK", "sigma", "alg2", "kkmm", "muK", "hermitianSigma")

# 各殘差在 (ω, K, μ, Σ) → λ(ω, K, μ, Σ) 下的齊次次數
HOMOGENEITY_DEGREES = {"alg1": 2, "mufromK": 1, "sigma": 1, "alg2": 3,
                       "kkmm": 2, "muK": 2, "hermitianSigma": 2}

DIMENSION_FOUR_NOTICE = "skipped: needs n > 4 (the condition holds identically when n = 4)"


@dataclass
class ConstraintReport:
    residuals: Dict[str, Optional[Tensor]]
    notices: Dict[str, str] = field(default_factory=dict)

    def zero_flags(self) -> Dict[str, Optional[bool]]:
        return {name: (None if t is None else t.is_zero()) for name, t in self.residuals.items()}

    def failed(self) -> List[str]:
        return [name for name, flag in self.zero_flags().items() if flag is False]

    def magnitudes(self) -> Dict[str, float]:
        return {name: t.max_abs() for name, t in self.residuals.items() if t is not None}

    @property
    def satisfied(self) -> bool:
        return not self.failed()


# ============================================================
# 公式
# ============================================================

def omega_norm(omega: Tensor, m: MetricJet):
    """(|ω|², |ω|⁻²)，|ω|² 在基點為零時 DegenerateOmega"""
    norm = full_contraction(omega, omega, m)
    if norm.is_zero() or not norm.is_unit():
        raise DegenerateOmega("|omega|^2 vanishes (or is not invertible) at the point")
    return norm, norm.inverse()


def _w_vector(omega: Tensor, K: Tensor, m: MetricJet) -> Tensor:
    """W_c = K^e ω_ec"""
    return jet_einsum("e,ec->c", raise_index(K, 0, m), omega, valence='d')


def mu_from_omega_K(omega: Tensor, K: Tensor, m: MetricJet) -> Tensor:
    """μ = −(n/|ω|²) cyc(ω_ab W_c) = −(3n/|ω|²) ω_[ab ω^d_c] K_d"""
    n = m.n
    _, inv = omega_norm(omega, m)
    W = _w_vector(omega, K, m)
    cyc = (jet_einsum("ab,c->abc", omega, W) + jet_einsum("bc,a->abc", omega, W)
           + jet_einsum("ca,b->abc", omega, W))
    return -cyc.scale(inv).scale(n)


def sigma_from_omega_K(omega: Tensor, K: Tensor, weyl: Tensor, m: MetricJet) -> Tensor:
    """
    Σ_ab = −(n/2 |ω|⁻²|K|² + n/(4(n−2)(n−4)) |ω|⁻² C_cdef ω^cd ω^ef) ω_ab
           + 1/(2(n−4)) C_cdab ω^cd + n|ω|⁻²(W_b K_a − W_a K_b)
    """
    n = m.n
    if n == 4:
        raise DimensionFour("the Sigma formula needs n > 4", n=n)
    order = min(omega.order, K.order, weyl.order)
    omega, K, weyl = omega.truncate(order), K.truncate(order), weyl.truncate(order)
    _, inv = omega_norm(omega, m)
    inv = inv.truncate(order)
    omega_up = raise_index(raise_index(omega, 0, m), 1, m)
    k_sq = jet_einsum("a,a->", K, raise_index(K, 0, m)).truncate(order)
    weyl_sq = jet_einsum("cdef,cd,ef->", weyl, omega_up, omega_up).truncate(order)
    coef = -(k_sq * inv * QQ(n, 2) + weyl_sq * inv * QQ(n, 4 * (n - 2) * (n - 4)))
    W = _w_vector(omega, K, m)
    pure = omega.scale(coef)
    weyl_term = jet_einsum("cdab,cd->ab", weyl, omega_up, valence='dd').scale(QQ(1, 2 * (n - 4)))
    k_term = (jet_einsum("b,a->ab", W, K) - jet_einsum("a,b->ab", W, K)).scale(inv).scale(n)
    return (pure + weyl_term + k_term).with_weight(1)


def q_residuals(psi: ProlongationSection, pack: CurvaturePack, m: MetricJet,
                at_point: bool = True) -> ConstraintReport:
    """𝒬(Ψ) 的全部殘差；n = 4 時 sigma/alg2 附上說明而不計算"""
    n = m.n
    if at_point:
        psi = psi.at_point()
        m = m.truncate(0)
        weyl = pack.weyl.at_point()
    else:
        weyl = pack.weyl
    omega, K, mu, Sigma = psi.omega, psi.K, psi.mu, psi.Sigma
    norm, _ = omega_norm(omega, m)
    residuals: Dict[str, Optional[Tensor]] = {}
    notices: Dict[str, str] = {}

    omega_raised = raise_index(omega, 0, m)      # ω^b_c
    residuals["alg1"] = (jet_einsum("ab,bc->ac", omega, omega_raised, valence='dd')
                         + m.g.scale(norm * QQ(1, n)))
    residuals["mufromK"] = mu - mu_from_omega_K(omega, K, m)

    omega_up = raise_index(omega_raised, 1, m)
    V = jet_einsum("apq,pq->a", mu, omega_up, valence='d')
    W = _w_vector(omega, K, m)
    if n == 4:
        residuals["sigma"] = None
        residuals["alg2"] = None
        notices["sigma"] = notices["alg2"] = DIMENSION_FOUR_NOTICE
    else:
        residuals["sigma"] = Sigma - sigma_from_omega_K(omega, K, weyl, m)
        cyc = (jet_einsum("bc,a->abc", omega, V) + jet_einsum("ca,b->abc", omega, V)
               + jet_einsum("ab,c->abc", omega, V))
        residuals["alg2"] = mu.scale(norm) - cyc.scale(QQ(n, n - 2))
    residuals["kkmm"] = W.scale(n - 2) + V
    residuals["muK"] = jet_einsum("abc,c->ab", mu, raise_index(K, 0, m), valence='dd')
    residuals["hermitianSigma"] = (jet_einsum("ab,ca->bc", omega_raised, Sigma, valence='dd')
                                   - jet_einsum("ac,ba->bc", omega_raised, Sigma, valence='dd')
                                   ).scale(QQ(1, 2))
    report = ConstraintReport(residuals, notices)
    logger.debug(f"q_residuals failed={report.failed()}")
    return report


# ============================================================
# 約束簇維度估計（浮點）
# ============================================================

@dataclass
class DimensionEstimate:
    n: int
    fiber: int
    rank: int
    dimension: int
    expected: int
    singular_values: np.ndarray

    @property
    def rank_drop(self) -> bool:
        return self.dimension != self.expected


def expected_variety_dimension(n: int) -> int:
    """¼(n² + 2n + 4) = m(m−1) + 1 + 2m，n = 2m"""
    return (n * n + 2 * n + 4) // 4


def _pairs(n):
    return list(itertools.combinations(range(n), 2))


def _triples(n):
    return list(itertools.combinations(range(n), 3))


def pack_section_vector(omega: np.ndarray, K: np.ndarray, mu: np.ndarray, Sigma: np.ndarray) -> np.ndarray:
    n = len(K)
    return np.concatenate([[omega[a, b] for a, b in _pairs(n)], K,
                           [mu[a, b, c] for a, b, c in _triples(n)],
                           [Sigma[a, b] for a, b in _pairs(n)]])


def unpack_section_vector(x: np.ndarray, n: int):
    pairs, triples = _pairs(n), _triples(n)
    omega = np.zeros((n, n))
    Sigma = np.zeros((n, n))
    mu = np.zeros((n, n, n))
    pos = 0
    for a, b in pairs:
        omega[a, b], omega[b, a] = x[pos], -x[pos]
        pos += 1
    K = np.array(x[pos:pos + n], dtype=float)
    pos += n
    for a, b, c in triples:
        for perm in itertools.permutations(range(3)):
            idx = tuple((a, b, c)[p] for p in perm)
            sign = 1 if perm in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1
            mu[idx] = sign * x[pos]
        pos += 1
    for a, b in pairs:
        Sigma[a, b], Sigma[b, a] = x[pos], -x[pos]
        pos += 1
    return omega, K, mu, Sigma


def _cyclic(two_form: np.ndarray, vector: np.ndarray) -> np.ndarray:
    return (np.einsum('ab,c->abc', two_form, vector) + np.einsum('bc,a->abc', two_form, vector)
            + np.einsum('ca,b->abc', two_form, vector))


def constraint_map(x: np.ndarray, n: int, weyl: Optional[np.ndarray] = None) -> np.ndarray:
    """
    (alg1, mufromK, sigma) 在正交標架（g = δ）下的浮點版本
    """
    omega, K, mu, Sigma = unpack_section_vector(x, n)
    norm = np.einsum('ab,ab->', omega, omega)
    alg1 = omega @ omega + (norm / n) * np.eye(n)
    W = K @ omega
    mufromk = mu + (n / norm) * _cyclic(omega, W)
    formula = -(n / 2.0) / norm * (K @ K) * omega + (n / norm) * (np.outer(K, W) - np.outer(W, K))
    if weyl is not None:
        weyl_sq = np.einsum('cdef,cd,ef->', weyl, omega, omega)
        formula = (formula - n / (4.0 * (n - 2) * (n - 4)) / norm * weyl_sq * omega
                   + np.einsum('cdab,cd->ab', weyl, omega) / (2.0 * (n - 4)))
    return np.concatenate([alg1.ravel(), mufromk.ravel(), (Sigma - formula).ravel()])


def algebraic_witness_sample(n: int) -> np.ndarray:
    """g = δ、ω = J、Υ = e_0：K = −Υ⌟J，μ、Σ 由公式給出（C = 0）"""
    J = np.zeros((n, n))
    for i in range(n // 2):
        J[2 * i, 2 * i + 1], J[2 * i + 1, 2 * i] = 1.0, -1.0
    upsilon = np.zeros(n)
    upsilon[0] = 1.0
    K = -upsilon @ J
    norm = float(n)
    W = K @ J
    mu = -(n / norm) * _cyclic(J, W)
    Sigma = -(n / 2.0) / norm * (K @ K) * J + (n / norm) * (np.outer(K, W) - np.outer(W, K))
    return pack_section_vector(J, K, mu, Sigma)


def variety_dimension_estimate(n: int, sample: Optional[np.ndarray] = None,
                               weyl: Optional[np.ndarray] = None, step: float = 1e-6,
                               cutoff: float = 1e-8, tolerance: float = 1e-8) -> DimensionEstimate:
    """
    纖維維度減去約束映射 Jacobian 的數值秩（中央差分，奇異值 < cutoff·σ_max 視為零）
    """
    if n == 4:
        raise DimensionFour("the Sigma formula (part of the constraint map) needs n > 4", n=n)
    if sample is None:
        sample = algebraic_witness_sample(n)
    base = constraint_map(sample, n, weyl)
    if np.max(np.abs(base)) > tolerance:
        raise SampleNotOnVariety("sample does not satisfy the constraints",
                                 max_residual=float(np.max(np.abs(base))))
    fiber = len(sample)
    columns = []
    for i in range(fiber):
        shift = np.zeros(fiber)
        shift[i] = step
        columns.append((constraint_map(sample + shift, n, weyl)
                        - constraint_map(sample - shift, n, weyl)) / (2.0 * step))
    jacobian = np.column_stack(columns)
    singular = sla.svdvals(jacobian)
    rank = int(np.sum(singular > cutoff * singular[0])) if singular[0] > 0 else 0
    estimate = DimensionEstimate(n, fiber, rank, fiber - rank, expected_variety_dimension(n), singular)
    if estimate.rank_drop:
        logger.warning(f"n={n}: numerical dimension {estimate.dimension} differs from "
                       f"the generic count {estimate.expected}")
    logger.info(f"variety dimension n={n}: fiber={fiber} rank={rank} dim={estimate.dimension}")
    return estimate


def complex_structure_check(omega: Tensor, m: MetricJet) -> float:
    """J = (n/|ω|²)^{1/2} ω^a_b，回傳 ‖J² + I‖_max（浮點）"""
    n = m.n
    metric0 = m.truncate(0)
    mixed = raise_index(omega.at_point(), 0, metric0)
    norm = float(full_contraction(omega.at_point(), omega.at_point(), metric0).constant_term().LC)
    values = np.array([[float(mixed[a, b].constant_term().LC) if mixed[a, b].poly else 0.0
                        for b in range(n)] for a in range(n)])
    J = math.sqrt(n / norm) * values
    return float(np.max(np.abs(J @ J + np.eye(n))))


# ============================================================
# 測試
# ============================================================

def _space(n: int = 6) -> JetSpace:
    return JetSpace([f"x{i}" for i in range(n)], [], [0] * n)


def _flat_witness(order: int = 3, factor=lambda s, k: 1 + s.coordinate(0, k)):
    space = _space()
    return build_witness(flat_metric(space, order), standard_symplectic(space, order),
                         factor(space, order))


def _random_three_form(space: JetSpace, seed: int) -> Tensor:
    rng = np.random.default_rng(seed)
    raw = rng.integers(-4, 5, size=(space.n,) * 3)
    return alternate(Tensor.from_function(space, 'ddd', 0, lambda a, b, c: int(raw[a, b, c])),
                     (0, 1, 2))


class TestConstraintResiduals(unittest.TestCase):

    def test_flat_symplectic_satisfies_everything(self):
        space = _space()
        metric = flat_metric(space, 2)
        pack = curvature_pack(metric, with_cotton=False)
        K, mu, Sigma = zero_section_slots(space, 2)
        report = q_residuals(ProlongationSection(standard_symplectic(space, 2), K, mu, Sigma),
                             pack, metric)
        self.assertTrue(report.satisfied)
        self.assertEqual(set(report.residuals), set(CONSTRAINT_NAMES))

    def test_flat_witness_satisfies_everything(self):
        witness = _flat_witness()
        report = q_residuals(witness.section, witness.pack, witness.metric)
        self.assertTrue(report.satisfied, report.magnitudes())

    def test_curved_witness_satisfies_everything(self):
        witness = _flat_witness(3, lambda s, k: 1 + s.coordinate(0, k) + s.coordinate(1, k) * s.coordinate(1, k))
        report = q_residuals(witness.section, witness.pack, witness.metric, at_point=False)
        self.assertTrue(report.satisfied, report.magnitudes())

    def test_product_kahler_witness_uses_weyl_terms(self):
        space = _space()
        g_hat, omega_hat = product_kahler(space, 3)
        witness = build_witness(g_hat, omega_hat, 1 + space.coordinate(1, 3))
        self.assertFalse(witness.pack.weyl.at_point().is_zero())
        report = q_residuals(witness.section, witness.pack, witness.metric)
        self.assertTrue(report.satisfied, report.magnitudes())

    def test_random_mu_is_off_the_variety(self):
        space = _space()
        metric = flat_metric(space, 2)
        pack = curvature_pack(metric, with_cotton=False)
        K, _, Sigma = zero_section_slots(space, 0)
        psi = ProlongationSection(standard_symplectic(space, 0), K, _random_three_form(space, 4), Sigma)
        failed = q_residuals(psi, pack, metric).failed()
        for name in ("mufromK", "alg2", "kkmm"):
            self.assertIn(name, failed)

    def test_degenerate_omega(self):
        space = _space()
        metric = flat_metric(space, 2)
        pack = curvature_pack(metric, with_cotton=False)
        K, mu, Sigma = zero_section_slots(space, 2)
        with self.assertRaises(DegenerateOmega):
            q_residuals(ProlongationSection(Tensor.zeros(space, 'dd', 2), K, mu, Sigma), pack, metric)

    def test_dimension_four_notice(self):
        space = _space(4)
        metric = flat_metric(space, 2)
        pack = curvature_pack(metric, with_cotton=False)
        K, mu, Sigma = zero_section_slots(space, 2)
        report = q_residuals(ProlongationSection(standard_symplectic(space, 2), K, mu, Sigma), pack, metric)
        self.assertIsNone(report.residuals["sigma"])
        self.assertIn("sigma", report.notices)
        self.assertTrue(report.satisfied)
        with self.assertRaises(DimensionFour):
            sigma_from_omega_K(standard_symplectic(space, 2), K, pack.weyl, metric)

    def test_homogeneity(self):
        space = _space()
        metric = flat_metric(space, 2)
        pack = curvature_pack(metric, with_cotton=False)
        rng = np.random.default_rng(8)
        raw = rng.integers(-3, 4, size=(6, 6))
        omega = Tensor.from_function(space, 'dd', 0, lambda a, b: int(raw[a, b] - raw[b, a]) + (
            1 if (a % 2 == 0 and b == a + 1) else (-1 if (b % 2 == 0 and a == b + 1) else 0)))
        K = Tensor.from_function(space, 'd', 0, lambda a: a - 2)
        Sigma = alternate(Tensor.from_function(space, 'dd', 0, lambda a, b: a * b - b), (0, 1))
        psi = ProlongationSection(omega, K, _random_three_form(space, 9), Sigma)
        base = q_residuals(psi, pack, metric)
        scaled = q_residuals(psi.scale(2), pack, metric)
        for name, degree in HOMOGENEITY_DEGREES.items():
            self.assertFalse(base.residuals[name].is_zero(), name)
            self.assertTrue(scaled.residuals[name].equals(base.residuals[name].scale(2 ** degree)), name)


class TestFormulas(unittest.TestCase):

    def test_zero_k_gives_zero(self):
        space = _space()
        metric = flat_metric(space, 1)
        J = standard_symplectic(space, 1)
        K = Tensor.zeros(space, 'd', 1)
        self.assertTrue(mu_from_omega_K(J, K, metric).is_zero())
        self.assertTrue(sigma_from_omega_K(J, K, Tensor.zeros(space, 'dddd', 1), metric).is_zero())

    def test_conformally_flat_sigma_formula(self):
        space = _space()
        metric = flat_metric(space, 0)
        J = standard_symplectic(space, 0)
        K = Tensor.from_function(space, 'd', 0, lambda a: 1 if a == 2 else None)
        sigma = sigma_from_omega_K(J, K, Tensor.zeros(space, 'dddd', 0), metric)
        # |J|² = 6，|K|² = 1，W = K⌟J = e_3
        W = Tensor.from_function(space, 'd', 0, lambda a: 1 if a == 3 else None)
        expected = (J.scale(QQ(-1, 2))
                     + (jet_einsum("b,a->ab", W, K) - jet_einsum("a,b->ab", W, K)))
        self.assertTrue(sigma.equals(expected))

    def test_witness_mu_two_routes(self):
        witness = _flat_witness(3, lambda s, k: 1 + s.coordinate(1, k) + s.coordinate(0, k) * s.coordinate(2, k))
        psi = witness.section
        mu = mu_from_omega_K(psi.omega, psi.K, witness.metric)
        self.assertTrue(mu.equals(psi.mu))
        muK = jet_einsum("abc,c->ab", mu, raise_index(psi.K, 0, witness.metric))
        self.assertTrue(muK.is_zero())

    def test_witness_sigma_matches_formula(self):
        witness = _flat_witness(3, lambda s, k: 1 + s.coordinate(4, k))
        psi = witness.section
        sigma = sigma_from_omega_K(psi.omega, psi.K, witness.pack.weyl, witness.metric)
        self.assertTrue(sigma.equals(psi.Sigma))
        hermitian = (jet_einsum("ab,ca->bc", raise_index(psi.omega, 0, witness.metric), sigma)
                     - jet_einsum("ac,ba->bc", raise_index(psi.omega, 0, witness.metric), sigma))
        self.assertTrue(hermitian.is_zero())

    def test_complex_structure_squares_to_minus_one(self):
        witness = _flat_witness(2, lambda s, k: 1 + s.coordinate(0, k) + s.coordinate(3, k))
        self.assertLess(complex_structure_check(witness.section.omega, witness.metric), 1e-12)


def _exact_values(t: Tensor) -> list:
    return [QQ.to_sympy(j.constant_term().LC) if j.poly else 0 for j in t.components.flat]


def _rotated_kahler_form(space: JetSpace, seed: int, scale: int = 2) -> Tensor:
    """s·O J Oᵀ，O 由有理 Cayley 變換 (I − A)(I + A)⁻¹ 給出，A 反對稱"""
    n = space.n
    rng = np.random.default_rng(seed)
    raw = rng.integers(-2, 3, size=(n, n))
    A = DomainMatrix([[QQ(int(raw[a, b] - raw[b, a])) for b in range(n)] for a in range(n)], (n, n), QQ)
    eye = DomainMatrix.eye(n, QQ)
    O = (eye - A) * (eye + A).inv()
    J = DomainMatrix([[QQ(v) for v in row] for row in standard_symplectic_array(n)], (n, n), QQ)
    rotated = (O * J * O.transpose()).to_list()
    return Tensor.from_function(space, 'dd', 0, lambda a, b: rotated[a][b] * scale)


class TestAlg2Equivalence(unittest.TestCase):
    """alg1 成立時 mufromK ⇔ (alg2 且 kkmm)，兩者單獨都不夠"""

    def setUp(self):
        self.space = _space()
        self.metric = flat_metric(self.space, 2)
        self.pack = curvature_pack(self.metric, with_cotton=False)
        self.omega = _rotated_kahler_form(self.space, 13)
        self.K = Tensor.from_function(self.space, 'd', 0, lambda a: (3 * a * a + 1) % 7 - 3)
        _, _, self.Sigma = zero_section_slots(self.space, 0)
        self.basis = [alternate(Tensor.from_function(self.space, 'ddd', 0,
                                                     lambda a, b, c, t=t: 1 if (a, b, c) == t else None),
                                (0, 1, 2))
                      for t in _triples(self.space.n)]

    def _report(self, mu: Tensor) -> ConstraintReport:
        return q_residuals(ProlongationSection(self.omega, self.K, mu, self.Sigma), self.pack, self.metric)

    def _mu(self, coefficients: Matrix) -> Tensor:
        mu = Tensor.zeros(self.space, 'ddd', 0)
        for coefficient, form in zip(coefficients, self.basis):
            mu = mu + form.scale(QQ.from_sympy(coefficient))
        return mu

    def _linear_system(self, names):
        """μ ↦ 殘差是仿射的；逐個基底三形式求出 (A, b) 使 A x = b"""
        def values(report):
            return sum((_exact_values(report.residuals[name]) for name in names), [])
        offset = Matrix(values(self._report(Tensor.zeros(self.space, 'ddd', 0))))
        columns = [Matrix(values(self._report(form))) - offset for form in self.basis]
        return Matrix.hstack(*columns), -offset

    def _joint_solution(self) -> Matrix:
        A, b = self._linear_system(("alg2", "kkmm"))
        solution, params = A.gauss_jordan_solve(b)
        self.assertEqual(params.shape[0], 0)
        return solution

    def test_omega_is_hermitian_and_not_normalized(self):
        self.assertFalse(self.K.is_zero())
        report = self._report(Tensor.zeros(self.space, 'ddd', 0))
        self.assertTrue(report.residuals["alg1"].is_zero())
        norm, _ = omega_norm(self.omega, self.metric.truncate(0))
        self.assertEqual(QQ.to_sympy(norm.constant_term().LC), 4 * self.space.n)

    def test_mufromk_gives_alg2_and_kkmm(self):
        report = self._report(mu_from_omega_K(self.omega, self.K, self.metric.truncate(0)))
        for name in ("alg1", "mufromK", "alg2", "kkmm", "muK"):
            self.assertTrue(report.residuals[name].is_zero(), name)
        # Σ = 0 不是 Σ 公式的值
        self.assertEqual(report.failed(), ["sigma"])

    def test_alg2_and_kkmm_give_mufromk(self):
        report = self._report(self._mu(self._joint_solution()))
        for name in ("alg1", "alg2", "kkmm", "mufromK"):
            self.assertTrue(report.residuals[name].is_zero(), name)

    def test_kkmm_alone_is_not_enough(self):
        A, _ = self._linear_system(("kkmm",))
        kernel = A.nullspace()
        self.assertEqual(len(kernel), len(self.basis) - self.space.n)
        report = self._report(self._mu(self._joint_solution() + kernel[0]))
        self.assertTrue(report.residuals["kkmm"].is_zero())
        self.assertIn("alg2", report.failed())
        self.assertIn("mufromK", report.failed())

    def test_alg2_alone_is_not_enough(self):
        A, b = self._linear_system(("alg2",))
        self.assertTrue(b.is_zero_matrix)
        kernel = A.nullspace()
        self.assertTrue(kernel)
        report = self._report(self._mu(self._joint_solution() + kernel[0]))
        self.assertTrue(report.residuals["alg2"].is_zero())
        self.assertIn("kkmm", report.failed())
        self.assertIn("mufromK", report.failed())


class TestVarietyDimension(unittest.TestCase):

    def test_six_dimensions(self):
        estimate = variety_dimension_estimate(6)
        self.assertEqual(estimate.fiber, 56)
        self.assertEqual(estimate.rank, 43)
        self.assertEqual(estimate.dimension, 13)
        self.assertFalse(estimate.rank_drop)

    def test_eight_dimensions(self):
        estimate = variety_dimension_estimate(8)
        self.assertEqual(estimate.fiber, 120)
        self.assertEqual(estimate.dimension, 21)

    def test_dimension_four_rejected(self):
        with self.assertRaises(DimensionFour):
            variety_dimension_estimate(4)

    def test_off_variety_sample(self):
        sample = algebraic_witness_sample(6)
        sample[0] += 0.5
        with self.assertRaises(SampleNotOnVariety):
            variety_dimension_estimate(6, sample)

    def test_float_map_matches_jet_residuals(self):
        space = _space()
        metric = flat_metric(space, 2)
        pack = curvature_pack(metric, with_cotton=False)
        rng = np.random.default_rng(5)
        omega = rng.integers(-3, 4, size=(6, 6))
        omega = omega - omega.T + 2 * np.array(standard_symplectic_array(6), dtype=int)
        K = rng.integers(-2, 3, size=6)
        sigma = rng.integers(-2, 3, size=(6, 6))
        sigma = sigma - sigma.T
        mu_t = _random_three_form(space, 6)
        mu = np.array([float(j.constant_term().LC) if j.poly else 0.0
                       for j in mu_t.components.flat]).reshape((6,) * 3)
        psi = ProlongationSection(
            Tensor.from_function(space, 'dd', 0, lambda a, b: int(omega[a, b])),
            Tensor.from_function(space, 'd', 0, lambda a: int(K[a])),
            mu_t,
            Tensor.from_function(space, 'dd', 0, lambda a, b: int(sigma[a, b])))
        report = q_residuals(psi, pack, metric)
        values = constraint_map(pack_section_vector(omega.astype(float), K.astype(float), mu,
                                                    sigma.astype(float)), 6)
        jet_values = np.concatenate([
            [float(j.constant_term().LC) if j.poly else 0.0 for j in report.residuals[name].components.flat]
            for name in ("alg1", "mufromK", "sigma")])
        self.assertTrue(np.allclose(values, jet_values, atol=1e-9))


def standard_symplectic_array(n: int) -> List[List[int]]:
    J = [[0] * n for _ in range(n)]
    for i in range(n // 2):
        J[2 * i][2 * i + 1], J[2 * i + 1][2 * i] = 1, -1
    return J


if __name__ == '__main__':
    unittest.main()
