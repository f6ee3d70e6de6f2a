#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
曲率套件：Christoffel、Riemann、Ricci、純量曲率、Schouten、Weyl、Cotton

符號約定（固定，測試守護）：
  R^a_bcd = ∂_c Γ^a_bd − ∂_d Γ^a_bc + Γ^a_ce Γ^e_bd − Γ^a_de Γ^e_bc
  R_abcd = g_ae R^e_bcd，Ric_bd = R^a_bad
  在此約定下 [∇_a, ∇_b] ω_c = R_abc^d ω_d。

  P_ab = (Ric_ab − R g_ab / (2(n−1))) / (n−2)
  R_abcd = C_abcd + P_ac g_bd − P_bc g_ad + P_bd g_ac − P_ad g_bc
  A_abc = ∇_b P_ca − ∇_c P_ba
"""

import logging
import time
import unittest
from dataclasses import dataclass
from typing import Optional, Tuple

from sympy.polys.domains import QQ

from core.exact_scalars import Jet, JetSpace, ScalarBackend, format_param_poly
from core.exceptions import (
    DimensionTooSmall,
    InvariantViolation,
    NonPositiveConformalFactor,
    OrderExhausted,
)
from core.tensor_core import (
    ANTISYMMETRIC,
    SYMMETRIC,
    MetricJet,
    Tensor,
    _example_metric,
    christoffel_symbols,
    covariant_derivative,
    covariant_derivative_scalar,
    flat_metric,
    jet_einsum,
    partial_derivative,
    raise_index,
    trace,
)

logger = logging.getLogger(__name__)


@dataclass
class CurvaturePack:
    """單一度量在單一點的曲率資料"""
    metric: MetricJet
    christoffel: Tensor
    riemann: Tensor
    ricci: Tensor
    scalar: Jet
    schouten: Tensor
    schouten_trace: Jet
    weyl: Tensor
    cotton: Optional[Tensor]

    @property
    def n(self) -> int:
        return self.metric.n

    def weyl_mixed(self) -> Tensor:
        """C_abc^d"""
        return raise_index(self.weyl, 3, self.metric)

    def schouten_mixed(self) -> Tensor:
        """P_a^c"""
        return raise_index(self.schouten, 1, self.metric)


def kulkarni_nomizu(h: Tensor, k: Tensor) -> Tensor:
    """h ⊘ k：h_ac k_bd + h_bd k_ac − h_ad k_bc − h_bc k_ad"""
    return (jet_einsum("ac,bd->abcd", h, k) + jet_einsum("bd,ac->abcd", h, k)
            - jet_einsum("ad,bc->abcd", h, k) - jet_einsum("bc,ad->abcd", h, k))


def schouten_from_ricci(ricci: Tensor, scalar: Jet, g: Tensor, n: int) -> Tensor:
    backend = ricci.space.backend
    ratio = backend.convert(QQ(1, 2 * (n - 1)))
    g = g.truncate(ricci.order)
    return (ricci - g.scale(scalar * ratio)).scale(QQ(1, n - 2)).with_weight(0)


def weyl_part(riemann: Tensor, m: MetricJet) -> Tensor:
    """代數曲率張量的 Weyl 部分（去掉 P ⊘ g）"""
    ricci = jet_einsum("ac,abcd->bd", m.g_inv, riemann, valence='dd', weight=0)
    scalar = trace(ricci, m)
    schouten = schouten_from_ricci(ricci, scalar, m.g, m.n)
    return (riemann - kulkarni_nomizu(schouten, m.g.truncate(schouten.order))).with_weight(2)


def curvature_pack(m: MetricJet, with_cotton: bool = True, verify: bool = True) -> CurvaturePack:
    """
    計算曲率套件

    階數：g 為 k，則 Γ 為 k−1，Riemann/P/C 為 k−2，Cotton 為 k−3。
    """
    n = m.n
    if n < 4:
        raise DimensionTooSmall("curvature pack needs n >= 4", n=n)
    if m.order < 2:
        raise OrderExhausted("curvature needs a metric jet of order >= 2", order=m.order)
    if with_cotton and m.order < 3:
        raise OrderExhausted("Cotton tensor needs a metric jet of order >= 3", order=m.order)

    started = time.time()
    gamma = christoffel_symbols(m)
    d_gamma = partial_derivative(gamma)      # d_gamma[c, a, b, d] = ∂_c Γ^a_bd

    order = d_gamma.order
    quad = (jet_einsum("ace,ebd->abcd", gamma, gamma, valence='uddd')
            - jet_einsum("ade,ebc->abcd", gamma, gamma, valence='uddd'))
    linear = Tensor.from_function(
        m.space, 'uddd', order,
        lambda a, b, c, d: d_gamma[c, a, b, d] - d_gamma[d, a, b, c])
    riemann_up = linear + quad
    riemann = jet_einsum("ae,ebcd->abcd", m.g, riemann_up, valence='dddd', weight=2)
    ricci = jet_einsum("abad->bd", riemann_up, valence='dd', weight=0)
    scalar = trace(ricci, m)

    g = m.g.truncate(ricci.order)
    schouten = schouten_from_ricci(ricci, scalar, g, n)
    schouten_trace = trace(schouten, m)
    weyl = (riemann - kulkarni_nomizu(schouten, g)).with_weight(2)

    cotton = None
    if with_cotton:
        d_p = covariant_derivative(schouten, gamma)    # d_p[b, c, a] = ∇_b P_ca
        cotton = Tensor.from_function(
            m.space, 'ddd', d_p.order,
            lambda a, b, c: d_p[b, c, a] - d_p[c, b, a])

    pack = CurvaturePack(m, gamma, riemann.with_weight(2), ricci, scalar,
                         schouten, schouten_trace, weyl, cotton)
    logger.debug(f"curvature pack n={n} metric order={m.order} in {time.time() - started:.2f}s")
    if verify:
        verify_pack(pack)
    return pack


def verify_pack(pack: CurvaturePack):
    """建構時檢查曲率恆等式，不成立即為內部錯誤"""
    n = pack.n
    m = pack.metric
    R = pack.riemann
    R.with_symmetry(((ANTISYMMETRIC, (0, 1)), (ANTISYMMETRIC, (2, 3))))
    if not R.equals(R.transpose((2, 3, 0, 1))):
        raise InvariantViolation("Riemann pair symmetry fails")
    pack.schouten.with_symmetry(((SYMMETRIC, (0, 1)),))
    expected = pack.scalar * m.space.backend.convert(QQ(1, 2 * (n - 1)))
    if not (pack.schouten_trace - expected.truncate(pack.schouten_trace.order)).is_zero():
        raise InvariantViolation("Schouten trace identity fails")
    trace_c = jet_einsum("ac,abcd->bd", m.g_inv, pack.weyl)
    if not trace_c.is_zero():
        raise InvariantViolation("Weyl tensor is not trace-free")
    if pack.cotton is not None:
        pack.cotton.with_symmetry(((ANTISYMMETRIC, (1, 2)),))


def weyl_norm_squared(pack: CurvaturePack) -> Jet:
    """C_abcd C^abcd"""
    m = pack.metric
    up = pack.weyl
    for slot in range(4):
        up = raise_index(up, slot, m)
    return jet_einsum("abcd,abcd->", pack.weyl, up)


# ============================================================
# 共形變換
# ============================================================

def check_conformal_factor(omega: Jet):
    head = omega.constant_term()
    if not head or not head.is_ground or not float(head.LC) > 0.0:
        raise NonPositiveConformalFactor(
            "conformal factor must have a positive parameter-free value at the point",
            value=format_param_poly(head) if head else "0")


def conformal_rescale(m: MetricJet, omega: Jet, label: Optional[str] = None) -> Tuple[MetricJet, Tensor]:
    """ĝ = Ω² g 與 Υ_a = ∂_a Ω / Ω"""
    check_conformal_factor(omega)
    order = min(m.order, omega.order)
    factor = (omega * omega).truncate(order)
    g_hat = m.g.truncate(order).scale(factor)
    upsilon = covariant_derivative_scalar(omega).scale(omega.inverse().truncate(omega.order - 1))
    return MetricJet(g_hat, label or f"{m.label}*Omega^2"), upsilon.with_weight(0)


def upsilon_norm_squared(upsilon: Tensor, m: MetricJet) -> Jet:
    return jet_einsum("ab,a,b->", m.g_inv, upsilon, upsilon)


def expected_rescaled_schouten(pack: CurvaturePack, upsilon: Tensor) -> Tensor:
    """P_ab − ∇_aΥ_b + Υ_aΥ_b − ½|Υ|² g_ab（以 g 的聯絡）"""
    m = pack.metric
    d_ups = covariant_derivative(upsilon, pack.christoffel)
    outer = jet_einsum("a,b->ab", upsilon, upsilon)
    norm = upsilon_norm_squared(upsilon, m)
    half = m.space.backend.convert(QQ(1, 2))
    return pack.schouten - d_ups + outer - m.g.scale(norm * half)


def conformal_law_residuals(m: MetricJet, omega: Jet):
    """
    回傳 (Ĉ − Ω²C, P̂ − 期望值)，皆應為零
    """
    pack = curvature_pack(m, with_cotton=False)
    g_hat, upsilon = conformal_rescale(m, omega)
    pack_hat = curvature_pack(g_hat, with_cotton=False)
    factor = omega * omega
    weyl_residual = pack_hat.weyl - pack.weyl.scale(factor.truncate(pack.weyl.order))
    schouten_residual = pack_hat.schouten - expected_rescaled_schouten(pack, upsilon)
    return weyl_residual, schouten_residual


# ============================================================
# 測試
# ============================================================

def _conformally_flat(order: int, n: int = 6):
    space = JetSpace([f"x{i}" for i in range(n)], [], [0] * n)
    x = space.coordinate(0, order)
    omega = 1 + x
    g = Tensor.from_function(space, 'dd', order, lambda a, b: omega * omega if a == b else None)
    return space, MetricJet(g)


class TestCurvaturePack(unittest.TestCase):

    def test_flat_metric_has_no_curvature(self):
        space = JetSpace(['a', 'b', 'c', 'd'], [], [0] * 4)
        pack = curvature_pack(flat_metric(space, 3))
        for t in (pack.riemann, pack.ricci, pack.schouten, pack.weyl, pack.cotton):
            self.assertTrue(t.is_zero())
        self.assertTrue(pack.scalar.is_zero())

    def test_conformally_flat_has_zero_weyl(self):
        _, metric = _conformally_flat(3)
        pack = curvature_pack(metric)
        self.assertTrue(pack.weyl.is_zero())
        self.assertFalse(pack.riemann.is_zero())

    def test_example_metric_has_weyl(self):
        _, metric = _example_metric(3)
        pack = curvature_pack(metric)
        self.assertFalse(pack.weyl.at_point().is_zero())

    def test_weyl_norm_exact_and_float_agree(self):
        c = QQ(1, 3)
        exact = weyl_norm_squared(curvature_pack(_example_metric(3, c_value=c)[1], with_cotton=False)).constant_term().LC
        floating = weyl_norm_squared(curvature_pack(
            _example_metric(3, c_value=c, backend=ScalarBackend.floating())[1], with_cotton=False)).constant_term().LC
        symbolic = weyl_norm_squared(curvature_pack(_example_metric(3)[1], with_cotton=False)).constant_term()
        self.assertEqual(symbolic(c), exact)
        self.assertGreater(exact, 0)
        self.assertLessEqual(abs(float(exact) - float(floating)), 1e-9 * max(1.0, float(exact)))

    def test_dimension_too_small(self):
        space = JetSpace(['a', 'b', 'c'], [], [0] * 3)
        with self.assertRaises(DimensionTooSmall):
            curvature_pack(flat_metric(space, 3))

    def test_riemann_reconstruction(self):
        _, metric = _example_metric(3)
        pack = curvature_pack(metric)
        g = metric.g.truncate(pack.schouten.order)
        rebuilt = pack.weyl + kulkarni_nomizu(pack.schouten, g)
        self.assertTrue(rebuilt.equals(pack.riemann))
        self.assertTrue(weyl_part(pack.riemann, metric).equals(pack.weyl))

    def test_weyl_part_of_algebraic_tensor_is_trace_free(self):
        space = JetSpace([f"x{i}" for i in range(6)], [], [0] * 6)
        metric = flat_metric(space, 0)
        h = Tensor.from_function(space, 'dd', 0, lambda a, b: (a + 1) * (b + 1) + (a == b))
        k = Tensor.from_function(space, 'dd', 0, lambda a, b: a + b - 3)
        weyl = weyl_part(kulkarni_nomizu(h, k), metric)
        self.assertTrue(jet_einsum("ac,abcd->bd", metric.g_inv, weyl).is_zero())
        self.assertFalse(weyl.is_zero())

    def test_ricci_identity_on_one_form(self):
        # [∇_a, ∇_b] ω_c = R_abc^d ω_d
        space, metric = _example_metric(3)
        pack = curvature_pack(metric, with_cotton=False)
        t = space.coordinate(0, 3)
        y = space.coordinate(2, 3)
        u = space.coordinate(4, 3)
        form = Tensor.from_function(space, 'd', 3, lambda a: t * y * (a + 1) + u * t * t - a * y * y)
        second = covariant_derivative(covariant_derivative(form, pack.christoffel), pack.christoffel)
        commutator = second - second.transpose((1, 0, 2))
        r_mixed = raise_index(pack.riemann, 3, metric)
        action = jet_einsum("abcd,d->abc", r_mixed, form)
        self.assertTrue(commutator.equals(action))

    def test_weyl_divergence_matches_cotton(self):
        # ∇^a C_abcd = (n−3) A_bcd
        _, metric = _example_metric(3)
        pack = curvature_pack(metric)
        d_weyl = covariant_derivative(pack.weyl, pack.christoffel)
        divergence = jet_einsum("ea,eabcd->bcd", metric.g_inv, d_weyl)
        self.assertTrue(divergence.equals(pack.cotton.scale(metric.n - 3)))

    def test_flat_cotton_vanishes(self):
        space = JetSpace(['a', 'b', 'c', 'd', 'e', 'f'], [], [0] * 6)
        pack = curvature_pack(flat_metric(space, 3))
        self.assertTrue(pack.cotton.is_zero())


class TestConformalLaws(unittest.TestCase):

    def test_identity_rescale(self):
        space, metric = _example_metric(2)
        g_hat, upsilon = conformal_rescale(metric, space.one(2))
        self.assertTrue(g_hat.g.equals(metric.g))
        self.assertTrue(upsilon.is_zero())

    def test_flat_with_linear_factor(self):
        space = JetSpace([f"x{i}" for i in range(6)], [], [0] * 6)
        metric = flat_metric(space, 3)
        omega = 1 + space.coordinate(0, 3)
        weyl_res, schouten_res = conformal_law_residuals(metric, omega)
        self.assertTrue(weyl_res.is_zero())
        self.assertTrue(schouten_res.is_zero())

    def test_flat_with_mixed_factor(self):
        space = JetSpace([f"x{i}" for i in range(6)], [], [0] * 6)
        metric = flat_metric(space, 3)
        x, y, z = (space.coordinate(i, 3) for i in range(3))
        weyl_res, schouten_res = conformal_law_residuals(metric, 1 + y + x * z)
        self.assertTrue(weyl_res.is_zero())
        self.assertTrue(schouten_res.is_zero())

    def test_example_metric_laws(self):
        space, metric = _example_metric(3)
        for omega in (1 + space.coordinate(2, 3),
                      1 + space.coordinate(1, 3),
                      1 + space.coordinate(2, 3) + space.coordinate(1, 3) * space.coordinate(3, 3)):
            weyl_res, schouten_res = conformal_law_residuals(metric, omega)
            self.assertTrue(weyl_res.is_zero())
            self.assertTrue(schouten_res.is_zero())

    def test_non_positive_factor_rejected(self):
        space = JetSpace([f"x{i}" for i in range(4)], [], [0] * 4)
        metric = flat_metric(space, 2)
        with self.assertRaises(NonPositiveConformalFactor):
            conformal_rescale(metric, space.coordinate(0, 2) - 1)


if __name__ == '__main__':
    unittest.main()
