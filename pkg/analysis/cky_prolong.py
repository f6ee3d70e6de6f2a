#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
延拓聯絡：截面 Ψ = (ω, K, μ, Σ) 的平行性殘差

    ∇_a ω_bc = μ_abc + g_ab K_c − g_ac K_b
    ∇_a K_b  = P_a^c ω_bc + Σ_ab
    ∇_a μ_bcd = −cyc(g_ab Σ_cd) − cyc(P_ab ω_cd) − ½ cyc(C_bca^p ω_pd)
    ∇_a Σ_bc = −(P_ab K_c − P_ac K_b) + P_a^e μ_ebc − ½ A^p_bc ω_pa
               − ½(A^p_ab ω_cp − A^p_ac ω_bp) − C_bca^p K_p

cyc 為 (b, c, d) 的循環和。Kähler 度量 ĝ = Ω² g 給出平行截面（見 build_witness）。
"""

import logging
import math
import time
import unittest
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from sympy.polys.domains import QQ

from analysis.obstruction import weyl_constraint_residual
from core.curvature import CurvaturePack, check_conformal_factor, curvature_pack
from core.exact_scalars import Jet, JetSpace
from core.exceptions import InvariantViolation, NonAntisymmetricInput, NotKahlerInput, OrderExhausted
from core.tensor_core import (
    ANTISYMMETRIC,
    MetricJet,
    Tensor,
    alternate,
    christoffel_symbols,
    covariant_derivative,
    flat_metric,
    jet_einsum,
    raise_index,
    symmetrize,
)

logger = logging.getLogger(__name__)


def fiber_dimension(n: int) -> int:
    """C(n,2) + n + C(n,3) + C(n,2) = n(n+1)(n+2)/6"""
    return 2 * math.comb(n, 2) + n + math.comb(n, 3)


def _check_antisymmetric(t: Tensor, name: str):
    slots = tuple(range(t.rank))
    try:
        return t.with_symmetry(((ANTISYMMETRIC, slots),))
    except InvariantViolation as exc:
        raise NonAntisymmetricInput(f"{name} is not antisymmetric", field=name) from exc


@dataclass
class ProlongationSection:
    omega: Tensor
    K: Tensor
    mu: Tensor
    Sigma: Tensor

    def __post_init__(self):
        self.omega = _check_antisymmetric(self.omega, "omega")
        self.mu = _check_antisymmetric(self.mu, "mu")
        self.Sigma = _check_antisymmetric(self.Sigma, "Sigma")

    @property
    def n(self) -> int:
        return self.omega.n

    @property
    def order(self) -> int:
        return min(self.omega.order, self.K.order, self.mu.order, self.Sigma.order)

    def scale(self, factor) -> 'ProlongationSection':
        return ProlongationSection(self.omega.scale(factor), self.K.scale(factor),
                                   self.mu.scale(factor), self.Sigma.scale(factor))

    def at_point(self) -> 'ProlongationSection':
        return ProlongationSection(self.omega.at_point(), self.K.at_point(),
                                   self.mu.at_point(), self.Sigma.at_point())


@dataclass
class ConnectionResidual:
    slot1: Tensor
    slot2a: Tensor
    slot2b: Tensor
    slot3: Optional[Tensor]

    def slots(self) -> Dict[str, Optional[Tensor]]:
        return {"slot1": self.slot1, "slot2a": self.slot2a,
                "slot2b": self.slot2b, "slot3": self.slot3}

    def summary(self) -> Dict[str, float]:
        return {name: t.max_abs() for name, t in self.slots().items() if t is not None}

    @property
    def is_parallel(self) -> bool:
        return all(t.is_zero() for t in self.slots().values() if t is not None)


@dataclass
class Witness:
    metric: MetricJet
    section: ProlongationSection
    pack: CurvaturePack
    upsilon: Tensor


# ============================================================
# 聯絡
# ============================================================

def apply_connection(psi: ProlongationSection, pack: CurvaturePack, m: MetricJet,
                     require_slot3: bool = True) -> ConnectionResidual:
    """四個槽位的殘差；Σ 槽需要 Cotton（度量階數 ≥ 3）"""
    if psi.order < 1:
        raise OrderExhausted("section jets need order >= 1", order=psi.order)
    if pack.cotton is None and require_slot3:
        raise OrderExhausted("Sigma slot needs the Cotton tensor (metric order >= 3)",
                             order=m.order)
    started = time.time()
    gamma = pack.christoffel
    g = m.g
    P = pack.schouten
    P_mixed = pack.schouten_mixed()
    C_mixed = pack.weyl_mixed()
    omega, K, mu, Sigma = psi.omega, psi.K, psi.mu, psi.Sigma
    half = QQ(1, 2)

    d_omega = covariant_derivative(omega, gamma)
    g_k = jet_einsum("ab,c->abc", g, K)
    slot1 = d_omega - mu - (g_k - g_k.transpose((0, 2, 1)))

    d_k = covariant_derivative(K, gamma)
    slot2a = d_k - jet_einsum("ac,bc->ab", P_mixed, omega) - Sigma

    d_mu = covariant_derivative(mu, gamma)
    cyc_g_sigma = (jet_einsum("ab,cd->abcd", g, Sigma) + jet_einsum("ac,db->abcd", g, Sigma)
                   + jet_einsum("ad,bc->abcd", g, Sigma))
    cyc_p_omega = (jet_einsum("ab,cd->abcd", P, omega) + jet_einsum("ac,db->abcd", P, omega)
                   + jet_einsum("ad,bc->abcd", P, omega))
    cyc_weyl = (jet_einsum("bcap,pd->abcd", C_mixed, omega)
                + jet_einsum("cdap,pb->abcd", C_mixed, omega)
                + jet_einsum("dbap,pc->abcd", C_mixed, omega))
    slot2b = d_mu + cyc_g_sigma + cyc_p_omega + cyc_weyl.scale(half)

    slot3 = None
    if pack.cotton is not None:
        A_up = raise_index(pack.cotton, 0, m)
        d_sigma = covariant_derivative(Sigma, gamma)
        slot3 = (d_sigma
                 + jet_einsum("ab,c->abc", P, K) - jet_einsum("ac,b->abc", P, K)
                 - jet_einsum("ae,ebc->abc", P_mixed, mu)
                 + jet_einsum("pbc,pa->abc", A_up, omega).scale(half)
                 + (jet_einsum("pab,cp->abc", A_up, omega)
                    - jet_einsum("pac,bp->abc", A_up, omega)).scale(half)
                 + jet_einsum("bcap,p->abc", C_mixed, K))

    residual = ConnectionResidual(slot1, slot2a, slot2b, slot3)
    logger.debug(f"apply_connection in {time.time() - started:.2f}s: {residual.summary()}")
    return residual


def slot2_split(psi: ProlongationSection, pack: CurvaturePack) -> Tuple[Tensor, Tensor]:
    """
    (skew(∇K − Pω) − Σ, sym(∇K) − sym(P_a^c ω_bc))
    """
    d_k = covariant_derivative(psi.K, pack.christoffel)
    p_omega = jet_einsum("ac,bc->ab", pack.schouten_mixed(), psi.omega)
    skew = alternate(d_k - p_omega, (0, 1)) - psi.Sigma
    sym = symmetrize(d_k, (0, 1)) - symmetrize(p_omega, (0, 1))
    return skew, sym


def killing_residual(K: Tensor, m: MetricJet, gamma: Optional[Tensor] = None) -> Tensor:
    """∇_(a K_b)"""
    if gamma is None:
        gamma = christoffel_symbols(m)
    return symmetrize(covariant_derivative(K, gamma), (0, 1))


# ============================================================
# 見證截面
# ============================================================

def _sigma_from_first_derivative(K: Tensor, omega: Tensor, pack: CurvaturePack) -> Tensor:
    d_k = covariant_derivative(K, pack.christoffel)
    p_omega = jet_einsum("ac,bc->ab", pack.schouten_mixed(), omega)
    return alternate(d_k - p_omega, (0, 1))


def _contract_upsilon(upsilon: Tensor, omega: Tensor, m: MetricJet) -> Tensor:
    """K_b = −Υ^a ω_ab"""
    ups_up = raise_index(upsilon, 0, m)
    return -jet_einsum("a,ab->b", ups_up, omega, valence='d')


def _wedge_upsilon(upsilon: Tensor, omega: Tensor) -> Tensor:
    """μ = −(Υ_a ω_bc + Υ_b ω_ca + Υ_c ω_ab)"""
    return -(jet_einsum("a,bc->abc", upsilon, omega) + jet_einsum("b,ca->abc", upsilon, omega)
             + jet_einsum("c,ab->abc", upsilon, omega))


def check_kahler(g_hat: MetricJet, omega_hat: Tensor) -> Tensor:
    """∇̂ω̂ = 0，否則 NotKahlerInput"""
    _check_antisymmetric(omega_hat, "omega")
    nabla = covariant_derivative(omega_hat, christoffel_symbols(g_hat))
    if not nabla.is_zero():
        raise NotKahlerInput("the given two-form is not parallel for the Kahler metric",
                             max_residual=nabla.max_abs())
    return nabla


def build_witness(g_hat: MetricJet, omega_hat: Tensor, omega_factor: Jet) -> Witness:
    """
    由 Kähler 資料 (ĝ, ω̂) 與共形因子 Ω 建出 g = Ω⁻²ĝ 上的平行截面

    ω = Ω⁻³ω̂，K = −Υ⌟ω，μ = −3Υ∧ω，Σ = skew(∇K − Pω)，Υ = dΩ/Ω。
    """
    check_conformal_factor(omega_factor)
    check_kahler(g_hat, omega_hat)
    order = min(g_hat.order, omega_hat.order, omega_factor.order)
    inv = omega_factor.inverse().truncate(order)
    metric = MetricJet(g_hat.g.truncate(order).scale(inv * inv), f"{g_hat.label}*Omega^-2")
    omega = omega_hat.truncate(order).scale(inv * inv * inv).with_weight(3)

    d_factor = Tensor.from_function(metric.space, 'd', order - 1,
                                    lambda a: omega_factor.partial(a))
    upsilon = d_factor.scale(inv.truncate(order - 1))
    K = _contract_upsilon(upsilon, omega, metric).with_weight(1)
    mu = _wedge_upsilon(upsilon, omega).with_weight(3)
    pack = curvature_pack(metric, with_cotton=metric.order >= 3)
    Sigma = _sigma_from_first_derivative(K, omega, pack).with_weight(1)
    section = ProlongationSection(omega, K, mu, Sigma)
    logger.info(f"witness built: metric order {metric.order}, section order {section.order}")
    return Witness(metric, section, pack, upsilon)


def derive_section(omega: Tensor, pack: CurvaturePack) -> ProlongationSection:
    """
    只由 ω 讀出截面：K_c = ∇^b ω_bc / (n−1)，μ = ∇_[a ω_bc]，Σ = skew(∇K − Pω)
    """
    m = pack.metric
    n = m.n
    d_omega = covariant_derivative(_check_antisymmetric(omega, "omega"), pack.christoffel)
    K = jet_einsum("ab,abc->c", m.g_inv, d_omega, valence='d').scale(QQ(1, n - 1))
    mu = alternate(d_omega, (0, 1, 2))
    Sigma = _sigma_from_first_derivative(K, omega, pack)
    return ProlongationSection(omega, K, mu, Sigma)


def standard_symplectic(space: JetSpace, order: int, scale=1) -> Tensor:
    """J_{2i,2i+1} = 1"""
    def entry(a, b):
        if a % 2 == 0 and b == a + 1:
            return scale
        if b % 2 == 0 and a == b + 1:
            return -scale
        return None
    return Tensor.from_function(space, 'dd', order, entry)


def zero_section_slots(space: JetSpace, order: int):
    return (Tensor.zeros(space, 'd', order), Tensor.zeros(space, 'ddd', order),
            Tensor.zeros(space, 'dd', order))


def product_kahler(space: JetSpace, order: int) -> Tuple[MetricJet, Tensor]:
    """
    ĝ = Σ λ_i (dx_i² + dy_i²)，ω̂ = Σ λ_i dx_i∧dy_i
    λ_1 = 1 + x_1² + y_1²，λ_2 = 1 + x_2，其餘為 1（n ≥ 6）
    """
    x1, y1, x2 = (space.coordinate(i, order) for i in range(3))
    lambdas = [1 + x1 * x1 + y1 * y1, 1 + x2] + [space.one(order)] * (space.n // 2 - 2)
    g = Tensor.from_function(space, 'dd', order,
                             lambda a, b: lambdas[a // 2] if a == b else None)
    omega = Tensor.from_function(space, 'dd', order, lambda a, b: (
        lambdas[a // 2] if (a % 2 == 0 and b == a + 1) else
        (-lambdas[b // 2] if (b % 2 == 0 and a == b + 1) else None)))
    return MetricJet(g, "product-kahler"), omega


# ============================================================
# 測試
# ============================================================

def _space(n: int = 6, point=None) -> JetSpace:
    return JetSpace([f"x{i}" for i in range(n)], [], point or [0] * n)


class TestFiberDimension(unittest.TestCase):

    def test_counts(self):
        for n in (4, 6, 8, 10):
            self.assertEqual(fiber_dimension(n), n * (n + 1) * (n + 2) // 6)
        self.assertEqual(fiber_dimension(6), 56)


class TestApplyConnection(unittest.TestCase):

    def test_flat_symplectic_is_parallel(self):
        space = _space()
        metric = flat_metric(space, 3)
        pack = curvature_pack(metric)
        K, mu, Sigma = zero_section_slots(space, 3)
        psi = ProlongationSection(standard_symplectic(space, 3), K, mu, Sigma)
        self.assertTrue(apply_connection(psi, pack, metric).is_parallel)

    def test_constant_k_shows_in_first_slot(self):
        space = _space()
        metric = flat_metric(space, 3)
        pack = curvature_pack(metric)
        _, mu, Sigma = zero_section_slots(space, 3)
        K = Tensor.from_function(space, 'd', 3, lambda a: 1 if a == 0 else None)
        psi = ProlongationSection(standard_symplectic(space, 3), K, mu, Sigma)
        residual = apply_connection(psi, pack, metric)
        g_k = jet_einsum("ab,c->abc", metric.g, K)
        self.assertTrue(residual.slot1.equals(-(g_k - g_k.transpose((0, 2, 1)))))
        self.assertFalse(residual.is_parallel)

    def test_sigma_slot_needs_cotton(self):
        space = _space()
        metric = flat_metric(space, 2)
        pack = curvature_pack(metric, with_cotton=False)
        K, mu, Sigma = zero_section_slots(space, 2)
        psi = ProlongationSection(standard_symplectic(space, 2), K, mu, Sigma)
        with self.assertRaises(OrderExhausted):
            apply_connection(psi, pack, metric)

    def test_non_antisymmetric_section_rejected(self):
        space = _space()
        K, mu, Sigma = zero_section_slots(space, 2)
        bad = Tensor.from_function(space, 'dd', 2, lambda a, b: 1 if a == 0 else None)
        with self.assertRaises(NonAntisymmetricInput):
            ProlongationSection(bad, K, mu, Sigma)


class TestWitness(unittest.TestCase):

    def _flat_witness(self, order, factor):
        space = _space()
        return space, build_witness(flat_metric(space, order), standard_symplectic(space, order),
                                    factor(space, order))

    def test_trivial_factor(self):
        space, witness = self._flat_witness(3, lambda s, k: s.one(k))
        self.assertTrue(witness.section.K.is_zero())
        self.assertTrue(witness.section.mu.is_zero())
        self.assertTrue(witness.section.Sigma.is_zero())

    def test_linear_factor_is_parallel(self):
        space, witness = self._flat_witness(3, lambda s, k: 1 + s.coordinate(0, k))
        self.assertFalse(witness.section.K.is_zero())
        residual = apply_connection(witness.section, witness.pack, witness.metric)
        self.assertTrue(residual.is_parallel, residual.summary())

    def test_curved_factor_is_parallel(self):
        space, witness = self._flat_witness(
            4, lambda s, k: 1 + s.coordinate(0, k) + s.coordinate(1, k) * s.coordinate(1, k))
        residual = apply_connection(witness.section, witness.pack, witness.metric)
        self.assertTrue(residual.is_parallel, residual.summary())
        skew, sym = slot2_split(witness.section, witness.pack)
        self.assertTrue(skew.is_zero())
        self.assertTrue(sym.is_zero())

    def test_product_kahler_is_parallel(self):
        space = _space()
        g_hat, omega_hat = product_kahler(space, 3)
        factor = 1 + space.coordinate(3, 3) + space.coordinate(0, 3) * space.coordinate(4, 3)
        witness = build_witness(g_hat, omega_hat, factor)
        self.assertFalse(witness.pack.weyl.is_zero())
        self.assertFalse(witness.pack.cotton.is_zero())
        residual = apply_connection(witness.section, witness.pack, witness.metric)
        self.assertTrue(residual.is_parallel, residual.summary())
        weyl = weyl_constraint_residual(witness.pack.weyl_mixed(), witness.section.omega)
        self.assertTrue(weyl.is_zero())

    def test_not_kahler_rejected(self):
        space = _space()
        x = space.coordinate(0, 3)
        omega = standard_symplectic(space, 3).scale(1 + x)
        with self.assertRaises(NotKahlerInput):
            build_witness(flat_metric(space, 3), omega, space.one(3))

    def test_derive_section_reproduces_witness(self):
        space, witness = self._flat_witness(3, lambda s, k: 1 + s.coordinate(2, k))
        derived = derive_section(witness.section.omega, witness.pack)
        self.assertTrue(derived.K.equals(witness.section.K))
        self.assertTrue(derived.mu.equals(witness.section.mu))
        self.assertTrue(derived.Sigma.equals(witness.section.Sigma))

    def test_two_step_rescaling(self):
        space = _space()
        order = 3
        first = 1 + space.coordinate(0, order)
        second = 1 + space.coordinate(1, order) * space.coordinate(2, order)
        one_pass = build_witness(flat_metric(space, order), standard_symplectic(space, order),
                                 first * second)
        step = build_witness(flat_metric(space, order), standard_symplectic(space, order), first)
        inv = second.inverse()
        g_two = step.metric.g.scale(inv * inv)
        omega_two = step.section.omega.scale(inv * inv * inv)
        self.assertTrue(g_two.equals(one_pass.metric.g))
        self.assertTrue(omega_two.equals(one_pass.section.omega))

    def test_einstein_witness_gives_killing_field(self):
        space, witness = self._flat_witness(3, lambda s, k: 1 + s.coordinate(0, k))
        residual = killing_residual(witness.section.K, witness.metric, witness.pack.christoffel)
        self.assertTrue(residual.is_zero())


class TestKillingResidual(unittest.TestCase):

    def test_zero_and_rotation(self):
        space = _space()
        metric = flat_metric(space, 2)
        x, y = space.coordinate(0, 2), space.coordinate(1, 2)
        self.assertTrue(killing_residual(Tensor.zeros(space, 'd', 2), metric).is_zero())
        rotation = Tensor.from_function(space, 'd', 2, lambda a: -y if a == 0 else (x if a == 1 else None))
        self.assertTrue(killing_residual(rotation, metric).is_zero())
        dilation = Tensor.from_function(space, 'd', 2, lambda a: x if a == 0 else None)
        self.assertFalse(killing_residual(dilation, metric).is_zero())


if __name__ == '__main__':
    unittest.main()
