#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tractor 計算：密度、標準 tractor 叢、分裂算子 D 與 L、尺度 tractor、
共形 Killing–Yano 算子，以及 Kähler / Kähler–Einstein / Ricci 平坦 Kähler 的判別

分量一律相對某個尺度 g 記錄，基底順序 (Y, Z_1..Z_n, X)：
    V_A ≐ (σ, μ_b, ρ)，h(V, W) = σρ' + ρσ' + g^bc μ_b μ'_c
    ∇^𝒯_a V = (∇_aσ − μ_a, ∇_aμ_b + P_ab σ + g_ab ρ, ∇_aρ − P_ab μ^b)
三形式 Φ ≐ (σ_bc; ν_abc, φ_c; ρ_bc) 的嵌入：
    Φ_Ybc = σ_bc，Φ_abc = ν_abc，Φ_YbX = ½φ_b，Φ_Xbc = −ρ_bc
"""

import itertools
import logging
import time
import unittest
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sympy.polys.domains import QQ

from analysis.cky_prolong import (
    ProlongationSection,
    build_witness,
    product_kahler,
    standard_symplectic,
)
from analysis.constraints import omega_norm
from core.curvature import CurvaturePack, conformal_rescale, curvature_pack
from core.exact_scalars import Jet, JetSpace
from core.exceptions import (
    NonPerfectSquareConstantTerm,
    OrderExhausted,
    ScaleMismatch,
    SlotMismatch,
)
from core.tensor_core import (
    MetricJet,
    Tensor,
    _permutation_sign,
    alternate,
    covariant_derivative,
    covariant_derivative_scalar,
    flat_metric,
    full_contraction,
    jet_einsum,
    kronecker,
    raise_index,
)

logger = logging.getLogger(__name__)


# Φ^ABC Φ_ABC = PHI_NORM_NUMERATOR · R / (n − 1)，R 為 Kähler 尺度的純量曲率（量測值）
PHI_NORM_NUMERATOR = 3


def phi_norm_ratio(n: int):
    return QQ(PHI_NORM_NUMERATOR, n - 1)


def _truncate_all(jets: Sequence[Jet], order: int) -> List[Jet]:
    return [j.truncate(order) for j in jets]


# ============================================================
# 密度與 tractor 向量
# ============================================================

@dataclass
class Density:
    value: Jet
    weight: int

    def rescale(self, factor: Jet) -> 'Density':
        """ĝ = Ω²g 之下的值：Ω^w · value"""
        order = min(self.value.order, factor.order)
        base = factor.truncate(order) if self.weight >= 0 else factor.truncate(order).inverse()
        return Density(self.value.truncate(order) * base ** abs(self.weight), self.weight)


@dataclass
class TractorVector:
    """V_A ≐ (σ, μ_b, ρ)，scale 為分裂所用度量的標籤"""
    scale: str
    sigma: Jet
    mu: Tensor
    rho: Jet

    def __post_init__(self):
        if self.mu.valence != 'd':
            raise SlotMismatch("tractor middle slot must be a one-form", valence=self.mu.valence)
        order = min(self.sigma.order, self.mu.order, self.rho.order)
        self.sigma = self.sigma.truncate(order)
        self.mu = self.mu.truncate(order)
        self.rho = self.rho.truncate(order)

    @property
    def n(self) -> int:
        return self.mu.n

    @property
    def order(self) -> int:
        return self.sigma.order

    def components(self) -> List[Jet]:
        return [self.sigma] + [self.mu[b] for b in range(self.n)] + [self.rho]

    @classmethod
    def from_components(cls, scale: str, comps: Sequence[Jet], space: JetSpace) -> 'TractorVector':
        order = min(c.order for c in comps)
        n = space.n
        mu = Tensor.from_function(space, 'd', order, lambda b: comps[b + 1])
        return cls(scale, comps[0].truncate(order), mu, comps[n + 1].truncate(order))

    def __add__(self, other: 'TractorVector') -> 'TractorVector':
        _same_scale(self, other)
        order = min(self.order, other.order)
        return TractorVector(self.scale, self.sigma.truncate(order) + other.sigma.truncate(order),
                             self.mu + other.mu, self.rho.truncate(order) + other.rho.truncate(order))

    def equals(self, other: 'TractorVector') -> bool:
        _same_scale(self, other)
        order = min(self.order, other.order)
        return all((a.truncate(order) - b.truncate(order)).is_zero()
                   for a, b in zip(self.components(), other.components()))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components())


@dataclass
class ScaleTractor:
    density: Density
    tractor: TractorVector

    @property
    def x_slot(self) -> Jet:
        return x_pairing(self.tractor)


@dataclass
class TractorDerivative:
    """∇^𝒯_a V 的三個槽位，a 為第一個指標"""
    scale: str
    sigma: Tensor
    mu: Tensor
    rho: Tensor

    def slots(self) -> Dict[str, Tensor]:
        return {"top": self.sigma, "middle": self.mu, "bottom": self.rho}

    def direction(self, a: int) -> TractorVector:
        space = self.sigma.space
        mu = Tensor.from_function(space, 'd', self.mu.order, lambda b: self.mu[a, b])
        return TractorVector(self.scale, self.sigma[a], mu, self.rho[a])

    def is_zero(self) -> bool:
        return all(t.is_zero() for t in self.slots().values())

    def max_abs(self) -> float:
        return max(t.max_abs() for t in self.slots().values())


def _same_scale(*items):
    scales = {item.scale for item in items}
    if len(scales) > 1:
        raise ScaleMismatch("tractor quantities are split with different scales",
                            scales=sorted(scales))


def x_pairing(V: TractorVector) -> Jet:
    """X^A V_A = σ"""
    return V.sigma


def tractor_metric(V: TractorVector, W: TractorVector, m: MetricJet) -> Jet:
    _same_scale(V, W)
    order = min(V.order, W.order, m.order)
    mu_pair = jet_einsum("bc,b,c->", m.g_inv, V.mu, W.mu).truncate(order)
    return (V.sigma.truncate(order) * W.rho.truncate(order)
            + V.rho.truncate(order) * W.sigma.truncate(order) + mu_pair)


def tractor_connection(V: TractorVector, pack: CurvaturePack) -> TractorDerivative:
    m = pack.metric
    if V.scale != m.label:
        raise ScaleMismatch("tractor is not split with the pack's metric",
                            tractor=V.scale, metric=m.label)
    if V.order < 1:
        raise OrderExhausted("tractor connection needs order >= 1", order=V.order)
    sigma, mu, rho = V.sigma, V.mu, V.rho
    top = covariant_derivative_scalar(sigma) - mu
    order = min(top.order, pack.schouten.order, V.order)
    P = pack.schouten.truncate(order)
    g = m.g.truncate(order)
    middle = (covariant_derivative(mu, pack.christoffel)
              + P.scale(sigma.truncate(order)) + g.scale(rho.truncate(order)))
    bottom = (covariant_derivative_scalar(rho)
              - jet_einsum("ab,b->a", pack.schouten_mixed(), mu, valence='d'))
    return TractorDerivative(V.scale, top, middle, bottom)


def tractor_metric_and_connection(V: TractorVector, W: TractorVector, pack: CurvaturePack,
                                  direction: int) -> Tuple[Jet, TractorVector]:
    return (tractor_metric(V, W, pack.metric),
            tractor_connection(V, pack).direction(direction))


def tractor_metric_gradient(V: TractorVector, W: TractorVector, m: MetricJet) -> Tensor:
    """∂_a h(V, W)"""
    return covariant_derivative_scalar(tractor_metric(V, W, m))


def metricity_residual(V: TractorVector, W: TractorVector, pack: CurvaturePack) -> Tensor:
    """∂_a h(V,W) − h(∇_aV, W) − h(V, ∇_aW)"""
    m = pack.metric
    dV, dW = tractor_connection(V, pack), tractor_connection(W, pack)
    grad = tractor_metric_gradient(V, W, m)
    along_V = [dV.direction(a) for a in range(m.n)]
    along_W = [dW.direction(a) for a in range(m.n)]
    order = min([grad.order] + [v.order for v in along_V + along_W])

    def entry(a):
        return (grad[a].truncate(order)
                - tractor_metric(along_V[a], W, m).truncate(order)
                - tractor_metric(V, along_W[a], m).truncate(order))

    return Tensor.from_function(m.space, 'd', order, entry)


# ============================================================
# 分裂算子 D
# ============================================================

def splitting_D(sigma: Density, pack: CurvaturePack) -> ScaleTractor:
    """I = Dσ = (σ, ∇σ, −(1/n)(Δσ + Pσ))，P 為 Schouten 跡"""
    if sigma.weight != 1:
        raise SlotMismatch("D acts on densities of weight 1", weight=sigma.weight)
    if sigma.value.order < 2:
        raise OrderExhausted("D needs a density jet of order >= 2", order=sigma.value.order)
    m = pack.metric
    n = m.n
    value = sigma.value
    d_sigma = covariant_derivative_scalar(value, 1)
    hessian = covariant_derivative(d_sigma, pack.christoffel)
    laplacian = jet_einsum("ab,ab->", m.g_inv, hessian)
    order = min(laplacian.order, pack.schouten_trace.order)
    rho = (laplacian.truncate(order) + pack.schouten_trace.truncate(order) * value.truncate(order)
           ) * m.space.backend.convert(QQ(-1, n))
    return ScaleTractor(sigma, TractorVector(m.label, value, d_sigma, rho))


# ============================================================
# 換尺度
# ============================================================

@dataclass
class ScaleChange:
    """ĝ = Ω²g 的分量轉換矩陣 T（V̂_A = T_A^B V_B）"""
    source: MetricJet
    target: MetricJet
    factor: Jet
    upsilon: Tensor
    matrix: np.ndarray

    @property
    def order(self) -> int:
        return min(j.order for j in self.matrix.flat)

    def apply_vector(self, V: TractorVector) -> TractorVector:
        if V.scale != self.source.label:
            raise ScaleMismatch("tractor is not split with the source metric",
                                tractor=V.scale, source=self.source.label)
        order = min(self.order, V.order)
        comps = _truncate_all(V.components(), order)
        size = len(comps)
        out = []
        for A in range(size):
            total = self.factor.space.zero(order)
            for B in range(size):
                entry = self.matrix[A, B]
                if entry.poly and comps[B].poly:
                    total = total + entry.truncate(order) * comps[B]
            out.append(total)
        return TractorVector.from_components(self.target.label, out, self.factor.space)

    def apply_three_form(self, phi: 'TractorThreeForm') -> 'TractorThreeForm':
        if phi.scale != self.source.label:
            raise ScaleMismatch("three-form is not split with the source metric",
                                tractor=phi.scale, source=self.source.label)
        array = phi.array()
        order = min(self.order, phi.order)
        size = array.shape[0]
        rows = [[(B, self.matrix[A, B].truncate(order)) for B in range(size) if self.matrix[A, B].poly]
                for A in range(size)]
        space = self.factor.space
        out = np.empty(array.shape, dtype=object)
        for idx in itertools.product(range(size), repeat=3):
            out[idx] = space.zero(order)
        for A, B, C in itertools.combinations(range(size), 3):
            total = space.zero(order)
            for a, ta in rows[A]:
                for b, tb in rows[B]:
                    if a == b:
                        continue
                    tab = ta * tb
                    for c, tc in rows[C]:
                        entry = array[a, b, c]
                        if entry.poly:
                            total = total + tab * tc * entry.truncate(order)
            _set_antisymmetric(out, (A, B, C), total)
        return TractorThreeForm.from_array(self.target.label, out, space)


def scale_change(m: MetricJet, factor: Jet, label: Optional[str] = None) -> ScaleChange:
    """
    T 的非零元：
        T_Y^Y = Ω，T_b^Y = ΩΥ_b，T_b^c = Ωδ_b^c，
        T_X^Y = −½Ω⁻¹|Υ|²，T_X^c = −Ω⁻¹Υ^c，T_X^X = Ω⁻¹
    """
    target, upsilon = conformal_rescale(m, factor, label)
    n = m.n
    order = upsilon.order
    space = m.space
    omega = factor.truncate(order)
    inv = omega.inverse()
    ups_up = raise_index(upsilon, 0, m)
    norm = jet_einsum("a,a->", upsilon, ups_up).truncate(order)
    half = space.backend.convert(QQ(1, 2))
    size = n + 2
    T = np.empty((size, size), dtype=object)
    for A, B in itertools.product(range(size), repeat=2):
        T[A, B] = space.zero(order)
    T[0, 0] = omega
    for b in range(n):
        T[b + 1, 0] = omega * upsilon[b].truncate(order)
        T[b + 1, b + 1] = omega
        T[n + 1, b + 1] = -inv * ups_up[b].truncate(order)
    T[n + 1, 0] = -inv * norm * half
    T[n + 1, n + 1] = inv
    return ScaleChange(m, target, factor, upsilon, T)


# ============================================================
# 三形式
# ============================================================

def _set_antisymmetric(array: np.ndarray, idx: Tuple[int, int, int], value: Jet):
    for perm in itertools.permutations(range(3)):
        target = tuple(idx[p] for p in perm)
        array[target] = value if _permutation_sign(perm) > 0 else -value


@dataclass
class TractorThreeForm:
    """Φ ≐ (σ_bc; ν_abc, φ_c; ρ_bc)"""
    scale: str
    top: Tensor
    nu: Tensor
    phi: Tensor
    rho: Tensor

    def __post_init__(self):
        order = min(self.top.order, self.nu.order, self.phi.order, self.rho.order)
        self.top = self.top.truncate(order)
        self.nu = self.nu.truncate(order)
        self.phi = self.phi.truncate(order)
        self.rho = self.rho.truncate(order)

    @property
    def n(self) -> int:
        return self.top.n

    @property
    def order(self) -> int:
        return self.top.order

    def slots(self) -> Dict[str, Tensor]:
        return {"top": self.top, "nu": self.nu, "phi": self.phi, "rho": self.rho}

    def __add__(self, other: 'TractorThreeForm') -> 'TractorThreeForm':
        _same_scale(self, other)
        return TractorThreeForm(self.scale, self.top + other.top, self.nu + other.nu,
                                self.phi + other.phi, self.rho + other.rho)

    def difference(self, other: 'TractorThreeForm') -> Dict[str, Tensor]:
        _same_scale(self, other)
        mine, theirs = self.slots(), other.slots()
        return {name: mine[name] - theirs[name] for name in mine}

    def equals(self, other: 'TractorThreeForm') -> bool:
        return all(t.is_zero() for t in self.difference(other).values())

    def array(self) -> np.ndarray:
        n, order = self.n, self.order
        space = self.top.space
        size = n + 2
        Y, X = 0, n + 1
        half = space.backend.convert(QQ(1, 2))
        out = np.empty((size,) * 3, dtype=object)
        for idx in itertools.product(range(size), repeat=3):
            out[idx] = space.zero(order)
        for b, c in itertools.combinations(range(n), 2):
            _set_antisymmetric(out, (Y, b + 1, c + 1), self.top[b, c])
            _set_antisymmetric(out, (b + 1, c + 1, X), -self.rho[b, c])
        for a, b, c in itertools.combinations(range(n), 3):
            _set_antisymmetric(out, (a + 1, b + 1, c + 1), self.nu[a, b, c])
        for b in range(n):
            _set_antisymmetric(out, (Y, b + 1, X), self.phi[b] * half)
        return out

    @classmethod
    def from_array(cls, scale: str, array: np.ndarray, space: JetSpace) -> 'TractorThreeForm':
        n = space.n
        Y, X = 0, n + 1
        order = min(j.order for j in array.flat)
        top = Tensor.from_function(space, 'dd', order, lambda b, c: array[Y, b + 1, c + 1])
        nu = Tensor.from_function(space, 'ddd', order, lambda a, b, c: array[a + 1, b + 1, c + 1])
        phi = Tensor.from_function(space, 'd', order, lambda b: array[Y, b + 1, X] * 2)
        rho = Tensor.from_function(space, 'dd', order, lambda b, c: -array[X, b + 1, c + 1])
        return cls(scale, top, nu, phi, rho)


def psi_to_phi(psi: ProlongationSection, scale: str) -> TractorThreeForm:
    """E ≅ Λ³𝒯：(ω, K, μ, Σ) ↦ (ω; μ, 2K; −Σ)"""
    return TractorThreeForm(scale, psi.omega, psi.mu, psi.K.scale(2), -psi.Sigma)


# ============================================================
# KY 與 L
# ============================================================

def _form_derivatives(form: Tensor, pack: CurvaturePack):
    m = pack.metric
    d_form = covariant_derivative(form, pack.christoffel)       # ∇_a σ_bc
    divergence = jet_einsum("bq,qbc->c", m.g_inv, d_form, valence='d')   # ∇^b σ_bc
    return d_form, divergence


def ky_residual(form: Tensor, pack: CurvaturePack) -> Tensor:
    """KY_abc = ∇_aσ_bc − ∇_[aσ_bc] + (2/(n−1)) g_a[b ∇^pσ_c]p"""
    m = pack.metric
    n = m.n
    d_form, divergence = _form_derivatives(form, pack)
    trace_part = -divergence                                     # ∇^p σ_cp
    g = m.g.truncate(d_form.order)
    g_wedge = jet_einsum("ab,c->abc", g, trace_part) - jet_einsum("ac,b->abc", g, trace_part)
    return d_form - alternate(d_form, (0, 1, 2)) + g_wedge.scale(QQ(1, n - 1))


def L_split(form: Tensor, pack: CurvaturePack) -> TractorThreeForm:
    """
    L(σ) = (σ_bc; ∇_[aσ_bc], (2/(n−1))∇^bσ_bc; ρ_bc)
    ρ_bc = skew[(1/(2n))∇^p KY_pbc − (1/(n−1))∇_b∇^pσ_pc − P_b^p σ_pc]

    底槽只取 bc 反對稱部分（後兩項本身不是反對稱）。
    """
    m = pack.metric
    n = m.n
    if form.order < 2:
        raise OrderExhausted("L needs a two-form jet of order >= 2", order=form.order)
    started = time.time()
    d_form, divergence = _form_derivatives(form, pack)
    nu = alternate(d_form, (0, 1, 2))
    phi = divergence.scale(QQ(2, n - 1))
    ky = ky_residual(form, pack)
    d_ky = covariant_derivative(ky, pack.christoffel)
    div_ky = jet_einsum("pq,qpbc->bc", m.g_inv, d_ky, valence='dd')
    d_div = covariant_derivative(divergence, pack.christoffel)
    p_form = jet_einsum("bp,pc->bc", pack.schouten_mixed(), form, valence='dd')
    rho = alternate(div_ky.scale(QQ(1, 2 * n)) - d_div.scale(QQ(1, n - 1)) - p_form, (0, 1))
    result = TractorThreeForm(m.label, form, nu, phi, rho)
    logger.debug(f"L_split order {result.order} in {time.time() - started:.2f}s")
    return result


# ============================================================
# (n+2) 維多線性代數
# ============================================================

def _basis_vector(space: JetSpace, order: int, slot: int) -> List[Jet]:
    size = space.n + 2
    return [space.one(order) if A == slot else space.zero(order) for A in range(size)]


def x_lower(space: JetSpace, order: int) -> List[Jet]:
    return _basis_vector(space, order, space.n + 1)


def y_lower(space: JetSpace, order: int) -> List[Jet]:
    return _basis_vector(space, order, 0)


def raise_tractor_vector(comps: Sequence[Jet], m: MetricJet) -> List[Jet]:
    """V^A = h^AB V_B：Y 與 X 對調，Z 以 g^bc 升指標"""
    n = m.n
    order = min(min(c.order for c in comps), m.order)
    comps = _truncate_all(comps, order)
    g_inv = m.g_inv.truncate(order)
    middle = [sum((g_inv[b, c] * comps[c + 1] for c in range(n) if g_inv[b, c].poly),
                  m.space.zero(order)) for b in range(n)]
    return [comps[n + 1]] + middle + [comps[0]]


def _raise_axis(array: np.ndarray, axis: int, m: MetricJet, order: int) -> np.ndarray:
    n = m.n
    g_inv = m.g_inv.truncate(order)
    size = n + 2
    out = np.empty(array.shape, dtype=object)
    for idx in itertools.product(range(size), repeat=array.ndim):
        A = idx[axis]

        def at(B):
            src = list(idx)
            src[axis] = B
            return array[tuple(src)]

        if A == 0:
            out[idx] = at(n + 1)
        elif A == n + 1:
            out[idx] = at(0)
        else:
            out[idx] = sum((g_inv[A - 1, c] * at(c + 1) for c in range(n)
                            if g_inv[A - 1, c].poly and at(c + 1).poly), m.space.zero(order))
    return out


def phi_norm(phi: TractorThreeForm, m: MetricJet) -> Jet:
    """Φ^ABC Φ_ABC"""
    order = min(phi.order, m.order)
    array = phi.array()
    for idx in itertools.product(range(array.shape[0]), repeat=3):
        array[idx] = array[idx].truncate(order)
    raised = array
    for axis in range(3):
        raised = _raise_axis(raised, axis, m, order)
    total = m.space.zero(order)
    for idx in itertools.product(range(array.shape[0]), repeat=3):
        if array[idx].poly and raised[idx].poly:
            total = total + array[idx] * raised[idx]
    return total


def x_hook_i_hook_phi(I: TractorVector, phi: TractorThreeForm, m: MetricJet) -> List[Jet]:
    """X^A I^B Φ_ABC；X^A 只有 Y 分量"""
    array = phi.array()
    i_up = raise_tractor_vector(I.components(), m)
    order = min(phi.order, min(c.order for c in i_up))
    size = array.shape[0]
    out = []
    for C in range(size):
        total = m.space.zero(order)
        for B in range(size):
            if i_up[B].poly and array[0, B, C].poly:
                total = total + i_up[B].truncate(order) * array[0, B, C].truncate(order)
        out.append(total)
    return out


def wedge_two_vectors_three_form(u: Sequence[Jet], v: Sequence[Jet],
                                 phi: TractorThreeForm) -> Dict[Tuple[int, ...], Jet]:
    """
    (u ∧ v ∧ Φ)_S，S 為遞增的五元指標組

    洗牌和：u、v 各取一個位置，其餘三個遞增位置給 Φ，符號為對應排列的符號。
    """
    array = phi.array()
    size = array.shape[0]
    order = min(phi.order, min(c.order for c in u), min(c.order for c in v))
    space = phi.top.space
    out = {}
    for S in itertools.combinations(range(size), 5):
        total = space.zero(order)
        for pu, pv in itertools.permutations(range(5), 2):
            if not (u[S[pu]].poly and v[S[pv]].poly):
                continue
            rest = [p for p in range(5) if p not in (pu, pv)]
            entry = array[S[rest[0]], S[rest[1]], S[rest[2]]]
            if not entry.poly:
                continue
            sign = _permutation_sign([pu, pv] + rest)
            term = u[S[pu]].truncate(order) * v[S[pv]].truncate(order) * entry.truncate(order)
            total = total + term if sign > 0 else total - term
        out[S] = total
    return out


def x_wedge_i_wedge_phi(I: TractorVector, phi: TractorThreeForm) -> Dict[Tuple[int, ...], Jet]:
    _same_scale(I, phi)
    return wedge_two_vectors_three_form(x_lower(phi.top.space, I.order), I.components(), phi)


def x_wedge_y_wedge_phi(phi: TractorThreeForm) -> Dict[Tuple[int, ...], Jet]:
    space = phi.top.space
    return wedge_two_vectors_three_form(x_lower(space, phi.order), y_lower(space, phi.order), phi)


def i_wedge_phi(I: TractorVector, phi: TractorThreeForm) -> Dict[Tuple[int, ...], Jet]:
    """(I ∧ Φ)_S，S 為遞增的四元指標組"""
    _same_scale(I, phi)
    array = phi.array()
    comps = I.components()
    size = array.shape[0]
    order = min(phi.order, I.order)
    space = phi.top.space
    out = {}
    for S in itertools.combinations(range(size), 4):
        total = space.zero(order)
        for p in range(4):
            rest = [S[q] for q in range(4) if q != p]
            entry = array[rest[0], rest[1], rest[2]]
            if comps[S[p]].poly and entry.poly:
                term = comps[S[p]].truncate(order) * entry.truncate(order)
                total = total + term if p % 2 == 0 else total - term
        out[S] = total
    return out


def components_zero(values) -> bool:
    if isinstance(values, dict):
        values = values.values()
    return all(j.is_zero() for j in values)


def components_max_abs(values) -> float:
    if isinstance(values, dict):
        values = values.values()
    return max((j.max_abs() for j in values), default=0.0)


# ============================================================
# 判別
# ============================================================

def sigma_squared_per_omega_norm(n: int):
    """σ² / |ω|²，|ω|² 是完整縮併 ω_ab ω^ab（約束系統的慣例）"""
    return QQ(1, n)


def sigma_from_omega(omega: Tensor, m: MetricJet) -> Jet:
    """σ = (|ω|²/n)^{1/2}；常數項不是有理平方時請改用明確給定的 σ"""
    norm = full_contraction(omega, omega, m) * m.space.backend.convert(sigma_squared_per_omega_norm(m.n))
    try:
        return norm.sqrt()
    except NonPerfectSquareConstantTerm as exc:
        raise NonPerfectSquareConstantTerm(
            "sigma^2 = |omega|^2/n has no exact square root at the point; "
            "pass sigma explicitly (--sigma) or use the float backend", **exc.details) from exc


def herm1_residual(omega: Tensor, sigma: Jet, m: MetricJet) -> Tensor:
    """ω^a_c ω^c_b + σ² δ^a_b"""
    mixed = raise_index(omega, 0, m)
    square = jet_einsum("ac,cb->ab", mixed, mixed, valence='ud')
    order = min(square.order, sigma.order)
    delta = kronecker(m.space, order, 'ud')
    return square.truncate(order) + delta.scale(sigma.truncate(order) * sigma.truncate(order))


KAHLER_CONDITIONS = ("herm1", "ky", "x_wedge_i_wedge_phi", "x_hook_i_hook_phi")


@dataclass
class KahlerCharacterisation:
    sigma: Jet
    scale_tractor: TractorVector
    phi: TractorThreeForm
    herm1: Tensor
    ky: Tensor
    x_wedge: Dict[Tuple[int, ...], Jet]
    x_hook: List[Jet]
    phi_norm: Jet

    def zero_flags(self) -> Dict[str, bool]:
        return {"herm1": self.herm1.is_zero(), "ky": self.ky.is_zero(),
                "x_wedge_i_wedge_phi": components_zero(self.x_wedge),
                "x_hook_i_hook_phi": components_zero(self.x_hook)}

    def magnitudes(self) -> Dict[str, float]:
        return {"herm1": self.herm1.max_abs(), "ky": self.ky.max_abs(),
                "x_wedge_i_wedge_phi": components_max_abs(self.x_wedge),
                "x_hook_i_hook_phi": components_max_abs(self.x_hook)}

    def failed(self) -> List[str]:
        return [name for name, flag in self.zero_flags().items() if not flag]

    @property
    def is_kahler(self) -> bool:
        flags = self.zero_flags()
        return flags["herm1"] and flags["ky"] and flags["x_wedge_i_wedge_phi"]


def kahler_characterisation_check(omega: Tensor, pack: CurvaturePack,
                                  sigma: Optional[Jet] = None) -> KahlerCharacterisation:
    """herm1、KY(ω) = 0、X∧I∧Φ = 0（另報 X⌟I⌟Φ 與 Φ 的範數），I = Dσ，Φ = L(ω)"""
    m = pack.metric
    started = time.time()
    if sigma is None:
        sigma = sigma_from_omega(omega, m)
    I = splitting_D(Density(sigma, 1), pack).tractor
    phi = L_split(omega, pack)
    result = KahlerCharacterisation(
        sigma=sigma,
        scale_tractor=I,
        phi=phi,
        herm1=herm1_residual(omega, sigma, m),
        ky=ky_residual(omega, pack),
        x_wedge=x_wedge_i_wedge_phi(I, phi),
        x_hook=x_hook_i_hook_phi(I, phi, m),
        phi_norm=phi_norm(phi, m),
    )
    logger.info(f"kahler characterisation in {time.time() - started:.2f}s: failed={result.failed()}")
    return result


@dataclass
class EinsteinVariants:
    parallel: TractorDerivative
    norm: Jet
    norm_expected: Jet
    i_wedge: Dict[Tuple[int, ...], Jet]

    @property
    def einstein(self) -> bool:
        return self.parallel.is_zero()

    @property
    def null(self) -> bool:
        return self.norm.is_zero()

    @property
    def norm_consistent(self) -> bool:
        order = min(self.norm.order, self.norm_expected.order)
        return (self.norm.truncate(order) - self.norm_expected.truncate(order)).is_zero()

    @property
    def i_wedge_zero(self) -> bool:
        return components_zero(self.i_wedge)

    @property
    def ricci_flat(self) -> bool:
        return self.einstein and self.null and self.i_wedge_zero


def expected_scale_norm(sigma: Jet, m: MetricJet) -> Jet:
    """−R/(n(n−1))，R 為 σ⁻²g 的純量曲率"""
    n = m.n
    target, _ = conformal_rescale(m, sigma.inverse(), f"{m.label}*sigma^-2")
    pack = curvature_pack(target, with_cotton=False, verify=False)
    return pack.scalar * m.space.backend.convert(QQ(-1, n * (n - 1)))


def einstein_variants_check(omega: Tensor, sigma: Optional[Jet], pack: CurvaturePack) -> EinsteinVariants:
    m = pack.metric
    if sigma is None:
        sigma = sigma_from_omega(omega, m)
    I = splitting_D(Density(sigma, 1), pack).tractor
    phi = L_split(omega, pack)
    result = EinsteinVariants(
        parallel=tractor_connection(I, pack),
        norm=tractor_metric(I, I, m),
        norm_expected=expected_scale_norm(sigma, m),
        i_wedge=i_wedge_phi(I, phi),
    )
    logger.info(f"einstein variants: einstein={result.einstein} null={result.null} "
                f"i_wedge_zero={result.i_wedge_zero}")
    return result


# ============================================================
# 測試
# ============================================================

def _space(n: int = 6) -> JetSpace:
    return JetSpace([f"x{i}" for i in range(n)], [], [0] * n)


def _conformally_flat(space: JetSpace, order: int) -> MetricJet:
    x = space.coordinate(0, order)
    factor = (1 + x) * (1 + x)
    return MetricJet(flat_metric(space, order).g.scale(factor), "(1+x)^2 delta")


def _random_tractor(space: JetSpace, order: int, seed: int, scale: str) -> TractorVector:
    rng = np.random.default_rng(seed)
    coeffs = rng.integers(-3, 4, size=(space.n + 2, 3))

    def field(row):
        x0, x1 = space.coordinate(0, order), space.coordinate(1, order)
        return int(row[0]) + int(row[1]) * x0 + int(row[2]) * x0 * x1

    comps = [field(coeffs[A]) for A in range(space.n + 2)]
    return TractorVector.from_components(scale, comps, space)


class TestScaleTractor(unittest.TestCase):

    def test_flat_unit_scale(self):
        space = _space()
        pack = curvature_pack(flat_metric(space, 3), with_cotton=False)
        I = splitting_D(Density(space.one(3), 1), pack).tractor
        self.assertTrue(I.equals(TractorVector.from_components(
            "flat", [space.one(1)] + [space.zero(1)] * 7, space)))
        self.assertTrue(tractor_metric(I, I, pack.metric).is_zero())
        self.assertTrue(tractor_connection(I, pack).is_zero())

    def test_x_slot_recovers_sigma(self):
        space = _space()
        x0, x2 = space.coordinate(0, 4), space.coordinate(2, 4)
        sigma = 2 + x0 * x2 - x2 * x2 * x2 + 3 * x0
        for metric in (flat_metric(space, 4), _conformally_flat(space, 4)):
            pack = curvature_pack(metric, with_cotton=False)
            scale = splitting_D(Density(sigma, 1), pack)
            self.assertEqual(scale.x_slot, sigma.truncate(scale.tractor.order))

    def test_norm_recovers_scalar_curvature(self):
        space = _space()
        metric = _conformally_flat(space, 4)
        pack = curvature_pack(metric, with_cotton=False)
        I = splitting_D(Density(space.one(4), 1), pack).tractor
        norm = tractor_metric(I, I, metric)
        expected = pack.scalar * QQ(-1, 30)
        order = min(norm.order, expected.order)
        self.assertFalse(expected.is_zero())
        self.assertTrue((norm.truncate(order) - expected.truncate(order)).is_zero())

    def test_norm_for_a_general_scale(self):
        space = _space()
        metric = _conformally_flat(space, 4)
        pack = curvature_pack(metric, with_cotton=False)
        sigma = 1 + space.coordinate(3, 4) * space.coordinate(1, 4)
        I = splitting_D(Density(sigma, 1), pack).tractor
        norm = tractor_metric(I, I, metric)
        expected = expected_scale_norm(sigma, metric)
        order = min(norm.order, expected.order)
        self.assertTrue((norm.truncate(order) - expected.truncate(order)).is_zero())

    def test_off_diagonal_pairing(self):
        space = _space()
        metric = flat_metric(space, 1)
        top = TractorVector.from_components("flat", y_lower(space, 1), space)
        bottom = TractorVector.from_components("flat", x_lower(space, 1), space)
        self.assertEqual(tractor_metric(top, bottom, metric), space.one(1))
        self.assertTrue(tractor_metric(top, top, metric).is_zero())

    def test_scale_mismatch(self):
        space = _space()
        V = _random_tractor(space, 2, 1, "flat")
        W = _random_tractor(space, 2, 2, "other")
        with self.assertRaises(ScaleMismatch):
            tractor_metric(V, W, flat_metric(space, 2))

    def test_weight_and_order_checks(self):
        space = _space()
        pack = curvature_pack(flat_metric(space, 3), with_cotton=False)
        with self.assertRaises(SlotMismatch):
            splitting_D(Density(space.one(3), 3), pack)
        with self.assertRaises(OrderExhausted):
            splitting_D(Density(space.one(1), 1), pack)

    def test_round_sphere_scale_is_parallel(self):
        space = _space()
        pack = curvature_pack(flat_metric(space, 4), with_cotton=False)
        sigma = space.one(4)
        for i in range(space.n):
            xi = space.coordinate(i, 4)
            sigma = sigma + xi * xi
        I = splitting_D(Density(sigma, 1), pack).tractor
        self.assertTrue(tractor_connection(I, pack).is_zero())
        self.assertEqual(tractor_metric(I, I, pack.metric), space.constant(-4, 2))


class TestTractorConnection(unittest.TestCase):

    def test_metricity(self):
        space = _space()
        for metric in (flat_metric(space, 3), _conformally_flat(space, 3)):
            pack = curvature_pack(metric, with_cotton=False)
            V = _random_tractor(space, 3, 11, metric.label)
            W = _random_tractor(space, 3, 12, metric.label)
            self.assertTrue(metricity_residual(V, W, pack).is_zero())

    def test_direction_matches_full_derivative(self):
        space = _space()
        metric = _conformally_flat(space, 3)
        pack = curvature_pack(metric, with_cotton=False)
        V = _random_tractor(space, 3, 5, metric.label)
        W = _random_tractor(space, 3, 6, metric.label)
        h, dV = tractor_metric_and_connection(V, W, pack, 2)
        self.assertEqual(h, tractor_metric(V, W, metric))
        self.assertTrue(dV.equals(tractor_connection(V, pack).direction(2)))

    def test_conformally_flat_unit_scale_not_parallel(self):
        space = _space()
        metric = _conformally_flat(space, 4)
        pack = curvature_pack(metric, with_cotton=False)
        I = splitting_D(Density(space.one(4), 1), pack).tractor
        self.assertFalse(tractor_connection(I, pack).is_zero())


class TestScaleChange(unittest.TestCase):

    def setUp(self):
        self.space = _space()
        self.metric, _ = product_kahler(self.space, 4)
        self.factor = 1 + self.space.coordinate(1, 4) + self.space.coordinate(0, 4) * self.space.coordinate(4, 4)

    def test_density_rescale(self):
        value = 2 + self.space.coordinate(3, 3)
        density = Density(value, -1)
        back = density.rescale(self.factor).rescale(self.factor.inverse())
        self.assertEqual(back.value, value)

    def test_sigma_has_weight_one(self):
        space = self.space
        factor = 1 + space.coordinate(0, 4)
        witness = build_witness(flat_metric(space, 4), standard_symplectic(space, 4), factor)
        sigma = Density(sigma_from_omega(witness.section.omega, witness.metric), 1)
        self.assertEqual(sigma.rescale(factor).value, space.one(sigma.value.order))

    def test_sigma_squared_against_constraint_norm(self):
        space = self.space
        witness = build_witness(flat_metric(space, 4), standard_symplectic(space, 4), 1 + space.coordinate(0, 4))
        omega, m = witness.section.omega, witness.metric
        sigma = sigma_from_omega(omega, m)
        norm, _ = omega_norm(omega, m)
        self.assertEqual(sigma * sigma, (norm * sigma_squared_per_omega_norm(m.n)).truncate(sigma.order))
        self.assertNotEqual(sigma * sigma, norm.truncate(sigma.order))
        self.assertEqual(sigma_from_omega(standard_symplectic(space, 2), flat_metric(space, 2)), space.one(2))

    def test_D_commutes_with_scale_change(self):
        change = scale_change(self.metric, self.factor)
        sigma = 1 + self.space.coordinate(2, 4) * self.space.coordinate(3, 4) - self.space.coordinate(5, 4)
        before = splitting_D(Density(sigma, 1), curvature_pack(self.metric, with_cotton=False)).tractor
        after = splitting_D(Density(sigma, 1).rescale(self.factor),
                            curvature_pack(change.target, with_cotton=False)).tractor
        self.assertTrue(change.apply_vector(before).equals(after))

    def test_L_commutes_with_scale_change(self):
        space = self.space
        x = [space.coordinate(i, 4) for i in range(space.n)]
        form = Tensor.from_function(space, 'dd', 4, lambda a, b: (
            None if a == b else (1 if a < b else -1) * ((a + 2 * b) % 3 - 1 + x[a] * x[b] + x[(a + b) % 6])))
        form = alternate(form, (0, 1))
        change = scale_change(self.metric, self.factor)
        before = L_split(form, curvature_pack(self.metric, with_cotton=False))
        cube = self.factor * self.factor * self.factor
        after = L_split(form.scale(cube), curvature_pack(change.target, with_cotton=False))
        transformed = change.apply_three_form(before)
        for name, diff in transformed.difference(after).items():
            self.assertTrue(diff.is_zero(), name)

    def test_source_scale_checked(self):
        change = scale_change(self.metric, self.factor)
        V = _random_tractor(self.space, 2, 3, "elsewhere")
        with self.assertRaises(ScaleMismatch):
            change.apply_vector(V)


class TestSplittingL(unittest.TestCase):

    def test_flat_constant_form(self):
        space = _space()
        pack = curvature_pack(flat_metric(space, 3), with_cotton=False)
        J = standard_symplectic(space, 3)
        phi = L_split(J, pack)
        self.assertTrue(phi.top.equals(J))
        for name in ("nu", "phi", "rho"):
            self.assertTrue(phi.slots()[name].is_zero(), name)
        self.assertTrue(ky_residual(J, pack).is_zero())

    def test_witness_dictionary(self):
        space = _space()
        for factor in (1 + space.coordinate(0, 4),
                       1 + space.coordinate(0, 4) + space.coordinate(1, 4) * space.coordinate(1, 4)):
            witness = build_witness(flat_metric(space, 4), standard_symplectic(space, 4), factor)
            self.assertTrue(ky_residual(witness.section.omega, witness.pack).is_zero())
            phi = L_split(witness.section.omega, witness.pack)
            expected = psi_to_phi(witness.section, witness.metric.label)
            for name, diff in phi.difference(expected).items():
                self.assertTrue(diff.is_zero(), name)

    def test_product_kahler_dictionary(self):
        space = _space()
        g_hat, omega_hat = product_kahler(space, 4)
        witness = build_witness(g_hat, omega_hat, 1 + space.coordinate(3, 4))
        phi = L_split(witness.section.omega, witness.pack)
        self.assertTrue(phi.equals(psi_to_phi(witness.section, witness.metric.label)))

    def test_kahler_scale_bottom_slot(self):
        space = _space()
        g_hat, omega_hat = product_kahler(space, 4)
        pack = curvature_pack(g_hat, with_cotton=False)
        phi = L_split(omega_hat, pack)
        expected = -jet_einsum("bp,pc->bc", pack.schouten_mixed(), omega_hat)
        self.assertTrue(phi.nu.is_zero())
        self.assertTrue(phi.phi.is_zero())
        self.assertTrue(phi.rho.equals(expected))

    def test_ky_conformal_invariance(self):
        space = _space()
        factor = 1 + space.coordinate(0, 3)
        J = standard_symplectic(space, 3)
        base = curvature_pack(flat_metric(space, 3), with_cotton=False)
        target, _ = conformal_rescale(flat_metric(space, 3), factor)
        cube = factor * factor * factor
        rescaled = curvature_pack(target, with_cotton=False)
        self.assertTrue(ky_residual(J.scale(cube), rescaled).is_zero())
        bent = J + Tensor.from_function(space, 'dd', 3, lambda a, b: (
            space.coordinate(0, 3) if (a, b) == (0, 2) else (-space.coordinate(0, 3) if (a, b) == (2, 0) else None)))
        self.assertFalse(ky_residual(bent, base).is_zero())
        self.assertFalse(ky_residual(bent.scale(cube), rescaled).is_zero())

    def test_psi_to_phi_linear(self):
        space = _space()
        witness = build_witness(flat_metric(space, 3), standard_symplectic(space, 3), 1 + space.coordinate(2, 3))
        psi = witness.section
        label = witness.metric.label
        self.assertTrue(psi_to_phi(psi.scale(3), label).equals(
            psi_to_phi(psi, label) + psi_to_phi(psi.scale(2), label)))
        K0 = Tensor.zeros(space, 'd', 0)
        trivial = ProlongationSection(standard_symplectic(space, 0), K0,
                                      Tensor.zeros(space, 'ddd', 0), Tensor.zeros(space, 'dd', 0))
        phi = psi_to_phi(trivial, "flat")
        self.assertTrue(phi.top.equals(standard_symplectic(space, 0)))
        self.assertTrue(phi.rho.is_zero())


class TestKahlerCharacterisation(unittest.TestCase):

    def test_flat_symplectic(self):
        space = _space()
        pack = curvature_pack(flat_metric(space, 3), with_cotton=False)
        result = kahler_characterisation_check(standard_symplectic(space, 3), pack)
        self.assertEqual(result.sigma, space.one(3))
        self.assertTrue(all(result.zero_flags().values()))
        self.assertTrue(result.is_kahler)
        self.assertTrue(result.phi_norm.is_zero())

    def test_witness_passes(self):
        space = _space()
        witness = build_witness(flat_metric(space, 4), standard_symplectic(space, 4), 1 + space.coordinate(0, 4))
        result = kahler_characterisation_check(witness.section.omega, witness.pack)
        self.assertTrue(all(result.zero_flags().values()), result.magnitudes())
        # σ = Ω⁻¹
        factor = (1 + space.coordinate(0, 4)).truncate(result.sigma.order)
        self.assertEqual(result.sigma * factor, space.one(result.sigma.order))

    def test_perturbation_is_flagged(self):
        space = _space()
        witness = build_witness(flat_metric(space, 4), standard_symplectic(space, 4), 1 + space.coordinate(0, 4))
        x0 = space.coordinate(0, 4)
        bump = Tensor.from_function(space, 'dd', 4, lambda a, b: (
            x0 if (a, b) == (0, 2) else (-x0 if (a, b) == (2, 0) else None)))
        result = kahler_characterisation_check(witness.section.omega + bump, witness.pack)
        self.assertIn("herm1", result.failed())
        self.assertIn("ky", result.failed())
        self.assertFalse(result.is_kahler)

    def test_product_kahler_identities(self):
        space = _space()
        g_hat, omega_hat = product_kahler(space, 4)
        pack = curvature_pack(g_hat, with_cotton=False)
        result = kahler_characterisation_check(omega_hat, pack)
        self.assertEqual(result.sigma, space.one(result.sigma.order))
        self.assertTrue(result.is_kahler)
        # Kähler 尺度下 X∧I∧Φ = σ X∧Y∧Φ
        reference = x_wedge_y_wedge_phi(result.phi)
        for S, value in result.x_wedge.items():
            order = min(value.order, reference[S].order)
            self.assertTrue((value.truncate(order) - reference[S].truncate(order)).is_zero(), S)
        expected = pack.scalar * phi_norm_ratio(6)
        order = min(result.phi_norm.order, expected.order)
        self.assertFalse(expected.truncate(0).is_zero())
        self.assertTrue((result.phi_norm.truncate(order) - expected.truncate(order)).is_zero())

    def test_phi_norm_ratio_in_a_curved_scale(self):
        space = _space()
        g_hat, omega_hat = product_kahler(space, 4)
        factor = 1 + space.coordinate(4, 4)
        witness = build_witness(g_hat, omega_hat, factor)
        result = kahler_characterisation_check(witness.section.omega, witness.pack)
        # 範數不隨尺度改變
        expected = curvature_pack(g_hat, with_cotton=False).scalar * phi_norm_ratio(6)
        order = min(result.phi_norm.order, expected.order)
        self.assertEqual(result.phi_norm.truncate(order), expected.truncate(order))

    def test_x_hook_components(self):
        space = _space()
        witness = build_witness(flat_metric(space, 4), standard_symplectic(space, 4),
                                1 + space.coordinate(1, 4) + space.coordinate(0, 4) * space.coordinate(2, 4))
        result = kahler_characterisation_check(witness.section.omega, witness.pack)
        self.assertTrue(components_zero(result.x_hook))
        self.assertTrue(components_zero(result.x_wedge))

    def test_non_square_sigma(self):
        space = _space()
        pack = curvature_pack(flat_metric(space, 3), with_cotton=False)
        blocks = (1, 1, 2)
        omega = Tensor.from_function(space, 'dd', 3, lambda a, b: (
            blocks[a // 2] if (a % 2 == 0 and b == a + 1) else
            (-blocks[b // 2] if (b % 2 == 0 and a == b + 1) else None)))
        # |ω|²/n = 2
        with self.assertRaises(NonPerfectSquareConstantTerm) as ctx:
            kahler_characterisation_check(omega, pack)
        self.assertIn("--sigma", str(ctx.exception))


class TestEinsteinVariants(unittest.TestCase):

    def test_flat_is_ricci_flat_kahler(self):
        space = _space()
        pack = curvature_pack(flat_metric(space, 3), with_cotton=False)
        result = einstein_variants_check(standard_symplectic(space, 3), space.one(3), pack)
        self.assertTrue(result.einstein)
        self.assertTrue(result.null)
        self.assertTrue(result.i_wedge_zero)
        self.assertTrue(result.ricci_flat)
        self.assertTrue(result.norm_consistent)

    def test_conformally_flat_unit_scale(self):
        space = _space()
        metric = _conformally_flat(space, 4)
        pack = curvature_pack(metric, with_cotton=False)
        x = space.coordinate(0, 4)
        omega = standard_symplectic(space, 4).scale((1 + x) * (1 + x) * (1 + x))
        result = einstein_variants_check(omega, space.one(4), pack)
        self.assertFalse(result.einstein)
        self.assertFalse(result.ricci_flat)
        self.assertTrue(result.norm_consistent)

    def test_witness_in_its_own_scale(self):
        space = _space()
        witness = build_witness(flat_metric(space, 4), standard_symplectic(space, 4), 1 + space.coordinate(0, 4))
        result = einstein_variants_check(witness.section.omega, None, witness.pack)
        self.assertTrue(result.einstein)
        self.assertTrue(result.ricci_flat)
        self.assertTrue(result.norm_consistent)

    def test_product_kahler_is_not_einstein(self):
        space = _space()
        g_hat, omega_hat = product_kahler(space, 4)
        pack = curvature_pack(g_hat, with_cotton=False)
        result = einstein_variants_check(omega_hat, None, pack)
        self.assertFalse(result.einstein)
        self.assertTrue(result.norm_consistent)


if __name__ == '__main__':
    unittest.main()
