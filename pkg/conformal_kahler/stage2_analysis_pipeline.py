#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
分析流程：ProblemSpec → 各命令的報告區段與判定

每個命令先把 jet 階數提高到該命令所需的最小值（記錄實際使用的階數），
再呼叫 core / analysis 的計算，最後把結果轉成可直接序列化的字典。
精確值一律輸出正規字串，浮點值輸出 {"value", "epsilon"}。
"""

import json
import logging
import time
import unittest
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from core.curvature import CurvaturePack, conformal_rescale, curvature_pack, weyl_norm_squared
from core.exact_scalars import Jet, JetSpace, format_param_poly
from core.exceptions import SchemaError
from core.tensor_core import MetricJet, Tensor
from analysis.cky_prolong import (
    ProlongationSection,
    Witness,
    apply_connection,
    build_witness,
    derive_section,
    killing_residual,
    slot2_split,
)
from analysis.constraints import (
    DIMENSION_FOUR_NOTICE,
    complex_structure_check,
    q_residuals,
    variety_dimension_estimate,
)
from analysis.obstruction import TwoFormBasis, obstruction_report, random_bivectors, weyl_constraint_residual
from analysis.tractor import (
    einstein_variants_check,
    kahler_characterisation_check,
    psi_to_phi,
    L_split,
    x_pairing,
)
from conformal_kahler.stage0_config_unified import COMMANDS, ConformalKahlerConfig
from conformal_kahler.stage1_metric_ingest import ProblemSpec, load_problem, with_order

logger = logging.getLogger(__name__)

VERIFIED = "ConformallyKahlerWitnessVerified"
OBSTRUCTED = "ObstructionNonzero"
RESIDUALS = "ResidualsNonzero"
INCONCLUSIVE = "Inconclusive"

# 殘差名稱 → 對應的方程式
RESIDUAL_EQUATIONS = {
    "connection.slot1": "∇_aω_bc − μ_abc − 2g_a[bK_c] = 0 (first prolongation equation)",
    "connection.slot2a": "∇_aK_b − P_a^cω_bc − Σ_ab = 0",
    "connection.slot2b": "∇_aμ_bcd + 3g_a[bΣ_cd] + 3P_a[bω_cd] + (3/2)C_[bc|a^pω_p|d] = 0",
    "connection.slot3": "∇_aΣ_bc + Cotton, Schouten and Weyl terms = 0 (third prolongation equation)",
    "constraints.alg1": "ω_a^cω_cb + (|ω|²/n)g_ab = 0",
    "constraints.mufromK": "μ determined by ω and K",
    "constraints.sigma": "Σ determined by ω, K and the Weyl tensor",
    "constraints.alg2": "|ω|²μ_abc = (n/(n−2))·cyclic(ω_bc V_a)",
    "constraints.kkmm": "(n−2)W_a + V_a = 0",
    "constraints.muK": "μ_abcK^c = 0",
    "constraints.hermitianSigma": "ω^a_[bΣ_c]a = 0",
    "weyl_constraint": "C_bc[a^eω_d]e + C_ad[b^eω_c]e = 0",
    "slot2_split.skew": "skew(∇K − Pω) = Σ",
    "slot2_split.sym": "sym(∇K) = sym(P_a^cω_bc)",
    "killing": "∇_(aK_b) = 0",
    "kahler.herm1": "ω^a_cω^c_b + σ²δ^a_b = 0",
    "kahler.ky": "KY(ω) = 0 (ω is conformal Killing-Yano)",
    "kahler.x_wedge_i_wedge_phi": "X∧I∧Φ = 0",
    "tractor.l_equals_psi": "L(ω) = (ω; μ, 2K; −Σ) on the witness section",
}


# ============================================================
# 數值格式
# ============================================================

class ValueFormatter:
    """把 ParamPoly / Jet / Tensor 轉成報告用的值"""

    def __init__(self, spec: ProblemSpec, space: JetSpace, limit: int = 20):
        self.backend = space.backend
        self.limit = limit
        self.coordinates = list(spec.coordinates)
        self.params = list(space.parameters)
        # jet 以座標偏移 d<座標> 為變數
        self.jet_names = [f"d{c}" for c in self.coordinates] + self.params

    def _tag(self, text: str):
        if self.backend.is_exact:
            return text
        return {"value": text, "epsilon": self.backend.epsilon}

    def poly(self, value) -> Any:
        if not value:
            return self._tag("0")
        return self._tag(format_param_poly(value, self.params))

    def jet(self, value: Jet) -> Dict[str, Any]:
        return {"at_point": self.poly(value.constant_term()),
                "jet": self._tag(format_param_poly(value.poly, self.jet_names) if value.poly else "0"),
                "order": value.order}

    def magnitude(self, value: float) -> Optional[Dict[str, float]]:
        if self.backend.is_exact:
            return None
        return {"value": float(value), "epsilon": self.backend.epsilon}

    def index_label(self, idx: Sequence[int], labels: Optional[Sequence[str]] = None) -> str:
        names = labels or self.coordinates
        return ",".join(names[i] for i in idx)

    def tensor(self, t: Tensor) -> Dict[str, Any]:
        nonzero = [(idx, j) for idx, j in t.items() if not j.is_zero()]
        return self._listing(t.is_zero(), t.max_abs(), nonzero, None)

    def components(self, values, labels: Optional[Sequence[str]] = None) -> Dict[str, Any]:
        """Dict[tuple, Jet] 或 List[Jet]"""
        items = values.items() if isinstance(values, dict) else (((i,), j) for i, j in enumerate(values))
        items = sorted(items)
        nonzero = [(idx, j) for idx, j in items if not j.is_zero()]
        magnitude = max((j.max_abs() for _, j in items), default=0.0)
        return self._listing(not nonzero, magnitude, nonzero, labels)

    def _listing(self, zero: bool, magnitude: float, nonzero, labels) -> Dict[str, Any]:
        section = {
            "zero": zero,
            "nonzero_count": len(nonzero),
            "components": [dict(index=self.index_label(idx, labels), **self.jet(j))
                           for idx, j in nonzero[:self.limit]],
        }
        if magnitude is not None and not self.backend.is_exact:
            section["max_abs"] = self.magnitude(magnitude)
        return section

    def tractor_labels(self) -> List[str]:
        return ["Y"] + self.coordinates + ["X"]


# ============================================================
# 流程
# ============================================================

@dataclass
class AnalysisOptions:
    random_bivectors: int = 0
    seed: Optional[int] = None
    per_pair: bool = False


@dataclass
class AnalysisResult:
    command: str
    spec: ProblemSpec
    order_requested: int
    order_used: int
    sections: Dict[str, Any] = field(default_factory=dict)
    verdict: Dict[str, Any] = field(default_factory=dict)


def make_verdict(kind: str, failed: Sequence[str] = (), note: str = "") -> Dict[str, Any]:
    verdict = {"kind": kind}
    if failed:
        verdict["details"] = [{"residual": name, "equation": RESIDUAL_EQUATIONS.get(name, name)}
                              for name in failed]
    if note:
        verdict["note"] = note
    return verdict


class AnalysisPipeline:
    """單一問題、單一命令的分析"""

    def __init__(self, spec: ProblemSpec, command: str, options: Optional[AnalysisOptions] = None,
                 config: Optional[ConformalKahlerConfig] = None):
        if command not in COMMANDS:
            raise SchemaError("unknown command", command=command)
        self.config = config or ConformalKahlerConfig()
        self.command = command
        self.options = options or AnalysisOptions()
        self.order_requested = spec.jet_order
        order = max(spec.jet_order, self.config.minimum_order(command))
        if command == "report" and spec.omega is not None:
            order = max(order, self.config.minimum_order("cky-check"))
        if order != spec.jet_order:
            logger.info(f"jet order raised from {spec.jet_order} to {order} for {command}")
        self.spec = with_order(spec, order)
        self.space = self.spec.space()
        self.fmt = ValueFormatter(self.spec, self.space, self.config.get('report.listing_limit', 20))
        self._metric: Optional[MetricJet] = None
        self._pack: Optional[CurvaturePack] = None
        self._witness: Optional[Witness] = None

    # ---------- 共用資料 ----------

    @property
    def order(self) -> int:
        return self.spec.jet_order

    @property
    def metric(self) -> MetricJet:
        if self._metric is None:
            self._metric = self.spec.metric_jet(self.space, self.order)
        return self._metric

    @property
    def pack(self) -> CurvaturePack:
        if self._pack is None:
            started = time.time()
            self._pack = curvature_pack(self.metric, with_cotton=self.order >= 3)
            logger.info(f"curvature pack at order {self.order} in {time.time() - started:.2f}s")
        return self._pack

    def omega(self) -> Tensor:
        tensor = self.spec.omega_tensor(self.space, self.order)
        if tensor is None:
            raise SchemaError(f"{self.command} needs a two-form: add 'omega' to the problem file", key="omega")
        return tensor

    def sigma(self) -> Optional[Jet]:
        return self.spec.sigma_jet(self.space, self.order)

    def witness(self) -> Optional[Witness]:
        """給了共形因子時，以 (Ω²g, Ω³ω, Ω) 建出見證截面"""
        if self.spec.conformal_factor is None:
            return None
        if self._witness is None:
            factor = self.spec.factor_jet(self.space, self.order)
            g_hat, _ = conformal_rescale(self.metric, factor, f"{self.metric.label}*Omega^2")
            omega_hat = self.omega().scale(factor * factor * factor)
            self._witness = build_witness(g_hat, omega_hat, factor)
        return self._witness

    def section(self) -> ProlongationSection:
        """截面：見證或由 ω 推得，檔案中給出的 K/mu/Sigma 取代對應部分"""
        witness = self.witness()
        base = witness.section if witness is not None else derive_section(self.omega(), self.pack)
        given = self.spec.section_tensors(self.space, self.order)
        if not given:
            return base
        return ProlongationSection(base.omega, given.get("K", base.K),
                                   given.get("mu", base.mu), given.get("Sigma", base.Sigma))

    # ---------- 區段 ----------

    def curvature_summary(self) -> Dict[str, Any]:
        pack = self.pack
        summary = {
            "scalar_curvature": self.fmt.jet(pack.scalar),
            "weyl_norm_squared": self.fmt.poly(weyl_norm_squared(pack).constant_term()),
            "weyl_vanishes": pack.weyl.is_zero(),
            "cotton_vanishes": None if pack.cotton is None else pack.cotton.is_zero(),
            "schouten_trace": self.fmt.jet(pack.schouten_trace),
        }
        return summary

    def obstruction_section(self, bivector_count: int) -> Dict[str, Any]:
        n = self.spec.dimension
        bivectors = []
        if self.spec.bivector is not None:
            bivectors.append(("file", self.spec.bivector_entries()))
        if bivector_count:
            seed = self.options.seed if self.options.seed is not None else self.config.get('obstruction.random_seed')
            bound = self.config.get('obstruction.bivector_bound')
            for i, X in enumerate(random_bivectors(n, bivector_count, seed, bound)):
                bivectors.append((f"random-{i + 1}", X))
        if not bivectors:
            raise SchemaError("no bivector: give 'bivector' in the problem file or use --random-bivectors",
                              key="bivector")
        pack = self.pack
        entries = []
        per_pair = None
        for i, (label, X) in enumerate(bivectors):
            report = obstruction_report(pack, X, per_pair=self.options.per_pair and i == 0,
                                        rank_cutoff=self.config.get('float_backend.rank_cutoff'))
            if report.per_pair is not None:
                per_pair = report.per_pair
            entries.append({
                "label": label,
                "bivector": [[self.fmt.poly(self.space.param_constant(v)) for v in row] for row in X],
                "traces": [self.fmt.poly(s) for s in report.traces],
                "det": self.fmt.poly(report.det),
                "det_elimination": self.fmt.poly(report.det_oracle),
                "det_bell": self.fmt.poly(report.det_bell),
                "paths_agree": report.consistent,
                "obstructed": report.obstructed,
            })
        section = {"basis_size": TwoFormBasis(n).N, "bivectors": entries}
        if per_pair is not None:
            section["per_pair"] = [{"pair": self.fmt.index_label(item["pair"]),
                                    "det": self.fmt.poly(item["det"]),
                                    "rank": item["rank"]} for item in per_pair]
            section["per_pair_max_rank"] = max(item["rank"] for item in per_pair)
            logger.debug(f"per-pair determinants over {len(per_pair)} pairs")
        return section

    def cky_sections(self) -> Dict[str, Any]:
        witness = self.witness()
        psi = self.section()
        pack = witness.pack if witness is not None else self.pack
        metric = witness.metric if witness is not None else self.metric
        connection = apply_connection(psi, pack, metric, require_slot3=pack.cotton is not None)
        constraints = q_residuals(psi, pack, metric)
        skew, sym = slot2_split(psi, pack)
        sections = {
            "section_source": ("witness" if witness is not None else "derived")
                              + ("+file" if self.spec.section else ""),
            "connection": {name: self.fmt.tensor(t) for name, t in connection.slots().items() if t is not None},
            "constraints": {name: (self.fmt.tensor(t) if t is not None else {"skipped": constraints.notices[name]})
                            for name, t in constraints.residuals.items()},
            "weyl_constraint": self.fmt.tensor(weyl_constraint_residual(pack.weyl_mixed(), psi.omega)),
            "slot2_split": {"skew": self.fmt.tensor(skew), "sym": self.fmt.tensor(sym)},
            "killing": self.fmt.tensor(killing_residual(psi.K, metric, pack.christoffel)),
            "variety": self.variety_section(),
        }
        if not self.space.parameters:
            sections["complex_structure_defect"] = {"value": complex_structure_check(psi.omega, metric),
                                                    "epsilon": self.config.get('float_backend.epsilon')}
        failed = [f"connection.{name}" for name, t in connection.slots().items()
                  if t is not None and not t.is_zero()]
        failed += [f"constraints.{name}" for name in constraints.failed()]
        if not sections["weyl_constraint"]["zero"]:
            failed.append("weyl_constraint")
        sections["failed"] = failed
        return sections

    def variety_section(self) -> Dict[str, Any]:
        """約束簇在平坦 witness 樣本點的維度；只與 n 有關"""
        n = self.spec.dimension
        if n == 4:
            return {"skipped": DIMENSION_FOUR_NOTICE}
        estimate = variety_dimension_estimate(n, step=self.config.get('float_backend.fd_step'),
                                              cutoff=self.config.get('float_backend.rank_cutoff'))
        return {"fiber": estimate.fiber, "rank": estimate.rank, "dimension": estimate.dimension,
                "expected": estimate.expected, "rank_drop": estimate.rank_drop}

    def kahler_section(self):
        char = kahler_characterisation_check(self.omega(), self.pack, self.sigma())
        labels = self.fmt.tractor_labels()
        section = {
            "sigma": self.fmt.jet(char.sigma),
            "herm1": self.fmt.tensor(char.herm1),
            "ky": self.fmt.tensor(char.ky),
            "x_wedge_i_wedge_phi": self.fmt.components(char.x_wedge, labels),
            "x_hook_i_hook_phi": self.fmt.components(char.x_hook, labels),
            "phi_norm": self.fmt.jet(char.phi_norm),
            "is_kahler": char.is_kahler,
        }
        failed = [f"kahler.{name}" for name in ("herm1", "ky", "x_wedge_i_wedge_phi")
                  if not char.zero_flags()[name]]
        return section, failed, char

    def einstein_section(self, sigma: Jet) -> Dict[str, Any]:
        variants = einstein_variants_check(self.omega(), sigma, self.pack)
        labels = self.fmt.tractor_labels()
        return {
            "parallel_residual": {name: self.fmt.tensor(t) for name, t in variants.parallel.slots().items()},
            "norm": self.fmt.jet(variants.norm),
            "norm_expected": self.fmt.jet(variants.norm_expected),
            "norm_consistent": variants.norm_consistent,
            "i_wedge_phi": self.fmt.components(variants.i_wedge, labels),
            "einstein": variants.einstein,
            "null": variants.null,
            "ricci_flat": variants.ricci_flat,
        }

    def witness_tractor_section(self) -> Optional[Dict[str, Any]]:
        witness = self.witness()
        if witness is None:
            return None
        phi = L_split(witness.section.omega, witness.pack)
        expected = psi_to_phi(witness.section, witness.metric.label)
        difference = phi.difference(expected)
        return {name: self.fmt.tensor(t) for name, t in difference.items()}

    # ---------- 命令 ----------

    def run(self) -> AnalysisResult:
        started = time.time()
        result = AnalysisResult(self.command, self.spec, self.order_requested, self.order)
        handler = getattr(self, "_run_" + self.command.replace("-", "_"))
        handler(result)
        logger.info(f"{self.command} on {self.spec.name}: {result.verdict['kind']} "
                    f"({time.time() - started:.2f}s)")
        return result

    def _run_obstruction(self, result: AnalysisResult):
        section = self.obstruction_section(self.options.random_bivectors)
        result.sections["obstruction"] = section
        result.verdict = self._obstruction_verdict(section)

    @staticmethod
    def _obstruction_verdict(section) -> Optional[Dict[str, Any]]:
        obstructed = [item["label"] for item in section["bivectors"] if item["obstructed"]]
        if obstructed:
            return make_verdict(OBSTRUCTED, note="nonzero determinant for bivector(s) " + ", ".join(obstructed))
        return make_verdict(INCONCLUSIVE, note="all determinants vanish; no witness section checked")

    def _run_cky_check(self, result: AnalysisResult):
        sections = self.cky_sections()
        failed = sections.pop("failed")
        result.sections["cky"] = sections
        if failed:
            result.verdict = make_verdict(RESIDUALS, failed)
        else:
            result.verdict = make_verdict(VERIFIED, note=f"parallel section ({sections['section_source']})")

    def _run_kahler_check(self, result: AnalysisResult):
        section, failed, _ = self.kahler_section()
        result.sections["kahler"] = section
        count = self.options.random_bivectors or self.config.get('obstruction.kahler_check_bivectors')
        obstruction = self.obstruction_section(count)
        result.sections["obstruction"] = obstruction
        obstructed = self._obstruction_verdict(obstruction)
        if obstructed["kind"] == OBSTRUCTED:
            result.verdict = obstructed
        elif failed:
            result.verdict = make_verdict(RESIDUALS, failed)
        else:
            result.verdict = make_verdict(VERIFIED, note="herm1, KY and X∧I∧Φ vanish")

    def _run_tractor_check(self, result: AnalysisResult):
        section, failed, char = self.kahler_section()
        result.sections["kahler"] = section
        # D 用掉兩階導數，I 的階數低於 σ
        scale_tractor = char.scale_tractor
        sigma = char.sigma.truncate(scale_tractor.order)
        result.sections["scale_tractor"] = {
            "x_pairing_minus_sigma": self.fmt.jet(x_pairing(scale_tractor) - sigma),
        }
        result.sections["einstein"] = self.einstein_section(char.sigma)
        comparison = self.witness_tractor_section()
        if comparison is not None:
            result.sections["l_equals_psi"] = comparison
            if not all(item["zero"] for item in comparison.values()):
                failed.append("tractor.l_equals_psi")
        if failed:
            result.verdict = make_verdict(RESIDUALS, failed)
        else:
            result.verdict = make_verdict(VERIFIED, note="tractor characterisation holds")

    def _run_report(self, result: AnalysisResult):
        result.sections["curvature"] = self.curvature_summary()
        verdict = None
        if self.spec.bivector is not None or self.options.random_bivectors:
            section = self.obstruction_section(self.options.random_bivectors)
            result.sections["obstruction"] = section
            verdict = self._obstruction_verdict(section)
        if self.spec.omega is not None:
            sections = self.cky_sections()
            failed = sections.pop("failed")
            result.sections["cky"] = sections
            if verdict is None or verdict["kind"] != OBSTRUCTED:
                verdict = make_verdict(RESIDUALS, failed) if failed else make_verdict(VERIFIED)
        result.verdict = verdict or make_verdict(INCONCLUSIVE, note="no bivector or two-form to test")


def run_analysis(spec: ProblemSpec, command: str, options: Optional[AnalysisOptions] = None,
                 config: Optional[ConformalKahlerConfig] = None) -> AnalysisResult:
    return AnalysisPipeline(spec, command, options, config).run()


# ============================================================
# 測試
# ============================================================

_COORDS4 = ["t", "x", "y", "z"]


def _problem(**extra) -> ProblemSpec:
    raw = {"dimension": 4, "coordinates": _COORDS4,
           "metric": {f"{c},{c}": "1" for c in _COORDS4},
           "point": [0, 0, 0, 0], "jet_order": 2}
    raw.update(extra)
    return load_problem(json.dumps(raw), "test4d.json")


def _witness4d(factor: str = "1 + x", **extra) -> ProblemSpec:
    return _problem(
        metric={f"{c},{c}": f"1/({factor})^2" for c in _COORDS4},
        omega={"t,x": f"1/({factor})^3", "y,z": f"1/({factor})^3"},
        conformal_factor=factor,
        **extra,
    )


class TestObstructionCommand(unittest.TestCase):

    def test_flat_random_bivectors_inconclusive(self):
        result = run_analysis(_problem(), "obstruction", AnalysisOptions(random_bivectors=3))
        self.assertEqual(result.verdict["kind"], INCONCLUSIVE)
        self.assertEqual(len(result.sections["obstruction"]["bivectors"]), 3)
        self.assertTrue(all(item["det"] == "0" for item in result.sections["obstruction"]["bivectors"]))

    def test_missing_bivector(self):
        with self.assertRaises(SchemaError):
            run_analysis(_problem(), "obstruction")

    def test_order_raised_and_recorded(self):
        spec = _problem(jet_order=0, bivector={"t,x": 1, "y,z": 1})
        result = run_analysis(spec, "obstruction")
        self.assertEqual(result.order_requested, 0)
        self.assertEqual(result.order_used, 2)


class TestWitnessCommands(unittest.TestCase):

    def test_cky_check_witness(self):
        result = run_analysis(_witness4d(), "cky-check")
        self.assertEqual(result.verdict["kind"], VERIFIED, result.verdict)
        cky = result.sections["cky"]
        self.assertEqual(cky["section_source"], "witness")
        self.assertTrue(all(slot["zero"] for slot in cky["connection"].values()))
        self.assertEqual(cky["constraints"]["sigma"]["skipped"][:7], "skipped")

    def test_cky_check_detects_non_cky_form(self):
        spec = _problem(omega={"t,x": "1 + y^2", "y,z": "1"}, jet_order=4)
        result = run_analysis(spec, "cky-check")
        self.assertEqual(result.verdict["kind"], RESIDUALS)
        names = [item["residual"] for item in result.verdict["details"]]
        self.assertTrue(any(name.startswith("connection.") for name in names))

    def test_kahler_check_witness(self):
        result = run_analysis(_witness4d(), "kahler-check")
        self.assertEqual(result.verdict["kind"], VERIFIED, result.verdict)
        self.assertTrue(result.sections["kahler"]["herm1"]["zero"])
        self.assertEqual(result.sections["kahler"]["sigma"]["at_point"], "1")

    def test_tractor_check_witness(self):
        result = run_analysis(_witness4d(), "tractor-check")
        self.assertEqual(result.verdict["kind"], VERIFIED, result.verdict)
        pairing = result.sections["scale_tractor"]["x_pairing_minus_sigma"]
        self.assertEqual((pairing["at_point"], pairing["jet"]), ("0", "0"))
        self.assertLess(pairing["order"], result.order_used)
        self.assertTrue(all(item["zero"] for item in result.sections["l_equals_psi"].values()))
        self.assertTrue(result.sections["einstein"]["norm_consistent"])

    def test_tractor_check_explicit_sigma(self):
        spec = _witness4d(sigma="1/(1 + x)")
        result = run_analysis(spec, "tractor-check")
        self.assertEqual(result.verdict["kind"], VERIFIED, result.verdict)
        self.assertEqual(result.sections["kahler"]["sigma"]["at_point"], "1")

    def test_variety_skipped_in_four_dimensions(self):
        result = run_analysis(_witness4d(), "cky-check")
        self.assertIn("skipped", result.sections["cky"]["variety"])

    def test_report_sections(self):
        spec = _problem(bivector={"t,x": 1, "y,z": 1})
        result = run_analysis(spec, "report")
        self.assertIn("curvature", result.sections)
        self.assertTrue(result.sections["curvature"]["weyl_vanishes"])
        self.assertEqual(result.sections["curvature"]["scalar_curvature"]["jet"], "0")
        self.assertEqual(result.verdict["kind"], INCONCLUSIVE)


class TestVarietySection(unittest.TestCase):

    def _section(self, config: ConformalKahlerConfig) -> Dict[str, Any]:
        coords = [f"x{i}" for i in range(6)]
        spec = load_problem(json.dumps({"dimension": 6, "coordinates": coords,
                                        "metric": {f"{c},{c}": "1" for c in coords},
                                        "point": [0] * 6, "jet_order": 4}), "flat6d.json")
        return AnalysisPipeline(spec, "cky-check", config=config).variety_section()

    def test_generic_dimension(self):
        section = self._section(ConformalKahlerConfig(use_env=False))
        self.assertEqual((section["fiber"], section["rank"], section["dimension"]), (56, 43, 13))
        self.assertEqual(section["expected"], 13)
        self.assertFalse(section["rank_drop"])

    def test_rank_cutoff_from_config(self):
        config = ConformalKahlerConfig(use_env=False)
        config.update_config({"float_backend": {"rank_cutoff": 0.99}})
        section = self._section(config)
        self.assertLess(section["rank"], 43)
        self.assertTrue(section["rank_drop"])


if __name__ == '__main__':
    unittest.main()
