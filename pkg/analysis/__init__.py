"""
分析模組：障礙行列式、CKY 延拓、約束系統、tractor 判定
"""

from .obstruction import obstruction_report, random_bivectors
from .cky_prolong import ProlongationSection, apply_connection, build_witness, derive_section
from .constraints import q_residuals, variety_dimension_estimate
from .tractor import einstein_variants_check, kahler_characterisation_check
