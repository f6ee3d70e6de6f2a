"""
核心模組：精確純量與 jet、張量運算、曲率
"""

from .exact_scalars import Jet, JetSpace, ScalarBackend, format_param_poly
from .tensor_core import MetricJet, Tensor
from .curvature import CurvaturePack, curvature_pack

__all__ = ['Jet', 'JetSpace', 'ScalarBackend', 'format_param_poly',
           'MetricJet', 'Tensor', 'CurvaturePack', 'curvature_pack']
