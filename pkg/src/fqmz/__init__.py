"""Carlitz-Thakur multizeta values for F_q[t]: exact power sums, truncated
Laurent series in 1/t, and two-term relation discovery."""
from .field import FieldElem, FieldSpec, make_field, parse_field
from .laurent import CFResult, LaurentSeries, cf_expand, ls_from_rational
from .multizeta import zeta, zeta_ratio
from .polyring import Poly, RationalFunction, bracket, bracket_product, ell
from .powersum import Composition, s_below, sd, sd_iterated
from .relations import RelationRecord, TheoremParams, classify, closure, predicted, search, verify

__version__ = "0.1.0"

__all__ = [
    "FieldElem",
    "FieldSpec",
    "make_field",
    "parse_field",
    "CFResult",
    "LaurentSeries",
    "cf_expand",
    "ls_from_rational",
    "zeta",
    "zeta_ratio",
    "Poly",
    "RationalFunction",
    "bracket",
    "bracket_product",
    "ell",
    "Composition",
    "sd",
    "s_below",
    "sd_iterated",
    "RelationRecord",
    "TheoremParams",
    "classify",
    "closure",
    "predicted",
    "search",
    "verify",
]
