"""Mixed Boolean linear programs: model container, logic encoders, LP files."""

from .encoders import big_m_zeta_sinr, encode_and, encode_min_select, encode_or, min_select_zeta
from .lpfile import load_lp, parse_lp, save_lp, write_lp
from .model import EQ, GE, LE, MAXIMIZE, MINIMIZE, Constraint, LinExpr, MatrixForm, MilpModel, ModelError, Var

__all__ = [
    "EQ",
    "GE",
    "LE",
    "MAXIMIZE",
    "MINIMIZE",
    "Constraint",
    "LinExpr",
    "MatrixForm",
    "MilpModel",
    "ModelError",
    "Var",
    "big_m_zeta_sinr",
    "encode_and",
    "encode_min_select",
    "encode_or",
    "load_lp",
    "min_select_zeta",
    "parse_lp",
    "save_lp",
    "write_lp",
]
