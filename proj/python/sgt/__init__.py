"""Shape generalized trees: decision trees whose nodes route through learned
piecewise-constant shape functions of one or two features."""

from ._core import (
    DataError,
    Dataset,
    Hyperparams,
    Model,
    ModelFormatError,
    fit,
    fit_cart,
    from_cart,
    gen_bars,
    gen_bars_regression,
    gen_plus_sign,
    run_cli,
    tao_refine,
    theorem2_gap,
)

__all__ = [
    "DataError",
    "Dataset",
    "Hyperparams",
    "Model",
    "ModelFormatError",
    "fit",
    "fit_cart",
    "from_cart",
    "gen_bars",
    "gen_bars_regression",
    "gen_plus_sign",
    "run_cli",
    "tao_refine",
    "theorem2_gap",
]
