from ._rfuzzy import (
    ConfigError,
    DataError,
    Error,
    Model,
    NoRuleFiredError,
    NumericError,
    ValidationError,
    build,
    evaluate,
    fit_ols,
    load_fixture,
    run,
    scott_knott,
    stepwise,
    wilcoxon,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "Model",
    "NoRuleFiredError",
    "NumericError",
    "ValidationError",
    "build",
    "evaluate",
    "fit_ols",
    "load_fixture",
    "run",
    "scott_knott",
    "stepwise",
    "wilcoxon",
]
