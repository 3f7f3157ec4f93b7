from .core import (
    DataError,
    SchemaError,
    kde_curve,
    plot_boxplots,
    plot_loglog,
    plot_restarts,
    silverman_bandwidth,
)

__all__ = [
    "DataError",
    "SchemaError",
    "kde_curve",
    "plot_boxplots",
    "plot_loglog",
    "plot_restarts",
    "silverman_bandwidth",
]
