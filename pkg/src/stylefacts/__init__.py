"""Stylized-facts statistics for financial price series."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateSeriesError,
    DomainError,
    EstimationError,
    IngestError,
    InsufficientDataError,
    StylefactsError,
)
from .series import PriceSeries, ReturnSeries, TimeScale, log_returns, resample, simple_returns  # noqa: E402
from .moments import aggregation_scan, jarque_bera, kolmogorov_smirnov, summarize  # noqa: E402
from .dependence import Transform, acf, lag_pairs, ljung_box, mcleod_li  # noqa: E402
from .density import histogram, kde, qq_points  # noqa: E402
from .garch import GarchParams, garch_fit, garch_loglik, garch_simulate, volatility_bands  # noqa: E402
