"""Recurring-versus-noise decomposition of high-frequency market activity.

The pipeline runs ingest -> segmentation -> spectral -> patterns/statistics:
trades are resampled onto a fixed grid, folded into day or week segments,
correlated segment-against-segment, and the resulting spectrum is compared
with the Marchenko-Pastur law. Outlying eigenvectors are turned into
eigensignals that show *when* during the day or week the recurring activity
sits.
"""

from rmtseason.errors import ConvergenceError, InputError, RmtSeasonError, ValidationError
from rmtseason.ingest import (
    Observable,
    SampledSeries,
    TickRecord,
    Trades,
    parse_trades,
    read_trades,
    resample,
)
from rmtseason.segmentation import Period, SegmentMatrix, Transform, filter_rows, segment
from rmtseason.spectral import (
    Classification,
    CorrMatrix,
    MPReference,
    Spectrum,
    classify_spectrum,
    correlation_matrix,
    eigendecompose,
    mp_bounds,
    mp_density,
)
from rmtseason.patterns import (
    Eigensignal,
    Periodogram,
    Profile,
    Statistic,
    average_profile,
    dominant_period,
    eigensignal,
    periodogram,
)
from rmtseason.statistics import (
    OffDiagSummary,
    RankedPair,
    offdiag_summary,
    rank_pairs,
    summarize_elements,
)
from rmtseason.testkit import Plant, SyntheticSpec, brute_force_eigen, generate

__version__ = "0.1.0"

__all__ = [
    "Classification",
    "ConvergenceError",
    "CorrMatrix",
    "Eigensignal",
    "InputError",
    "MPReference",
    "Observable",
    "OffDiagSummary",
    "Period",
    "Periodogram",
    "Plant",
    "Profile",
    "RankedPair",
    "RmtSeasonError",
    "SampledSeries",
    "SegmentMatrix",
    "Spectrum",
    "Statistic",
    "SyntheticSpec",
    "TickRecord",
    "Trades",
    "Transform",
    "ValidationError",
    "average_profile",
    "brute_force_eigen",
    "classify_spectrum",
    "correlation_matrix",
    "dominant_period",
    "eigendecompose",
    "eigensignal",
    "filter_rows",
    "generate",
    "mp_bounds",
    "mp_density",
    "offdiag_summary",
    "parse_trades",
    "periodogram",
    "rank_pairs",
    "read_trades",
    "resample",
    "segment",
    "summarize_elements",
]
