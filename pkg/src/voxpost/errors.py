"""Exception hierarchy shared across the toolkit.

Everything raised intentionally derives from :class:`VoxpostError` so the CLI
can map library failures onto the "data error" exit code.
"""


class VoxpostError(Exception):
    """Base class for all toolkit errors."""


# --- volume I/O ---------------------------------------------------------------

class MalformedHeader(VoxpostError):
    """NIfTI-1 header is structurally invalid (bad size or magic)."""


class UnsupportedDatatype(VoxpostError):
    """Datatype code outside the supported {u8, i16, i32, f32, f64} set."""


class NonFiniteVoxel(VoxpostError):
    """A loaded voxel is NaN or infinite after slope/intercept scaling."""


class DimensionMismatch(VoxpostError):
    """Two volumes/masks that must be congruent have different dims."""


class IoFailure(VoxpostError):
    """Filesystem-level read/write failure."""


# --- aggregation --------------------------------------------------------------

class TooFewInputs(VoxpostError):
    """Ensembling needs at least two prediction volumes."""


class BadWeights(VoxpostError):
    """Weight vector has wrong length, negative entries, or does not sum to 1."""


# --- filters ------------------------------------------------------------------

class BadKernel(VoxpostError):
    """Median kernel size is even, non-positive, or too large for the volume."""


# --- intensity ----------------------------------------------------------------

class DegenerateRoi(VoxpostError):
    """Histogram-matching ROI has fewer than two voxels."""


class ConstantReference(VoxpostError):
    """Joint normalization reference volume is constant (zero range)."""


# --- metrics ------------------------------------------------------------------

class EmptyRoi(VoxpostError):
    """Metric evaluation mask selects no voxels."""


class VolumeTooSmall(VoxpostError):
    """Volume dims are smaller than the SSIM window along some axis."""


# --- ranking ------------------------------------------------------------------

class IncompleteGrid(VoxpostError):
    """The (case x method) metric-report grid has a missing cell."""


class DuplicateReport(VoxpostError):
    """Two reports share the same (case, method) cell."""


# --- dataset / pipeline -------------------------------------------------------

class LayoutError(VoxpostError):
    """Input directory does not follow the expected case file layout."""


class EmptyDataset(VoxpostError):
    """No usable cases were discovered."""


class ConfigError(VoxpostError):
    """Pipeline configuration document is invalid."""
