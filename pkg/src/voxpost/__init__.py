"""voxpost: ensembling, filtering, and evaluation for volumetric inpainting."""

from .volume_io import Mask, Volume, read_mask, read_volume, write_volume  # noqa: F401
from .aggregate import AggregationMode, ensemble, ensemble_masked  # noqa: F401
from .filters import gaussian_smooth, median_filter  # noqa: F401
from .intensity import histogram_match, joint_normalize  # noqa: F401
from .metrics import MetricReport, SsimParams, evaluate_case, mse, psnr, ssim  # noqa: F401
from .ranking import RankTable, export_ranks, rank_methods  # noqa: F401
from .degrade import DegradeSpec, degrade_case, degrade_dataset  # noqa: F401

__version__ = "0.1.0"
