"""Multigroup thermal radiative transfer: EMC, IMC and equilibrium diffusion."""
import warnings

# numba's threading-layer probe complains about old TBB builds; the workqueue
# and omp layers are used instead.
warnings.filterwarnings("ignore", message=".*TBB.*")

from .config import ConfigError, RunConfig, load_config, parse_config  # noqa: E402
from .driver import RunResult, run  # noqa: E402
from .presets import PRESETS, preset  # noqa: E402

__version__ = "0.1.0"
__all__ = ["ConfigError", "RunConfig", "RunResult", "load_config", "parse_config", "preset",
           "PRESETS", "run"]
