"""Monte Carlo simulator and analysis toolkit for layered media-based modulation.

Builds layered random constellations, detects symbols with exhaustive ML or a
greedy iterative beam search, applies Reed-Solomon coding, and cross-checks
simulated error rates against closed-form analytic expressions.
"""

from ._kernels import available_backends, default_backend
from .model import (ChannelParams, LayeredConstellation, constellation_from_tables,
                    eb_n0_to_n0, generate_constellation, load_constellation,
                    map_messages_to_points, map_to_point, n0_to_eb_n0,
                    save_constellation, transmit)
from .detect import (DetectionResult, DetectorConfig, agreement_rate,
                     all_unit_permutations, detect_exhaustive, detect_layered,
                     random_unit_permutations)

__version__ = "0.1.0"
