"""Single-image camera calibration from line segments by vanishing-point hypotheses.

The pipeline estimates a zenith from steep segments, builds Manhattan frame
hypotheses from junction-adjacent horizontal segments, scores them against a
rasterized line map and aggregates the best ones into focal length, pitch,
roll, yaw and a horizon line.
"""

from .camera import CameraParams, PseudoIntrinsics
from .pipeline import CalibrationResult, PipelineConfig, calibrate_image, calibrate_segments

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult", "CameraParams", "PipelineConfig", "PseudoIntrinsics",
    "calibrate_image", "calibrate_segments",
]
