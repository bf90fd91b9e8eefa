"""gazekit: batch analytics for eye-gaze and machine-attention data.

Builds saliency maps from fixations, evaluates them (NSS, AUC-Judd,
shuffled AUC, SIM, Spearman), computes gaze/description statistics over
semantically annotated images, aligns attention sequences in time with
DTW, and provides the deterministic kernels of a saliency-guided
attention pipeline (winner-take-all selection, foveation, affine patch
sampling, soft-attention pooling). The ``gazekit`` CLI binds everything
into reproducible batch runs with JSON reports.
"""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    CategoryKind,
    CategoryTable,
    FixationLocationSet,
    FixationRecord,
    FloatGridStack,
    GazeSession,
    Noun,
    SaliencyMap,
    SemanticMask,
    Task,
    Transcript,
)
from .errors import GazekitError  # noqa: F401
