"""Stickman-conditioned text-to-motion diffusion.

A user steers generation with up to three six-stroke stickman sketches
(start / middle / end slots), free text, or any combination.  The denoiser
fuses the condition combinations in one sorted batch, mixes their noise
predictions classifier-free-guidance style, and reports per-frame index
scores that locate each sketch in the generated clip.

Everything here runs on a synthetic procedural corpus at desk scale; the
CLI (`stickmotion --help`) chains corpus synthesis, tower pretraining,
diffusion training, generation, evaluation, and the HTTP API.
"""

from .corpus import CorpusConfig, MotionClip, Vocabulary, generate_corpus
from .diffusion import (GenerationRequest, GenerationResult, MixtureConfig,
                        generate, generate_batch, make_schedule)
from .sga import Stickman, stickman_from_json, stickman_from_pose, stickman_to_json

__version__ = "0.1.0"

__all__ = [
    "CorpusConfig", "MotionClip", "Vocabulary", "generate_corpus",
    "GenerationRequest", "GenerationResult", "MixtureConfig",
    "generate", "generate_batch", "make_schedule",
    "Stickman", "stickman_from_json", "stickman_from_pose", "stickman_to_json",
    "__version__",
]
