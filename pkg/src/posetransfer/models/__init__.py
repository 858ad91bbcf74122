from .common import LEAKY_SLOPE, finish_build, instance_stats, resample_to, seeded_init_
from .norm import SpadeResBlock, SpatialAdaptiveNorm
from .edge_generator import EdgeGenerator, build_edge_generator
from .image_generator import (
    ContentStyleBlock,
    ImageGenerator,
    StyleEncoder,
    StyleEncoderBlock,
    build_image_generator,
)
from .discriminator import PatchDiscriminator, build_discriminator

__all__ = [
    "LEAKY_SLOPE",
    "ContentStyleBlock",
    "EdgeGenerator",
    "ImageGenerator",
    "PatchDiscriminator",
    "SpadeResBlock",
    "SpatialAdaptiveNorm",
    "StyleEncoder",
    "StyleEncoderBlock",
    "build_discriminator",
    "build_edge_generator",
    "build_image_generator",
    "finish_build",
    "instance_stats",
    "resample_to",
    "seeded_init_",
]
