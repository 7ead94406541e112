"""lfdfnet: light field image super-resolution with angular deformable alignment.

It contains the light field data model, the deformable-convolution network, the synthetic
baseline-adjustable light field generator and the training / evaluation harnesses.
"""

from importlib.metadata import PackageNotFoundError, version

__package_name__ = "lfdfnet"
try:
    __version__ = version(__package_name__)
except PackageNotFoundError:
    __version__ = "unknown"
