"""asp-toolbox: Compute and verify mixed p-affine surface areas and illumination surface bodies"""
from importlib.metadata import PackageNotFoundError, version

__appname__ = "asp-toolbox"

try:
    __version__ = version(__appname__)
except PackageNotFoundError:  # pragma: no cover
    __version__ = "unknown"
