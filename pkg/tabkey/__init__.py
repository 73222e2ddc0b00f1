from .version import version as __version__  # noqa: F401
