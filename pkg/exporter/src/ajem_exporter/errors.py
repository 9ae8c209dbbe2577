"""Exception taxonomy for the exporter.

Everything raised on purpose derives from ExporterError so the CLI can map
failures to exit codes without enumerating modules. EncoderLoadError is kept
separate from the data-shaped errors: a missing model is an environment
problem, not a problem with the user's inputs.
"""

from __future__ import annotations


class ExporterError(Exception):
    """Base class for every deliberate exporter failure."""


class FormatError(ExporterError):
    """An AJEM byte stream is malformed or inconsistent."""


class ManifestError(ExporterError):
    """The export manifest (or a file it points at) is unusable."""


class UnreadableImage(ExporterError):
    """An input image could not be opened or decoded."""


class EncoderLoadError(ExporterError):
    """A pretrained encoder could not be constructed in this environment."""
