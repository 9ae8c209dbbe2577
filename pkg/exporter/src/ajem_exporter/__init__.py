"""Offline batch encoder producing AJEM embedding stores.

The exporter turns a manifest of images, biography texts, and pole prompts
into the binary stores the adjudication engine loads. It shares nothing with
the engine but the file format.
"""

__version__ = "0.1.0"

from .ajem import Store, pack_store, read_store, write_store
from .encoders import (ClipVisualEncoder, HashProjectionEncoder,
                       MiniLmTextEncoder, make_encoder)
from .errors import (EncoderLoadError, ExporterError, FormatError,
                     ManifestError, UnreadableImage)
from .export import (ExportResult, export_prompt_axes, export_text,
                     export_visual, read_prompt_pairs)
from .manifest import (EncoderSpec, ExportManifest, file_checksum,
                       load_manifest, save_manifest)

__all__ = [
    "__version__",
    "Store", "pack_store", "read_store", "write_store",
    "ClipVisualEncoder", "HashProjectionEncoder", "MiniLmTextEncoder", "make_encoder",
    "EncoderLoadError", "ExporterError", "FormatError", "ManifestError", "UnreadableImage",
    "ExportResult", "export_prompt_axes", "export_text", "export_visual", "read_prompt_pairs",
    "EncoderSpec", "ExportManifest", "file_checksum", "load_manifest", "save_manifest",
]
