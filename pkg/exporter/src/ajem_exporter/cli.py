"""Command line interface.

Exit codes: 0 on success, 1 for usage mistakes, 2 for data problems
(bad manifest, unreadable inputs, malformed stores, failed verification),
3 when a pinned encoder cannot be loaded in this environment.

Every export command rewrites the manifest afterwards so its checksums
section reflects what was just read and written; `verify` replays those
checksums against the files on disk.
"""

from __future__ import annotations

import sys
from typing import Sequence

import click

from . import __version__
from .errors import EncoderLoadError, ExporterError
from .export import ExportResult, export_prompt_axes, export_text, export_visual
from .manifest import ExportManifest, file_checksum, load_manifest, save_manifest


@click.group(name="ajem-export")
@click.version_option(version=__version__, prog_name="ajem-export")
def cli() -> None:
    """Encode images, texts, and pole prompts into AJEM embedding stores."""


def _finish(manifest: ExportManifest, manifest_path: str, result: ExportResult) -> None:
    manifest.checksums.update(result.checksums)
    manifest.empty_texts = sorted(set(manifest.empty_texts) | set(result.empty_texts))
    save_manifest(manifest, manifest_path)
    for path in result.paths:
        click.echo(f"wrote {path}")
    for doc_id in result.empty_texts:
        click.echo(f"flagged empty doc {doc_id}")
    click.echo(f"updated {manifest_path}")


@cli.command("export-visual")
@click.argument("manifest_path", metavar="MANIFEST", type=click.Path(exists=True, dir_okay=False))
@click.option("--patches", is_flag=True, default=False,
              help="Also write one per-token store per artwork.")
def export_visual_cmd(manifest_path: str, patches: bool) -> None:
    """Encode every listed image into the visual store."""
    manifest = load_manifest(manifest_path)
    result = export_visual(manifest, patches=patches)
    _finish(manifest, manifest_path, result)


@cli.command("export-text")
@click.argument("manifest_path", metavar="MANIFEST", type=click.Path(exists=True, dir_okay=False))
def export_text_cmd(manifest_path: str) -> None:
    """Encode every listed biography doc into the text store."""
    manifest = load_manifest(manifest_path)
    result = export_text(manifest)
    _finish(manifest, manifest_path, result)


@cli.command("export-prompts")
@click.argument("manifest_path", metavar="MANIFEST", type=click.Path(exists=True, dir_okay=False))
@click.option("--prompt-file", default=None, metavar="FILE",
              help="Override the manifest's prompt file (path relative to the manifest).")
@click.option("--output", default=None, metavar="FILE",
              help="Override the manifest's prompts output path.")
def export_prompts_cmd(manifest_path: str, prompt_file: str | None, output: str | None) -> None:
    """Encode the five pole-prompt pairs into a style-pole store."""
    manifest = load_manifest(manifest_path)
    result = export_prompt_axes(manifest, prompt_file=prompt_file, output=output)
    _finish(manifest, manifest_path, result)


@cli.command()
@click.argument("manifest_path", metavar="MANIFEST", type=click.Path(exists=True, dir_okay=False))
def verify(manifest_path: str) -> None:
    """Recompute every checksum the manifest records; exit 2 on any drift."""
    manifest = load_manifest(manifest_path)
    if not manifest.checksums:
        click.echo("manifest records no checksums yet; run an export first")
        return
    bad = 0
    for rel in sorted(manifest.checksums):
        want = manifest.checksums[rel]
        path = manifest.resolve(rel)
        if not path.is_file():
            click.echo(f"MISSING  {rel}")
            bad += 1
        elif file_checksum(path) != want:
            click.echo(f"MISMATCH {rel}")
            bad += 1
        else:
            click.echo(f"ok       {rel}")
    if bad:
        raise ExporterError(f"{bad} of {len(manifest.checksums)} checksums failed")
    click.echo(f"all {len(manifest.checksums)} checksums match")


def cli_dispatch(argv: Sequence[str] | None = None) -> int:
    """Run the CLI without letting click terminate the process."""
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        cli.main(args=args, prog_name="ajem-export", standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:          # --help / --version
        return int(exc.exit_code)
    except click.UsageError as exc:
        no_args = getattr(click.exceptions, "NoArgsIsHelpError", ())
        if no_args and isinstance(exc, no_args):
            click.echo(exc.format_message(), err=True)   # message is the help text
        else:
            if exc.ctx is not None:
                click.echo(exc.ctx.get_usage(), err=True)
            click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except EncoderLoadError as exc:
        click.echo(f"encoder error: {exc}", err=True)
        return 3
    except ExporterError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
