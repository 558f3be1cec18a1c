"""RadioML2016.10a archive to SIGF converter."""

from .archive import ArchiveFormatError, ArchiveReport, convert, load_archive, verify_archive

__version__ = "0.1.0"

__all__ = ["ArchiveFormatError", "ArchiveReport", "convert", "load_archive", "verify_archive"]
