import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence, Union


def atomic_write_bytes(path: Path, data: bytes) -> Path:
    """
    Writes ``data`` to a temp file next to ``path`` and renames it into place.

    Args:
        path: Destination file; parent directories are created.
        data: File content.

    Returns:
        The destination path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def atomic_write_text(path: Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def format_float(value: float) -> str:
    # repr 保证读回后逐位一致
    return repr(float(value))


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Union[str, int, float]]]) -> str:
    """Renders rows as CSV with ``,`` separator and LF line endings; floats use repr."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [format_float(cell) if isinstance(cell, float) else cell for cell in row]
        )
    return buffer.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return atomic_write_text(path, render_csv(header, rows))
