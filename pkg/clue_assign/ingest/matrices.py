"""Named-matrix container files.

The container is an uncompressed ``.npz`` archive, readable with ``numpy.load``.
Members are written in sorted name order with a fixed timestamp, so identical
matrices always produce identical bytes, and the ``.npy`` payload stores float64
values verbatim, so a save/load round trip is bit-exact.
"""

import logging
import os
import zipfile
from collections.abc import Iterable, Mapping

import numpy as np
import numpy.typing as npt

from ..error.exceptions import MalformedDocumentError, ReportWriteError

logger = logging.getLogger(__name__)

FIXED_DATE_TIME = (1980, 1, 1, 0, 0, 0)


def save_matrices(path: str | os.PathLike[str], arrays: Mapping[str, npt.ArrayLike]) -> None:
    """Write ``arrays`` to ``path`` as a deterministic ``.npz`` archive.

    Args:
        path: Destination file
        arrays: Member name to array (scalars become 0-d arrays)

    Raises:
        ReportWriteError: If the file cannot be written
    """
    try:
        with zipfile.ZipFile(path, mode="w", compression=zipfile.ZIP_STORED) as zf:
            for name in sorted(arrays):
                info = zipfile.ZipInfo(f"{name}.npy", date_time=FIXED_DATE_TIME)
                info.compress_type = zipfile.ZIP_STORED
                info.external_attr = 0o644 << 16
                with zf.open(info, mode="w", force_zip64=True) as fh:
                    np.lib.format.write_array(fh, np.asarray(arrays[name]), allow_pickle=False)
    except OSError as e:
        raise ReportWriteError(f"cannot write {os.fspath(path)}: {e}", path=os.fspath(path)) from e
    logger.info("Wrote %d matrices to %s", len(arrays), os.fspath(path))


def load_matrices(path: str | os.PathLike[str], required: Iterable[str] = ()) -> dict[str, np.ndarray]:
    """Read every member of a container written by ``save_matrices``.

    Args:
        path: Source file
        required: Member names that must be present

    Returns:
        Member name to array

    Raises:
        MalformedDocumentError: If the file is unreadable or a required member is
            missing
    """
    location = os.fspath(path)
    try:
        with np.load(path, allow_pickle=False) as data:
            arrays = {name: np.array(data[name]) for name in data.files}
    except (OSError, ValueError, zipfile.BadZipFile) as e:
        raise MalformedDocumentError(
            {"file": str(e)}, location="file", message=f"cannot read matrix file {location}", path=location
        ) from e
    missing = [name for name in required if name not in arrays]
    if missing:
        raise MalformedDocumentError(
            {name: "missing" for name in missing},
            location="file",
            message=f"matrix file {location} lacks {', '.join(missing)}",
            path=location,
        )
    return arrays


def require_matrix(arrays: Mapping[str, np.ndarray], name: str, source: str = "file") -> np.ndarray:
    """Fetch a 2-D float64 member, raising ``MalformedDocumentError`` otherwise."""
    if name not in arrays:
        raise MalformedDocumentError({name: "missing"}, location="file", message=f"{source} lacks '{name}'")
    arr = np.asarray(arrays[name], dtype=np.float64)
    if arr.ndim != 2:
        raise MalformedDocumentError(
            {name: f"expected a 2-D matrix, got shape {arr.shape}"}, location="file", message=f"{source}: bad '{name}'"
        )
    return arr
