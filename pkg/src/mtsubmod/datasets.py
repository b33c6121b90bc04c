"""Locating and fetching the benchmark social graphs.

The experiments use five collaboration/affiliation graphs distributed by
the Network Repository (https://networkrepository.com).  They are not
bundled; `mt-submod fetch` downloads them into a data directory, or drop
the files there yourself (either the .mtx from the Network Repository or
the SNAP edge lists work -- the parser handles both).

The data directory defaults to ./data and can be overridden with the
MTSUBMOD_DATA environment variable.
"""

from __future__ import annotations

import io
import os
import urllib.request
import zipfile
from pathlib import Path

GRAPH_NAMES = ("ca-GrQc", "Erdos992", "ca-HepPh", "ca-AstroPh", "ca-CondMat")

# expected max closed neighborhood (max degree + 1) per graph; used by the
# verification suite as a parse cross-check
MAX_CLOSED_NEIGHBORHOOD = {
    "ca-GrQc": 82,
    "Erdos992": 62,
    "ca-HepPh": 492,
    "ca-AstroPh": 505,
    "ca-CondMat": 280,
}

_NR_CATEGORIES = ("ca", "misc", "labeled", "soc", "ia")
_SNAP = "https://snap.stanford.edu/data/{name}.txt.gz"

ENV_DATA_DIR = "MTSUBMOD_DATA"
_EXTENSIONS = (".mtx", ".edges", ".txt", ".edgelist")


def data_dir() -> Path:
    return Path(os.environ.get(ENV_DATA_DIR, "data"))


def find_graph_file(name: str, directory=None) -> Path | None:
    base = Path(directory) if directory else data_dir()
    for ext in _EXTENSIONS:
        candidate = base / f"{name}{ext}"
        if candidate.is_file():
            return candidate
    return None


def _download(url: str, timeout: float = 60.0) -> bytes:
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return resp.read()


def fetch_graph(name: str, dest=None, timeout: float = 60.0) -> Path:
    """Download one graph into the data directory; returns the file path.

    Tries the Network Repository zip mirrors first, then the SNAP edge
    list for the ca-* graphs.  Raises the last error when nothing works.
    """
    base = Path(dest) if dest else data_dir()
    base.mkdir(parents=True, exist_ok=True)
    existing = find_graph_file(name, base)
    if existing:
        return existing

    errors = []
    for category in _NR_CATEGORIES:
        url = f"https://nrvis.com/download/data/{category}/{name}.zip"
        try:
            blob = _download(url, timeout)
            with zipfile.ZipFile(io.BytesIO(blob)) as zf:
                member = next(
                    (m for m in zf.namelist()
                     if m.endswith((".mtx", ".edges", ".txt"))),
                    None,
                )
                if member is None:
                    raise ValueError(f"no graph file inside {url}")
                target = base / f"{name}{Path(member).suffix}"
                target.write_bytes(zf.read(member))
                return target
        except Exception as exc:  # noqa: BLE001 - collect and report
            errors.append(f"{url}: {exc}")

    if name.startswith("ca-"):
        import gzip

        url = _SNAP.format(name=name)
        try:
            blob = _download(url, timeout)
            target = base / f"{name}.txt"
            target.write_bytes(gzip.decompress(blob))
            return target
        except Exception as exc:  # noqa: BLE001
            errors.append(f"{url}: {exc}")

    raise OSError(
        f"could not fetch {name}; tried:\n  " + "\n  ".join(errors)
        + f"\nPlace the file manually at {base}/{name}.mtx instead."
    )
