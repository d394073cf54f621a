"""Disk cache for eigenpair computations.

Entries are keyed by (level, boundary kind, twist rounded to 1e-12, count,
tolerance, code version).  Payloads are npz archives carrying their own
checksum; writes go through a temporary file and an atomic rename, reads
validate the key and checksum and silently drop corrupt entries.  Cache
hits return exactly the arrays that were stored, so warm runs reproduce
cold runs bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .operators import BoundarySpec
from .spectra import EigenSet

__all__ = ["EigenCache", "cache_key"]

ENV_CACHE_DIR = "CARPETLAB_CACHE"


def cache_key(level: int, spec: BoundarySpec, k: int, tol: float,
              version: str = __version__) -> str:
    theta = 0.0 if spec.theta is None else round(spec.theta, 12)
    return f"eigs-v{version}-L{level}-{spec.kind}-theta{theta:.12f}-k{k}-tol{tol:.3e}"


def _checksum(arrays: dict[str, np.ndarray]) -> str:
    h = hashlib.sha256()
    for name in sorted(arrays):
        h.update(name.encode())
        h.update(np.ascontiguousarray(arrays[name]).tobytes())
    return h.hexdigest()


class EigenCache:
    def __init__(self, directory: str | os.PathLike | None = None):
        if directory is None:
            directory = os.environ.get(ENV_CACHE_DIR, ".carpetlab-cache")
        self.directory = Path(directory)

    def _path(self, key: str) -> Path:
        digest = hashlib.sha256(key.encode()).hexdigest()[:24]
        return self.directory / f"{digest}.npz"

    def save(self, eigenset: EigenSet, k_requested: int | None = None) -> Path:
        key = cache_key(eigenset.level, eigenset.spec,
                        eigenset.k if k_requested is None else k_requested,
                        eigenset.tol)
        arrays = {"eigenvalues": eigenset.eigenvalues}
        if eigenset.fields is not None:
            arrays["fields"] = eigenset.fields
        if eigenset.residuals is not None:
            arrays["residuals"] = eigenset.residuals
        meta = {
            "key": key,
            "level": eigenset.level,
            "kind": eigenset.spec.kind,
            "theta": eigenset.spec.theta,
            "tol": eigenset.tol,
            "rho": eigenset.rho,
            "labels": eigenset.labels,
            "checksum": _checksum(arrays),
        }
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self._path(key)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.savez(fh, meta=np.frombuffer(
                    json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
                    **arrays)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path

    def load(self, level: int, spec: BoundarySpec, k: int,
             tol: float) -> EigenSet | None:
        key = cache_key(level, spec, k, tol)
        path = self._path(key)
        if not path.exists():
            return None
        try:
            with np.load(path) as npz:
                meta = json.loads(bytes(npz["meta"].tobytes()).decode())
                arrays = {name: npz[name] for name in npz.files if name != "meta"}
        except Exception:
            path.unlink(missing_ok=True)
            return None
        if meta.get("key") != key or meta.get("checksum") != _checksum(arrays):
            path.unlink(missing_ok=True)
            return None
        return EigenSet(
            level=meta["level"],
            spec=BoundarySpec(meta["kind"], meta["theta"]),
            eigenvalues=arrays["eigenvalues"],
            fields=arrays.get("fields"),
            tol=meta["tol"],
            rho=meta["rho"],
            residuals=arrays.get("residuals"),
            labels=None if meta["labels"] is None else list(meta["labels"]),
        )
