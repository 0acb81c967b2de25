"""Optional on-disk cache of expanded theta blocks, keyed by descriptor and ``qmax``."""
from __future__ import annotations

import hashlib
import os
import pickle
from pathlib import Path
from typing import Optional

from .jacobi import JacobiFormSeries, ThetaBlockDescriptor, block_expand
from .series import FourierSeries, qunits

FORMAT = 1


def cache_key(d: ThetaBlockDescriptor, qmax) -> str:
    text = f"v{FORMAT}|{d.to_text()}|{qunits(qmax)}"
    return hashlib.sha256(text.encode()).hexdigest()[:32]


class ExpansionCache:
    def __init__(self, directory):
        self.dir = Path(directory)
        self.hits = 0
        self.misses = 0

    def _path(self, d: ThetaBlockDescriptor, qmax) -> Path:
        return self.dir / f"{cache_key(d, qmax)}.pkl"

    def expand(self, d: ThetaBlockDescriptor, qmax) -> JacobiFormSeries:
        path = self._path(d, qmax)
        if path.exists():
            with path.open("rb") as fh:
                coeffs, q0, z0, qmax_u, qstep = pickle.load(fh)
            self.hits += 1
            s = FourierSeries(coeffs, q0, z0, qmax_u, qstep)
            return JacobiFormSeries(s, d.weight, int(d.index), d)
        self.misses += 1
        phi = block_expand(d, qmax)
        s = phi.series
        self.dir.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".{os.getpid()}.tmp")
        with tmp.open("wb") as fh:
            pickle.dump((s.coeffs, s.q0, s.z0, s.qmax, s.qstep), fh, protocol=pickle.HIGHEST_PROTOCOL)
        tmp.replace(path)
        return phi


def resolve_cache_dir(flag: Optional[str]) -> Optional[str]:
    """``THETABLOCK_CACHE`` wins over ``--cache-dir``; neither means no cache."""
    return os.environ.get("THETABLOCK_CACHE") or flag or None
