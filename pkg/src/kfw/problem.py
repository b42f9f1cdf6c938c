"""A constrained problem: composite objective, feasible set, start point."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .objective import CompositeObjective
from .sets import FeasibleSet

__all__ = ["Problem"]


@dataclass
class Problem:
    """``minimize objective(x) subject to x in feasible_set``.

    ``x0`` defaults to the set's canonical vertex.  ``f_star``/``x_star`` hold
    a known or reference optimum when the generator can supply one.
    """

    objective: CompositeObjective
    feasible_set: FeasibleSet
    x0: np.ndarray | None = None
    name: str = "problem"
    f_star: float | None = None
    x_star: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def start(self):
        if self.x0 is not None:
            return np.array(self.x0, dtype=float)
        return self.feasible_set.canonical_vertex()

    def fingerprint(self) -> str:
        """sha256 over the numeric problem data (objective, set, start)."""
        h = hashlib.sha256()
        h.update(self.name.encode())
        chunks = list(self.objective.fingerprint_data())
        chunks += list(self.feasible_set.fingerprint_data())
        chunks.append(self.start())
        for arr in chunks:
            a = np.ascontiguousarray(np.asarray(arr, dtype=float))
            h.update(str(a.shape).encode())
            h.update(a.tobytes())
        return h.hexdigest()
