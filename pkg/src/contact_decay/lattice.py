"""Lattice geometry: the finite torus (forward processes) and unbounded Z^d.

Neighbor order is fixed everywhere as (+e1, -e1, +e2, -e2, ...) so that
seeded runs are reproducible.
"""

import numpy as np


def unbounded_neighbors(site):
    """The 2d neighbors of a site of Z^d, as tuples, in the fixed order."""
    out = []
    for ax in range(len(site)):
        for step in (1, -1):
            nb = list(site)
            nb[ax] += step
            out.append(tuple(nb))
    return out


class Torus:
    """A d-dimensional torus of even side L with L^d sites.

    Sites are addressed either by coordinate tuples (each in [0, L)) or by a
    linear index in [0, L^d); coordinate 0 is the fastest-varying one.
    """

    def __init__(self, d, L):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        if L < 4 or L % 2 != 0:
            raise ValueError("torus side L must be even and >= 4")
        self.d = int(d)
        self.L = int(L)
        self.n_sites = self.L ** self.d
        self._strides = self.L ** np.arange(self.d, dtype=np.int64)
        self._nbrs = None

    def index(self, coords):
        """Linear index of a site given as a coordinate sequence."""
        coords = np.asarray(coords, dtype=np.int64)
        if coords.shape[-1] != self.d:
            raise ValueError(f"expected {self.d} coordinates, got {coords.shape[-1]}")
        return int(np.dot(np.mod(coords, self.L), self._strides))

    def coords(self, idx):
        """Coordinate tuple of a linear index (inverse of index)."""
        if not 0 <= idx < self.n_sites:
            raise ValueError(f"index {idx} out of range [0, {self.n_sites})")
        return tuple((idx // self._strides) % self.L)

    def neighbor_table(self):
        """(n_sites, 2d) array: row x lists the neighbors of x in fixed order."""
        if self._nbrs is None:
            n, d, L = self.n_sites, self.d, self.L
            idx = np.arange(n, dtype=np.int64)
            cols = []
            for ax in range(d):
                c = (idx // self._strides[ax]) % L
                base = idx - c * self._strides[ax]
                cols.append(base + ((c + 1) % L) * self._strides[ax])
                cols.append(base + ((c - 1) % L) * self._strides[ax])
            self._nbrs = np.stack(cols, axis=1)
        return self._nbrs

    def neighbors(self, idx):
        """The 2d neighbor indices of a linear index, fixed order."""
        return self.neighbor_table()[idx]

    @property
    def origin(self):
        return 0
