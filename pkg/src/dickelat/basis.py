"""Enumeration of the working bases and the label <-> index bijections.

Three basis kinds are supported:

* ``fock``             product states |n> x |j,m>, m a Jz projection
* ``coherent``         displaced-shell states |N; j, m>, m a Jx projection,
                       shell N counting excitations of the displaced mode
* ``coherent-parity``  parity-adapted combinations of the above, one sector
                       of the Z2 parity at a time

Labels are (excitation count, m) pairs ordered m-major, excitation-minor.
"""

from dataclasses import dataclass

import numpy as np

from .algebra import m_values

BASIS_KINDS = ("fock", "coherent", "coherent-parity")


def sector_twist(j):
    """Sign relating a parity sector label to the (-1)^N rule for m = 0 / m-pairing.

    +1 for integer j, -1 for half-integer j: in the m-ascending ladder
    convention used throughout, the parity operator maps |N; j, m> to
    (-1)^(2j) (-1)^N |N; j, -m>.
    """
    return 1 if round(2 * j) % 2 == 0 else -1


@dataclass(frozen=True)
class BasisSpec:
    """Basis kind, spin length, photon/shell truncation and (optionally) parity sector."""

    kind: str
    j: float
    n_max: int
    parity_sector: int | None = None

    def __post_init__(self):
        if self.kind not in BASIS_KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        twoj = 2.0 * self.j
        if twoj < 0 or twoj != round(twoj):
            raise ValueError(f"invalid j={self.j}: 2j must be a non-negative integer")
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")
        if self.kind == "coherent-parity":
            if self.parity_sector not in (+1, -1):
                raise ValueError("coherent-parity basis needs parity_sector = +1 or -1")
        elif self.parity_sector is not None:
            raise ValueError(f"{self.kind} basis takes no parity sector")


class BasisIndex:
    """Immutable mapping between (excitation, m) labels and contiguous indices."""

    def __init__(self, spec, n_exc, m_vals):
        self.spec = spec
        self.n_exc = np.asarray(n_exc, dtype=int)
        self.m_vals = np.asarray(m_vals, dtype=float)
        self.size = self.n_exc.size
        self._lookup = {
            (int(n), round(2 * m)): i
            for i, (n, m) in enumerate(zip(self.n_exc, self.m_vals))
        }

    def label_of(self, i):
        return int(self.n_exc[i]), float(self.m_vals[i])

    def index_of(self, n, m):
        key = (int(n), round(2 * m))
        if key not in self._lookup:
            raise KeyError(f"label (n={n}, m={m}) not in basis")
        return self._lookup[key]

    def rows_with_excitation(self, n):
        """Indices of all labels in excitation shell n."""
        return np.nonzero(self.n_exc == n)[0]

    def block_slices(self):
        """(m, slice) for each contiguous m block, ascending in m."""
        out = []
        start = 0
        for i in range(1, self.size + 1):
            if i == self.size or self.m_vals[i] != self.m_vals[start]:
                out.append((float(self.m_vals[start]), slice(start, i)))
                start = i
        return out


def enumerate_basis(spec: BasisSpec) -> BasisIndex:
    """Enumerate the basis labels for `spec` in deterministic (m, n) ascending order.

    For the coherent-parity kind with sector s only m >= 0 labels appear; an
    m = 0 label (integer j only) is kept only when (-1)^N matches
    s * (-1)^(2j), where it coincides with its own parity partner.
    """
    j, n_max = spec.j, spec.n_max
    ns, ms = [], []
    if spec.kind in ("fock", "coherent"):
        for m in m_values(j):
            for n in range(n_max + 1):
                ns.append(n)
                ms.append(m)
    else:
        target = spec.parity_sector * sector_twist(j)
        for m in m_values(j):
            if m < 0:
                continue
            for n in range(n_max + 1):
                if m == 0.0 and (1 if n % 2 == 0 else -1) != target:
                    continue
                ns.append(n)
                ms.append(m)
    return BasisIndex(spec, ns, ms)
