"""Dense symmetric Hamiltonians for the Dicke model in each working basis,
plus conserved-excitation blocks of the Tavis-Cummings limit.

The coherent-basis construction rewrites

    H = omega A^dag A - (4 gamma^2 / (omega N_atoms)) Jx^2 + omega0 Jz,

with A = a + G Jx and G = 2 gamma / (omega sqrt(N_atoms)): diagonal in the
displaced shells, with the Jz term laddering m by one and picking up a
displaced-oscillator overlap between adjacent shells.  The same Jz / photon
kernels also serve as Peres-operator matrices, which keeps the ladder sign
convention consistent across the package.
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import algebra
from .basis import BasisIndex, BasisSpec, enumerate_basis, sector_twist
from .errors import CapacityError

# Builders refuse to allocate a dense matrix larger than this (bytes).
MEMORY_BUDGET_BYTES = 4 * 2**30

_KIND_CODES = {"fock": 0, "coherent": 1, "coherent-parity": 2, None: 3}
_MAGIC = b"DPH1"


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the model: field frequency, level splitting, coupling, spin length."""

    omega: float
    omega0: float
    gamma: float
    j: float

    def __post_init__(self):
        if not (self.omega > 0):
            raise ValueError("omega must be > 0")
        if self.omega0 < 0:
            raise ValueError("omega0 must be >= 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        twoj = 2.0 * self.j
        if twoj <= 0 or twoj != round(twoj):
            raise ValueError("j must be a positive (half-)integer")

    @property
    def n_atoms(self):
        return round(2 * self.j)

    @property
    def gamma_c(self):
        """Critical coupling sqrt(omega0 * omega) / 2."""
        return math.sqrt(self.omega0 * self.omega) / 2.0

    @property
    def g_disp(self):
        """Displacement scale G = 2 gamma / (omega sqrt(N_atoms))."""
        return 2.0 * self.gamma / (self.omega * math.sqrt(self.n_atoms))


@dataclass
class SymmetricMatrix:
    """Dense real symmetric operator with its basis provenance."""

    data: np.ndarray
    basis: BasisSpec | None

    def __post_init__(self):
        d = self.data
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("matrix must be square")
        if not np.array_equal(d, d.T):
            raise ValueError("matrix entries are not exactly symmetric")
        if not np.isfinite(d).all():
            raise ValueError("matrix contains non-finite entries")

    @property
    def dim(self):
        return self.data.shape[0]


def _check_capacity(dim):
    need = 8 * dim * dim
    if need > MEMORY_BUDGET_BYTES:
        raise CapacityError(
            f"dense {dim}x{dim} matrix needs {need / 2**30:.2f} GiB, "
            f"budget is {MEMORY_BUDGET_BYTES / 2**30:.2f} GiB"
        )


def _mirror_lower(mat):
    """Exactly symmetric matrix from the lower triangle of `mat`."""
    low = np.tril(mat)
    return low + low.T - np.diag(np.diag(mat))


# ---------------------------------------------------------------------------
# operator kernels (shared by the builders and the Peres-operator matrices)

def op_jz(index: BasisIndex, params: ModelParams) -> np.ndarray:
    """Jz matrix in the basis described by `index`."""
    kind = index.spec.kind
    if kind == "fock":
        return np.diag(index.m_vals)
    if kind == "coherent":
        return _jz_coherent(index, params)
    return _jz_parity(index, params)


def op_photon(index: BasisIndex, params: ModelParams) -> np.ndarray:
    """Photon number a^dag a in the basis described by `index`."""
    kind = index.spec.kind
    if kind == "fock":
        return np.diag(index.n_exc.astype(float))
    # a = A - G Jx: diagonal N + G^2 m^2 with a same-m ladder in N
    g = params.g_disp
    mat = np.diag(index.n_exc + (g * index.m_vals) ** 2)
    for _, sl in index.block_slices():
        n_list = index.n_exc[sl]
        m = index.m_vals[sl.start]
        base = sl.start
        for k in range(len(n_list) - 1):
            if n_list[k + 1] == n_list[k] + 1:
                val = -g * m * math.sqrt(n_list[k] + 1.0)
                mat[base + k + 1, base + k] = val
                mat[base + k, base + k + 1] = val
    return mat


def op_jx2(index: BasisIndex, params: ModelParams) -> np.ndarray:
    """Jx^2 matrix: pentadiagonal in m for the Fock basis, diagonal m^2 otherwise."""
    kind = index.spec.kind
    if kind == "fock":
        size = index.spec.n_max + 1
        return np.kron(algebra.jx_squared(index.spec.j), np.eye(size))
    return np.diag(index.m_vals**2)


def _jz_coherent(index, params):
    j = index.spec.j
    w = algebra.displacement_matrix(index.spec.n_max, params.g_disp)
    mat = np.zeros((index.size, index.size))
    blocks = index.block_slices()
    for b in range(len(blocks) - 1):
        m, sl = blocks[b]
        _, sl_up = blocks[b + 1]
        c = 0.5 * algebra.ladder_coeff(j, m, +1)
        blk = c * w  # rows: shell of m+1, cols: shell of m
        mat[sl_up, sl] = blk
        mat[sl, sl_up] = blk.T
    return mat


def _jz_parity(index, params):
    j = index.spec.j
    sector = index.spec.parity_sector
    s_eff = sector * sector_twist(j)
    w = algebra.displacement_matrix(index.spec.n_max, params.g_disp)
    mat = np.zeros((index.size, index.size))
    blocks = index.block_slices()
    for b in range(len(blocks) - 1):
        m, sl = blocks[b]
        _, sl_up = blocks[b + 1]
        c = 0.5 * algebra.ladder_coeff(j, m, +1)
        if m == 0.0:
            c *= math.sqrt(2.0)  # self-paired m=0 against the sqrt(2)-normalized pair
        n_lo = index.n_exc[sl]
        n_hi = index.n_exc[sl_up]
        # rows: lower-m block, cols: upper: <N1|D(-G)|N2> = W[N2, N1]
        blk = c * w[np.ix_(n_hi, n_lo)].T
        mat[sl, sl_up] = blk
        mat[sl_up, sl] = blk.T
    if blocks and blocks[0][0] == 0.5:
        # half-integer j: the m=1/2 pair couples to itself through its mirror
        m, sl = blocks[0]
        c = 0.5 * math.sqrt(j * (j + 1) + 0.25)
        n_list = index.n_exc[sl]
        signs = np.where(n_list % 2 == 0, 1.0, -1.0) * s_eff
        blk = c * w[np.ix_(n_list, n_list)] * signs[None, :]
        mat[sl, sl] = _mirror_lower(blk)
    return mat


# ---------------------------------------------------------------------------
# builders

def build_fock(params: ModelParams, n_max: int) -> SymmetricMatrix:
    """Dicke Hamiltonian over |n> x |j,m>: diagonal omega n + omega0 m with the
    (2 gamma / sqrt(N_atoms)) (a + a^dag) Jx coupling linking (n, m) to (n+1, m+-1)."""
    spec = BasisSpec("fock", params.j, n_max)
    index = enumerate_basis(spec)
    _check_capacity(index.size)
    size = n_max + 1
    coupling = 2.0 * params.gamma / math.sqrt(params.n_atoms)
    ns = np.arange(size, dtype=float)
    field = np.zeros((size, size))
    idx = np.arange(size - 1)
    field[idx + 1, idx] = np.sqrt(idx + 1.0)
    field[idx, idx + 1] = np.sqrt(idx + 1.0)
    mat = np.zeros((index.size, index.size))
    blocks = index.block_slices()
    for b, (m, sl) in enumerate(blocks):
        mat[sl, sl] = np.diag(params.omega * ns + params.omega0 * m)
        if b + 1 < len(blocks):
            _, sl_up = blocks[b + 1]
            c = coupling * 0.5 * algebra.ladder_coeff(params.j, m, +1)
            blk = c * field  # symmetric in n, so mirror equals itself
            mat[sl_up, sl] = blk
            mat[sl, sl_up] = blk
    return SymmetricMatrix(mat, spec)


def _coherent_diagonal(index, params):
    quad = 4.0 * params.gamma**2 / (params.omega * params.n_atoms)
    return params.omega * index.n_exc - quad * index.m_vals**2


def build_coherent(params: ModelParams, n_max: int) -> SymmetricMatrix:
    """Dicke Hamiltonian over the displaced shells |N; j, m>."""
    spec = BasisSpec("coherent", params.j, n_max)
    index = enumerate_basis(spec)
    _check_capacity(index.size)
    mat = params.omega0 * _jz_coherent(index, params)
    mat[np.diag_indices(index.size)] += _coherent_diagonal(index, params)
    return SymmetricMatrix(mat, spec)


def build_coherent_parity(params: ModelParams, n_max: int, sector: int) -> SymmetricMatrix:
    """Dicke Hamiltonian restricted to one parity sector of the displaced basis.

    The union of the two sectors' spectra equals the full coherent-basis
    spectrum; at omega0 = 0 the matrix is diagonal.
    """
    spec = BasisSpec("coherent-parity", params.j, n_max, parity_sector=sector)
    index = enumerate_basis(spec)
    _check_capacity(index.size)
    mat = params.omega0 * _jz_parity(index, params)
    mat[np.diag_indices(index.size)] += _coherent_diagonal(index, params)
    return SymmetricMatrix(mat, spec)


def build_tc_block(params: ModelParams, lam: int) -> SymmetricMatrix:
    """Tavis-Cummings Hamiltonian restricted to the conserved-excitation block
    Lambda = lam, over states |n = lam - j - m> x |j,m> with n >= 0."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    j = params.j
    twoj = params.n_atoms
    ms = algebra.m_values(j)
    valid = [m for m in ms if lam - j - m >= -1e-12]
    dim = min(lam, twoj) + 1
    assert len(valid) == dim
    mat = np.zeros((dim, dim))
    gtc = params.gamma / math.sqrt(twoj)
    for k, m in enumerate(valid):
        n = round(lam - j - m)
        mat[k, k] = params.omega * n + params.omega0 * m
        if k + 1 < dim:
            # a J+ : |n, m> -> sqrt(n) sqrt(j(j+1)-m(m+1)) |n-1, m+1>
            val = gtc * math.sqrt(n) * algebra.ladder_coeff(j, m, +1)
            mat[k + 1, k] = val
            mat[k, k + 1] = val
    return SymmetricMatrix(mat, None)


# ---------------------------------------------------------------------------
# optional binary dump of the lower triangle

def dump_matrix(matrix: SymmetricMatrix, path):
    """Write `matrix` as a 16-byte header plus the row-major lower triangle
    in little-endian float64."""
    kind = matrix.basis.kind if matrix.basis is not None else None
    header = _MAGIC + struct.pack("<II", matrix.dim, _KIND_CODES[kind]) + b"\x00" * 4
    tri = matrix.data[np.tril_indices(matrix.dim)]
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(tri.astype("<f8").tobytes())


def load_matrix(path):
    """Read a matrix written by `dump_matrix`; returns (SymmetricMatrix, kind_code).

    Basis provenance beyond the kind code is not stored, so `basis` is None.
    """
    with open(path, "rb") as fh:
        header = fh.read(16)
        if header[:4] != _MAGIC:
            raise ValueError("not a matrix dump (bad magic)")
        dim, kind_code = struct.unpack("<II", header[4:12])
        tri = np.frombuffer(fh.read(8 * dim * (dim + 1) // 2), dtype="<f8")
    mat = np.zeros((dim, dim))
    rows, cols = np.tril_indices(dim)
    mat[rows, cols] = tri
    mat[cols, rows] = tri
    return SymmetricMatrix(mat, None), kind_code
