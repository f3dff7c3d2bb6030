"""Matrix-valued functions on discretized tori tensored with a Clifford factor.

An AlgElement stores x = sum_S x_S (x) e_S with x_S an m x m matrix field
sampled on a uniform torus grid; the matrix factor is trivially graded, so
all Z2-degrees come from the Clifford subsets.  Data layout is
(2^k, *grid.sizes, m, m) with the Clifford component axis first.

Derivations are Fourier multipliers: i*n per mode on momentum axes
(coordinates in [0, 2pi)) and 2*pi*i*n on unit-period time axes; both are
exact on trigonometric polynomials below the Nyquist mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import clifford
from .clifford import CliffordSignature, Multivector, mu, representation, sign_table, subset_size

MOMENTUM = "momentum"
TIME = "time"


@dataclass(frozen=True)
class TorusGrid:
    """Uniform sampling of [0,2pi)^(momentum axes) x [0,1)^(time axes)."""

    sizes: tuple[int, ...] = ()
    axis_roles: tuple[str, ...] | None = None

    def __post_init__(self):
        roles = self.axis_roles
        if roles is None:
            roles = (MOMENTUM,) * len(self.sizes)
            object.__setattr__(self, "axis_roles", roles)
        if len(roles) != len(self.sizes):
            raise ValueError("one axis role per axis required")
        for role in roles:
            if role not in (MOMENTUM, TIME):
                raise ValueError(f"unknown axis role {role!r}")
        for n in self.sizes:
            if n < 4 or n % 2:
                raise ValueError(f"grid sizes must be even and >= 4, got {n}")
        if len(self.sizes) > 3:
            raise ValueError("at most 3 axes supported")

    @property
    def d(self) -> int:
        return len(self.sizes)

    @property
    def npoints(self) -> int:
        return int(np.prod(self.sizes)) if self.sizes else 1

    def coordinates(self, axis: int) -> np.ndarray:
        n = self.sizes[axis]
        period = 2 * np.pi if self.axis_roles[axis] == MOMENTUM else 1.0
        return np.arange(n) * period / n

    def mode_multiplier(self, axis: int) -> np.ndarray:
        """Fourier multiplier of the derivation along `axis` (Nyquist zeroed)."""
        n = self.sizes[axis]
        modes = np.fft.fftfreq(n, d=1.0 / n)
        modes[n // 2] = 0.0
        factor = 1j if self.axis_roles[axis] == MOMENTUM else 2j * np.pi
        return factor * modes


@dataclass(frozen=True)
class Derivation:
    """Spectral derivation along one grid axis."""

    axis: int
    kind: str = "spectral"


@dataclass(frozen=True)
class RealStructureSpec:
    """Antilinear *-automorphism of order 2 on an AlgElement algebra.

    fiber: 'c' for entrywise conjugation, 'h' for Ad_{sigma_y (x) 1} after
    conjugation (quaternionic; requires even matrix size).
    fiber_block: matrix size of the algebra the quaternionic conjugation was
    defined on; elements of M_j(that algebra) are conjugated blockwise (the
    entrywise extension to matrix amplifications).  None means the element's
    own size.
    clifford_signs: per-generator sign, +1 fixed / -1 negated.
    """

    fiber: str = "c"
    momentum_flip: bool = False
    time_flip: bool = False
    clifford_signs: tuple[int, ...] = ()
    fiber_block: int | None = None

    def __post_init__(self):
        if self.fiber not in ("c", "h"):
            raise ValueError(f"unknown fiber map {self.fiber!r}")

    @classmethod
    def from_signature(cls, sig: CliffordSignature, fiber="c",
                       momentum_flip=False, time_flip=False) -> "RealStructureSpec":
        return cls(fiber, momentum_flip, time_flip, sig.signs)

    def extend(self, sign: int) -> "RealStructureSpec":
        """Same structure with one appended Clifford generator of given sign."""
        return RealStructureSpec(self.fiber, self.momentum_flip, self.time_flip,
                                 self.clifford_signs + (sign,), self.fiber_block)


class AlgElement:
    """Element of M_m(C(T^d)) (x) Cl_k sampled on a torus grid."""

    __slots__ = ("grid", "m", "k", "data")

    def __init__(self, grid: TorusGrid, m: int, k: int, data: np.ndarray | None = None):
        self.grid = grid
        self.m = m
        self.k = k
        shape = (1 << k, *grid.sizes, m, m)
        if data is None:
            self.data = np.zeros(shape, dtype=complex)
        else:
            data = np.asarray(data, dtype=complex)
            if data.shape != shape:
                raise ValueError(f"expected data shape {shape}, got {data.shape}")
            self.data = data

    # -- constructors -------------------------------------------------
    @classmethod
    def zeros(cls, grid, m, k):
        return cls(grid, m, k)

    @classmethod
    def unit(cls, grid, m, k=0):
        x = cls(grid, m, k)
        x.data[0] = np.eye(m)
        return x

    @classmethod
    def from_matrix_field(cls, grid, field_arr, k=0, component=0):
        """Wrap an (*sizes, m, m) array as the given Clifford component."""
        field_arr = np.asarray(field_arr, dtype=complex)
        m = field_arr.shape[-1]
        x = cls(grid, m, k)
        x.data[component] = field_arr
        return x

    @classmethod
    def from_multivector(cls, grid, m, mv: Multivector):
        x = cls(grid, m, mv.k)
        eye = np.eye(m)
        for mask in np.flatnonzero(mv.coeffs):
            x.data[mask] = mv.coeffs[mask] * eye
        return x

    def copy(self) -> "AlgElement":
        return AlgElement(self.grid, self.m, self.k, self.data.copy())

    # -- linear structure ----------------------------------------------
    def _check(self, other: "AlgElement"):
        if (self.grid, self.m, self.k) != (other.grid, other.m, other.k):
            raise ValueError("algebra element shape mismatch")

    def __add__(self, other):
        self._check(other)
        return AlgElement(self.grid, self.m, self.k, self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return AlgElement(self.grid, self.m, self.k, self.data - other.data)

    def __neg__(self):
        return AlgElement(self.grid, self.m, self.k, -self.data)

    def scale(self, c: complex) -> "AlgElement":
        return AlgElement(self.grid, self.m, self.k, c * self.data)

    def __mul__(self, other):
        if isinstance(other, AlgElement):
            return alg_mul(self, other)
        return self.scale(other)

    __rmul__ = scale

    def star(self) -> "AlgElement":
        return alg_star(self)

    # -- structure queries ----------------------------------------------
    def component_norms(self) -> np.ndarray:
        axes = tuple(range(1, self.data.ndim))
        return np.sqrt(np.sum(np.abs(self.data) ** 2, axis=axes))

    def degree(self) -> int | None:
        odd = even = False
        for mask in np.flatnonzero(self.component_norms() > 0):
            if subset_size(int(mask)) % 2:
                odd = True
            else:
                even = True
        if odd and even:
            return None
        return 1 if odd else 0

    def grading(self) -> "AlgElement":
        """Image under the Z2-grading automorphism (odd components negated)."""
        out = self.data.copy()
        for mask in range(out.shape[0]):
            if subset_size(mask) % 2:
                out[mask] = -out[mask]
        return AlgElement(self.grid, self.m, self.k, out)

    def homogeneous_part(self, parity: int) -> "AlgElement":
        out = np.zeros_like(self.data)
        for mask in range(out.shape[0]):
            if subset_size(mask) % 2 == parity:
                out[mask] = self.data[mask]
        return AlgElement(self.grid, self.m, self.k, out)

    def norm_inf(self) -> float:
        """Max over grid points of the operator 2-norm of the represented matrix."""
        rep = represent(self)
        sv = np.linalg.svd(rep, compute_uv=False)
        return float(np.max(sv)) if sv.size else 0.0

    # -- Clifford factor manipulation -----------------------------------
    def append_generator(self, on_new: bool = True, coeff: complex = 1.0) -> "AlgElement":
        """x -> x (x) rho_{k+1} (on_new=True) or x (x) 1 into the larger algebra."""
        out = AlgElement(self.grid, self.m, self.k + 1)
        dim = 1 << self.k
        if on_new:
            out.data[dim:] = coeff * self.data
        else:
            out.data[:dim] = coeff * self.data
        return out

    def __repr__(self):
        return (f"AlgElement(d={self.grid.d}, sizes={self.grid.sizes}, "
                f"m={self.m}, k={self.k})")


# ---------------------------------------------------------------------------
# core operations
# ---------------------------------------------------------------------------

def _mul_data(a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
    """Raw product of two component-first data blocks of the same trailing shape."""
    table = sign_table(k)
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    nontrivial_a = [s for s in range(a.shape[0]) if np.any(a[s])]
    nontrivial_b = [t for t in range(b.shape[0]) if np.any(b[t])]
    for s in nontrivial_a:
        for t in nontrivial_b:
            prod = np.matmul(a[s], b[t])
            if table[s, t] < 0:
                out[s ^ t] -= prod
            else:
                out[s ^ t] += prod
    return out


def alg_mul(x: AlgElement, y: AlgElement) -> AlgElement:
    x._check(y)
    return AlgElement(x.grid, x.m, x.k, _mul_data(x.data, y.data, x.k))


def alg_star(x: AlgElement) -> AlgElement:
    """Involutive antihomomorphism: conjugate-transpose the matrix fields and
    reverse the Clifford factors."""
    out = np.conj(np.swapaxes(x.data, -1, -2))
    for mask in range(out.shape[0]):
        if mu(subset_size(mask)) % 2:
            out[mask] = -out[mask]
    return AlgElement(x.grid, x.m, x.k, out)


def spectral_derivative_data(data: np.ndarray, grid: TorusGrid, axis: int,
                             axis_offset: int) -> np.ndarray:
    """Apply the spectral derivation along grid axis `axis` to a data block
    whose grid axes start at position `axis_offset`."""
    ax = axis_offset + axis
    mult = grid.mode_multiplier(axis)
    shape = [1] * data.ndim
    shape[ax] = mult.size
    f = np.fft.fft(data, axis=ax)
    return np.fft.ifft(f * mult.reshape(shape), axis=ax)


def apply_derivation(dv: Derivation, x: AlgElement) -> AlgElement:
    if not 0 <= dv.axis < x.grid.d:
        raise ValueError(f"axis {dv.axis} out of range for d={x.grid.d}")
    if dv.kind != "spectral":
        raise ValueError(f"unknown derivation kind {dv.kind!r}")
    return AlgElement(x.grid, x.m, x.k,
                      spectral_derivative_data(x.data, x.grid, dv.axis, axis_offset=1))


def trace(x: AlgElement) -> Multivector:
    """Grid average of the matrix trace, per Clifford component.

    Normalized so the unit of M_m(C(T^d)) has trace m on the scalar component.
    """
    tr = np.trace(x.data, axis1=-2, axis2=-1)
    axes = tuple(range(1, tr.ndim))
    return Multivector(x.k, np.mean(tr, axis=axes) if axes else tr)


def scalar_trace(x: AlgElement) -> complex:
    """Trace of the scalar (empty-subset) Clifford component."""
    return complex(trace(x).coeffs[0])


_SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)


def apply_real_structure(rs: RealStructureSpec, x: AlgElement) -> AlgElement:
    if len(rs.clifford_signs) != x.k:
        raise ValueError(f"real structure carries {len(rs.clifford_signs)} "
                         f"generator signs, element has {x.k}")
    out = np.conj(x.data)
    # axis flips: index negation n -> -n mod N (exact for even sizes)
    for axis in range(x.grid.d):
        role = x.grid.axis_roles[axis]
        if (role == MOMENTUM and rs.momentum_flip) or (role == TIME and rs.time_flip):
            out = np.flip(np.roll(out, -1, axis=1 + axis), axis=1 + axis)
    if rs.fiber == "h":
        block = rs.fiber_block or x.m
        if block % 2 or x.m % block:
            raise ValueError("quaternionic fiber needs an even block size "
                             "dividing the matrix size")
        u = np.kron(np.eye(x.m // block), np.kron(_SIGMA_Y, np.eye(block // 2)))
        out = np.einsum("ij,...jk,kl->...il", u, out, np.conj(u.T))
    for mask in range(out.shape[0]):
        flips = sum(1 for i in range(x.k) if mask >> i & 1 and rs.clifford_signs[i] < 0)
        if flips % 2:
            out[mask] = -out[mask]
    return AlgElement(x.grid, x.m, x.k, out)


def check_invariance(rs: RealStructureSpec, x: AlgElement, tol: float) -> tuple[bool, float]:
    residual = (apply_real_structure(rs, x) - x).norm_inf()
    return residual <= tol, residual


# ---------------------------------------------------------------------------
# faithful matrix representation and pointwise hermitian calculus
# ---------------------------------------------------------------------------

def represent(x: AlgElement) -> np.ndarray:
    """Pointwise matrix image of shape (*sizes, m*2^q, m*2^q), a *-homomorphism."""
    images, q = representation(x.k)
    dim = 1 << q
    out = np.zeros((*x.grid.sizes, x.m * dim, x.m * dim), dtype=complex)
    view = out.reshape(*x.grid.sizes, x.m, dim, x.m, dim)
    for mask in range(1 << x.k):
        block = x.data[mask]
        if not np.any(block):
            continue
        view += block[..., :, None, :, None] * images[mask][None, :, None, :]
    return out


def unrepresent(rep: np.ndarray, grid: TorusGrid, m: int, k: int) -> AlgElement:
    """Inverse of `represent` on its image, via blade orthogonality."""
    images, q = representation(k)
    dim = 1 << q
    view = rep.reshape(*grid.sizes, m, dim, m, dim)
    x = AlgElement(grid, m, k)
    for mask in range(1 << k):
        # coefficient block: tr(R_S^dag . block) / 2^q on the Clifford indices
        x.data[mask] = np.einsum("qp,...iqjp->...ij", np.conj(images[mask]), view) / dim
    return x


def hermitian_calculus(x: AlgElement, fn) -> AlgElement:
    """Apply a real scalar function to a self-adjoint element, pointwise.

    fn maps an eigenvalue array to an array of the same shape.
    """
    rep = represent(x)
    w, v = np.linalg.eigh(rep)
    fw = fn(w)
    out = np.einsum("...ij,...j,...kj->...ik", v, fw, np.conj(v))
    return unrepresent(out, x.grid, x.m, x.k)


def unitary_exp(a: AlgElement) -> AlgElement:
    """exp(i*a) for self-adjoint a."""
    rep = represent(a)
    w, v = np.linalg.eigh(rep)
    out = np.einsum("...ij,...j,...kj->...ik", v, np.exp(1j * w), np.conj(v))
    return unrepresent(out, a.grid, a.m, a.k)


# ---------------------------------------------------------------------------
# block helpers
# ---------------------------------------------------------------------------

def direct_sum(x: AlgElement, y: AlgElement) -> AlgElement:
    if (x.grid, x.k) != (y.grid, y.k):
        raise ValueError("direct sum needs matching grid and Clifford factor")
    out = AlgElement(x.grid, x.m + y.m, x.k)
    out.data[..., :x.m, :x.m] = x.data
    out.data[..., x.m:, x.m:] = y.data
    return out


def block_matrix(blocks: list[list[AlgElement | None]]) -> AlgElement:
    """Assemble a square block matrix from same-shaped AlgElements (None = 0)."""
    template = next(b for row in blocks for b in row if b is not None)
    n = len(blocks)
    m = template.m
    out = AlgElement(template.grid, n * m, template.k)
    for i, row in enumerate(blocks):
        if len(row) != n:
            raise ValueError("block matrix must be square")
        for j, b in enumerate(row):
            if b is None:
                continue
            template._check(b)
            out.data[..., i * m:(i + 1) * m, j * m:(j + 1) * m] = b.data
    return out


# ---------------------------------------------------------------------------
# psi_e: contraction of a distinguished Cl_2 factor against a base OSI
# ---------------------------------------------------------------------------

def _split_cl2(x: AlgElement) -> tuple[AlgElement, AlgElement, AlgElement, AlgElement]:
    """Decompose x in M_m(A) (x) Cl_{k-2} (x) Cl_2, the last two generators
    spanning the Cl_2 factor, as x0 (x) 1 + x1 (x) s_x + x2 (x) s_y + x3 (x) s_z."""
    if x.k < 2:
        raise ValueError("need at least two Clifford generators")
    kh = x.k - 2
    dim = 1 << kh
    parts = [AlgElement(x.grid, x.m, kh) for _ in range(4)]
    for mask in range(1 << x.k):
        block = x.data[mask]
        low = mask & (dim - 1)
        high = mask >> kh
        if high == 0:
            parts[0].data[low] += block
        elif high == 1:
            parts[1].data[low] += block
        elif high == 2:
            parts[2].data[low] += block
        else:  # rho_{k-1} rho_k = i * sigma_z
            parts[3].data[low] += 1j * block
    return tuple(parts)


def _join_cl2(parts, grid, m, kh) -> AlgElement:
    x = AlgElement(grid, m, kh + 2)
    dim = 1 << kh
    for low in range(dim):
        x.data[low] += parts[0].data[low]
        x.data[low | dim] += parts[1].data[low]
        x.data[low | (2 * dim)] += parts[2].data[low]
        x.data[low | (3 * dim)] += -1j * parts[3].data[low]
    return x


def psi_e(x: AlgElement, e: AlgElement, tol: float = 1e-10) -> AlgElement:
    """Graded isomorphism M_m(A)(x)Cl_{k-2}(x)Cl_2 -> M_2(M_m(A)(x)Cl_{k-2}).

    e must be an odd self-inverse of the host algebra M_m(A)(x)Cl_{k-2}.
    On the distinguished last-two-generator Cl_2 factor:
    x(x)1 -> diag(x, gamma(x) conjugated by e), 1(x)s_x -> offdiag(e; e),
    1(x)i*s_y -> offdiag(e; -e).
    """
    x0, x1, x2, x3 = _split_cl2(x)
    _validate_osi(e, tol)
    g = AlgElement.grading
    top = [x0 + x3, (x1 - 1j * x2) * e]
    bot = [e * (g(x1) + 1j * g(x2)), e * (g(x0) - g(x3)) * e]
    return block_matrix([top, bot])


def psi_e_inverse(y: AlgElement, e: AlgElement, tol: float = 1e-10) -> AlgElement:
    """Inverse of psi_e: M_2(M_m(A)(x)Cl_{k}) -> M_m(A)(x)Cl_{k}(x)Cl_2."""
    _validate_osi(e, tol)
    m = y.m // 2
    grid, k = y.grid, y.k
    blocks = []
    for i in range(2):
        for j in range(2):
            b = AlgElement(grid, m, k,
                           y.data[..., i * m:(i + 1) * m, j * m:(j + 1) * m].copy())
            blocks.append(b)
    y00, y01, y10, y11 = blocks
    g = AlgElement.grading
    x0 = (y00 + g(e * y11 * e)).scale(0.5)
    x3 = (y00 - g(e * y11 * e)).scale(0.5)
    x1 = (y01 * e + g(e * y10)).scale(0.5)
    x2 = (g(e * y10) - y01 * e).scale(-0.5j)
    return _join_cl2([x0, x1, x2, x3], grid, m, k)


def _validate_osi(e: AlgElement, tol: float):
    if e.degree() not in (1, None) or e.homogeneous_part(0).norm_inf() > tol:
        raise ValueError("base element must be odd")
    res = (e * e - AlgElement.unit(e.grid, e.m, e.k)).norm_inf()
    if res > tol:
        raise ValueError(f"base element not self-inverse (residual {res:.2e})")
