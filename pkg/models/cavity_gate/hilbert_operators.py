"""
Truncated atom ⊗ mode state space and the sparse Hamiltonians acting on it.

Basis ordering is row-major over the factor dimensions

    (3,) * N + (n_max + 1,) * N

so atom 1 is the slowest index and mode N the fastest. Atomic levels are
ordered a = 0, g = 1, e = 2 everywhere in the package.
"""

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from loguru import logger
from numpy.typing import NDArray

from .config_model import SystemConfig
from .exceptions import CapacityError, PreconditionError
from .spectral_couplings import mode_frequencies, reduced_couplings, ring_phase

StateVector = NDArray[np.complex128]
SparseOperator = sp.csr_matrix

LEVELS: Dict[str, int] = {'a': 0, 'g': 1, 'e': 2}
LEVEL_NAMES: Tuple[str, ...] = ('a', 'g', 'e')
ATOM_DIM = 3

DIMENSION_CAP = 10 ** 7

Label = Union[str, int]


# =============================================================================
# State space
# =============================================================================

@dataclass(frozen=True)
class SpaceDescriptor:
    """Shape and index convention of the truncated tensor-product space."""

    n_sites: int
    n_max: int

    @property
    def dims(self) -> Tuple[int, ...]:
        return (ATOM_DIM,) * self.n_sites + (self.n_max + 1,) * self.n_sites

    @property
    def total_dim(self) -> int:
        return ATOM_DIM ** self.n_sites * (self.n_max + 1) ** self.n_sites

    def basis_index(
        self, atoms: Sequence[Label], photons: Optional[Sequence[int]] = None
    ) -> int:
        """
        Flat index of |atoms⟩ ⊗ |photons⟩.

        Args:
            atoms: N atomic levels, as 'a'/'g'/'e' or 0/1/2
            photons: N mode occupations (default: vacuum)
        """
        if len(atoms) != self.n_sites:
            raise PreconditionError(f"expected {self.n_sites} atom labels (got {len(atoms)})")
        photons = tuple(photons) if photons is not None else (0,) * self.n_sites
        if len(photons) != self.n_sites:
            raise PreconditionError(f"expected {self.n_sites} occupations (got {len(photons)})")
        levels = [LEVELS[a] if isinstance(a, str) else int(a) for a in atoms]
        if any(n < 0 or n > self.n_max for n in photons):
            raise PreconditionError(f"occupation outside 0..{self.n_max} (got {photons})")
        return int(np.ravel_multi_index(tuple(levels) + photons, self.dims))

    def basis_labels(self, index: int) -> Tuple[Tuple[str, ...], Tuple[int, ...]]:
        """Inverse of basis_index: (atom levels, mode occupations)."""
        digits = np.unravel_index(index, self.dims)
        atoms = tuple(LEVEL_NAMES[int(d)] for d in digits[: self.n_sites])
        photons = tuple(int(d) for d in digits[self.n_sites:])
        return atoms, photons

    def basis_state(
        self, atoms: Sequence[Label], photons: Optional[Sequence[int]] = None
    ) -> StateVector:
        psi = np.zeros(self.total_dim, dtype=np.complex128)
        psi[self.basis_index(atoms, photons)] = 1.0
        return psi


def build_space(n_sites: int, n_max: int, cap: int = DIMENSION_CAP) -> SpaceDescriptor:
    """Descriptor for N atoms and N modes with per-mode cutoff n_max."""
    if n_sites < 2:
        raise PreconditionError(f"n_sites must be ≥ 2 (got {n_sites})")
    if n_max < 0:
        raise PreconditionError(f"n_max must be ≥ 0 (got {n_max})")
    space = SpaceDescriptor(n_sites=n_sites, n_max=n_max)
    if space.total_dim > cap:
        raise CapacityError(
            f"Hilbert space dimension {space.total_dim} exceeds cap {cap} "
            f"(N={n_sites}, n_max={n_max})"
        )
    return space


def qubit_states(n_sites: int) -> List[Tuple[str, ...]]:
    """Computational basis {a,g}^N, atom 1 slowest, a before g."""
    return list(itertools.product('ag', repeat=n_sites))


# =============================================================================
# Local operators and embedding
# =============================================================================

def transition(upper: str, lower: str) -> sp.csr_matrix:
    """|upper⟩⟨lower| on one atom."""
    op = sp.lil_matrix((ATOM_DIM, ATOM_DIM), dtype=np.complex128)
    op[LEVELS[upper], LEVELS[lower]] = 1.0
    return op.tocsr()


def annihilation(n_max: int) -> sp.csr_matrix:
    """Truncated bosonic lowering operator on n_max + 1 Fock states."""
    if n_max == 0:
        return sp.csr_matrix((1, 1), dtype=np.complex128)
    return sp.diags(np.sqrt(np.arange(1, n_max + 1)), 1,
                    shape=(n_max + 1, n_max + 1), dtype=np.complex128, format='csr')


def embed(space: SpaceDescriptor, factors: Dict[int, sp.spmatrix]) -> sp.csr_matrix:
    """
    Kronecker product with the given factors at their slots, identity elsewhere.

    Slots 0..N-1 are atoms, N..2N-1 are modes.
    """
    ops = [
        factors.get(slot, sp.identity(dim, dtype=np.complex128, format='csr'))
        for slot, dim in enumerate(space.dims)
    ]
    return reduce(lambda left, right: sp.kron(left, right, format='csr'), ops)


def atom_op(space: SpaceDescriptor, j: int, local: sp.spmatrix) -> sp.csr_matrix:
    return embed(space, {j - 1: local})


def mode_op(space: SpaceDescriptor, j: int, local: sp.spmatrix) -> sp.csr_matrix:
    return embed(space, {space.n_sites + j - 1: local})


# =============================================================================
# Time-dependent generator
# =============================================================================

@dataclass(frozen=True)
class DriveTerm:
    """One oscillating term: amplitude operator T with factor e^{i·frequency·t}."""

    frequency: float
    operator: sp.csr_matrix


@dataclass(frozen=True)
class HamiltonianGenerator:
    """
    H(t) = static + Σ_r (e^{iδ_r t} T_r + e^{-iδ_r t} T_r†).

    ``max_frequency`` bounds the fastest oscillation of the dynamics and drives
    the step-size check of the integrator. When left at zero it is estimated from
    the static part and the term frequencies.
    """

    static: sp.csr_matrix
    terms: Tuple[DriveTerm, ...] = ()
    max_frequency: float = 0.0
    _stacked: sp.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.max_frequency == 0.0:
            bound = spla.norm(self.static, np.inf) if self.static.nnz else 0.0
            bound += max((abs(t.frequency) for t in self.terms), default=0.0)
            object.__setattr__(self, 'max_frequency', float(bound))
        blocks = [self.static]
        for term in self.terms:
            blocks.append(term.operator)
            blocks.append(term.operator.conj().T.tocsr())
        object.__setattr__(self, '_stacked', sp.vstack(blocks, format='csr'))

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    def coefficients(self, t: float) -> NDArray[np.complex128]:
        coeffs = [1.0 + 0.0j]
        for term in self.terms:
            phase = np.exp(1j * term.frequency * t)
            coeffs.extend((phase, np.conj(phase)))
        return np.asarray(coeffs)

    def at(self, t: float) -> sp.csr_matrix:
        """Assembled H(t)."""
        h = self.static.copy()
        for term in self.terms:
            phase = np.exp(1j * term.frequency * t)
            h = h + phase * term.operator + np.conj(phase) * term.operator.conj().T
        return h.tocsr()

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        """H(t) @ psi for a vector or a (dim, batch) block, in one sparse product."""
        stacked = self._stacked @ psi
        parts = stacked.reshape((len(self.terms) * 2 + 1, self.dim) + psi.shape[1:])
        return np.tensordot(self.coefficients(t), parts, axes=1)


def hermitian_defect(op: sp.spmatrix) -> float:
    """max |H - H†| relative to max |H| (0 for the zero operator)."""
    scale = abs(op).max() if op.nnz else 0.0
    if scale == 0.0:
        return 0.0
    diff = (op - op.conj().T).tocsr()
    return float(abs(diff).max() / scale) if diff.nnz else 0.0


def _group_by_frequency(pieces: Sequence[Tuple[float, sp.csr_matrix]]) -> Tuple[DriveTerm, ...]:
    grouped: Dict[float, sp.csr_matrix] = {}
    for freq, op in pieces:
        grouped[freq] = grouped[freq] + op if freq in grouped else op
    return tuple(DriveTerm(frequency=f, operator=op.tocsr()) for f, op in grouped.items())


def _check_space(cfg: SystemConfig, space: SpaceDescriptor) -> None:
    if space.n_sites != cfg.n_sites:
        raise PreconditionError(
            f"space has {space.n_sites} sites but config has {cfg.n_sites}"
        )


def _drive_pieces(cfg: SystemConfig, space: SpaceDescriptor) -> List[Tuple[float, sp.csr_matrix]]:
    raise_eg = transition('e', 'g')
    pieces = []
    for m in cfg.drives:
        if cfg.rabi_1(m):
            pieces.append((cfg.delta_1(m), cfg.rabi_1(m) * atom_op(space, 1, raise_eg)))
    for n in cfg.targets:
        if cfg.rabi_n(n):
            pieces.append((cfg.delta_n(n), cfg.rabi_n(n) * atom_op(space, n, raise_eg)))
    return pieces


def hopping_operator(cfg: SystemConfig, space: SpaceDescriptor) -> sp.csr_matrix:
    """J_c Σ_j (a_j† a_{j+1} + a_{j+1}† a_j) with a_{N+1} = a_1."""
    n = cfg.n_sites
    a = annihilation(space.n_max)
    h = sp.csr_matrix((space.total_dim, space.total_dim), dtype=np.complex128)
    for j in range(1, n + 1):
        nxt = j % n + 1
        forward = embed(space, {n + j - 1: a.conj().T, n + nxt - 1: a})
        h = h + cfg.hop * (forward + forward.conj().T)
    return h.tocsr()


def hopping_matrix(n_sites: int, hop: float) -> np.ndarray:
    """Single-photon block of the ring hopping operator (cavity basis)."""
    h = np.zeros((n_sites, n_sites))
    for j in range(n_sites):
        nxt = (j + 1) % n_sites
        h[j, nxt] += hop
        h[nxt, j] += hop
    return h


def build_full_hamiltonian(cfg: SystemConfig, space: SpaceDescriptor) -> HamiltonianGenerator:
    """Ring hopping as the static part; cavity couplings and drives oscillate."""
    _check_space(cfg, space)
    a = annihilation(space.n_max)
    raise_eg = transition('e', 'g')
    pieces = []
    for j in range(1, cfg.n_sites + 1):
        if cfg.g(j):
            op = cfg.g(j) * embed(space, {j - 1: raise_eg, cfg.n_sites + j - 1: a})
            pieces.append((cfg.delta_c(j), op))
    pieces.extend(_drive_pieces(cfg, space))
    gen = HamiltonianGenerator(
        static=hopping_operator(cfg, space),
        terms=_group_by_frequency(pieces),
        max_frequency=cfg.max_frequency(),
    )
    logger.debug(
        f"full Hamiltonian: dim={space.total_dim}, {len(gen.terms)} frequency groups"
    )
    return gen


def fourier_mode_map(n_sites: int) -> np.ndarray:
    """F[j-1, k-1] = e^{-i 2π jk/N} / √N, so that a_j = Σ_k F[j, k] b_k."""
    if n_sites < 2:
        raise PreconditionError(f"n_sites must be ≥ 2 (got {n_sites})")
    idx = np.arange(1, n_sites + 1)
    return ring_phase(np.outer(idx, idx), n_sites) / math.sqrt(n_sites)


def build_mode_hamiltonian(cfg: SystemConfig, space: SpaceDescriptor) -> HamiltonianGenerator:
    """
    Mode-picture generator: no static part, cavity couplings through b_k.

    Term (g_j F[j, k]) b_k |e⟩⟨g|_j oscillates at Δ_j^(c) - ω_k; drives are the
    same as in the cavity picture. Mode slot k of the space holds b_k.
    """
    _check_space(cfg, space)
    n = cfg.n_sites
    fmap = fourier_mode_map(n)
    omega = mode_frequencies(n, cfg.hop).omega
    a = annihilation(space.n_max)
    raise_eg = transition('e', 'g')
    pieces = []
    for j in range(1, n + 1):
        if not cfg.g(j):
            continue
        for k in range(1, n + 1):
            op = (cfg.g(j) * fmap[j - 1, k - 1]) * embed(space, {j - 1: raise_eg, n + k - 1: a})
            pieces.append((cfg.delta_c(j) - float(omega[k - 1]), op))
    pieces.extend(_drive_pieces(cfg, space))
    zero = sp.csr_matrix((space.total_dim, space.total_dim), dtype=np.complex128)
    return HamiltonianGenerator(
        static=zero,
        terms=_group_by_frequency(pieces),
        max_frequency=cfg.max_frequency(),
    )


# =============================================================================
# Observables
# =============================================================================

@dataclass(frozen=True)
class Observables:
    excited: sp.csr_matrix
    photons: sp.csr_matrix

    @property
    def excitation_number(self) -> sp.csr_matrix:
        return (self.excited + self.photons).tocsr()


def build_observables(space: SpaceDescriptor) -> Observables:
    """Σ_j |e⟩⟨e|_j and Σ_j a_j† a_j on the full space."""
    dim = space.total_dim
    excited = sp.csr_matrix((dim, dim), dtype=np.complex128)
    photons = sp.csr_matrix((dim, dim), dtype=np.complex128)
    a = annihilation(space.n_max)
    number = (a.conj().T @ a).tocsr()
    for j in range(1, space.n_sites + 1):
        excited = excited + atom_op(space, j, transition('e', 'e'))
        photons = photons + mode_op(space, j, number)
    return Observables(excited=excited.tocsr(), photons=photons.tocsr())


# =============================================================================
# Reduced diagonal model on {a,g}^N
# =============================================================================

def effective_energies(cfg: SystemConfig) -> np.ndarray:
    """
    Diagonal of the reduced Hamiltonian over qubit_states(N).

    E(s) = Σ_j [ζ'_{1,j}·1(s_1=g) + ξ'_j·1(s_j=g) + Λ'_{1,j}·1(s_1=g ∧ s_j=g)]
    """
    coup = reduced_couplings(cfg)
    energies = []
    for state in qubit_states(cfg.n_sites):
        control = state[0] == 'g'
        terms = []
        for j in cfg.targets:
            target = state[j - 1] == 'g'
            if control:
                terms.append(coup.zeta_p(j))
            if target:
                terms.append(coup.xi_p(j))
            if control and target:
                terms.append(coup.lambda_p(j))
        energies.append(math.fsum(terms))
    return np.asarray(energies)


def build_effective_hamiltonian(cfg: SystemConfig) -> sp.csr_matrix:
    """Diagonal sparse operator of dimension 2^N."""
    return sp.diags(effective_energies(cfg).astype(np.complex128), 0, format='csr')


def effective_generator(cfg: SystemConfig) -> HamiltonianGenerator:
    """The reduced model wrapped as a static generator for the integrator."""
    return HamiltonianGenerator(static=build_effective_hamiltonian(cfg))
