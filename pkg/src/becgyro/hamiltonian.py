"""Many-body Hamiltonian of rotating, interacting bosons in a weakly anisotropic trap.

In trap units the single-particle part reads

    h = -(1/2) nabla^2 + (1/2) r^2 + anisotropy * 2(x^2 - y^2) - omega * l_z

and particles interact through a 2D contact potential of dimensionless
strength g summed over pairs.  In the oscillator basis (n, m) this gives

* diagonal energies 2n + |m| + 1 - omega * m,
* a two-body tensor  integral(phi*_1 phi*_2 phi_3 phi_4 d2r)  obeying the
  angular selection rule m1 + m2 = m3 + m4, entering with the standard 1/2
  of a pair-summed interaction,
* a one-body anisotropy map <k| 2(x^2 - y^2) |l>, nonzero only for
  |m_k - m_l| = 2, multiplied by `anisotropy` at assembly time.

Radial integrals reduce to polynomials against a Gaussian weight and are
evaluated exactly (to roundoff) with Gauss-Laguerre quadrature:
a product of four radial functions carries exp(-2 r^2), handled on nodes
of exp(-u) after u = 2 r^2, while one-body products carry exp(-r^2) and
use u = r^2.  Everything is real, so all matrices are real symmetric.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import eval_genlaguerre

from .basis import FockState, ManyBodyBasis, Orbital, TruncationSpec

__all__ = [
    "ModelParams",
    "InteractionTensor",
    "AnisotropyMatrix",
    "SparseHamiltonian",
    "HamiltonianModel",
    "single_particle_energy",
    "interaction_element",
    "anisotropy_element",
    "lll_interaction_element",
    "assemble",
    "apply",
    "save_interaction_tensor",
    "load_interaction_tensor",
    "TENSOR_CACHE_VERSION",
]

QUADRATURE_ORDER = 80
TENSOR_CACHE_VERSION = 1


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of one model instance.

    g           dimensionless contact-interaction strength
    anisotropy  relative trap deformation (the quadrupolar stirring term)
    spec        basis truncation this model is meant to live in
    """

    g: float
    anisotropy: float
    spec: TruncationSpec

    def __post_init__(self):
        if self.g < 0:
            raise ValueError("attractive interactions are out of scope, need g >= 0")
        if not 0 <= self.anisotropy < 1:
            raise ValueError("trap deformation must satisfy 0 <= anisotropy < 1")

    @property
    def coupling_per_particle(self) -> float:
        """The combination g*N/6 used as the primary interaction knob."""
        return self.g * self.spec.n_particles / 6.0


def single_particle_energy(orbital: Orbital, omega: float) -> float:
    """Rotating-frame oscillator energy 2n + |m| + 1 - omega*m."""
    return 2 * orbital.n + abs(orbital.m) + 1 - omega * orbital.m


def _radial_norm(orbital: Orbital) -> float:
    n, am = orbital.n, abs(orbital.m)
    return math.sqrt(math.factorial(n) / (math.pi * math.factorial(n + am)))


def interaction_element(
    k1: Orbital, k2: Orbital, k3: Orbital, k4: Orbital, order: int = QUADRATURE_ORDER
) -> float:
    """Contact two-body element  integral(phi*_k1 phi*_k2 phi_k3 phi_k4 d2r).

    Zero unless m1 + m2 = m3 + m4.  The radial integrand is a polynomial
    times exp(-2 r^2); with u = 2 r^2 it becomes a polynomial against
    exp(-u), so Gauss-Laguerre with enough nodes is exact.
    """
    if k1.m + k2.m != k3.m + k4.m:
        return 0.0
    nodes, weights = np.polynomial.laguerre.laggauss(order)
    half = nodes / 2.0
    prod = np.ones_like(nodes)
    for orb in (k1, k2, k3, k4):
        am = abs(orb.m)
        prod = prod * (
            _radial_norm(orb)
            * half ** (am / 2.0)
            * eval_genlaguerre(orb.n, am, half)
        )
    return float(2.0 * math.pi * 0.25 * np.dot(weights, prod))


def lll_interaction_element(m1: int, m2: int, m3: int, m4: int) -> float:
    """Closed form of the contact element when all four orbitals have n=0, m>=0.

    Equals (1/2pi) * (m1+m2)! / (2^(m1+m2) * sqrt(m1! m2! m3! m4!)) under the
    selection rule, and is used as a cross-check on the quadrature path.
    """
    if min(m1, m2, m3, m4) < 0:
        raise ValueError("closed form only covers m >= 0 lowest-Landau orbitals")
    if m1 + m2 != m3 + m4:
        return 0.0
    total = m1 + m2
    denom = math.sqrt(
        math.factorial(m1) * math.factorial(m2) * math.factorial(m3) * math.factorial(m4)
    )
    return math.factorial(total) / (2.0 * math.pi * 2.0**total * denom)


def anisotropy_element(k: Orbital, l: Orbital, order: int = QUADRATURE_ORDER) -> float:
    """One-body element <k| 2(x^2 - y^2) |l>, nonzero only for |m_k - m_l| = 2.

    With w = x + i y one has 2(x^2 - y^2) = w^2 + conj(w)^2; w^2 raises m
    by two, its conjugate lowers it, and both share the same radial
    integral 2 pi * integral(f_k f_l r^3 dr).
    """
    if abs(k.m - l.m) != 2:
        return 0.0
    nodes, weights = np.polynomial.laguerre.laggauss(order)
    amk, aml = abs(k.m), abs(l.m)
    prod = (
        _radial_norm(k)
        * _radial_norm(l)
        * nodes ** ((amk + aml) / 2.0)
        * eval_genlaguerre(k.n, amk, nodes)
        * eval_genlaguerre(l.n, aml, nodes)
    )
    return float(math.pi * np.dot(weights, nodes * prod))


class InteractionTensor:
    """All contact elements over one orbital set, stored once per symmetry class.

    The element is invariant under k1<->k2, k3<->k4 and bra<->ket, so the
    dictionary key is the canonical quadruple (sorted pair, sorted pair,
    pairs ordered between themselves).
    """

    def __init__(self, orbitals, order: int = QUADRATURE_ORDER):
        self.orbitals = tuple(orbitals)
        self.order = int(order)
        self._elements = {}
        self._build()

    def _build(self):
        orbs = self.orbitals
        nodes, weights = np.polynomial.laguerre.laggauss(self.order)
        half = nodes / 2.0
        profiles = np.empty((len(orbs), self.order))
        for k, orb in enumerate(orbs):
            am = abs(orb.m)
            profiles[k] = (
                _radial_norm(orb) * half ** (am / 2.0) * eval_genlaguerre(orb.n, am, half)
            )
        pairs_by_m = {}
        for a in range(len(orbs)):
            for b in range(a, len(orbs)):
                pairs_by_m.setdefault(orbs[a].m + orbs[b].m, []).append((a, b))
        for pairs in pairs_by_m.values():
            mat = np.array([profiles[a] * profiles[b] for a, b in pairs])
            gram = 0.5 * math.pi * (mat * weights) @ mat.T
            for i, bra in enumerate(pairs):
                for j in range(i, len(pairs)):
                    self._elements[(bra, pairs[j])] = float(gram[i, j])

    @staticmethod
    def _canonical(i1: int, i2: int, i3: int, i4: int):
        bra = (i1, i2) if i1 <= i2 else (i2, i1)
        ket = (i3, i4) if i3 <= i4 else (i4, i3)
        return (bra, ket) if bra <= ket else (ket, bra)

    def element(self, i1: int, i2: int, i3: int, i4: int) -> float:
        """Element by orbital positions in this tensor's orbital tuple."""
        return self._elements.get(self._canonical(i1, i2, i3, i4), 0.0)

    def pairs_with_m(self, m_total: int):
        """Sorted index pairs (a <= b) whose angular momenta sum to m_total."""
        out = []
        for a, orb_a in enumerate(self.orbitals):
            for b in range(a, len(self.orbitals)):
                if orb_a.m + self.orbitals[b].m == m_total:
                    out.append((a, b))
        return out

    def __len__(self):
        return len(self._elements)


@dataclass(frozen=True)
class AnisotropyMatrix:
    """Dense one-body matrix of 2(x^2 - y^2) over an orbital set."""

    orbitals: tuple
    matrix: np.ndarray = field(repr=False)

    @staticmethod
    def build(orbitals, order: int = QUADRATURE_ORDER) -> "AnisotropyMatrix":
        orbs = tuple(orbitals)
        mat = np.zeros((len(orbs), len(orbs)))
        for i, k in enumerate(orbs):
            for j, l in enumerate(orbs):
                if j >= i and abs(k.m - l.m) == 2:
                    mat[i, j] = anisotropy_element(k, l, order=order)
                    mat[j, i] = mat[i, j]
        return AnisotropyMatrix(orbitals=orbs, matrix=mat)


@dataclass(frozen=True)
class SparseHamiltonian:
    """Assembled rotating-frame Hamiltonian at a fixed rotation frequency."""

    matrix: sp.csr_matrix = field(repr=False)
    omega: float
    anisotropy_scale: float
    basis: ManyBodyBasis = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return apply(self, vector)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def apply(hamiltonian: SparseHamiltonian, vector: np.ndarray) -> np.ndarray:
    """Matrix-vector product H @ v with an explicit dimension check."""
    vec = np.asarray(vector)
    if vec.shape[0] != hamiltonian.dimension:
        raise ValueError(
            f"vector length {vec.shape[0]} does not match dimension {hamiltonian.dimension}"
        )
    return hamiltonian.matrix @ vec


class HamiltonianModel:
    """Precomputed operator pieces for one (params, basis) pair.

    Holds the omega-independent parts: single-particle energies, total-L
    diagonal, the bare two-body operator (g factored out) and the bare
    anisotropy operator (deformation factored out).  `assemble` then
    produces a SparseHamiltonian at any rotation frequency in O(nnz).
    """

    def __init__(self, params: ModelParams, basis: ManyBodyBasis,
                 order: int = QUADRATURE_ORDER, cache_dir=None):
        if params.spec != basis.spec:
            raise ValueError("model parameters and basis use different truncations")
        self.params = params
        self.basis = basis
        self.order = int(order)
        self.tensor = _tensor_for(basis.orbitals, order, cache_dir)
        self.anisotropy_map = AnisotropyMatrix.build(basis.orbitals, order=order)
        self.e0 = self._single_particle_diagonal()
        self.l_values = basis.state_l_values().astype(float)
        self.v_op = _assemble_two_body(basis, self.tensor)
        self.q_op = _assemble_one_body(basis, self.anisotropy_map.matrix)
        self._iso_eigenbasis = None

    def _single_particle_diagonal(self) -> np.ndarray:
        orb_e = np.array([orb.energy for orb in self.basis.orbitals])
        return self.basis.occupations @ orb_e

    def replace_params(self, g=None, anisotropy=None) -> "HamiltonianModel":
        """Cheap copy with new couplings; reuses every precomputed operator."""
        new = object.__new__(HamiltonianModel)
        new.__dict__.update(self.__dict__)
        new.params = ModelParams(
            g=self.params.g if g is None else g,
            anisotropy=self.params.anisotropy if anisotropy is None else anisotropy,
            spec=self.params.spec,
        )
        new._iso_eigenbasis = None if g is not None else self._iso_eigenbasis
        return new

    def assemble(self, omega: float, anisotropy_scale: float = 1.0) -> SparseHamiltonian:
        if not 0.0 <= anisotropy_scale <= 1.0:
            raise ValueError("anisotropy_scale must lie in [0, 1]")
        diag = self.e0 - omega * self.l_values
        matrix = (
            sp.diags(diag)
            + self.params.g * self.v_op
            + (anisotropy_scale * self.params.anisotropy) * self.q_op
        ).tocsr()
        return SparseHamiltonian(
            matrix=matrix, omega=float(omega),
            anisotropy_scale=float(anisotropy_scale), basis=self.basis,
        )

    def isotropic_eigenbasis(self):
        """Block eigenbasis of the isotropic model, built on first use."""
        if self._iso_eigenbasis is None:
            from .dynamics import IsotropicEigenbasis

            self._iso_eigenbasis = IsotropicEigenbasis.build(self)
        return self._iso_eigenbasis


def assemble(model, basis: ManyBodyBasis, omega: float,
             anisotropy_scale: float = 1.0) -> SparseHamiltonian:
    """Assemble H(omega) for `model`, which may be ModelParams or HamiltonianModel.

    Passing bare ModelParams rebuilds the operator tables from scratch;
    reuse a HamiltonianModel when assembling at many frequencies.
    """
    if isinstance(model, HamiltonianModel):
        if model.basis is not basis and model.basis.spec != basis.spec:
            raise ValueError("model was built over a different basis")
        return model.assemble(omega, anisotropy_scale)
    return HamiltonianModel(model, basis).assemble(omega, anisotropy_scale)


def _assemble_two_body(basis: ManyBodyBasis, tensor: InteractionTensor) -> sp.csr_matrix:
    """Bare pair-interaction operator: (1/2) sum I(k1 k2 k3 k4) a+ a+ a a.

    Only the upper triangle (target <= source) is generated and then
    mirrored, which makes the stored matrix symmetric to the last bit.
    """
    n_orb = basis.n_orbitals
    budget = basis.spec.landau_budget
    costs = np.array([orb.landau_quanta for orb in basis.orbitals])
    ms = [orb.m for orb in basis.orbitals]
    pairs_by_m = {}
    rows, cols, vals = [], [], []

    for s_idx in range(basis.dimension):
        occ = basis.occupations[s_idx]
        occupied = np.nonzero(occ)[0]
        for ai in range(len(occupied)):
            i = occupied[ai]
            for aj in range(ai, len(occupied)):
                j = occupied[aj]
                if i == j and occ[i] < 2:
                    continue
                mult_ann = 1.0 if i == j else 2.0
                if i == j:
                    f_ann = math.sqrt(occ[i] * (occ[i] - 1))
                else:
                    f_ann = math.sqrt(occ[i] * occ[j])
                mid = occ.copy()
                mid[i] -= 1
                mid[j] -= 1
                mid_cost = int(costs @ mid)
                m_total = ms[i] + ms[j]
                if m_total not in pairs_by_m:
                    pairs_by_m[m_total] = tensor.pairs_with_m(m_total)
                for a, b in pairs_by_m[m_total]:
                    if mid_cost + costs[a] + costs[b] > budget:
                        continue
                    mult_cre = 1.0 if a == b else 2.0
                    if a == b:
                        f_cre = math.sqrt((mid[a] + 1) * (mid[a] + 2))
                    else:
                        f_cre = math.sqrt((mid[a] + 1) * (mid[b] + 1))
                    tgt = mid.copy()
                    tgt[a] += 1
                    tgt[b] += 1
                    t_idx = basis.index.get(tuple(tgt))
                    if t_idx is None or t_idx > s_idx:
                        continue
                    value = (
                        0.5 * mult_ann * mult_cre * f_ann * f_cre
                        * tensor.element(a, b, i, j)
                    )
                    if value != 0.0:
                        rows.append(t_idx)
                        cols.append(s_idx)
                        vals.append(value)

    upper = sp.coo_matrix(
        (vals, (rows, cols)), shape=(basis.dimension, basis.dimension)
    ).tocsr()
    strict = sp.triu(upper, k=1)
    return (upper + strict.T).tocsr()


def _assemble_one_body(basis: ManyBodyBasis, matrix: np.ndarray) -> sp.csr_matrix:
    """Bare one-body operator sum_kl M[k,l] a+_k a_l over the basis."""
    rows, cols, vals = [], [], []
    n_orb = basis.n_orbitals
    for s_idx in range(basis.dimension):
        occ = basis.occupations[s_idx]
        for l in np.nonzero(occ)[0]:
            for k in range(n_orb):
                element = matrix[k, l]
                if element == 0.0:
                    continue
                if k == l:
                    rows.append(s_idx)
                    cols.append(s_idx)
                    vals.append(element * occ[l])
                    continue
                tgt = occ.copy()
                tgt[l] -= 1
                tgt[k] += 1
                t_idx = basis.index.get(tuple(tgt))
                if t_idx is None or t_idx > s_idx:
                    continue
                factor = math.sqrt(occ[l] * (occ[k] + 1))
                rows.append(t_idx)
                cols.append(s_idx)
                vals.append(element * factor)
    upper = sp.coo_matrix(
        (vals, (rows, cols)), shape=(basis.dimension, basis.dimension)
    ).tocsr()
    strict = sp.triu(upper, k=1)
    return (upper + strict.T).tocsr()


# --- interaction-tensor binary cache -------------------------------------

def _orbital_set_signature(orbitals) -> str:
    payload = json.dumps([[orb.n, orb.m] for orb in orbitals])
    return hashlib.sha256(payload.encode()).hexdigest()


def save_interaction_tensor(tensor: InteractionTensor, directory) -> str:
    """Write the tensor to cache/<version>/<hash>.bin; returns the path."""
    subdir = os.path.join(directory, f"v{TENSOR_CACHE_VERSION}")
    os.makedirs(subdir, exist_ok=True)
    signature = _orbital_set_signature(tensor.orbitals)
    key = hashlib.sha256(
        f"tensor:{signature}:{tensor.order}:{TENSOR_CACHE_VERSION}".encode()
    ).hexdigest()
    path = os.path.join(subdir, f"{key}.bin")
    quads = np.array(
        [[*bra, *ket] for (bra, ket) in tensor._elements.keys()], dtype=np.int64
    )
    values = np.array(list(tensor._elements.values()))
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format_version=np.int64(TENSOR_CACHE_VERSION),
            signature=np.frombuffer(signature.encode(), dtype=np.uint8),
            order=np.int64(tensor.order),
            quadruples=quads,
            values=values,
        )
    return path


def load_interaction_tensor(orbitals, order: int, directory):
    """Load a cached tensor; returns None on any mismatch or unreadable file."""
    subdir = os.path.join(directory, f"v{TENSOR_CACHE_VERSION}")
    signature = _orbital_set_signature(orbitals)
    key = hashlib.sha256(
        f"tensor:{signature}:{order}:{TENSOR_CACHE_VERSION}".encode()
    ).hexdigest()
    path = os.path.join(subdir, f"{key}.bin")
    if not os.path.exists(path):
        return None
    try:
        with np.load(path) as data:
            if int(data["format_version"]) != TENSOR_CACHE_VERSION:
                return None
            if bytes(data["signature"]).decode() != signature:
                return None
            if int(data["order"]) != order:
                return None
            quads = data["quadruples"]
            values = data["values"]
    except (OSError, ValueError, KeyError):
        return None
    tensor = object.__new__(InteractionTensor)
    tensor.orbitals = tuple(orbitals)
    tensor.order = int(order)
    tensor._elements = {
        ((int(q[0]), int(q[1])), (int(q[2]), int(q[3]))): float(v)
        for q, v in zip(quads, values)
    }
    return tensor


def _tensor_for(orbitals, order, cache_dir) -> InteractionTensor:
    if cache_dir is not None:
        cached = load_interaction_tensor(orbitals, order, cache_dir)
        if cached is not None:
            return cached
    tensor = InteractionTensor(orbitals, order=order)
    if cache_dir is not None:
        save_interaction_tensor(tensor, cache_dir)
    return tensor
