"""Full master-equation route on a truncated Hilbert space.

Basis order is qubit (x) Fock(a) (x) Fock(b), with qubit basis {|g>, |e>}
and sigma_z|e> = +|e>.  Density matrices are column-vectorized, so
vec(A rho B) = kron(B^T, A) vec(rho), and the generator is

    L = -i[(I (x) H) - (H^T (x) I)]
        + sum_k c_k [2 conj(B_k) (x) B_k - I (x) B_k^dag B_k
                     - (B_k^dag B_k)^T (x) I]

with channels (c, B):

    (gamma/2,     sigma_-)   qubit relaxation: population decay gamma
    (gamma_phi/4, sigma_z)   pure dephasing: coherence decay gamma_phi
    (kappa_a/2,   a)         driven-mode amplitude decay kappa_a/2
    (kappa_b/2,   b)         mechanical amplitude decay kappa_b/2

The dephasing prefactor is fixed by requiring the qubit coherence linewidth
kappa_q = 2*gamma_phi + gamma seen by the other two backends; with the
doubled dissipator convention above, a prefactor c on sigma_z decays the
coherence at 4c.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import RK45, solve_ivp

from .errors import (
    DegenerateSteadyStateError,
    DomainError,
    SolverError,
    StiffnessError,
)
from .model import SystemParams

log = logging.getLogger(__name__)

HERM_TOL = 1e-10
TRACE_TOL = 1e-10
EIG_FLOOR = -1e-8
TRACE_DRIFT_MAX = 1e-9
RESIDUAL_TOL = 1e-10
DENSE_FALLBACK_DIM2 = 10_000


@dataclass(frozen=True)
class HilbertSpec:
    """Truncation of the two bosonic modes; total dim = 2 * n_a * n_b."""

    n_a: int = 5
    n_b: int = 5
    dim2_cap: int = 250_000

    def __post_init__(self):
        if self.n_a < 2 or self.n_b < 2:
            raise DomainError(
                f"need at least two Fock levels per mode, got "
                f"n_a={self.n_a}, n_b={self.n_b}"
            )
        if self.dim * self.dim > self.dim2_cap:
            raise DomainError(
                f"superoperator dimension {self.dim}^2 = {self.dim**2} "
                f"exceeds the cap {self.dim2_cap}"
            )

    @property
    def dim(self) -> int:
        return 2 * self.n_a * self.n_b


@dataclass(frozen=True, eq=False)
class Operator:
    """Sparse operator on the composite space with a hermiticity tag."""

    matrix: sp.csr_matrix
    hermitian: bool

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T.tocsr(), self.hermitian)

    def __matmul__(self, other: "Operator") -> "Operator":
        return Operator((self.matrix @ other.matrix).tocsr(), False)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True, eq=False)
class OperatorSet:
    a: Operator
    b: Operator
    sigma_minus: Operator
    sigma_z: Operator
    identity: Operator
    spec: HilbertSpec


def _destroy(n: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n)), 1, format="csr")


@lru_cache(maxsize=None)
def build_operators(spec: HilbertSpec) -> OperatorSet:
    """Embedded single-subsystem operators, built once per truncation."""
    i2 = sp.identity(2, format="csr")
    ia = sp.identity(spec.n_a, format="csr")
    ib = sp.identity(spec.n_b, format="csr")
    sm2 = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))  # |g><e|
    sz2 = sp.csr_matrix(np.diag([-1.0, 1.0]))

    def emb(q, ta, tb):
        return sp.kron(sp.kron(q, ta), tb, format="csr")

    return OperatorSet(
        a=Operator(emb(i2, _destroy(spec.n_a), ib), False),
        b=Operator(emb(i2, ia, _destroy(spec.n_b)), False),
        sigma_minus=Operator(emb(sm2, ia, ib), False),
        sigma_z=Operator(emb(sz2, ia, ib), True),
        identity=Operator(emb(i2, ia, ib), True),
        spec=spec,
    )


def build_hamiltonian(sys: SystemParams, spec: HilbertSpec) -> Operator:
    """Driven rotating-frame Hamiltonian on the truncated space.

    H = (Dq/2) sz + Da a'a + Db b'b - lam (a b' + b a')
        + g (s+ b + s- b') + (eps a' + conj(eps) a)

    with Da = delta_p, Db = delta_p + delta_b_offset,
    Dq = delta_p + delta_q_offset.
    """
    ops = build_operators(spec)
    a, b, sm = ops.a.matrix, ops.b.matrix, ops.sigma_minus.matrix
    sz = ops.sigma_z.matrix
    adag, bdag, splus = a.conj().T, b.conj().T, sm.conj().T

    da = sys.delta_p
    db = sys.delta_p + sys.delta_b_offset
    dq = sys.delta_p + sys.delta_q_offset
    eps = sys.epsilon

    h = (
        0.5 * dq * sz
        + da * (adag @ a)
        + db * (bdag @ b)
        - sys.lam * (a @ bdag + b @ adag)
        + sys.g * (splus @ b + sm @ bdag)
        + eps * adag + np.conj(eps) * a
    ).tocsr()

    defect = abs(h - h.conj().T).max()
    scale = max(abs(h).max(), 1.0)
    if defect > 1e-12 * scale:
        raise SolverError(f"assembled Hamiltonian not hermitian: defect {defect:.3e}")
    return Operator(h, True)


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Sparse generator acting on column-vectorized density matrices."""

    matrix: sp.csr_matrix
    dim: int
    spec: HilbertSpec

    @property
    def dim2(self) -> int:
        return self.dim * self.dim

    def trace_vector(self) -> np.ndarray:
        """Row functional t with t . vec(rho) = trace(rho)."""
        t = np.zeros(self.dim2)
        t[np.arange(self.dim) * (self.dim + 1)] = 1.0
        return t

    def trace_defect(self) -> float:
        """Max abs of the trace functional applied to the generator columns."""
        return float(np.max(np.abs(self.trace_vector() @ self.matrix)))


def _lmul(op: sp.spmatrix, ident: sp.spmatrix) -> sp.csr_matrix:
    return sp.kron(ident, op, format="csr")


def _rmul(op: sp.spmatrix, ident: sp.spmatrix) -> sp.csr_matrix:
    return sp.kron(op.T, ident, format="csr")


def build_liouvillian(sys: SystemParams, spec: HilbertSpec) -> Liouvillian:
    """Assemble the vectorized generator for the given rate set."""
    ops = build_operators(spec)
    h = build_hamiltonian(sys, spec).matrix
    ident = ops.identity.matrix
    dim = spec.dim

    gen = -1j * (_lmul(h, ident) - _rmul(h, ident))
    channels = (
        (0.5 * sys.gamma, ops.sigma_minus.matrix),
        (0.25 * sys.gamma_phi, ops.sigma_z.matrix),  # coherence decay gamma_phi
        (0.5 * sys.kappa_a, ops.a.matrix),
        (0.5 * sys.kappa_b, ops.b.matrix),
    )
    for rate, op in channels:
        if rate == 0.0:
            continue
        bb = (op.conj().T @ op).tocsr()
        gen = gen + rate * (
            2.0 * sp.kron(op.conj(), op, format="csr")
            - _lmul(bb, ident)
            - _rmul(bb, ident)
        )

    liou = Liouvillian(gen.tocsr(), dim, spec)
    defect = liou.trace_defect()
    if defect > 1e-10:
        raise SolverError(f"generator does not preserve trace: defect {defect:.3e}")
    return liou


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density matrix: hermitian, unit trace, positive to tolerance."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > HERM_TOL:
            raise DomainError(f"not hermitian: max|rho - rho^dag| = {herm:.3e}")
        tr = m.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise DomainError(f"trace {tr!r} differs from 1 beyond {TRACE_TOL:g}")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < EIG_FLOOR:
            raise DomainError(f"negative eigenvalue {lo:.3e} below {EIG_FLOOR:g}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def vacuum_state(spec: HilbertSpec) -> DensityMatrix:
    """|g, 0, 0><g, 0, 0|."""
    m = np.zeros((spec.dim, spec.dim), dtype=complex)
    m[0, 0] = 1.0
    return DensityMatrix(m)


def _vec(m: np.ndarray) -> np.ndarray:
    return m.ravel(order="F")


def _unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return v.reshape(dim, dim, order="F")


def expectation(op, rho) -> complex:
    """trace(op . rho) for sparse/dense operators and DensityMatrix/ndarray."""
    if isinstance(op, Operator):
        op = op.matrix
    if isinstance(rho, DensityMatrix):
        rho = rho.matrix
    if sp.issparse(op):
        return complex(op.multiply(rho.T).sum())
    return complex(np.sum(np.asarray(op) * rho.T))


def closure_defect(rho, spec: HilbertSpec) -> float:
    """Relative violation |<b sigma_z> + <b>| / |<b>| of the one-phonon closure."""
    ops = build_operators(spec)
    b_ = expectation(ops.b, rho)
    bsz = expectation(ops.b @ ops.sigma_z, rho)
    if b_ == 0:
        raise DomainError("closure defect undefined: <b> = 0")
    return abs(bsz + b_) / abs(b_)


def _replace_trace_row(liou: Liouvillian) -> sp.csc_matrix:
    """Row 0 of the generator (a diagonal-element row, hence redundant by
    trace preservation) swapped for the trace functional."""
    coo = liou.matrix.tocoo()
    keep = coo.row != 0
    dim = liou.dim
    rows = np.concatenate([coo.row[keep], np.zeros(dim, dtype=coo.row.dtype)])
    cols = np.concatenate(
        [coo.col[keep], (np.arange(dim) * (dim + 1)).astype(coo.col.dtype)]
    )
    data = np.concatenate([coo.data[keep], np.ones(dim, dtype=coo.data.dtype)])
    return sp.coo_matrix((data, (rows, cols)), shape=coo.shape).tocsc()


def steady_state_dm(liou: Liouvillian) -> DensityMatrix:
    """Unique fixed point of the generator, by direct factorization.

    Solves the trace-replaced sparse system with LU, applies iterative
    refinement, and checks the residual ||L vec(rho)||_2 against
    1e-10 * max|L entries|.  Falls back to a dense solve for small systems
    if the sparse route disappoints; rank deficiency beyond the trace
    direction raises DegenerateSteadyStateError.
    """
    m = _replace_trace_row(liou)
    rhs_ = np.zeros(liou.dim2, dtype=complex)
    rhs_[0] = 1.0
    threshold = RESIDUAL_TOL * float(np.abs(liou.matrix.data).max())

    x = None
    try:
        lu = spla.splu(m)
        x = lu.solve(rhs_)
        for _ in range(2):
            r = rhs_ - m @ x
            if np.linalg.norm(r) <= 1e-14 * np.linalg.norm(x):
                break
            x = x + lu.solve(r)
    except RuntimeError as exc:  # singular factor
        if "singular" in str(exc).lower():
            raise DegenerateSteadyStateError(
                "generator is rank deficient beyond the trace direction"
            ) from exc
        x = None

    def residual(v) -> float:
        return float(np.linalg.norm(liou.matrix @ v))

    if x is None or not np.all(np.isfinite(x)) or residual(x) > threshold:
        if liou.dim2 < DENSE_FALLBACK_DIM2:
            md = liou.matrix.toarray()
            md[0, :] = liou.trace_vector()
            try:
                x = np.linalg.solve(md, rhs_)
            except np.linalg.LinAlgError as exc:
                raise DegenerateSteadyStateError(
                    "generator is rank deficient beyond the trace direction"
                ) from exc
        if x is None or residual(x) > threshold:
            raise SolverError(
                f"steady-state residual {residual(x) if x is not None else np.inf:.3e} "
                f"exceeds {threshold:.3e}"
            )

    s = _unvec(x, liou.dim)
    return DensityMatrix(0.5 * (s + s.conj().T))


def evolve(
    rho0: DensityMatrix,
    liou: Liouvillian,
    t_end: float,
    tol: float = 1e-9,
    info: dict | None = None,
) -> DensityMatrix:
    """Propagate a state to ``t_end`` with adaptive stepping.

    The state is re-hermitized after every accepted step; the hermiticity
    and trace drift are tracked (available through ``info``) and a trace
    drift beyond 1e-9 is an error.  Local error per step is controlled by
    ``tol`` (relative) with an absolute floor 1e-4*tol.
    """
    if not t_end > 0:
        raise DomainError(f"t_end must be > 0, got {t_end!r}")
    if not 0 < tol <= 1e-2:
        raise DomainError(f"tol must lie in (0, 1e-2], got {tol!r}")

    mat = liou.matrix
    solver = RK45(
        lambda t, y: mat @ y,
        0.0,
        _vec(rho0.matrix),
        t_end,
        rtol=tol,
        atol=tol * 1e-4,
    )
    herm_drift = 0.0
    trace_drift = 0.0
    n_steps = 0
    while solver.status == "running":
        solver.step()
        if solver.status == "failed":
            raise StiffnessError("adaptive step failed during evolution")
        n_steps += 1
        s = _unvec(solver.y, liou.dim)
        herm_drift = max(herm_drift, float(np.max(np.abs(s - s.conj().T))))
        trace_drift = max(trace_drift, abs(s.trace() - 1.0))
        s = 0.5 * (s + s.conj().T)
        solver.y = _vec(s)
        solver.f = mat @ solver.y  # refresh the FSAL cache after projection

    log.debug(
        "evolve: %d steps, herm drift %.3e, trace drift %.3e",
        n_steps, herm_drift, trace_drift,
    )
    if info is not None:
        info.update(
            n_steps=n_steps, herm_drift=herm_drift, trace_drift=trace_drift
        )
    if trace_drift > TRACE_DRIFT_MAX:
        raise SolverError(f"trace drift {trace_drift:.3e} exceeds {TRACE_DRIFT_MAX:g}")
    return DensityMatrix(_unvec(solver.y, liou.dim))


def trace_distance(r1, r2) -> float:
    """T(r1, r2) = (1/2) sum |eig(r1 - r2)|."""
    m1 = r1.matrix if isinstance(r1, DensityMatrix) else r1
    m2 = r2.matrix if isinstance(r2, DensityMatrix) else r2
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(m1 - m2))))


def rwa_error_probe(
    sys: SystemParams,
    spec: HilbertSpec,
    omega_sum: float,
    t_end: float = 2.0,
    tol: float = 1e-9,
    n_sample: int = 81,
) -> float:
    """Size of the dropped counter-rotating terms at carrier scale omega_sum.

    Evolves the vacuum under the plain generator and under the generator
    with the fast terms reinstated,

        H_cr(t) = e^{-i omega_sum t} X + e^{+i omega_sum t} X^dag,
        X = -lam a b + g sigma_- b,

    and returns the largest trace distance between the two states over the
    run.  The distance shrinks as omega_sum grows (first-order averaging).
    Step underflow at extreme omega_sum is reported as a warning, not an
    error, and the scan up to that point is used.
    """
    if not omega_sum > 0:
        raise DomainError(f"omega_sum must be > 0, got {omega_sum!r}")
    liou = build_liouvillian(sys, spec)
    ops = build_operators(spec)
    ident = ops.identity.matrix
    x = (-sys.lam * (ops.a.matrix @ ops.b.matrix)
         + sys.g * (ops.sigma_minus.matrix @ ops.b.matrix)).tocsr()
    s_lo = -1j * (_lmul(x, ident) - _rmul(x, ident))
    xd = x.conj().T.tocsr()
    s_hi = -1j * (_lmul(xd, ident) - _rmul(xd, ident))

    n2 = liou.dim2
    lmat = liou.matrix
    v0 = _vec(vacuum_state(spec).matrix)
    w0 = np.concatenate([v0, v0])

    def deriv(t, w):
        plain, full = w[:n2], w[n2:]
        ph = np.exp(-1j * omega_sum * t)
        out = np.empty_like(w)
        out[:n2] = lmat @ plain
        out[n2:] = lmat @ full + ph * (s_lo @ full) + np.conj(ph) * (s_hi @ full)
        return out

    sol = solve_ivp(
        deriv,
        (0.0, t_end),
        w0,
        method="RK45",
        t_eval=np.linspace(0.0, t_end, n_sample),
        rtol=tol,
        atol=tol * 1e-3,
    )
    if not sol.success:
        warnings.warn(
            f"probe integration stopped early ({sol.message}); "
            "consider a looser tol -- using the partial scan",
            stacklevel=2,
        )
    worst = 0.0
    for j in range(sol.y.shape[1]):
        r_plain = _unvec(sol.y[:n2, j], liou.dim)
        r_full = _unvec(sol.y[n2:, j], liou.dim)
        worst = max(worst, trace_distance(r_plain, r_full))
    return worst
