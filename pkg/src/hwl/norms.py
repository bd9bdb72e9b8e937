"""Exact finite-dimensional operator norms between weighted L2 spaces.

Matrices are assembled in the "absorbed" convention: an operator T acting
L2(w^{-1}) -> L2(v) is realized as M = D_{v^{1/2}} A T A D_{w^{1/2}} on
measure-orthonormal leaf coordinates, so that the plain spectral norm of the
matrix equals the weighted operator norm.  Coefficient-space operators
(square function, embedding) map leaf coordinates to one number per internal
interval with the weights absorbed into the rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import AlphaCoefficients, DyadicModel, LeafFunction, Weight, alpha_coefficients, haar_coefficients
from .errors import CapacityError, ConvergenceError, ModelMismatchError
from .operators import SignPattern, kernel_matrix

MAX_NORM_DEPTH = 10
MAX_EXHAUSTIVE_INTERNAL = 20
_SVD_CHUNK = 4096


# ---------------------------------------------------------------------------
# sign-search modes

@dataclass(frozen=True)
class Exhaustive:
    pass


@dataclass(frozen=True)
class Sampled:
    n: int
    seed: int


@dataclass(frozen=True)
class Greedy:
    restarts: int
    seed: int


SearchMode = Exhaustive | Sampled | Greedy


# ---------------------------------------------------------------------------
# operator specs and assembly

@dataclass(frozen=True)
class TSigmaOp:
    sigma: SignPattern


@dataclass(frozen=True)
class MultiplierOp:
    """General Haar multiplier f -> sum a_I (f, h_I) h_I (T_sigma has a_I = +-1)."""

    coeffs: np.ndarray


@dataclass(frozen=True)
class T0Op:
    """Positive-kernel operator; alpha defaults to the one derived from (v, w)."""

    alpha: AlphaCoefficients | None = None


@dataclass(frozen=True)
class SquareFunctionOp:
    pass


@dataclass(frozen=True)
class EmbeddingOp:
    """f -> (<f w^{1/2}>_I sqrt(alpha_I))_I with the discrete l2 pairing."""

    alpha: AlphaCoefficients


@dataclass
class OperatorMatrix:
    entries: np.ndarray
    description: str
    convention: str = "absorbed"  # weights folded in; spectral norm == operator norm
    domain_weight: Weight | None = None
    codomain_weight: Weight | None = None

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


def haar_leaf_matrix(model: DyadicModel) -> np.ndarray:
    """Ha[k, j] = h_k(leaf j) for internal k."""
    ha = np.zeros((model.n_internal, model.n_leaves))
    for k in range(model.n_internal):
        level = model.node_level[k]
        amp = 2.0 ** (level / 2.0)
        a, b = model.leaf_start[k], model.leaf_stop[k]
        mid = (a + b) // 2
        ha[k, a:mid] = amp
        ha[k, mid:b] = -amp
    return ha


def _check_depth(model: DyadicModel):
    if model.depth > MAX_NORM_DEPTH:
        raise CapacityError(f"norm assembly capped at depth {MAX_NORM_DEPTH}")


def assemble(op, v: Weight | None, w: Weight) -> OperatorMatrix:
    """Matrix whose spectral norm is the weighted operator norm of `op`.

    `v` is the codomain weight (L2(v)) and `w` the absorbed domain weight
    (operator acting from L2(w^{-1})); EmbeddingOp ignores `v`.
    """
    model = w.model
    _check_depth(model)
    if v is not None:
        model.check_same(v.model)
    meas = model.node_size[-1]  # 2^-N

    if isinstance(op, TSigmaOp):
        return assemble(MultiplierOp(op.sigma.signs), v, w)

    if isinstance(op, MultiplierOp):
        coeffs = np.asarray(op.coeffs, dtype=np.float64)
        if coeffs.shape != (model.n_internal,):
            raise ModelMismatchError("multiplier coefficients must cover internal nodes")
        ha = haar_leaf_matrix(model)
        core = ha.T @ (coeffs[:, None] * ha) * meas
        m = np.sqrt(v.values)[:, None] * core * np.sqrt(w.values)[None, :]
        return OperatorMatrix(m, "haar multiplier, absorbed L2(w^-1)->L2(v)",
                              domain_weight=w, codomain_weight=v)

    if isinstance(op, T0Op):
        alpha = op.alpha if op.alpha is not None else alpha_coefficients(v, w)
        model.check_same(alpha.model)
        core = kernel_matrix(alpha).entries * meas
        m = np.sqrt(v.values)[:, None] * core * np.sqrt(w.values)[None, :]
        return OperatorMatrix(m, "T0, absorbed L2(w^-1)->L2(v)",
                              domain_weight=w, codomain_weight=v)

    if isinstance(op, SquareFunctionOp):
        m = np.zeros((model.n_internal, model.n_leaves))
        root_n = 2.0 ** (model.depth / 2.0)
        sw = np.sqrt(w.values)
        for k in range(model.n_internal):
            level = model.node_level[k]
            a, b = model.leaf_start[k], model.leaf_stop[k]
            mid = (a + b) // 2
            amp = np.sqrt(v.avg[k]) * 2.0 ** (level / 2.0 + 1) / root_n
            m[k, a:mid] = amp * sw[a:mid]
            m[k, mid:b] = -amp * sw[mid:b]
        return OperatorMatrix(m, "square-function coefficient map, absorbed",
                              domain_weight=w, codomain_weight=v)

    if isinstance(op, EmbeddingOp):
        alpha = op.alpha
        model.check_same(alpha.model)
        m = np.zeros((model.n_internal, model.n_leaves))
        root_n = 2.0 ** (model.depth / 2.0)
        sw = np.sqrt(w.values)
        for k in range(model.n_internal):
            a, b = model.leaf_start[k], model.leaf_stop[k]
            amp = np.sqrt(alpha.values[k]) * 2.0 ** model.node_level[k] / root_n
            m[k, a:b] = amp * sw[a:b]
        return OperatorMatrix(m, "embedding coefficient map, discrete pairing",
                              domain_weight=w)

    raise TypeError(f"unknown operator spec: {op!r}")


# ---------------------------------------------------------------------------
# spectral norm by power iteration

def _power_iteration(gram: np.ndarray, x: np.ndarray, tol: float, max_iter: int):
    lam = 0.0
    for it in range(max_iter):
        y = gram @ x
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            return 0.0, x, True  # x in the kernel; caller may retry from another start
        x = y / ny
        lam_new = float(x @ (gram @ x))
        resid = float(np.linalg.norm(gram @ x - lam_new * x))
        if resid <= tol * max(lam_new, 1e-300) and abs(lam_new - lam) <= tol * max(lam_new, 1e-300):
            return lam_new, x, True
        lam = lam_new
    return lam, x, False


def spectral_norm(matrix, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Largest singular value via power iteration on the Gram operator M^T M.

    Deterministic: starts from the normalized all-ones vector, then reruns from
    a fixed perturbed start (covers starts orthogonal to the top singular
    space) and returns the larger estimate.
    """
    m = matrix.entries if isinstance(matrix, OperatorMatrix) else np.asarray(matrix, dtype=np.float64)
    if m.size == 0 or not np.all(np.isfinite(m)):
        raise ValueError("matrix must be nonempty with finite entries")
    n = m.shape[1]
    gram = m.T @ m
    scale = float(np.trace(gram))
    if scale == 0.0:
        return 0.0

    ones = np.ones(n) / np.sqrt(n)
    bump = 1.0 + 0.5 * np.sin(np.arange(1, n + 1, dtype=np.float64))
    bump /= np.linalg.norm(bump)

    best = 0.0
    converged = False
    for start in (ones, bump):
        lam, _, ok = _power_iteration(gram, start, tol, max_iter)
        best = max(best, lam)
        converged = converged or ok
    if not converged:
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} iterations",
            best_estimate=float(np.sqrt(max(best, 0.0))),
        )
    return float(np.sqrt(max(best, 0.0)))


# ---------------------------------------------------------------------------
# sign-pattern extremization

@dataclass
class SignSearchResult:
    lower_bound: float
    upper_bound: float | None
    best_sigma: SignPattern
    mode: str
    evaluations: int
    seed: int | None = None


def _pattern_chunk(start: int, stop: int, m: int) -> np.ndarray:
    p = np.arange(start, stop, dtype=np.int64)
    bits = (p[:, None] >> np.arange(m)[None, :]) & 1
    return (1 - 2 * bits).astype(np.float64)


def _batched_norms(signs: np.ndarray, u: np.ndarray, vmat: np.ndarray) -> np.ndarray:
    mats = np.einsum("pk,ik,kj->pij", signs, u, vmat)
    return np.linalg.svd(mats, compute_uv=False)[:, 0]


def sup_sign_norm(v: Weight, w: Weight, mode: SearchMode) -> SignSearchResult:
    """sup over sign patterns of the weighted Haar-multiplier norm
    || M_{v^{1/2}} T_sigma M_{w^{1/2}} ||.

    Exhaustive mode enumerates all 2^(2^N - 1) patterns (exact sup, requires
    2^N - 1 <= 20); sampled and greedy modes report reproducible lower bounds.
    """
    v.model.check_same(w.model)
    model = w.model
    _check_depth(model)
    m = model.n_internal
    ha = haar_leaf_matrix(model)
    meas = model.node_size[-1]
    u = np.sqrt(v.values)[:, None] * ha.T
    vmat = ha * np.sqrt(w.values)[None, :] * meas

    if isinstance(mode, Exhaustive):
        if m > MAX_EXHAUSTIVE_INTERNAL:
            raise CapacityError(
                f"exhaustive sign search needs 2^N-1 <= {MAX_EXHAUSTIVE_INTERNAL}, got {m}"
            )
        total = 1 << m
        best_val, best_idx = -1.0, 0
        for start in range(0, total, _SVD_CHUNK):
            stop = min(start + _SVD_CHUNK, total)
            vals = _batched_norms(_pattern_chunk(start, stop, m), u, vmat)
            i = int(np.argmax(vals))
            if vals[i] > best_val:
                best_val, best_idx = float(vals[i]), start + i
        sigma = SignPattern.from_bits(model, best_idx)
        return SignSearchResult(best_val, best_val, sigma, "exhaustive", total)

    if isinstance(mode, Sampled):
        rng = np.random.default_rng(mode.seed)
        best_val, best_sigma = -1.0, None
        done = 0
        while done < mode.n:
            b = min(_SVD_CHUNK, mode.n - done)
            signs = (1 - 2 * rng.integers(0, 2, size=(b, m))).astype(np.float64)
            vals = _batched_norms(signs, u, vmat)
            i = int(np.argmax(vals))
            if vals[i] > best_val:
                best_val, best_sigma = float(vals[i]), signs[i].copy()
            done += b
        return SignSearchResult(
            best_val, None, SignPattern(model, best_sigma), "sampled", mode.n, mode.seed
        )

    if isinstance(mode, Greedy):
        rng = np.random.default_rng(mode.seed)
        evals = 0

        def norm_of(signs):
            mat = np.einsum("k,ik,kj->ij", signs, u, vmat)
            return float(np.linalg.svd(mat, compute_uv=False)[0])

        best_val, best_sigma = -1.0, None
        for _ in range(mode.restarts):
            signs = (1 - 2 * rng.integers(0, 2, size=m)).astype(np.float64)
            cur = norm_of(signs)
            evals += 1
            improved = True
            while improved:
                improved = False
                for k in range(m):
                    signs[k] = -signs[k]
                    cand = norm_of(signs)
                    evals += 1
                    if cand > cur * (1 + 1e-12):
                        cur = cand
                        improved = True
                    else:
                        signs[k] = -signs[k]
            if cur > best_val:
                best_val, best_sigma = cur, signs.copy()
        return SignSearchResult(
            best_val, None, SignPattern(model, best_sigma), "greedy", evals, mode.seed
        )

    raise TypeError(f"unknown search mode: {mode!r}")


# ---------------------------------------------------------------------------
# Haar Gram matrices in L2(v) and the sign-averaging identity

def haar_gram(vavg: np.ndarray, model: DyadicModel, nodes: np.ndarray) -> np.ndarray:
    """W[a, b] = integral of h_a h_b v dx for the given internal nodes.

    For nested intervals the coarser Haar function is constant on the finer
    interval, so the entry reduces to (its value there) * (v, h_fine); disjoint
    intervals give zero.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    starts, stops = model.leaf_start[nodes], model.leaf_stop[nodes]
    levels = model.node_level[nodes]
    mids = (starts + stops) // 2
    dv = 0.5 * np.sqrt(model.node_size[nodes]) * (vavg[2 * nodes + 1] - vavg[2 * nodes + 2])

    anc = (
        (starts[:, None] <= starts[None, :])
        & (stops[None, :] <= stops[:, None])
        & (levels[:, None] < levels[None, :])
    )
    sign = np.where(stops[None, :] <= mids[:, None], 1.0, -1.0)
    amp = 2.0 ** (levels / 2.0)  # |I|^{-1/2}
    gram = np.where(anc, sign * amp[:, None] * dv[None, :], 0.0)
    gram = gram + gram.T
    np.fill_diagonal(gram, vavg[nodes])
    return gram


def _pm_quadratic_exhaustive_stats(g: np.ndarray):
    """(max value, argmax pattern index, exact mean) of sigma^T G sigma over all +-1 sigma."""
    m = g.shape[0]
    if m > MAX_EXHAUSTIVE_INTERNAL:
        raise CapacityError(f"exhaustive enumeration needs <= {MAX_EXHAUSTIVE_INTERNAL} signs, got {m}")
    total = 1 << m
    best_val, best_idx, acc = -np.inf, 0, 0.0
    for start in range(0, total, 1 << 16):
        stop = min(start + (1 << 16), total)
        signs = _pattern_chunk(start, stop, m)
        vals = np.einsum("pk,kl,pl->p", signs, g, signs)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_idx = float(vals[i]), start + i
        acc += float(vals.sum())
    return best_val, best_idx, acc / total


def sign_average_identity(g: LeafFunction, v: Weight) -> tuple[float, float]:
    """(lhs, rhs) of the random-sign averaging identity:

    lhs = exact average over all sign patterns of ||T_sigma g||^2_{L2(v)},
    rhs = sum over I of (g, h_I)^2 <v>_I.
    """
    g.model.check_same(v.model)
    model = g.model
    if model.n_internal > MAX_EXHAUSTIVE_INTERNAL:
        raise CapacityError("sign averaging is exhaustive; depth too large")
    c = haar_coefficients(g)
    nodes = np.arange(model.n_internal)
    gram = np.outer(c, c) * haar_gram(v.avg, model, nodes)
    _, _, mean = _pm_quadratic_exhaustive_stats(gram)
    rhs = float(np.sum(c**2 * v.avg[:model.n_internal]))
    return mean, rhs


def t0_norm(v: Weight, w: Weight) -> float:
    """Exact finite-depth norm of T0 : L2(w^{-1}) -> L2(v)."""
    return spectral_norm(assemble(T0Op(), v, w))


def embedding_norm(alpha: AlphaCoefficients, w: Weight) -> float:
    """Best constant square root in sum <f w^{1/2}>_I^2 alpha_I <= C ||f||_2^2."""
    return spectral_norm(assemble(EmbeddingOp(alpha), None, w))


def square_function_norm(v: Weight, w: Weight) -> float:
    """Exact norm of the square function S : L2(w^{-1}) -> L2(v)."""
    return spectral_norm(assemble(SquareFunctionOp(), v, w))


def square_function_testing_values(v: Weight, w: Weight) -> np.ndarray:
    """Per-J testing values of S on f = chi_J w, restricted to the subtree of J:

    (1/(|J| <w>_J)) * integral over J of S^2_{subtree}(chi_J w) v dx,

    evaluated through the square-function coefficient rows (independently of
    the conditions module).
    """
    v.model.check_same(w.model)
    model = w.model
    out = np.zeros(model.n_internal)
    for j in range(model.n_internal):
        a, b = model.leaf_start[j], model.leaf_stop[j]
        chi_w = np.zeros(model.n_leaves)
        chi_w[a:b] = w.values[a:b]
        f = LeafFunction(model, chi_w)
        c = haar_coefficients(f)
        nodes = model.descendants(j)
        # row weights: L_I(f)^2 <v>_I |I| with L_I the average-difference functional
        l_vals = c[nodes] * 2.0 / np.sqrt(model.node_size[nodes])
        val = float(np.sum(l_vals**2 * v.avg[nodes] * model.node_size[nodes]))
        out[j] = val / (model.node_size[j] * w.avg[j])
    return out
