"""Numeric verification of the Bellman-function certificates behind the proofs:
domain-constrained concavity, closed-form Hessians against finite differences,
midpoint-drop inequalities with supermartingale slack, and empirical best
constants.  Margins are floating-point evidence, not proofs; a negative worst
margin beyond tolerance is a build-stopping finding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, StencilError

MARGIN_TOL = 1e-9          # normalized margins below -MARGIN_TOL are failures
FD_AGREE_TOL = 1e-5        # closed-form vs finite-difference relative tolerance
_SHARD = 1 << 14
_MAX_FAILURES = 20


@dataclass(frozen=True)
class SamplerConfig:
    samples: int = 100_000
    seed: int = 0


@dataclass
class CertificateReport:
    certificate: str
    samples: int
    worst_margin: float
    best_constant_estimate: float
    failures: list = field(default_factory=list)
    seed: int | None = None
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.worst_margin >= -MARGIN_TOL


class _Margins:
    """Accumulates normalized margins per named check; keeps the worst few."""

    def __init__(self):
        self.worst = np.inf
        self.failures = []
        self.per_check = {}

    def add(self, check: str, margins: np.ndarray, points=None):
        margins = np.atleast_1d(np.asarray(margins, dtype=np.float64))
        m = float(margins.min()) if margins.size else np.inf
        self.per_check[check] = min(self.per_check.get(check, np.inf), m)
        if m < self.worst:
            self.worst = m
        bad = np.nonzero(margins < -MARGIN_TOL)[0]
        for i in bad[: max(0, _MAX_FAILURES - len(self.failures))]:
            entry = {"check": check, "margin": float(margins[i])}
            if points is not None:
                entry["point"] = [float(t) for t in np.atleast_2d(points)[i]]
            self.failures.append(entry)


def _norm_margin(lhs, rhs, extra_scale=None):
    """(lhs - rhs) / max(1, |lhs|, |rhs|, extra_scale), elementwise.

    extra_scale carries the magnitude of the quantities the difference was
    computed from (e.g. the function values behind a drop), so that pure
    rounding noise cannot masquerade as a violated inequality.
    """
    lhs = np.asarray(lhs, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    if extra_scale is not None:
        scale = np.maximum(scale, np.abs(extra_scale))
    return (lhs - rhs) / scale


def _unit_relative_directions(rng, n, k):
    """Random directions of unit length in per-coordinate relative scale."""
    r = rng.standard_normal((n, k))
    r /= np.maximum(np.linalg.norm(r, axis=1, keepdims=True), 1e-300)
    return r


def _loguniform(rng, lo, hi, size):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


def _shard_rngs(seed: int, total: int):
    n_shards = (total + _SHARD - 1) // _SHARD
    seqs = np.random.SeedSequence(seed).spawn(n_shards)
    sizes = [_SHARD] * (n_shards - 1) + [total - _SHARD * (n_shards - 1)]
    return [(np.random.default_rng(s), n) for s, n in zip(seqs, sizes)]


# ---------------------------------------------------------------------------
# finite differences

def fd_hessian(F, p, h_rel: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of a scalar function of k reals.

    On a DomainError from F the step is halved once; a second violation is a
    StencilError.
    """
    p = np.asarray(p, dtype=np.float64)
    k = p.size

    def attempt(h):
        hess = np.empty((k, k))
        f0 = F(p)
        for i in range(k):
            ei = np.zeros(k)
            ei[i] = h[i]
            hess[i, i] = (F(p + ei) - 2.0 * f0 + F(p - ei)) / h[i] ** 2
            for j in range(i + 1, k):
                ej = np.zeros(k)
                ej[j] = h[j]
                mixed = (
                    F(p + ei + ej) - F(p + ei - ej) - F(p - ei + ej) + F(p - ei - ej)
                ) / (4.0 * h[i] * h[j])
                hess[i, j] = hess[j, i] = mixed
        return hess

    h = h_rel * np.maximum(np.abs(p), 1e-8)
    try:
        return attempt(h)
    except DomainError:
        try:
            return attempt(h / 2.0)
        except DomainError as exc:
            raise StencilError(f"stencil leaves the domain near {p!r}") from exc


def _fd_form(F, points: np.ndarray, dirs: np.ndarray, h_rel: float = 1e-3) -> np.ndarray:
    """Directional second difference d^T H d at many points at once.

    F must accept an (n, k) array of points and return n values; dirs holds
    one direction per point.
    """
    h = h_rel  # directions already scaled relative to the points
    return (F(points + h * dirs) - 2.0 * F(points) + F(points - h * dirs)) / h**2


def midpoint_drop(F, a, a_minus, a_plus, domain=None, slack_coords=(), tol=1e-9) -> float:
    """F(a) - (F(a_minus) + F(a_plus)) / 2 with admissibility checks.

    Coordinates listed in slack_coords may exceed the children's midpoint
    (supermartingale slack); all others must match it.
    """
    a = np.asarray(a, dtype=np.float64)
    am = np.asarray(a_minus, dtype=np.float64)
    ap = np.asarray(a_plus, dtype=np.float64)
    if domain is not None:
        for q in (a, am, ap):
            if not domain(q):
                raise DomainError(f"point outside certificate domain: {q!r}")
    mid = 0.5 * (am + ap)
    scale = np.maximum(1.0, np.abs(a))
    slack = np.zeros(a.size, dtype=bool)
    slack[list(slack_coords)] = True
    if np.any(~slack & (np.abs(a - mid) > tol * scale)):
        raise DomainError("martingale coordinates must equal the children's midpoint")
    if np.any(slack & (a < mid - tol * scale)):
        raise DomainError("supermartingale coordinates must dominate the midpoint")
    return float(F(a) - 0.5 * (F(am) + F(ap)))


# ---------------------------------------------------------------------------
# the two-variable certificates: (xy)^a and (xy)^{1/2} - (xy)^a / 4

def _power_product_hessian_form(a, x, y, xi, eta):
    """Hessian form of (x y)^a on (xi, eta)."""
    return a * (x * y) ** a * (
        (a - 1) * (xi / x) ** 2 + 2 * a * xi * eta / (x * y) + (a - 1) * (eta / y) ** 2
    )


def product_bellman_small(alpha_exp):
    """B(x, y) = (xy)^alpha for alpha in (0, 1/2)."""
    def value(p):
        p = np.atleast_2d(p)
        return (p[:, 0] * p[:, 1]) ** alpha_exp
    return value


def product_bellman_large(alpha_exp):
    """B(x, y) = (xy)^{1/2} - (xy)^alpha / 4 for alpha in (1/2, 1]."""
    def value(p):
        p = np.atleast_2d(p)
        t = p[:, 0] * p[:, 1]
        return np.sqrt(t) - 0.25 * t**alpha_exp
    return value


def elementary_inequality_lhs(alpha_exp, lam, mu):
    """1 - ([(1-l)(1-m)]^a + [(1+l)(1+m)]^a) / 2."""
    return 1.0 - 0.5 * (
        ((1.0 - lam) * (1.0 - mu)) ** alpha_exp + ((1.0 + lam) * (1.0 + mu)) ** alpha_exp
    )


def cert_alpha_small(alpha_exp: float, config: SamplerConfig = SamplerConfig()) -> CertificateReport:
    """Certificate for B = (xy)^a, a in (0, 1/2): the elementary two-parameter
    inequality on a grid, the midpoint drop on random admissible triples, the
    Hessian sign with its closed-form bound, and the finite-difference cross
    check.  best_constant_estimate is the grid minimum of lhs/|lam mu|.
    """
    if not 0.0 < alpha_exp < 0.5:
        raise DomainError("alpha_exp must lie in (0, 1/2)")
    a = alpha_exp
    B = product_bellman_small(a)
    marg = _Margins()

    # grid for the elementary inequality, step 0.01
    grid = np.linspace(-1.0, 1.0, 201)
    lam, mu = np.meshgrid(grid, grid, indexing="ij")
    lam, mu = lam.ravel(), mu.ravel()
    lhs = elementary_inequality_lhs(a, lam, mu)
    marg.add("elementary_grid", _norm_margin(lhs, 0.0), np.stack([lam, mu], axis=1))
    nz = lam * mu != 0.0
    c_grid = float((lhs[nz] / np.abs(lam[nz] * mu[nz])).min())

    drop_ratio_min = np.inf
    hess_rel_err = 0.0
    for rng, n in _shard_rngs(config.seed, config.samples):
        x = _loguniform(rng, 1e-3, 1e3, n)
        y = _loguniform(rng, 1e-3, 1e3, n)
        lam_s = rng.uniform(-1.0, 1.0, n)
        mu_s = rng.uniform(-1.0, 1.0, n)
        xp, xm = x * (1 + lam_s), x * (1 - lam_s)
        yp, ym = y * (1 + mu_s), y * (1 - mu_s)
        pts = np.stack([x, y], axis=1)
        bval = B(pts)
        drop = bval - 0.5 * (B(np.stack([xp, yp], 1)) + B(np.stack([xm, ym], 1)))
        marg.add("drop", _norm_margin(drop, 0.0, extra_scale=bval), pts)
        denom = (x * y) ** a * np.abs((xp - xm) / x) * np.abs((yp - ym) / y)
        ok = denom > 1e-12
        if ok.any():
            drop_ratio_min = min(drop_ratio_min, float((drop[ok] / denom[ok]).min()))

        # Hessian: closed form vs finite differences, and the sign bound
        r = _unit_relative_directions(rng, n, 2)
        xi, eta = r[:, 0] * x, r[:, 1] * y
        cf = _power_product_hessian_form(a, x, y, xi, eta)
        fd = _fd_form(B, pts, np.stack([xi, eta], axis=1))
        floor = a * (x * y) ** a  # natural form scale on unit relative directions
        err = np.abs(fd - cf) / np.maximum(np.abs(cf), floor)
        hess_rel_err = max(hess_rel_err, float(err.max()))
        bound = -(1 - 2 * a) * a * np.abs(xi * eta) * x ** (a - 1) * y ** (a - 1)
        marg.add("hessian_bound", _norm_margin(bound, cf), pts)

    rep = CertificateReport(
        certificate=f"alpha_small[{a}]",
        samples=config.samples,
        worst_margin=marg.worst,
        best_constant_estimate=c_grid,
        failures=marg.failures,
        seed=config.seed,
        info={
            "per_check": marg.per_check,
            "drop_ratio_min": drop_ratio_min,
            "fd_hessian_max_rel_err": hess_rel_err,
        },
    )
    return rep


def cert_alpha_large(alpha_exp: float, config: SamplerConfig = SamplerConfig()) -> CertificateReport:
    """Certificate for B = (xy)^{1/2} - (xy)^a / 4, a in (1/2, 1], on xy <= 1:
    the value bounds 0 <= B <= (xy)^{1/2}, the closed-form Hessian bound
    H <= -(rho - r)(xy)^{1/2} |xi eta| / (4 xy) at interior points and along
    the half-segment scaling, midpoint drops on admissible quadruples, and the
    finite-difference cross check.
    """
    if not 0.5 < alpha_exp <= 1.0:
        raise DomainError("alpha_exp must lie in (1/2, 1]")
    a = alpha_exp
    B = product_bellman_large(a)
    marg = _Margins()

    def hess_form(x, y, xi, eta):
        return _power_product_hessian_form(0.5, x, y, xi, eta) - 0.25 * _power_product_hessian_form(
            a, x, y, xi, eta
        )

    drop_ratio_min = np.inf
    hess_rel_err = 0.0
    for rng, n in _shard_rngs(config.seed, config.samples):
        x = _loguniform(rng, 1e-3, 1e3, n)
        ycap = np.minimum(1e3, 1.0 / x)
        y = np.exp(rng.uniform(np.log(1e-3), np.log(ycap)))
        on_edge = rng.random(n) < 0.02
        y = np.where(on_edge, 1.0 / x, y)  # xy = 1 sampled inclusively
        t = x * y
        pts = np.stack([x, y], axis=1)

        bval = B(pts)
        marg.add("lower_bound", _norm_margin(bval, 0.0), pts)
        marg.add("upper_bound", _norm_margin(np.sqrt(t), bval), pts)

        # admissible quadruples inside xy <= 1 (shrink the perturbation until valid)
        lam_s = rng.uniform(-1.0, 1.0, n)
        mu_s = rng.uniform(-1.0, 1.0, n)
        for _ in range(40):
            bad = (x * (1 + np.abs(lam_s))) * (y * (1 + np.abs(mu_s))) > 1.0 + 1e-12
            bad &= t < 1.0 - 1e-12
            if not bad.any():
                break
            lam_s = np.where(bad, 0.5 * lam_s, lam_s)
            mu_s = np.where(bad, 0.5 * mu_s, mu_s)
        interior = t < 1.0 - 1e-9
        xp, xm = x * (1 + lam_s), x * (1 - lam_s)
        yp, ym = y * (1 + mu_s), y * (1 - mu_s)
        valid = interior & (xp * yp <= 1.0) & (xm * ym <= 1.0)
        if valid.any():
            bv = B(pts[valid])
            drop = bv - 0.5 * (
                B(np.stack([xp, yp], 1)[valid]) + B(np.stack([xm, ym], 1)[valid])
            )
            marg.add("drop", _norm_margin(drop, 0.0, extra_scale=bv), pts[valid])
            denom = (t[valid]) ** a * np.abs(2 * lam_s[valid]) * np.abs(2 * mu_s[valid])
            ok = denom > 1e-12
            if ok.any():
                drop_ratio_min = min(drop_ratio_min, float((drop[ok] / denom[ok]).min()))

        # Hessian pointwise bound and fd agreement at the sampled points
        r = _unit_relative_directions(rng, n, 2)
        xi, eta = r[:, 0] * x, r[:, 1] * y
        cf = hess_form(x, y, xi, eta)
        rho_r = a * (2 * a - 1) * t ** (a - 0.5)
        bound = -0.25 * rho_r * np.sqrt(t) * np.abs(xi * eta) / t
        marg.add("hessian_bound", _norm_margin(bound, cf), pts)
        fd = _fd_form(B, pts, np.stack([xi, eta], axis=1))
        floor = np.sqrt(t)  # natural form scale on unit relative directions
        err = np.abs(fd - cf) / np.maximum(np.abs(cf), floor)
        hess_rel_err = max(hess_rel_err, float(err.max()))

        # half-segment scaling: H at (x_t, y_t), |t| <= 1/2, against the
        # shifted closed-form bound (x_t >= x/2, x_t <= 3x/2)
        tt = rng.uniform(-0.5, 0.5, n)
        xi2 = lam_s * x  # |xi2| <= x, so x_t stays in [x/2, 3x/2]
        eta2 = mu_s * y
        xt, yt = x + tt * xi2, y + tt * eta2
        in_dom = xt * yt <= 1.0 + 1e-12
        cft = hess_form(xt[in_dom], yt[in_dom], xi2[in_dom], eta2[in_dom])
        c_req = 0.25 * a * (2 * a - 1) * (9.0 / 4.0) ** (a - 1.0)
        bound_t = -c_req * np.abs(xi2 * eta2)[in_dom] * (x[in_dom] * y[in_dom]) ** (a - 1.0)
        marg.add("hessian_halfsegment", _norm_margin(bound_t, cft), pts[in_dom])

    return CertificateReport(
        certificate=f"alpha_large[{a}]",
        samples=config.samples,
        worst_margin=marg.worst,
        best_constant_estimate=drop_ratio_min,
        failures=marg.failures,
        seed=config.seed,
        info={"per_check": marg.per_check, "fd_hessian_max_rel_err": hess_rel_err},
    )


# ---------------------------------------------------------------------------
# the embedding certificate: B(X, x, w, M) = C (X - x^2 / (w + M))

def required_embedding_constant(c_dom: float) -> float:
    """Smallest C with C x^2/(w+M)^2 >= x^2/w^2 on M <= c_dom w."""
    return (1.0 + c_dom) ** 2


def embedding_bellman(c_dom: float, c_fun: float | None = None):
    """Value function and metadata for the embedding certificate."""
    need = required_embedding_constant(c_dom)
    if c_fun is None:
        c_fun = need
    elif c_fun < need - 1e-12:
        raise ConfigError(f"c_fun={c_fun} too small for c_dom={c_dom}; minimum is {need}")

    def value(p):
        p = np.atleast_2d(p)
        X, x, w, M = p[:, 0], p[:, 1], p[:, 2], p[:, 3]
        return c_fun * (X - x**2 / (w + M))

    return value, c_fun


def in_embedding_domain(p, c_dom: float, tol: float = 1e-9) -> bool:
    X, x, w, M = np.asarray(p, dtype=np.float64)
    scale = max(1.0, abs(X), abs(w))
    return (
        min(X, x, w, M) >= -tol * scale
        and x**2 <= X * w + tol * scale**2
        and M <= c_dom * w + tol * scale
    )


def _embedding_hessian(c_fun, x, w, M):
    """Closed-form Hessian of C(X - x^2/s), s = w + M, over (X, x, w, M)."""
    s = w + M
    n = x.shape[0]
    h = np.zeros((n, 4, 4))
    h[:, 1, 1] = -2.0 * c_fun / s
    for i in (2, 3):
        h[:, 1, i] = h[:, i, 1] = 2.0 * c_fun * x / s**2
        for j in (2, 3):
            h[:, i, j] = -2.0 * c_fun * x**2 / s**3
    return h


def _sample_embedding_children(rng, n, c_dom, boundary_frac=0.05):
    X = _loguniform(rng, 1e-3, 1e3, n)
    w = _loguniform(rng, 1e-3, 1e3, n)
    u = rng.uniform(0.0, 1.0, n)
    u = np.where(rng.random(n) < boundary_frac, 1.0, u)  # x^2 = Xw boundary
    x = np.sqrt(X * w) * u
    mfrac = rng.uniform(0.0, 1.0, n)
    mfrac = np.where(rng.random(n) < boundary_frac, 1.0, mfrac)
    M = c_dom * w * mfrac
    return X, x, w, M


def cert_embedding(
    c_dom: float, config: SamplerConfig = SamplerConfig(), c_fun: float | None = None
) -> CertificateReport:
    """Certificate for B = C(X - x^2/(w+M)) on x^2 <= Xw, M <= c_dom w:
    0 <= B <= C X, dB/dM >= x^2/w^2, negative-semidefinite Hessian (closed form
    sampled densely, finite differences on a subset), and the midpoint-drop
    chain with supermartingale slack in M.
    """
    if c_dom < 1.0:
        raise ConfigError("c_dom must be >= 1")
    B, c_fun = embedding_bellman(c_dom, c_fun)
    marg = _Margins()

    drop_ratio_min = np.inf
    eig_max = -np.inf
    for rng, n in _shard_rngs(config.seed, config.samples):
        Xm, xm, wm, Mm = _sample_embedding_children(rng, n, c_dom)
        Xp, xp, wp, Mp = _sample_embedding_children(rng, n, c_dom)
        X, w = 0.5 * (Xm + Xp), 0.5 * (wm + wp)
        x = 0.5 * (xm + xp)
        mmid = 0.5 * (Mm + Mp)
        headroom = c_dom * w - mmid
        h = headroom * np.exp(np.log(1e-6) * rng.random(n))
        h = np.where(rng.random(n) < 0.05, 0.0, h)  # zero-slack subset
        M = mmid + h

        pts = np.stack([X, x, w, M], axis=1)
        child_m = np.stack([Xm, xm, wm, Mm], axis=1)
        child_p = np.stack([Xp, xp, wp, Mp], axis=1)

        bval = B(pts)
        marg.add("lower_bound", _norm_margin(bval, 0.0, extra_scale=c_fun * X), pts)
        marg.add("upper_bound", _norm_margin(c_fun * X, bval), pts)

        dBdM = c_fun * x**2 / (w + M) ** 2
        marg.add("dB_dM", _norm_margin(dBdM, x**2 / w**2), pts)

        drop = bval - 0.5 * (B(child_m) + B(child_p))
        rhs = x**2 / w**2 * h
        marg.add("drop_chain", _norm_margin(drop, rhs, extra_scale=np.abs(bval)), pts)
        ok = rhs > 1e-12
        if ok.any():
            drop_ratio_min = min(drop_ratio_min, float((drop[ok] / rhs[ok]).min()))

        hess = _embedding_hessian(c_fun, x, w, M)
        scale = np.abs(hess).sum(axis=(1, 2))
        top = np.linalg.eigvalsh(hess)[:, -1]
        eig_max = max(eig_max, float(np.max(top / np.maximum(scale, 1e-300))))
        marg.add("hessian_nsd", _norm_margin(1e-8 * scale, top), pts)

    # finite-difference spot check of the closed-form Hessian
    rng = np.random.default_rng(config.seed + 1)
    fd_err = 0.0
    for _ in range(200):
        X, w = _loguniform(rng, 0.1, 10.0, 2)
        x = np.sqrt(X * w) * rng.uniform(0.2, 0.95)
        M = c_dom * w * rng.uniform(0.05, 0.95)
        p = np.array([X, x, w, M])
        # h_rel 1e-3: the default 1e-4 leaves too much cancellation noise in
        # the mixed entries relative to the 1e-5 agreement band
        fd = fd_hessian(lambda q: float(B(q[None, :])[0]), p, h_rel=1e-3)
        cf = _embedding_hessian(c_fun, *(np.array([t]) for t in (x, w, M)))[0]
        fd_err = max(fd_err, float(np.abs(fd - cf).max() / max(np.abs(cf).max(), 1e-12)))

    return CertificateReport(
        certificate=f"embedding[c_dom={c_dom}]",
        samples=config.samples,
        worst_margin=marg.worst,
        best_constant_estimate=drop_ratio_min,
        failures=marg.failures,
        seed=config.seed,
        info={
            "per_check": marg.per_check,
            "c_fun": c_fun,
            "hessian_top_eig_rel": eig_max,
            "fd_hessian_max_rel_err": fd_err,
        },
    )


def composition_rule_max_err(c_dom: float = 1.0, samples: int = 2000, seed: int = 0) -> float:
    """Max normalized residual of d2(B(X,x,w,M(w))) = d2B + dB/dM * d2M for
    quadratic test profiles M(w) = q0 + q1 w + q2 w^2 (analytic M', M'');
    the left side is a Richardson-extrapolated second difference along random
    relative directions in (X, x, w)."""
    B, c_fun = embedding_bellman(c_dom)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        X, w = _loguniform(rng, 0.1, 10.0, 2)
        x = np.sqrt(X * w) * rng.uniform(0.2, 0.9)
        q0 = rng.uniform(0.0, 0.1) * w
        q1 = rng.uniform(0.0, 0.3)
        q2 = rng.uniform(-0.1, 0.1) / w
        mw = lambda t: q0 + q1 * t + q2 * t**2
        if not 0 <= mw(w) <= c_dom * w:
            continue

        def q(p):
            return float(B(np.array([[p[0], p[1], p[2], mw(p[2])]]))[0])

        r = rng.standard_normal(3)
        r /= np.linalg.norm(r)
        d = r * np.array([X, x, w])
        p0 = np.array([X, x, w])
        h = 2e-3

        def second(hh):
            return (q(p0 + hh * d) - 2.0 * q(p0) + q(p0 - hh * d)) / hh**2

        fd = (4.0 * second(h / 2) - second(h)) / 3.0
        lifted = np.array([d[0], d[1], d[2], (q1 + 2 * q2 * w) * d[2]])
        hb = _embedding_hessian(c_fun, np.array([x]), np.array([w]), np.array([mw(w)]))[0]
        dbdm = c_fun * x**2 / (w + mw(w)) ** 2
        rhs = float(lifted @ hb @ lifted) + dbdm * (2.0 * q2) * d[2] ** 2
        scale = max(abs(rhs), c_fun * x**2 / (w + mw(w)))
        worst = max(worst, abs(fd - rhs) / scale)
    return worst


# ---------------------------------------------------------------------------
# the one-dimensional inner optimization of the seven-variable certificate

def _sup_s_arrays(x, w, y, v, K, iters: int = 70):
    """Vectorized sup over s in (0, inf) of x^2/(w+sK) + y^2/(v+K/s).

    Golden section on log s in [-40, 40] (tolerance 1e-12 in log s) with the
    endpoint limits x^2/w and y^2/v checked.  Value comparisons alone cannot
    place an interior maximizer better than ~sqrt(eps), so the candidate is
    polished through the stationarity equation, which reduces to the linear
    equation (yw - xK) + s (yK - xv) = 0.  Returns (s_star, value).
    """
    x, w, y, v, K = np.broadcast_arrays(
        *(np.asarray(t, dtype=np.float64) for t in (x, w, y, v, K))
    )

    def g(logs):
        s = np.exp(logs)
        return x**2 / (w + s * K) + y**2 / (v + K / s)

    lo = np.full(x.shape, -40.0)
    hi = np.full(x.shape, 40.0)
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd_ = g(c), g(d)
    for _ in range(iters):
        move_lo = fc < fd_
        lo = np.where(move_lo, c, lo)
        hi = np.where(move_lo, hi, d)
        c = hi - invphi * (hi - lo)
        d = lo + invphi * (hi - lo)
        fc, fd_ = g(c), g(d)
    mid = 0.5 * (lo + hi)
    val_mid = g(mid)

    # Interior stationary point: the sign of g'(s) is the sign of
    # (yw - xK) + s (yK - xv).  When that line starts positive and ends
    # negative the positive root is the unique interior maximizer and
    # supersedes the golden-section midpoint; otherwise the supremum sits at
    # an endpoint limit.
    num = x * K - y * w
    den = y * K - x * v
    with np.errstate(divide="ignore", invalid="ignore"):
        s_lin = np.where(den != 0.0, num / np.where(den != 0.0, den, 1.0), np.inf)
    max_shape = (y * w - x * K > 0) & (den < 0)
    usable = max_shape & (s_lin > np.exp(-40.0)) & (s_lin < np.exp(40.0))
    s_lin_safe = np.where(usable, s_lin, 1.0)
    val_lin = np.where(usable, g(np.log(s_lin_safe)), -np.inf)

    lim0 = x**2 / w
    lim_inf = y**2 / v
    value = np.maximum(np.maximum(val_mid, val_lin), np.maximum(lim0, lim_inf))
    endpoint = np.where(lim0 >= lim_inf, np.exp(-40.0), np.exp(40.0))
    s_star = np.where(usable, s_lin_safe, endpoint)
    s_star = np.where(K == 0.0, 1.0, s_star)
    value = np.where(K == 0.0, x**2 / w + y**2 / v, value)
    return s_star, value


def sup_s_value(x: float, w: float, y: float, v: float, K: float):
    """(s_star, value) of the inner supremum; K = 0 degenerates to
    x^2/w + y^2/v with s_star = 1 by convention."""
    if w <= 0 or v <= 0 or K < 0:
        raise DomainError("need w, v > 0 and K >= 0")
    s, val = _sup_s_arrays(x, w, y, v, K)
    return float(s), float(val)


def stationarity_residual(x, w, y, v, K, s):
    """Normalized residual of the optimal-s equation
    sK x^2/(w+sK)^2 = (K/s) y^2/(v+K/s)^2."""
    lhs = s * K * x**2 / (w + s * K) ** 2
    rhs = (K / s) * y**2 / (v + K / s) ** 2
    return np.abs(lhs - rhs) / np.maximum(np.maximum(lhs, rhs), 1e-300)


# ---------------------------------------------------------------------------
# the bilinear-embedding certificate (Q + P construction, nine coordinates)

_BILINEAR_COORDS = ("X", "x", "w", "Y", "y", "v", "K", "M", "N")


def in_bilinear_domain(p, c_dom: float, tol: float = 1e-9) -> bool:
    X, x, w, Y, y, v, K, M, N = np.asarray(p, dtype=np.float64)
    scale = max(1.0, abs(X), abs(Y), abs(w), abs(v))
    return (
        min(X, x, w, Y, y, v, K, M, N) >= -tol * scale
        and x**2 <= X * w + tol * scale**2
        and y**2 <= Y * v + tol * scale**2
        and M <= c_dom * w + tol * scale
        and N <= c_dom * v + tol * scale
        and K <= c_dom * np.sqrt(w * v) + tol * scale
    )


def _sample_bilinear_children(rng, n, c_dom):
    X = _loguniform(rng, 1e-3, 1e3, n)
    w = _loguniform(rng, 1e-3, 1e3, n)
    Y = _loguniform(rng, 1e-3, 1e3, n)
    v = _loguniform(rng, 1e-3, 1e3, n)
    x = np.sqrt(X * w) * rng.uniform(0.0, 1.0, n)
    y = np.sqrt(Y * v) * rng.uniform(0.0, 1.0, n)
    K = c_dom * np.sqrt(w * v) * rng.uniform(0.0, 1.0, n)
    M = c_dom * w * rng.uniform(0.0, 1.0, n)
    N = c_dom * v * rng.uniform(0.0, 1.0, n)
    return np.stack([X, x, w, Y, y, v, K, M, N], axis=1)


def cert_bilinear(c_dom: float, config: SamplerConfig = SamplerConfig()) -> CertificateReport:
    """Certificate for the split B = Q + P on the nine-coordinate domain:

    Q = C(X+Y) - x^2/(w+M) - y^2/(v+N) must absorb supermartingale slack in
    M and N at rate (1+c_dom)^{-2}; P = C(X+Y) - sup_s(x^2/(w+sK) + y^2/(v+K/s))
    must absorb slack in K in the small-K regime x^2 K/w + y^2 K/v <= c_dom xy;
    the sum obeys the regime dichotomy, and all three stay within [0, C(X+Y)].
    Slack is injected separately into K, M, N on equal thirds of the samples.
    """
    if c_dom < 1.0:
        raise ConfigError("c_dom must be >= 1")
    c_fun = required_embedding_constant(c_dom)
    gamma_req = 1.0 / (1.0 + c_dom) ** 2
    marg = _Margins()

    def Q(p):
        X, x, w, Y, y, v, K, M, N = (p[:, i] for i in range(9))
        return c_fun * (X + Y) - x**2 / (w + M) - y**2 / (v + N)

    def P(p):
        X, x, w, Y, y, v, K, M, N = (p[:, i] for i in range(9))
        _, sup = _sup_s_arrays(x, w, y, v, K)
        return c_fun * (X + Y) - sup

    gamma1_min = np.inf
    gamma2_min = np.inf
    gamma3_min = np.inf
    stat_res_max = 0.0
    for rng, n in _shard_rngs(config.seed, config.samples):
        cm = _sample_bilinear_children(rng, n, c_dom)
        cp = _sample_bilinear_children(rng, n, c_dom)
        parent = 0.5 * (cm + cp)
        X, x, w, Y, y, v = (parent[:, i] for i in range(6))

        # slack coordinate per sample: K on [0, n/3), M on [n/3, 2n/3), N on the rest
        which = np.zeros(n, dtype=np.int64)
        which[n // 3 : 2 * n // 3] = 1
        which[2 * n // 3 :] = 2
        caps = np.stack(
            [c_dom * np.sqrt(w * v), c_dom * w, c_dom * v], axis=1
        )  # K, M, N caps at the parent
        coord = np.array([6, 7, 8])[which]
        headroom = caps[np.arange(n), which] - parent[np.arange(n), coord]
        h = np.maximum(headroom, 0.0) * np.exp(np.log(1e-6) * rng.random(n))
        h = np.where(rng.random(n) < 0.05, 0.0, h)
        parent[np.arange(n), coord] += h

        K, M, N = parent[:, 6], parent[:, 7], parent[:, 8]
        hK = np.where(which == 0, h, 0.0)
        hM = np.where(which == 1, h, 0.0)
        hN = np.where(which == 2, h, 0.0)

        q_parent = Q(parent)
        qdrop = q_parent - 0.5 * (Q(cm) + Q(cp))
        rhsQ = gamma_req * (x**2 / w**2 * hM + y**2 / v**2 * hN)
        marg.add("q_drop", _norm_margin(qdrop, rhsQ, extra_scale=np.abs(q_parent)))
        okM = (which == 1) & (hM > 1e-12) & (x > 0)
        if okM.any():
            gamma2_min = min(gamma2_min, float((qdrop[okM] / (x**2 / w**2 * hM)[okM]).min()))
        okN = (which == 2) & (hN > 1e-12) & (y > 0)
        if okN.any():
            gamma3_min = min(gamma3_min, float((qdrop[okN] / (y**2 / v**2 * hN)[okN]).min()))

        p_parent = P(parent)
        pdrop = p_parent - 0.5 * (P(cm) + P(cp))
        marg.add("p_drop", _norm_margin(pdrop, 0.0, extra_scale=np.abs(p_parent)))
        small = x**2 * K / w + y**2 * K / v <= c_dom * x * y
        okK = small & (which == 0) & (hK > 1e-12) & (x * y > 0)
        if okK.any():
            rhsK = (x * y / (w * v) * hK)[okK]
            gamma1_min = min(gamma1_min, float((pdrop[okK] / rhsK).min()))

        bdrop = qdrop + pdrop
        b_scale = np.abs(q_parent) + np.abs(p_parent)
        # dichotomy: plain concavity certificate in the small-K regime, the
        # Q-rate inequality in the large-K regime
        marg.add("b_drop_small_regime", _norm_margin(bdrop[small], 0.0, b_scale[small]))
        big = ~small
        marg.add("b_drop_large_regime", _norm_margin(bdrop[big], rhsQ[big], b_scale[big]))

        for name, func in (("q", Q), ("p", P)):
            for ptset in (parent, cm, cp):
                vals = func(ptset)
                tops = c_fun * (ptset[:, 0] + ptset[:, 3])
                marg.add(f"{name}_lower", _norm_margin(vals, 0.0, extra_scale=tops))
                marg.add(f"{name}_upper", _norm_margin(tops, vals))

        # inner optimizer sanity on a subsample
        sub = slice(0, min(n, 256))
        s_star, val = _sup_s_arrays(x[sub], w[sub], y[sub], v[sub], K[sub])
        for _ in range(4):
            s_rand = np.exp(rng.uniform(-30, 30, val.shape))
            obj = x[sub] ** 2 / (w[sub] + s_rand * K[sub]) + y[sub] ** 2 / (
                v[sub] + K[sub] / s_rand
            )
            marg.add("sup_s_dominates", _norm_margin(val, obj))
        interior = (
            (np.abs(np.log(s_star)) < 39.0)
            & (K[sub] > 1e-12)
            & (val > np.maximum(x[sub] ** 2 / w[sub], y[sub] ** 2 / v[sub]) + 1e-12 * val)
        )
        if interior.any():
            res = stationarity_residual(
                x[sub][interior], w[sub][interior], y[sub][interior],
                v[sub][interior], K[sub][interior], s_star[interior],
            )
            stat_res_max = max(stat_res_max, float(res.max()))

    return CertificateReport(
        certificate=f"bilinear[c_dom={c_dom}]",
        samples=config.samples,
        worst_margin=marg.worst,
        best_constant_estimate=gamma1_min,
        failures=marg.failures,
        seed=config.seed,
        info={
            "per_check": marg.per_check,
            "gamma1": gamma1_min,
            "gamma2": gamma2_min,
            "gamma3": gamma3_min,
            "gamma_required": gamma_req,
            "c_fun": c_fun,
            "stationarity_residual_max": stat_res_max,
        },
    )


# ---------------------------------------------------------------------------
# the square-function certificate: drops of X - x^2/w and its damped variant

def sf_P(p):
    p = np.atleast_2d(p)
    return p[:, 0] - p[:, 1] ** 2 / p[:, 2]


def sf_Q(p):
    p = np.atleast_2d(p)
    return p[:, 0] - p[:, 1] ** 2 / (p[:, 2] + p[:, 3])


def sf_P_form(x, w, dx, dw):
    """Closed-form Hessian form of P = X - x^2/w: -2 (x^2/w) (dx/x - dw/w)^2."""
    return -2.0 * x**2 / w * (dx / x - dw / w) ** 2


def cert_square_function(config: SamplerConfig = SamplerConfig(), c_dom: float = 1.0) -> CertificateReport:
    """Certificate for P = X - x^2/w and Q = X - x^2/(w+M) on x^2 <= Xw,
    M <= c_dom w: the exact Hessian identity for P against finite differences,
    the Q-drop at rate (1+c_dom)^{-2} x^2/w^2 per unit of M-slack, and the
    P-drop against (x^2/w) times the [1/2,2]^2 grid infimum of
    |c1 (x_- - x_+)/x - c2 (w_- - w_+)/w|^2.
    """
    gamma_req = 1.0 / (1.0 + c_dom) ** 2
    marg = _Margins()
    c1g = np.linspace(0.5, 2.0, 41)
    c2g = np.linspace(0.5, 2.0, 41)

    hess_rel_err = 0.0
    c_emp = np.inf
    for rng, n in _shard_rngs(config.seed, config.samples):
        Xm, xm, wm, Mm = _sample_embedding_children(rng, n, c_dom)
        Xp, xp, wp, Mp = _sample_embedding_children(rng, n, c_dom)
        X, x, w = 0.5 * (Xm + Xp), 0.5 * (xm + xp), 0.5 * (wm + wp)
        mmid = 0.5 * (Mm + Mp)
        h = (c_dom * w - mmid) * np.exp(np.log(1e-6) * rng.random(n))
        h = np.where(rng.random(n) < 0.05, 0.0, h)
        M = mmid + h

        # Hessian identity of P against finite differences, on interior points
        # and unit relative directions
        r = _unit_relative_directions(rng, n, 3)
        dX, dx, dw = r[:, 0] * X, r[:, 1] * x, r[:, 2] * w
        pts3 = np.stack([X, x, w], axis=1)
        interior = x > 5e-2 * np.sqrt(X * w)
        cf = sf_P_form(np.maximum(x, 1e-300), w, dx, dw)
        fd = _fd_form(sf_P, pts3, np.stack([dX, dx, dw], axis=1))
        floor = x**2 / w  # natural form scale on unit relative directions
        err = np.abs(fd - cf) / np.maximum(np.abs(cf), floor)
        if interior.any():
            hess_rel_err = max(hess_rel_err, float(err[interior].max()))

        # Q-drop with M-slack
        q_parent = sf_Q(np.stack([X, x, w, M], 1))
        qdrop = q_parent - 0.5 * (
            sf_Q(np.stack([Xm, xm, wm, Mm], 1)) + sf_Q(np.stack([Xp, xp, wp, Mp], 1))
        )
        marg.add(
            "q_drop",
            _norm_margin(qdrop, gamma_req * x**2 / w**2 * h, extra_scale=np.abs(q_parent)),
        )

        # P-drop against the grid infimum
        p_parent = sf_P(pts3)
        pdrop = p_parent - 0.5 * (
            sf_P(np.stack([Xm, xm, wm], 1)) + sf_P(np.stack([Xp, xp, wp], 1))
        )
        marg.add("p_drop", _norm_margin(pdrop, 0.0, extra_scale=np.abs(p_parent)))
        aa = (xm - xp) / np.maximum(x, 1e-300)
        bb = (wm - wp) / np.maximum(w, 1e-300)
        diffs = (
            c1g[None, :, None] * aa[:, None, None] - c2g[None, None, :] * bb[:, None, None]
        ) ** 2
        inf_grid = diffs.reshape(n, -1).min(axis=1)
        rhs = x**2 / w * inf_grid
        ok = rhs > 1e-10
        if ok.any():
            c_emp = min(c_emp, float((pdrop[ok] / rhs[ok]).min()))

    return CertificateReport(
        certificate=f"square_function[c_dom={c_dom}]",
        samples=config.samples,
        worst_margin=marg.worst,
        best_constant_estimate=c_emp,
        failures=marg.failures,
        seed=config.seed,
        info={
            "per_check": marg.per_check,
            "fd_hessian_max_rel_err": hess_rel_err,
            "p_drop_grid_c": c_emp,
        },
    )
