"""Transmit-beam optimization by difference-of-concave programming.

The sum-rate objective in the lifted variable W_t = w_t w_t† splits as
F = f - g with both f and g concave (logs of affine functions of W_t).
Linearizing the subtracted term g at the current iterate gives a concave
surrogate that minorizes F and is tight at the iterate, so maximizing it
over the feasible set never decreases F.

The feasible set after the zero-forcing reduction W = B V B† is the
trace-fixed PSD cone {V >= 0, trace(V) = T}. Subproblems are solved by
conditional gradient (linear oracle: T times the top eigenvector of the
gradient) with exact golden-section line search, seeded by an exact
rank-1 candidate: the surrogate depends on V only through the two scalars
t_A = a~† V a~ and t_B = b~† V b~, whose joint range is a convex planar
region (an ellipse disk, scaled toward the origin when the reduced space
has spare dimensions), so the optimum can be located in closed form up to
two 1-D searches and realized by a rank-1 V exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cxla
from .model import ChannelSet, Infeasible

LN2 = math.log(2.0)
DC_TOL = 1e-6
DC_MAX_ITERS = 100
FW_GAP_RTOL = 1e-6
FW_MAX_ITERS = 500
GOLDEN_TOL = 1e-9
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BeamContext:
    """Everything the transmit-beam objective needs besides W_t itself."""

    rho: float
    p_a: float
    p_b: float
    c_ra: float       # |w_r† h_AR|^2
    c_rb: float       # |w_r† h_BR|^2
    h_ra: np.ndarray
    h_rb: np.ndarray
    rsi_a: float      # P-independent RSI gain |h_AA|^2
    rsi_b: float      # |h_BB|^2

    @property
    def const_a(self) -> float:
        return self.p_a * self.rsi_a + 1.0

    @property
    def const_b(self) -> float:
        return self.p_b * self.rsi_b + 1.0

    @property
    def coef_a(self) -> float:
        return self.rho * (self.p_b * self.c_rb + 1.0)

    @property
    def coef_b(self) -> float:
        return self.rho * (self.p_a * self.c_ra + 1.0)


def beam_context(ch: ChannelSet, w_r: np.ndarray, rho: float, p_a: float, p_b: float) -> BeamContext:
    return BeamContext(
        rho=rho,
        p_a=p_a,
        p_b=p_b,
        c_ra=float(np.abs(np.vdot(w_r, ch.h_ar)) ** 2),
        c_rb=float(np.abs(np.vdot(w_r, ch.h_br)) ** 2),
        h_ra=ch.h_ra,
        h_rb=ch.h_rb,
        rsi_a=float(np.abs(ch.h_aa) ** 2),
        rsi_b=float(np.abs(ch.h_bb) ** 2),
    )


@dataclass(frozen=True)
class TraceCone:
    """Feasible set {W = B V B†, V >= 0, trace(V) = trace_target}.

    ``basis`` is the zero-forcing reduction (columns orthonormal, each
    orthogonal to H_RR† w_r); None means no reduction is needed (full cone).
    """

    trace_target: float
    basis: np.ndarray | None = None

    def reduction(self, m_t: int) -> np.ndarray:
        if self.basis is None:
            return np.eye(m_t, dtype=np.complex128)
        return self.basis


def zf_constraints(ch: ChannelSet, w_r: np.ndarray, trace_target: float) -> TraceCone:
    """Build the reduced feasible cone for a given receive beam."""
    b = ch.h_rr.conj().T @ w_r
    scale = np.linalg.norm(ch.h_rr)
    if np.linalg.norm(b) <= 1e-12 * (1.0 + scale):
        return TraceCone(trace_target=trace_target, basis=None)
    return TraceCone(trace_target=trace_target, basis=cxla.null_basis(b))


@dataclass
class DCState:
    """Iterate trail of one DC run."""

    w_t_mat: np.ndarray
    objective_trace: list[float]
    k: int
    converged: bool
    last_gap: float = 0.0
    defect: float = 0.0


def _traces(w: np.ndarray, ctx: BeamContext) -> tuple[float, float]:
    t_a = float(np.real(ctx.h_ra.conj() @ w @ ctx.h_ra))
    t_b = float(np.real(ctx.h_rb.conj() @ w @ ctx.h_rb))
    return max(t_a, 0.0), max(t_b, 0.0)


def f_value(w: np.ndarray, ctx: BeamContext) -> float:
    t_a, t_b = _traces(w, ctx)
    return math.log2(ctx.coef_a * t_a + ctx.const_a) + math.log2(ctx.coef_b * t_b + ctx.const_b)


def g_value(w: np.ndarray, ctx: BeamContext) -> float:
    t_a, t_b = _traces(w, ctx)
    return math.log2(ctx.rho * t_a + ctx.const_a) + math.log2(ctx.rho * t_b + ctx.const_b)


def objective_F(w: np.ndarray, ctx: BeamContext) -> float:
    """F(W) = f(W) - g(W); equals the sum-rate at any rank-1 W = w_t w_t†."""
    return f_value(w, ctx) - g_value(w, ctx)


def g_gradient(w_k: np.ndarray, ctx: BeamContext) -> np.ndarray:
    """Gradient of g at W_k (exact first-order coefficient, rho-weighted)."""
    t_a, t_b = _traces(w_k, ctx)
    ka = ctx.rho / (LN2 * (ctx.rho * t_a + ctx.const_a))
    kb = ctx.rho / (LN2 * (ctx.rho * t_b + ctx.const_b))
    return ka * cxla.outer(ctx.h_ra) + kb * cxla.outer(ctx.h_rb)


def linearize_g(w: np.ndarray, w_k: np.ndarray, ctx: BeamContext) -> float:
    """First-order expansion of g around W_k, evaluated at W.

    g_L(W; W_k) = g(W_k) + <grad g(W_k), W - W_k>. Since g is concave the
    tangent lies above g away from the anchor, which is exactly what makes
    f - g_L a minorant of F (see the module docstring).
    """
    grad = g_gradient(w_k, ctx)
    inner = float(np.real(np.trace(grad @ (w - w_k))))
    return g_value(w_k, ctx) + inner


def surrogate_value(w: np.ndarray, w_k: np.ndarray, ctx: BeamContext) -> float:
    """The concave subproblem objective f(W) - g_L(W; W_k)."""
    return f_value(w, ctx) - linearize_g(w, w_k, ctx)


# ---------------------------------------------------------------------------
# Reduced-space machinery for the convex subproblem.
# ---------------------------------------------------------------------------


@dataclass
class _Geometry:
    """Anchor-independent data of the reduced feasible set.

    Built once per DC run: the joint range of the two effective traces
    (t_A, t_B) = (a~† V a~, b~† V b~) over {V >= 0, trace V = T} is an
    ellipse disk (the 2x2 numerical range of the span compressions, mapped
    by a real affine function of the Bloch vector), scaled toward the
    origin when the reduced space has dimensions outside span{a~, b~}.
    Every point of it is realized by a rank-1 V.
    """

    basis: np.ndarray                 # m_t x m reduction
    a_vec: np.ndarray                 # B† h_RA
    b_vec: np.ndarray                 # B† h_RB
    aa: np.ndarray                    # outer(a_vec)
    bb: np.ndarray                    # outer(b_vec)
    trace_target: float
    m: int
    fixed: list[np.ndarray]           # candidates for degenerate shapes
    span_dim: int = 0
    has_slack: bool = False
    e1: np.ndarray | None = None
    e2: np.ndarray | None = None
    z: np.ndarray | None = None       # unit vector outside the span
    t1: tuple[float, float] = (0.0, 0.0)  # span_dim == 1: traces at e1
    c0: np.ndarray | None = None      # ellipse center in trace space
    mmap: np.ndarray | None = None    # 2x3 real map from Bloch vectors
    mpinv: np.ndarray | None = None
    kern: np.ndarray | None = None    # unit kernel direction of mmap
    bnd_n: np.ndarray | None = None   # (K, 3) boundary Bloch vectors
    bnd_t: np.ndarray | None = None   # (K, 2) boundary trace pairs
    bnd_angles: np.ndarray | None = None

    def embed(self, u_span: np.ndarray, s: float) -> np.ndarray:
        u = math.sqrt(max(s, 0.0)) * u_span
        if self.z is not None and s < 1.0:
            u = u + math.sqrt(max(1.0 - s, 0.0)) * self.z
        return self.trace_target * cxla.outer(u)

    def state_of(self, n: np.ndarray, s: float) -> np.ndarray:
        u2 = _bloch_to_state(n)
        return self.embed(u2[0] * self.e1 + u2[1] * self.e2, s)

    def to_unit_sphere(self, n: np.ndarray) -> np.ndarray:
        """Move n to the sphere along ker(mmap); the trace pair is unchanged."""
        nn = float(n @ n)
        if nn >= 1.0:
            return n / math.sqrt(nn)
        k = self.kern
        kn = float(k @ n)
        tau = -kn + math.sqrt(max(kn * kn + 1.0 - nn, 0.0))
        return n + tau * k

    def boundary_point(self, mu: float) -> tuple[np.ndarray, np.ndarray] | None:
        """Support point of the ellipse for outward normal (cos mu, sin mu)."""
        (m00, m01, m02), (m10, m11, m12) = self.mmap
        c, s = math.cos(mu), math.sin(mu)
        w0 = m00 * c + m10 * s
        w1 = m01 * c + m11 * s
        w2 = m02 * c + m12 * s
        nw = math.sqrt(w0 * w0 + w1 * w1 + w2 * w2)
        if nw == 0.0:
            return None
        n = np.array([w0 / nw, w1 / nw, w2 / nw])
        t = np.array(
            [
                self.c0[0] + m00 * n[0] + m01 * n[1] + m02 * n[2],
                self.c0[1] + m10 * n[0] + m11 * n[1] + m12 * n[2],
            ]
        )
        return n, t


def _build_geometry(ctx: BeamContext, cons: TraceCone, m_t: int, n_scan: int = 64) -> _Geometry:
    basis = cons.reduction(m_t)
    T = cons.trace_target
    a_vec = basis.conj().T @ ctx.h_ra
    b_vec = basis.conj().T @ ctx.h_rb
    m = basis.shape[1]
    geo = _Geometry(
        basis=basis, a_vec=a_vec, b_vec=b_vec,
        aa=cxla.outer(a_vec), bb=cxla.outer(b_vec),
        trace_target=T, m=m, fixed=[],
    )
    na = np.linalg.norm(a_vec)
    nb = np.linalg.norm(b_vec)
    if m == 1:
        geo.fixed = [np.array([[T]], dtype=np.complex128)]
        return geo
    if max(na, nb) == 0.0:
        geo.fixed = [np.diag(np.full(m, T / m)).astype(np.complex128)]
        return geo

    e1 = (a_vec / na) if na > 0 else (b_vec / nb)
    r = b_vec - (e1.conj() @ b_vec) * e1
    nr = np.linalg.norm(r)
    geo.e1 = e1
    geo.span_dim = 2 if nr > 1e-12 * max(nb, 1.0) else 1
    geo.has_slack = m > geo.span_dim
    if geo.has_slack:
        cols = [e1] if geo.span_dim == 1 else [e1, r / nr]
        q, _ = np.linalg.qr(np.column_stack(cols), mode="complete")
        geo.z = q[:, geo.span_dim]

    if geo.span_dim == 1:
        geo.t1 = (
            T * float(np.abs(a_vec.conj() @ e1) ** 2),
            T * float(np.abs(b_vec.conj() @ e1) ** 2),
        )
        return geo

    geo.e2 = r / nr
    # 2x2 compressions of the quadratic forms, scaled by the trace budget.
    a2 = np.array([e1.conj() @ a_vec, geo.e2.conj() @ a_vec])
    b2 = np.array([e1.conj() @ b_vec, geo.e2.conj() @ b_vec])

    def pauli(zm: np.ndarray) -> tuple[float, np.ndarray]:
        z0 = 0.5 * float(np.real(zm[0, 0] + zm[1, 1]))
        return z0, np.array(
            [float(np.real(zm[0, 1])), -float(np.imag(zm[0, 1])), 0.5 * float(np.real(zm[0, 0] - zm[1, 1]))]
        )

    x0, xv = pauli(T * np.outer(a2, a2.conj()))
    y0, yv = pauli(T * np.outer(b2, b2.conj()))
    geo.c0 = np.array([x0, y0])
    geo.mmap = np.vstack([xv, yv])
    geo.mpinv = np.linalg.pinv(geo.mmap)
    _, _, vt = np.linalg.svd(geo.mmap)
    geo.kern = vt[-1]

    angles = np.linspace(0.0, 2.0 * math.pi, n_scan, endpoint=False)
    dirs = np.stack([np.cos(angles), np.sin(angles)])        # (2, K)
    w = geo.mmap.T @ dirs                                    # (3, K)
    norms = np.linalg.norm(w, axis=0)
    keep = norms > 0
    bnd_n = (w[:, keep] / norms[keep]).T                     # (K', 3)
    geo.bnd_n = bnd_n
    geo.bnd_t = geo.c0[None, :] + bnd_n @ geo.mmap.T         # (K', 2)
    geo.bnd_angles = angles[keep]
    return geo


@dataclass
class _Reduced:
    """Per-anchor surrogate over the reduced geometry."""

    geo: _Geometry
    ctx: BeamContext
    kappa_a: float = 0.0     # linearization slopes at the anchor
    kappa_b: float = 0.0
    offset: float = 0.0      # constant part of the surrogate

    def set_anchor(self, t_ak: float, t_bk: float, g_k: float) -> None:
        self.kappa_a = self.ctx.rho / (LN2 * (self.ctx.rho * t_ak + self.ctx.const_a))
        self.kappa_b = self.ctx.rho / (LN2 * (self.ctx.rho * t_bk + self.ctx.const_b))
        self.offset = -g_k + self.kappa_a * t_ak + self.kappa_b * t_bk

    def phi(self, t_a, t_b):
        """Surrogate as a function of the two effective traces (vectorized)."""
        return (
            np.log2(self.ctx.coef_a * t_a + self.ctx.const_a)
            + np.log2(self.ctx.coef_b * t_b + self.ctx.const_b)
            - self.kappa_a * t_a
            - self.kappa_b * t_b
            + self.offset
        )

    def phi_s(self, t_a: float, t_b: float) -> float:
        """Scalar fast path of phi."""
        return (
            math.log2(self.ctx.coef_a * t_a + self.ctx.const_a)
            + math.log2(self.ctx.coef_b * t_b + self.ctx.const_b)
            - self.kappa_a * t_a
            - self.kappa_b * t_b
            + self.offset
        )

    def traces_of(self, v: np.ndarray) -> tuple[float, float]:
        t_a = float(np.real(self.geo.a_vec.conj() @ v @ self.geo.a_vec))
        t_b = float(np.real(self.geo.b_vec.conj() @ v @ self.geo.b_vec))
        return max(t_a, 0.0), max(t_b, 0.0)

    def value(self, v: np.ndarray) -> float:
        return self.phi_s(*self.traces_of(v))

    def gradient(self, v: np.ndarray) -> np.ndarray:
        t_a, t_b = self.traces_of(v)
        da = self.ctx.coef_a / (LN2 * (self.ctx.coef_a * t_a + self.ctx.const_a)) - self.kappa_a
        db = self.ctx.coef_b / (LN2 * (self.ctx.coef_b * t_b + self.ctx.const_b)) - self.kappa_b
        return da * self.geo.aa + db * self.geo.bb


def _golden_max(fun, lo: float, hi: float, tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Golden-section maximization of a unimodal function on [lo, hi]."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


def _bloch_to_state(n: np.ndarray) -> np.ndarray:
    """Unit 2-vector whose projector has Bloch vector n (||n|| = 1)."""
    nx, ny, nz = n
    theta = math.acos(max(-1.0, min(1.0, nz)))
    phi = math.atan2(ny, nx)
    return np.array([math.cos(theta / 2.0), math.sin(theta / 2.0) * complex(math.cos(phi), math.sin(phi))])


def _rank1_candidates(red: _Reduced) -> list[np.ndarray]:
    """Exact rank-1 maximizer candidates for the reduced surrogate.

    Works in the 2-D plane of achievable (t_A, t_B) pairs; see the
    _Geometry docstring. Every returned V is feasible (PSD, trace exactly
    T) and rank 1.
    """
    geo = red.geo
    if geo.fixed:
        return geo.fixed

    if geo.span_dim == 1:
        # Both traces are proportional to the mass on e1.
        ta1, tb1 = geo.t1
        if geo.has_slack:
            s_star, _ = _golden_max(lambda s: red.phi_s(s * ta1, s * tb1), 0.0, 1.0)
            return [geo.embed(geo.e1, s) for s in (1.0, s_star)]
        return [geo.embed(geo.e1, 1.0)]

    cands: list[np.ndarray] = []

    # Interior stationary point of phi, if it is achievable.
    t_star = np.array(
        [
            1.0 / (red.kappa_a * LN2) - red.ctx.const_a / red.ctx.coef_a if red.kappa_a > 0 else np.inf,
            1.0 / (red.kappa_b * LN2) - red.ctx.const_b / red.ctx.coef_b if red.kappa_b > 0 else np.inf,
        ]
    )
    if np.all(np.isfinite(t_star)) and np.all(t_star >= 0):
        n_star = geo.mpinv @ (t_star - geo.c0)
        in_range = np.linalg.norm(geo.mmap @ n_star - (t_star - geo.c0)) <= 1e-9 * (
            1.0 + np.linalg.norm(t_star)
        )
        if in_range and float(n_star @ n_star) <= 1.0 + 1e-12:
            cands.append(geo.state_of(geo.to_unit_sphere(n_star), 1.0))
        elif in_range and geo.has_slack:
            # Try a shrunk copy: t* = s (c0 + M n), minimize ||n|| over s.
            gvec = geo.mpinv @ t_star
            hvec = geo.mpinv @ geo.c0
            gg = float(gvec @ gvec)
            if gg > 0:
                lam = max(1.0, float(gvec @ hvec) / gg)
                n_s = lam * gvec - hvec
                if float(n_s @ n_s) <= 1.0 + 1e-12:
                    cands.append(geo.state_of(geo.to_unit_sphere(n_s), 1.0 / lam))

    # Boundary of the achievable ellipse: vectorized support-direction scan
    # plus a golden polish around the best angle.
    vals = red.phi(np.maximum(geo.bnd_t[:, 0], 0.0), np.maximum(geo.bnd_t[:, 1], 0.0))
    k = int(np.argmax(vals))
    best_angle = float(geo.bnd_angles[k])

    (m00, m01, m02), (m10, m11, m12) = geo.mmap
    c00, c01 = geo.c0

    def boundary_val(mu: float) -> float:
        c, s = math.cos(mu), math.sin(mu)
        w0 = m00 * c + m10 * s
        w1 = m01 * c + m11 * s
        w2 = m02 * c + m12 * s
        nw = math.sqrt(w0 * w0 + w1 * w1 + w2 * w2)
        if nw == 0.0:
            return -np.inf
        t0 = c00 + (m00 * w0 + m01 * w1 + m02 * w2) / nw
        t1 = c01 + (m10 * w0 + m11 * w1 + m12 * w2) / nw
        return red.phi_s(max(t0, 0.0), max(t1, 0.0))

    span = float(geo.bnd_angles[1] - geo.bnd_angles[0]) if geo.bnd_angles.size > 1 else math.pi
    mu_star, _ = _golden_max(boundary_val, best_angle - span, best_angle + span, tol=1e-6)
    for mu in (best_angle, mu_star):
        pt = geo.boundary_point(mu)
        if pt is None:
            continue
        n, t = pt
        if geo.has_slack:
            s_star, _ = _golden_max(
                lambda s: red.phi_s(max(s * t[0], 0.0), max(s * t[1], 0.0)), 0.0, 1.0
            )
            cands.append(geo.state_of(n, s_star))
        cands.append(geo.state_of(n, 1.0))
    return cands


def _frank_wolfe(red: _Reduced, v0: np.ndarray) -> tuple[np.ndarray, float, int]:
    """Conditional gradient on the trace-fixed PSD cone, warm-started at v0."""
    T = red.geo.trace_target
    v = v0
    val = red.value(v)
    gap = np.inf
    it = 0
    for it in range(1, FW_MAX_ITERS + 1):
        grad = red.gradient(v)
        lam, vertex_dir = cxla.top_eigpair(grad)
        vertex = T * cxla.outer(vertex_dir)
        gap = float(np.real(np.trace(grad @ (vertex - v))))
        if gap <= FW_GAP_RTOL * (1.0 + abs(val)):
            break
        t_v = red.traces_of(v)
        t_s = red.traces_of(vertex)

        def seg(gamma: float) -> float:
            ta = (1.0 - gamma) * t_v[0] + gamma * t_s[0]
            tb = (1.0 - gamma) * t_v[1] + gamma * t_s[1]
            return red.phi_s(ta, tb)

        gamma, new_val = _golden_max(seg, 0.0, 1.0)
        if new_val <= val:
            break
        v = (1.0 - gamma) * v + gamma * vertex
        val = new_val
    return v, gap, it


def solve_convex_subproblem(w_k: np.ndarray, ctx: BeamContext, cons: TraceCone) -> np.ndarray:
    w, _, _ = _solve_subproblem(w_k, ctx, cons)
    return w


def _solve_subproblem(
    w_k: np.ndarray,
    ctx: BeamContext,
    cons: TraceCone,
    geo: _Geometry | None = None,
) -> tuple[np.ndarray, float, float]:
    """Maximize f - g_L(.; W_k) over the cone. Returns (W, fw_gap, value).

    The returned surrogate value is never below the value at W_k, which is
    what the DC ascent argument needs. ``geo`` carries the anchor-free
    geometry so repeated solves against the same cone skip rebuilding it.
    """
    T = cons.trace_target
    if not np.isfinite(T) or T <= 0:
        raise Infeasible("relay_power", f"trace target {T} is not positive")
    if geo is None:
        geo = _build_geometry(ctx, cons, w_k.shape[0])
    basis = geo.basis
    red = _Reduced(geo=geo, ctx=ctx)
    t_ak, t_bk = _traces(w_k, ctx)
    red.set_anchor(t_ak, t_bk, g_value(w_k, ctx))
    if geo.m == 1:
        # One-dimensional cone: the trace equality pins the unique point.
        w = T * (basis @ basis.conj().T)
        return w, 0.0, red.value(np.array([[T]], dtype=np.complex128))

    v_warm = basis.conj().T @ w_k @ basis
    # Renormalize the warm start onto the cone in case W_k carries slack.
    tr = float(np.real(np.trace(v_warm)))
    if tr > 0:
        v_warm = v_warm * (T / tr)
    else:
        v_warm = np.eye(geo.m, dtype=np.complex128) * (T / geo.m)

    best_v, best_val = v_warm, red.value(v_warm)
    for cand in _rank1_candidates(red):
        val = red.value(cand)
        if val > best_val + 1e-15:
            best_v, best_val = cand, val

    v, gap, _ = _frank_wolfe(red, best_v)
    w = basis @ v @ basis.conj().T
    w = 0.5 * (w + w.conj().T)
    return w, gap, red.value(v)


def default_init(ctx: BeamContext, cons: TraceCone, m_t: int) -> np.ndarray:
    """Deterministic feasible starting matrix, balanced between both links.

    Projects the mean direction of the two forward channels onto the
    ZF-feasible subspace; falls back to the scaled subspace identity.
    """
    basis = cons.reduction(m_t)
    T = cons.trace_target
    mean = 0.5 * (ctx.h_ra + ctx.h_rb)
    proj = basis @ (basis.conj().T @ mean)
    nrm = np.linalg.norm(proj)
    if nrm > 1e-12 * (1.0 + np.linalg.norm(mean)):
        h = proj / nrm
        return T * cxla.outer(h)
    m = basis.shape[1]
    return T * (basis @ basis.conj().T) / m


def dc_optimize(
    w_init: np.ndarray,
    ctx: BeamContext,
    cons: TraceCone,
    tol: float = DC_TOL,
    max_iters: int = DC_MAX_ITERS,
) -> DCState:
    """Sequentially maximize the linearized surrogate until F stalls.

    The objective trace is nondecreasing: each subproblem solution has
    surrogate value at least that of its anchor, and the surrogate minorizes
    F with equality at the anchor.
    """
    w = cxla.require_hermitian(w_init, rtol=1e-9)
    geo = _build_geometry(ctx, cons, w.shape[0])
    trace = [objective_F(w, ctx)]
    converged = False
    gap = 0.0
    k = 0
    for k in range(1, max_iters + 1):
        w_next, gap, _ = _solve_subproblem(w, ctx, cons, geo=geo)
        f_next = objective_F(w_next, ctx)
        if f_next < trace[-1]:
            # Numerical guard: keep the anchor if the step cannot improve.
            trace.append(trace[-1])
            converged = True
            break
        w = w_next
        trace.append(f_next)
        if trace[-1] - trace[-2] < tol:
            converged = True
            break
    eigs = np.linalg.eigvalsh(w)
    defect = float(eigs[-2] / eigs[-1]) if eigs.size > 1 and eigs[-1] > 0 else 0.0
    return DCState(
        w_t_mat=w,
        objective_trace=trace,
        k=k,
        converged=converged,
        last_gap=gap,
        defect=max(defect, 0.0),
    )


@dataclass
class Rank1Extraction:
    w_t: np.ndarray
    defect: float          # lambda_2 / lambda_1 of the extracted matrix
    zero: bool = False     # set when the matrix had no positive eigenvalue


def extract_rank1(w: np.ndarray) -> Rank1Extraction:
    """w_t = sqrt(lambda_1) v_1 from the top eigenpair of W."""
    eigs, vecs = cxla.eig_hermitian(w)
    lam = float(eigs[-1])
    if lam <= 0:
        return Rank1Extraction(w_t=np.zeros(w.shape[0], dtype=np.complex128), defect=0.0, zero=True)
    vec = vecs[:, -1]
    k = int(np.argmax(np.abs(vec)))
    if np.abs(vec[k]) > 0:
        vec = vec * (np.abs(vec[k]) / vec[k])
    defect = float(max(eigs[-2], 0.0) / lam) if eigs.size > 1 else 0.0
    return Rank1Extraction(w_t=math.sqrt(lam) * vec, defect=defect)
