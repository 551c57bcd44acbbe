"""Low-level kernels shared by the scattering modules."""

from __future__ import annotations

import numba
import numpy as np

OVERFLOW_BOUND = 1e120


def midpoints(f: np.ndarray) -> np.ndarray:
    """Values of a smooth sampled function halfway between nodes.

    Four-point Lagrange interpolation in the interior and one-sided cubic
    stencils at both ends, so the result is fourth-order accurate.
    """
    f = np.asarray(f)
    n = len(f)
    if n < 4:
        return 0.5 * (f[:-1] + f[1:])
    out = np.empty(n - 1, dtype=np.result_type(f, float))
    out[1:-1] = (-f[:-3] + 9 * f[1:-2] + 9 * f[2:-1] - f[3:]) / 16
    out[0] = (5 * f[0] + 15 * f[1] - 5 * f[2] + f[3]) / 16
    out[-1] = (5 * f[-1] + 15 * f[-2] - 5 * f[-3] + f[-4]) / 16
    return out


@numba.njit(cache=True)
def _rk4_kernel(x, Q, R, Qm, Rm, lam, u0, forward, store, bound, traj, out):
    n = x.shape[0]
    m = lam.shape[0]
    h = x[1] - x[0]
    if not forward:
        h = -h
    start = 0 if forward else n - 1
    ok = True
    for k in range(m):
        lk = lam[k]
        u1 = u0[0, k]
        u2 = u0[1, k]
        rot = np.exp(1j * lk * h)
        E = np.exp(2j * lk * x[start])
        qa = Q[start] * E
        ra = R[start] / E
        if store:
            traj[start, 0, k] = u1
            traj[start, 1, k] = u2
        for step in range(n - 1):
            j = step if forward else n - 2 - step
            nxt = j + 1 if forward else j
            Em = E * rot
            if step % 64 == 63:
                E = np.exp(2j * lk * x[nxt])
            else:
                E = Em * rot
            qm = Qm[j] * Em
            rm = Rm[j] / Em
            qb = Q[nxt] * E
            rb = R[nxt] / E
            k1a = qa * u2
            k1b = ra * u1
            k2a = qm * (u2 + 0.5 * h * k1b)
            k2b = rm * (u1 + 0.5 * h * k1a)
            k3a = qm * (u2 + 0.5 * h * k2b)
            k3b = rm * (u1 + 0.5 * h * k2a)
            k4a = qb * (u2 + h * k3b)
            k4b = rb * (u1 + h * k3a)
            u1 = u1 + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
            u2 = u2 + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
            qa = qb
            ra = rb
            if store:
                traj[nxt, 0, k] = u1
                traj[nxt, 1, k] = u2
            mag = max(abs(u1), abs(u2))
            if not (mag <= bound):
                ok = False
                break
        out[0, k] = u1
        out[1, k] = u2
    return ok


def rk4_offdiag(x, Q, R, lam, u0, *, forward=True, store=False,
                bound=OVERFLOW_BOUND):
    """Integrate u1' = Q(x) e^{2iλx} u2, u2' = R(x) e^{-2iλx} u1 by classic RK4.

    ``lam`` may be an array; each value is marched independently.  ``u0``
    has shape (2,) or (2, len(lam)).  With ``forward`` the march runs from
    x[0] to x[-1], otherwise from x[-1] back to x[0].  Returns the end state
    of shape (2, m), or the whole trajectory (n, 2, m) in node order when
    ``store`` is set.  Returns ``None`` when the solution norm crosses
    ``bound`` (the caller decides what to raise).

    The phase factor e^{2iλx} is advanced by half-step rotations and resynced
    from the exact exponential every 64 steps.
    """
    x = np.ascontiguousarray(x, dtype=float)
    lam = np.ascontiguousarray(np.atleast_1d(lam), dtype=complex)
    Q = np.ascontiguousarray(Q, dtype=complex)
    R = np.ascontiguousarray(R, dtype=complex)
    m = len(lam)
    u = np.empty((2, m), dtype=complex)
    u[:] = np.asarray(u0, dtype=complex).reshape(2, -1)
    traj = np.empty((len(x) if store else 1, 2, m), dtype=complex)
    out = np.empty((2, m), dtype=complex)
    ok = _rk4_kernel(x, Q, R, midpoints(Q), midpoints(R), lam, u,
                     forward, store, float(bound), traj, out)
    if not ok:
        return None
    return traj if store else out


@numba.njit(cache=True)
def _schr_kernel(x, Q, Qm, lam, u0, forward, store, bound, traj, out):
    n = x.shape[0]
    m = lam.shape[0]
    h = x[1] - x[0]
    if not forward:
        h = -h
    start = 0 if forward else n - 1
    ok = True
    for k in range(m):
        lk = lam[k]
        s = 1.0 / (2j * lk)
        u1 = u0[0, k]
        u2 = u0[1, k]
        rot = np.exp(1j * lk * h)
        E = np.exp(2j * lk * x[start])
        ca = Q[start] * s
        Ea = E
        if store:
            traj[start, 0, k] = u1
            traj[start, 1, k] = u2
        for step in range(n - 1):
            j = step if forward else n - 2 - step
            nxt = j + 1 if forward else j
            Em = E * rot
            if step % 64 == 63:
                E = np.exp(2j * lk * x[nxt])
            else:
                E = Em * rot
            cm = Qm[j] * s
            cb = Q[nxt] * s
            k1a = -ca * (u1 + u2 / Ea)
            k1b = ca * (u1 * Ea + u2)
            v1 = u1 + 0.5 * h * k1a
            v2 = u2 + 0.5 * h * k1b
            k2a = -cm * (v1 + v2 / Em)
            k2b = cm * (v1 * Em + v2)
            v1 = u1 + 0.5 * h * k2a
            v2 = u2 + 0.5 * h * k2b
            k3a = -cm * (v1 + v2 / Em)
            k3b = cm * (v1 * Em + v2)
            v1 = u1 + h * k3a
            v2 = u2 + h * k3b
            k4a = -cb * (v1 + v2 / E)
            k4b = cb * (v1 * E + v2)
            u1 = u1 + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
            u2 = u2 + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
            ca = cb
            Ea = E
            if store:
                traj[nxt, 0, k] = u1
                traj[nxt, 1, k] = u2
            mag = max(abs(u1), abs(u2))
            if not (mag <= bound):
                ok = False
                break
        out[0, k] = u1
        out[1, k] = u2
    return ok


def rk4_schrodinger(x, Q, lam, u0, *, forward=True, store=False,
                    bound=OVERFLOW_BOUND):
    """Variation-of-parameters form of v'' + (λ² + q) v = 0.

    Writing v = A e^{iλx} + B e^{-iλx} with v' = iλ(A e^{iλx} - B e^{-iλx})
    gives A' = -c (A + B e^{-2iλx}), B' = c (A e^{2iλx} + B), c = q/(2iλ).
    Same calling convention as :func:`rk4_offdiag` with u = (A, B).
    """
    x = np.ascontiguousarray(x, dtype=float)
    lam = np.ascontiguousarray(np.atleast_1d(lam), dtype=complex)
    Q = np.ascontiguousarray(Q, dtype=complex)
    m = len(lam)
    u = np.empty((2, m), dtype=complex)
    u[:] = np.asarray(u0, dtype=complex).reshape(2, -1)
    traj = np.empty((len(x) if store else 1, 2, m), dtype=complex)
    out = np.empty((2, m), dtype=complex)
    ok = _schr_kernel(x, Q, midpoints(Q), lam, u, forward, store,
                      float(bound), traj, out)
    if not ok:
        return None
    return traj if store else out


@numba.njit(cache=True)
def _faddeev_kernel(x, Q, Qm, lam, y0, sigma, forward, store, bound, traj, out):
    n = x.shape[0]
    m = lam.shape[0]
    h = x[1] - x[0]
    if not forward:
        h = -h
    start = 0 if forward else n - 1
    ok = True
    for k in range(m):
        g = sigma * 2j * lam[k]
        y1 = y0[0, k]
        y2 = y0[1, k]
        qa = Q[start]
        if store:
            traj[start, 0, k] = y1
            traj[start, 1, k] = y2
        for step in range(n - 1):
            j = step if forward else n - 2 - step
            nxt = j + 1 if forward else j
            qm = Qm[j]
            qb = Q[nxt]
            k1a = y2
            k1b = -qa * y1 + g * y2
            v1 = y1 + 0.5 * h * k1a
            v2 = y2 + 0.5 * h * k1b
            k2a = v2
            k2b = -qm * v1 + g * v2
            v1 = y1 + 0.5 * h * k2a
            v2 = y2 + 0.5 * h * k2b
            k3a = v2
            k3b = -qm * v1 + g * v2
            v1 = y1 + h * k3a
            v2 = y2 + h * k3b
            k4a = v2
            k4b = -qb * v1 + g * v2
            y1 = y1 + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
            y2 = y2 + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
            qa = qb
            if store:
                traj[nxt, 0, k] = y1
                traj[nxt, 1, k] = y2
            if not (max(abs(y1), abs(y2)) <= bound):
                ok = False
                break
        out[0, k] = y1
        out[1, k] = y2
    return ok


def rk4_faddeev(x, Q, lam, y0, sigma, *, forward=True, store=False,
                bound=OVERFLOW_BOUND):
    """RK4 for (m, m') with m'' = -q m + sigma*2iλ m'.

    sigma = -1 gives the m1 equation, sigma = +1 the m2 equation.  Regular
    at λ = 0, unlike :func:`rk4_schrodinger`.
    """
    x = np.ascontiguousarray(x, dtype=float)
    lam = np.ascontiguousarray(np.atleast_1d(lam), dtype=complex)
    Q = np.ascontiguousarray(Q, dtype=complex)
    m = len(lam)
    y = np.empty((2, m), dtype=complex)
    y[:] = np.asarray(y0, dtype=complex).reshape(2, -1)
    traj = np.empty((len(x) if store else 1, 2, m), dtype=complex)
    out = np.empty((2, m), dtype=complex)
    ok = _faddeev_kernel(x, Q, midpoints(Q), lam, y, float(sigma), forward, store,
                         float(bound), traj, out)
    if not ok:
        return None
    return traj if store else out


def gauss_panels(a: float, b: float, density: float, order: int = 8):
    """Composite Gauss-Legendre nodes and weights on [a, b].

    ``density`` is the target number of nodes per unit length.
    """
    if b <= a:
        return np.array([a]), np.array([0.0])
    npan = max(1, int(np.ceil((b - a) * density / order)))
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, npan + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def simpson(y, dx, axis=-1):
    from scipy.integrate import simpson as _simpson
    return _simpson(y, dx=dx, axis=axis)


@numba.njit(cache=True)
def _uniform_ppoly_kernel(c, z0, h, z, out):
    m = c.shape[1]
    for i in range(z.size):
        u = (z.flat[i] - z0) / h
        j = int(np.floor(u))
        if j < 0:
            j = 0
        elif j > m - 1:
            j = m - 1
        d = z.flat[i] - (z0 + j * h)
        out.flat[i] = ((c[0, j] * d + c[1, j]) * d + c[2, j]) * d + c[3, j]


def uniform_ppoly(c, z0: float, h: float, z) -> np.ndarray:
    """Evaluate cubic piecewise coefficients ``c`` (shape (4, m)) on a uniform breakpoint grid."""
    z = np.asarray(z, dtype=float)
    flat = np.ascontiguousarray(z.ravel())
    out = np.empty(flat.shape, dtype=complex)
    _uniform_ppoly_kernel(np.ascontiguousarray(c, dtype=complex), float(z0), float(h), flat, out)
    return out.reshape(z.shape)
