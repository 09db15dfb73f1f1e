"""Compiled inner loops for the trajectory steppers.

Each ``*_chunk`` kernel advances its state in place across a block of
Euler-Maruyama (or Kraus) steps.  ``dw`` holds pre-scaled Wiener increments
(variance ``dt``); ``step0`` is the global index of the first step in the
block.  Records follow one convention everywhere: whenever a global step
index ``g`` is a multiple of ``stride``, the kernel writes the *pre-step*
state into row ``g // stride`` of ``obs`` (columns sx, sy, sz, purity) and,
if requested, of ``states``.  The driver appends the final post-run record
itself, so kernels never write row ``n_steps // stride``.

The arithmetic matches the reference coefficient functions in
:mod:`.models` term for term; cross-checking the two is part of the test
suite.  Everything is compiled with ``nogil`` so ensemble workers can run
in threads.
"""

import numpy as np
from numba import njit

SQRT2 = np.sqrt(2.0)
SQRT3 = np.sqrt(3.0)
SQRT23 = np.sqrt(2.0 / 3.0)
SQRT32 = np.sqrt(1.5)


# ---------------------------------------------------------------------------
# vector models
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def rabi_chunk(state, dw, alpha, epsilon, dt, step0, stride, obs, states,
               rec_states):
    phi = state[0]
    for i in range(dw.shape[0]):
        g = step0 + i
        if g % stride == 0:
            r = g // stride
            obs[r, 0] = 0.0
            obs[r, 1] = -0.5 * np.sin(phi)
            obs[r, 2] = 0.5 * np.cos(phi)
            obs[r, 3] = 1.0
            if rec_states:
                states[r, 0] = phi
        phi += ((epsilon - 0.25 * alpha * alpha * np.sin(2.0 * phi)) * dt
                - alpha * np.sin(phi) * dw[i])
    state[0] = phi


@njit(cache=True, nogil=True)
def bloch_chunk(state, dw, alpha, epsilon, dt, step0, stride, obs, states,
                rec_states):
    x, y, z = state[0], state[1], state[2]
    a2 = alpha * alpha
    for i in range(dw.shape[0]):
        g = step0 + i
        if g % stride == 0:
            r = g // stride
            obs[r, 0] = 0.5 * x
            obs[r, 1] = 0.5 * y
            obs[r, 2] = 0.5 * z
            obs[r, 3] = 0.5 * (1.0 + x * x + y * y + z * z)
            if rec_states:
                states[r, 0] = x
                states[r, 1] = y
                states[r, 2] = z
        w = dw[i]
        nx = x + (-0.5 * a2 * x) * dt + (-alpha * z * x) * w
        ny = y + (-epsilon * z - 0.5 * a2 * y) * dt + (-alpha * z * y) * w
        nz = z + (epsilon * y) * dt + (alpha * (1.0 - z * z)) * w
        x, y, z = nx, ny, nz
    state[0], state[1], state[2] = x, y, z


@njit(cache=True, nogil=True)
def spin_half_components_chunk(state, dw, alpha, epsilon, dt, step0, stride,
                               obs, states, rec_states):
    sz, sx, sy = state[0], state[1], state[2]
    a2 = alpha * alpha
    for i in range(dw.shape[0]):
        g = step0 + i
        if g % stride == 0:
            r = g // stride
            obs[r, 0] = sx
            obs[r, 1] = sy
            obs[r, 2] = sz
            obs[r, 3] = 0.5 + 2.0 * (sz * sz + sx * sx + sy * sy)
            if rec_states:
                states[r, 0] = sz
                states[r, 1] = sx
                states[r, 2] = sy
        w = dw[i]
        nz = sz + (epsilon * sy) * dt + (2.0 * alpha * (0.25 - sz * sz)) * w
        nx = sx + (-0.5 * a2 * sx) * dt + (-2.0 * alpha * sz * sx) * w
        ny = sy + (-epsilon * sz - 0.5 * a2 * sy) * dt + (-2.0 * alpha * sz * sy) * w
        sz, sx, sy = nz, nx, ny
    state[0], state[1], state[2] = sz, sx, sy


@njit(cache=True, nogil=True)
def gm8_chunk(state, dw, alpha, epsilon, dt, step0, stride, obs, states,
              rec_states):
    s = state[0]
    m = state[1]
    u = state[2]
    v = state[3]
    k = state[4]
    x = state[5]
    y = state[6]
    z = state[7]
    a2 = alpha * alpha
    e = epsilon
    for i in range(dw.shape[0]):
        g = step0 + i
        if g % stride == 0:
            r = g // stride
            obs[r, 0] = SQRT23 * (x + s)
            obs[r, 1] = SQRT23 * (m + y)
            obs[r, 2] = u / SQRT3 + z
            obs[r, 3] = ((2.0 / 3.0) * (s * s + m * m + u * u + v * v
                                        + k * k + x * x + y * y + z * z)
                         + 1.0 / 3.0)
            if rec_states:
                states[r, 0] = s
                states[r, 1] = m
                states[r, 2] = u
                states[r, 3] = v
                states[r, 4] = k
                states[r, 5] = x
                states[r, 6] = y
                states[r, 7] = z
        w = dw[i]
        minus = -3.0 + 2.0 * SQRT3 * u + 6.0 * z
        plus = 3.0 + 2.0 * SQRT3 * u + 6.0 * z
        inner = SQRT3 * u + 3.0 * z
        ns = s + (e * k / SQRT2 - 0.5 * a2 * s) * dt - alpha * (s / 3.0) * minus * w
        nm = m + (-e * (2.0 * u + v) / SQRT2 - 0.5 * a2 * m) * dt \
            - alpha * (m / 3.0) * minus * w
        nu = u + (e * (2.0 * m - y) / SQRT2) * dt \
            + alpha / SQRT3 * (1.0 - 2.0 * u * u + SQRT3 * u * (1.0 - 2.0 * z) + z) * w
        nv = v + (e * (m - y) / SQRT2 - 2.0 * a2 * v) * dt \
            - (2.0 / 3.0) * alpha * v * inner * w
        nk = k + (e * (-s + x) / SQRT2 - 2.0 * a2 * k) * dt \
            - (2.0 / 3.0) * alpha * k * inner * w
        nx = x + (-e * k / SQRT2 - 0.5 * a2 * x) * dt \
            - alpha * (x / 3.0) * plus * w
        ny = y + (e * (u + v - SQRT3 * z) / SQRT2 - 0.5 * a2 * y) * dt \
            - alpha * (y / 3.0) * plus * w
        nz = z + (e * SQRT32 * y) * dt \
            - (alpha / 3.0) * (-1.0 + 2.0 * z) * (3.0 + inner) * w
        s, m, u, v, k, x, y, z = ns, nm, nu, nv, nk, nx, ny, nz
    state[0] = s
    state[1] = m
    state[2] = u
    state[3] = v
    state[4] = k
    state[5] = x
    state[6] = y
    state[7] = z


@njit(cache=True, nogil=True)
def spin1_components_chunk(state, dw, alpha, epsilon, dt, step0, stride,
                           gram_pinv, obs, states, rec_states):
    sz = state[0]
    sx = state[1]
    sy = state[2]
    syy = state[3]
    szz = state[4]
    syz = state[5]
    szx = state[6]
    cr = state[7]
    ci = state[8]
    a2 = alpha * alpha
    e = epsilon
    t = np.empty(10)
    for i in range(dw.shape[0]):
        g = step0 + i
        if g % stride == 0:
            r = g // stride
            obs[r, 0] = sx
            obs[r, 1] = sy
            obs[r, 2] = sz
            t[0] = 1.0
            t[1] = sz
            t[2] = sx
            t[3] = sy
            t[4] = syy
            t[5] = szz
            t[6] = syz
            t[7] = szx
            t[8] = cr
            t[9] = ci
            p = 0.0
            for a in range(10):
                row = 0.0
                for b in range(10):
                    row += gram_pinv[a, b] * t[b]
                p += t[a] * row
            obs[r, 3] = p
            if rec_states:
                for a in range(9):
                    states[r, a] = state[a]
        w = dw[i]
        nz = sz + (e * sy) * dt + 2.0 * alpha * (szz - sz * sz) * w
        nx = sx + (-0.5 * a2 * sx) * dt + alpha * (szx - 2.0 * sz * sx) * w
        ny = sy + (-e * sz - 0.5 * a2 * sy) * dt + alpha * (syz - 2.0 * sz * sy) * w
        nyy = syy + (-e * syz - a2 * (-ci + szz + syy - 1.0)) * dt \
            + alpha * sz * (1.0 - 2.0 * syy) * w
        nzz = szz + (e * syz) * dt + 2.0 * alpha * sz * (1.0 - szz) * w
        nyz = syz + (2.0 * e * (syy - szz) - 0.5 * a2 * syz) * dt \
            + alpha * (sy - 2.0 * sz * syz) * w
        nzx = szx + (-0.5 * a2 * szx) * dt + alpha * (sx - 2.0 * sz * szx) * w
        ncr = cr + (-2.0 * a2 * cr) * dt + (-2.0 * alpha * sz * cr) * w
        nci = ci + (e * syz + a2 * (szz - 2.0 * ci)) * dt \
            + alpha * sz * (1.0 - 2.0 * ci) * w
        sz, sx, sy, syy, szz, syz, szx, cr, ci = \
            nz, nx, ny, nyy, nzz, nyz, nzx, ncr, nci
        state[0] = sz
        state[1] = sx
        state[2] = sy
        state[3] = syy
        state[4] = szz
        state[5] = syz
        state[6] = szx
        state[7] = cr
        state[8] = ci


@njit(cache=True, nogil=True)
def su15_chunk(state, dw, alpha, epsilon, dt, step0, stride, obs, states,
               rec_states):
    # drive sign flipped to match the density-matrix unravelling in every
    # observable; see spin32_coherence_coefficients
    epsilon = -epsilon
    v = state[0]
    e = state[1]
    f = state[2]
    g_ = state[3]
    h = state[4]
    j = state[5]
    k = state[6]
    l = state[7]
    m = state[8]
    n = state[9]
    o = state[10]
    p = state[11]
    q = state[12]
    s = state[13]
    u = state[14]
    a2 = alpha * alpha
    ep = epsilon
    for i in range(dw.shape[0]):
        gi = step0 + i
        if gi % stride == 0:
            r = gi // stride
            obs[r, 0] = 0.5 * (h + n + SQRT3 * v)
            obs[r, 1] = 0.5 * (SQRT3 * e - j + m)
            obs[r, 2] = 0.5 * f + p
            obs[r, 3] = 0.25 * (1.0 + v * v + e * e + f * f + g_ * g_ + h * h
                                + j * j + k * k + l * l + m * m + n * n
                                + o * o + p * p + q * q + s * s + u * u)
            if rec_states:
                states[r, 0] = v
                states[r, 1] = e
                states[r, 2] = f
                states[r, 3] = g_
                states[r, 4] = h
                states[r, 5] = j
                states[r, 6] = k
                states[r, 7] = l
                states[r, 8] = m
                states[r, 9] = n
                states[r, 10] = o
                states[r, 11] = p
                states[r, 12] = q
                states[r, 13] = s
                states[r, 14] = u
        w = dw[i]
        fp = f + 2.0 * p
        nv = v + (-ep * o - 0.5 * a2 * v) * dt + alpha * (2.0 * q - v * fp) * w
        ne = e + (ep * (SQRT3 * f + k) - 0.5 * a2 * e) * dt \
            + alpha * (2.0 * s - e * fp) * w
        nf = f + (-ep * (SQRT3 * e + j - m)) * dt \
            - alpha * (-1.0 + f * f + 2.0 * f * p - 2.0 * u) * w
        ng = g_ + (-ep * s - 2.0 * a2 * g_) * dt + alpha * (k - g_ * fp) * w
        nh = h + (-0.5 * a2 * (5.0 * h - 4.0 * n)) * dt - alpha * h * fp * w
        nj = j + (ep * (f + SQRT3 * k - p) - 0.5 * a2 * (5.0 * j + 4.0 * m)) * dt \
            - alpha * j * fp * w
        nk = k + (-ep * (e + SQRT3 * j) - 2.0 * a2 * k) * dt \
            + alpha * (g_ - k * fp) * w
        nl = l + (ep * q - 2.0 * a2 * l) * dt + alpha * (o - l * fp) * w
        nm = m + (ep * (-f + p) - 0.5 * a2 * (4.0 * j + 5.0 * m)) * dt \
            - alpha * m * fp * w
        nn = n + (ep * SQRT3 * o + a2 * (2.0 * h - 2.5 * n)) * dt \
            - alpha * n * fp * w
        no = o + (ep * (-SQRT3 * n + v) - 2.0 * a2 * o) * dt \
            + alpha * (l - o * fp) * w
        np_ = p + (ep * (j - m)) * dt + alpha * (2.0 - p * fp + u) * w
        nq = q + (-ep * l - 0.5 * a2 * q) * dt \
            - alpha * (f * q + 2.0 * p * q - 2.0 * v) * w
        ns = s + (ep * (g_ + SQRT3 * u) - 0.5 * a2 * s) * dt \
            + alpha * (2.0 * e - s * fp) * w
        nu = u + (-ep * SQRT3 * s) * dt + alpha * (2.0 * f + p - u * fp) * w
        v, e, f, g_, h, j, k, l = nv, ne, nf, ng, nh, nj, nk, nl
        m, n, o, p, q, s, u = nm, nn, no, np_, nq, ns, nu
    state[0] = v
    state[1] = e
    state[2] = f
    state[3] = g_
    state[4] = h
    state[5] = j
    state[6] = k
    state[7] = l
    state[8] = m
    state[9] = n
    state[10] = o
    state[11] = p
    state[12] = q
    state[13] = s
    state[14] = u


# ---------------------------------------------------------------------------
# matrix models
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _mm(a, b, out):
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            acc = 0.0 + 0.0j
            for k in range(n):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc


@njit(cache=True, nogil=True)
def _record_matrix(rho, sx, sy, sz, r, obs, states, rec_states):
    d = rho.shape[0]
    ex = 0.0
    ey = 0.0
    ez = 0.0
    pur = 0.0
    for a in range(d):
        for b in range(d):
            rab = rho[a, b]
            ex += (rab * sx[b, a]).real
            ey += (rab * sy[b, a]).real
            ez += (rab * sz[b, a]).real
            pur += rab.real * rab.real + rab.imag * rab.imag
    obs[r, 0] = ex
    obs[r, 1] = ey
    obs[r, 2] = ez
    obs[r, 3] = pur
    if rec_states:
        for a in range(d):
            for b in range(d):
                states[r, a, b] = rho[a, b]


@njit(cache=True, nogil=True)
def matrix_chunk(rho, h, l, ldag, ldl, sx, sy, sz, dw, dt, step0, stride,
                 renorm_tol, eig_floor, eig_every, obs, states, rec_states,
                 stats):
    """Euler-Maruyama on the density matrix, single noise channel.

    ``stats``: [renormalization count, max trace deviation, min eigenvalue
    seen, failing global step or -1].  Returns early on hard positivity
    failure (min eigenvalue below ``eig_floor``).
    """
    d = rho.shape[0]
    hr = np.empty((d, d), np.complex128)
    lr = np.empty((d, d), np.complex128)
    kr = np.empty((d, d), np.complex128)
    lrl = np.empty((d, d), np.complex128)
    for i in range(dw.shape[0]):
        g = step0 + i
        record = g % stride == 0
        if record or eig_every:
            wmin = np.linalg.eigvalsh(rho)[0]
            if wmin < stats[2]:
                stats[2] = wmin
            if wmin < eig_floor:
                stats[3] = g
                return
        if record:
            _record_matrix(rho, sx, sy, sz, g // stride, obs, states, rec_states)
        _mm(h, rho, hr)
        _mm(l, rho, lr)
        _mm(ldl, rho, kr)
        _mm(lr, ldag, lrl)
        mtr = 0.0
        for a in range(d):
            mtr += 2.0 * lr[a, a].real
        w = dw[i]
        for a in range(d):
            for b in range(d):
                drift = (-1j * (hr[a, b] - np.conj(hr[b, a]))
                         + lrl[a, b]
                         - 0.5 * (kr[a, b] + np.conj(kr[b, a])))
                noise = lr[a, b] + np.conj(lr[b, a]) - mtr * rho[a, b]
                rho[a, b] = rho[a, b] + drift * dt + noise * w
        for a in range(d):
            rho[a, a] = complex(rho[a, a].real, 0.0)
            for b in range(a + 1, d):
                val = 0.5 * (rho[a, b] + np.conj(rho[b, a]))
                rho[a, b] = val
                rho[b, a] = np.conj(val)
        tr = 0.0
        for a in range(d):
            tr += rho[a, a].real
        dev = abs(tr - 1.0)
        if dev > stats[1]:
            stats[1] = dev
        if dev > renorm_tol:
            inv = 1.0 / tr
            for a in range(d):
                for b in range(d):
                    rho[a, b] = rho[a, b] * inv
            stats[0] += 1.0


@njit(cache=True, nogil=True)
def kraus_chunk(rho, m_plus, m_minus, md_plus, md_minus, sx, sy, sz, us,
                dt, step0, stride, eig_floor, eig_every, obs, states,
                rec_states, stats):
    """Two-branch Kraus stepper (one measurement channel).

    Branch 0 carries ``+L sqrt(dt)``, branch 1 ``-L sqrt(dt)``; ``us`` are
    the per-step selection uniforms.  ``stats`` as in ``matrix_chunk``; a
    non-positive total branch probability also sets the failing step.
    """
    d = rho.shape[0]
    t_plus = np.empty((d, d), np.complex128)
    t_minus = np.empty((d, d), np.complex128)
    new = np.empty((d, d), np.complex128)
    for i in range(us.shape[0]):
        g = step0 + i
        record = g % stride == 0
        if record or eig_every:
            wmin = np.linalg.eigvalsh(rho)[0]
            if wmin < stats[2]:
                stats[2] = wmin
            if wmin < eig_floor:
                stats[3] = g
                return
        if record:
            _record_matrix(rho, sx, sy, sz, g // stride, obs, states, rec_states)
        _mm(m_plus, rho, t_plus)
        _mm(m_minus, rho, t_minus)
        p_plus = 0.0
        p_minus = 0.0
        for a in range(d):
            for b in range(d):
                p_plus += (t_plus[a, b] * np.conj(m_plus[a, b])).real
                p_minus += (t_minus[a, b] * np.conj(m_minus[a, b])).real
        total = p_plus + p_minus
        if total <= 0.0:
            stats[3] = g
            return
        if us[i] * total < p_plus:
            _mm(t_plus, md_plus, new)
            inv = 1.0 / p_plus
        else:
            _mm(t_minus, md_minus, new)
            inv = 1.0 / p_minus
        for a in range(d):
            rho[a, a] = complex(new[a, a].real * inv, 0.0)
            for b in range(a + 1, d):
                val = 0.5 * (new[a, b] + np.conj(new[b, a])) * inv
                rho[a, b] = val
                rho[b, a] = np.conj(val)
        tr = 0.0
        for a in range(d):
            tr += rho[a, a].real
        dev = abs(tr - 1.0)
        if dev > stats[1]:
            stats[1] = dev
