# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 ray integrator for parametric metrics and pairs.

Same contract as ``_numpy_backend.trace``; rays are integrated one after the
other, with metric and attenuation evaluated from their term tables in C.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, cos, sin, sqrt, isfinite
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cnp.import_array()

DEF BISECT_ITERS = 52

DEF MAXG = 4
DEF MAXR = 16


cdef inline double abs_c(double complex z) noexcept nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef enum:
    ST_OK = 0
    ST_TRAPPED = 1
    ST_DIVERGED = 2
    ST_CAPACITY = 3


cdef inline void _accel(const double* mt, int nmt, double x0, double x1,
                        double v0, double v1, double* a) noexcept nogil:
    cdef double g00 = 1.0, g01 = 0.0, g11 = 1.0
    cdef double G0 = 0.0, G1 = 0.0, H0 = 0.0, H1 = 0.0
    cdef double w, dx, dy, env, arg, cs, sn, phi, gx, gy, s00, s01, s11
    cdef double Sv0, Sv1, vSv, gv, r0, r1, det
    cdef int t
    cdef const double* p
    if nmt == 0:
        a[0] = 0.0
        a[1] = 0.0
        return
    for t in range(nmt):
        p = mt + 9 * t
        w = p[0]
        dx = x0 - p[1]
        dy = x1 - p[2]
        env = exp(-w * (dx * dx + dy * dy))
        if p[3] == 0.0 and p[4] == 0.0:
            cs = cos(p[5])
            sn = sin(p[5])
        else:
            arg = p[3] * x0 + p[4] * x1 + p[5]
            cs = cos(arg)
            sn = sin(arg)
        phi = env * cs
        gx = env * (-2.0 * w * dx * cs - p[3] * sn)
        gy = env * (-2.0 * w * dy * cs - p[4] * sn)
        s00 = p[6]
        s01 = p[7]
        s11 = p[8]
        g00 += phi * s00
        g01 += phi * s01
        g11 += phi * s11
        Sv0 = s00 * v0 + s01 * v1
        Sv1 = s01 * v0 + s11 * v1
        vSv = v0 * Sv0 + v1 * Sv1
        gv = gx * v0 + gy * v1
        G0 += gx * vSv
        G1 += gy * vSv
        H0 += gv * Sv0
        H1 += gv * Sv1
    r0 = H0 - 0.5 * G0
    r1 = H1 - 0.5 * G1
    det = g00 * g11 - g01 * g01
    a[0] = -(g11 * r0 - g01 * r1) / det
    a[1] = -(-g01 * r0 + g00 * r1) / det


cdef inline void _atten(const double* pp, const double complex* pc, int npt, int r,
                        double sgn, double x0, double x1, double v0, double v1,
                        double complex* M) noexcept nogil:
    cdef int t, i, rr = r * r
    cdef double w, dx, dy, phi, a, b, c
    cdef double re[MAXR * MAXR]
    cdef double im[MAXR * MAXR]
    cdef const double* p
    cdef const double* cf
    for i in range(rr):
        re[i] = 0.0
        im[i] = 0.0
    for t in range(npt):
        p = pp + 6 * t
        w = p[0]
        dx = x0 - p[1]
        dy = x1 - p[2]
        phi = exp(-w * (dx * dx + dy * dy)) * cos(p[3] * x0 + p[4] * x1 + p[5])
        a = phi * v0
        b = phi * v1
        c = phi * sgn
        # complex entries viewed as interleaved (re, im) doubles
        cf = <const double*> (pc + 3 * rr * t)
        for i in range(rr):
            re[i] += a * cf[2 * i] + b * cf[2 * (rr + i)] + c * cf[2 * (2 * rr + i)]
            im[i] += a * cf[2 * i + 1] + b * cf[2 * (rr + i) + 1] + c * cf[2 * (2 * rr + i) + 1]
    for i in range(rr):
        M[i].real = re[i]
        M[i].imag = im[i]


cdef inline void _gauged(const double* pp, const double complex* pc, int npt, int r,
                         double sgn, const double* gp, const double complex* gm, int ngt,
                         double gs, double x0, double x1, double v0, double v1,
                         double complex* M) noexcept nogil:
    """Attenuation of the pair gauge-transformed by ``p = I + b Q``, ``b = 1 - gs |x|^2``.

    ``M = p^{-1} (dp(v) + M0 p)`` with ``M0`` the untransformed attenuation;
    ranks up to MAXG only.
    """
    cdef double complex P[MAXG * MAXG]
    cdef double complex R[MAXG * MAXG]
    cdef double complex M0[MAXG * MAXG]
    cdef double complex Q[MAXG * MAXG]
    cdef double complex dQv[MAXG * MAXG]
    cdef double complex piv, fac, tmpc
    cdef int t, i, j, l, rr = r * r, best
    cdef double w, dx, dy, env, arg, cs, sn, phi, gx, gy, b, dbv, mag, bm
    cdef const double* p
    _atten(pp, pc, npt, r, sgn, x0, x1, v0, v1, M0)
    for i in range(rr):
        Q[i] = 0.0
        dQv[i] = 0.0
    for t in range(ngt):
        p = gp + 6 * t
        w = p[0]
        dx = x0 - p[1]
        dy = x1 - p[2]
        env = exp(-w * (dx * dx + dy * dy))
        arg = p[3] * x0 + p[4] * x1 + p[5]
        cs = cos(arg)
        sn = sin(arg)
        phi = env * cs
        gx = env * (-2.0 * w * dx * cs - p[3] * sn)
        gy = env * (-2.0 * w * dy * cs - p[4] * sn)
        for i in range(rr):
            Q[i] = Q[i] + phi * gm[t * rr + i]
            dQv[i] = dQv[i] + (gx * v0 + gy * v1) * gm[t * rr + i]
    b = 1.0 - gs * (x0 * x0 + x1 * x1)
    dbv = -2.0 * gs * (x0 * v0 + x1 * v1)
    for i in range(rr):
        P[i] = b * Q[i]
    for i in range(r):
        P[i * r + i] = P[i * r + i] + 1.0
    # R = dp(v) + M0 P
    _mm(M0, P, R, r)
    for i in range(rr):
        R[i] = R[i] + dbv * Q[i] + b * dQv[i]
    # solve P M = R by Gaussian elimination with partial pivoting (P is overwritten)
    for j in range(r):
        best = j
        bm = abs_c(P[j * r + j])
        for i in range(j + 1, r):
            mag = abs_c(P[i * r + j])
            if mag > bm:
                bm = mag
                best = i
        if best != j:
            for l in range(r):
                tmpc = P[j * r + l]
                P[j * r + l] = P[best * r + l]
                P[best * r + l] = tmpc
                tmpc = R[j * r + l]
                R[j * r + l] = R[best * r + l]
                R[best * r + l] = tmpc
        piv = P[j * r + j]
        for i in range(j + 1, r):
            fac = P[i * r + j] / piv
            if fac != 0:
                for l in range(j, r):
                    P[i * r + l] = P[i * r + l] - fac * P[j * r + l]
                for l in range(r):
                    R[i * r + l] = R[i * r + l] - fac * R[j * r + l]
    for j in range(r - 1, -1, -1):
        for l in range(r):
            tmpc = R[j * r + l]
            for i in range(j + 1, r):
                tmpc = tmpc - P[j * r + i] * M[i * r + l]
            M[j * r + l] = tmpc / P[j * r + j]


cdef inline void _att_any(const double* pp, const double complex* pc, int npt, int r,
                          double sgn, const double* gp, const double complex* gm, int ngt,
                          double gs, double x0, double x1, double v0, double v1,
                          double complex* M) noexcept nogil:
    if ngt > 0:
        _gauged(pp, pc, npt, r, sgn, gp, gm, ngt, gs, x0, x1, v0, v1, M)
    else:
        _atten(pp, pc, npt, r, sgn, x0, x1, v0, v1, M)


cdef inline void _mm(const double complex* A, const double complex* B,
                     double complex* C, int r) noexcept nogil:
    cdef int i, j, l
    cdef double complex s
    for i in range(r):
        for j in range(r):
            s = 0.0
            for l in range(r):
                s = s + A[i * r + l] * B[l * r + j]
            C[i * r + j] = s


cdef struct Work:
    double complex* M1
    double complex* M2
    double complex* M3
    double complex* M4
    double complex* k1
    double complex* k2
    double complex* k3
    double complex* k4
    double complex* tmp


cdef inline void _geo_step(const double* mt, int nmt, const double* s, double h,
                           double* out, double* st) noexcept nogil:
    """One RK4 step of (x, v); stage states written to st[0:16]."""
    cdef double a[2]
    cdef double k1x0, k1x1, k1v0, k1v1, k2x0, k2x1, k2v0, k2v1
    cdef double k3x0, k3x1, k3v0, k3v1, k4x0, k4x1, k4v0, k4v1
    st[0] = s[0]; st[1] = s[1]; st[2] = s[2]; st[3] = s[3]
    k1x0 = s[2]; k1x1 = s[3]
    _accel(mt, nmt, s[0], s[1], s[2], s[3], a)
    k1v0 = a[0]; k1v1 = a[1]
    st[4] = s[0] + 0.5 * h * k1x0; st[5] = s[1] + 0.5 * h * k1x1
    st[6] = s[2] + 0.5 * h * k1v0; st[7] = s[3] + 0.5 * h * k1v1
    k2x0 = st[6]; k2x1 = st[7]
    _accel(mt, nmt, st[4], st[5], st[6], st[7], a)
    k2v0 = a[0]; k2v1 = a[1]
    st[8] = s[0] + 0.5 * h * k2x0; st[9] = s[1] + 0.5 * h * k2x1
    st[10] = s[2] + 0.5 * h * k2v0; st[11] = s[3] + 0.5 * h * k2v1
    k3x0 = st[10]; k3x1 = st[11]
    _accel(mt, nmt, st[8], st[9], st[10], st[11], a)
    k3v0 = a[0]; k3v1 = a[1]
    st[12] = s[0] + h * k3x0; st[13] = s[1] + h * k3x1
    st[14] = s[2] + h * k3v0; st[15] = s[3] + h * k3v1
    k4x0 = st[14]; k4x1 = st[15]
    _accel(mt, nmt, st[12], st[13], st[14], st[15], a)
    k4v0 = a[0]; k4v1 = a[1]
    out[0] = s[0] + h / 6.0 * (k1x0 + 2.0 * k2x0 + 2.0 * k3x0 + k4x0)
    out[1] = s[1] + h / 6.0 * (k1x1 + 2.0 * k2x1 + 2.0 * k3x1 + k4x1)
    out[2] = s[2] + h / 6.0 * (k1v0 + 2.0 * k2v0 + 2.0 * k3v0 + k4v0)
    out[3] = s[3] + h / 6.0 * (k1v1 + 2.0 * k2v1 + 2.0 * k3v1 + k4v1)


cdef inline void _mat_step(const double* pp, const double complex* pc, int npt, int r,
                           double sgn, const double* gp, const double complex* gm, int ngt,
                           double gs, const double* st, double h,
                           double complex* U, double complex* W, Work* wk) noexcept nogil:
    cdef int i, rr = r * r
    _att_any(pp, pc, npt, r, sgn, gp, gm, ngt, gs, st[0], st[1], st[2], st[3], wk.M1)
    _att_any(pp, pc, npt, r, sgn, gp, gm, ngt, gs, st[4], st[5], st[6], st[7], wk.M2)
    _att_any(pp, pc, npt, r, sgn, gp, gm, ngt, gs, st[8], st[9], st[10], st[11], wk.M3)
    _att_any(pp, pc, npt, r, sgn, gp, gm, ngt, gs, st[12], st[13], st[14], st[15], wk.M4)
    # U' = -M U
    _mm(wk.M1, U, wk.k1, r)
    for i in range(rr):
        wk.k1[i] = -wk.k1[i]
        wk.tmp[i] = U[i] + 0.5 * h * wk.k1[i]
    _mm(wk.M2, wk.tmp, wk.k2, r)
    for i in range(rr):
        wk.k2[i] = -wk.k2[i]
        wk.tmp[i] = U[i] + 0.5 * h * wk.k2[i]
    _mm(wk.M3, wk.tmp, wk.k3, r)
    for i in range(rr):
        wk.k3[i] = -wk.k3[i]
        wk.tmp[i] = U[i] + h * wk.k3[i]
    _mm(wk.M4, wk.tmp, wk.k4, r)
    for i in range(rr):
        U[i] = U[i] + h / 6.0 * (wk.k1[i] + 2.0 * wk.k2[i] + 2.0 * wk.k3[i] - wk.k4[i])
    # W' = W M
    _mm(W, wk.M1, wk.k1, r)
    for i in range(rr):
        wk.tmp[i] = W[i] + 0.5 * h * wk.k1[i]
    _mm(wk.tmp, wk.M2, wk.k2, r)
    for i in range(rr):
        wk.tmp[i] = W[i] + 0.5 * h * wk.k2[i]
    _mm(wk.tmp, wk.M3, wk.k3, r)
    for i in range(rr):
        wk.tmp[i] = W[i] + h * wk.k3[i]
    _mm(wk.tmp, wk.M4, wk.k4, r)
    for i in range(rr):
        W[i] = W[i] + h / 6.0 * (wk.k1[i] + 2.0 * wk.k2[i] + 2.0 * wk.k3[i] + wk.k4[i])


def trace(double[:, ::1] mterms, double[:, ::1] pprof, double complex[:, :, :, ::1] pcoef,
          double[:, ::1] gprof, double complex[:, :, ::1] gmats, double gscale, int rank, double phi_sign, double[:, ::1] x0, double[:, ::1] v0, double dt,
          double r_out, double r_event, bint transport, bint record, bint record_U,
          double max_len, int cap):
    cdef Py_ssize_t n = x0.shape[0]
    cdef int nmt = mterms.shape[0]
    cdef int npt = pprof.shape[0] if transport else 0
    cdef int r = rank if transport else 1
    cdef int rr = r * r
    cdef const double* mt = &mterms[0, 0] if nmt > 0 else NULL
    cdef const double* pp = &pprof[0, 0] if npt > 0 else NULL
    cdef const double complex* pc = &pcoef[0, 0, 0, 0] if npt > 0 else NULL
    cdef int ngt = gprof.shape[0] if transport else 0
    cdef const double* gp = &gprof[0, 0] if ngt > 0 else NULL
    cdef const double complex* gm = &gmats[0, 0, 0] if ngt > 0 else NULL
    cdef double gs = gscale
    if transport and rank > MAXR:
        raise ValueError("the compiled kernel handles ranks up to 16")
    if ngt > 0 and rank > MAXG:
        raise ValueError("gauged pairs are limited to rank 4 in the compiled kernel")

    status_a = np.zeros(n, dtype=np.int8)
    tau_a = np.zeros(n)
    xo_a = np.zeros((n, 2))
    vo_a = np.zeros((n, 2))
    ent_a = np.zeros(n, dtype=np.uint8)
    U_a = np.zeros((n, r, r), dtype=complex)
    W_a = np.zeros((n, r, r), dtype=complex)
    cdef signed char[::1] status = status_a
    cdef double[::1] tau = tau_a
    cdef double[:, ::1] xo = xo_a
    cdef double[:, ::1] vo = vo_a
    cdef unsigned char[::1] ent = ent_a
    cdef double complex[:, :, ::1] Uo = U_a
    cdef double complex[:, :, ::1] Wo = W_a

    cdef Py_ssize_t ncap = cap if record else 1
    cnt_a = np.zeros(n, dtype=np.int64)
    rt_a = np.zeros((n, ncap))
    rs_a = np.zeros((n, ncap, 4))
    rW_a = np.zeros((n, ncap if (record and transport) else 1, r, r), dtype=complex)
    rU_a = np.zeros((n, ncap if (record and transport and record_U) else 1, r, r),
                    dtype=complex)
    cdef long long[::1] cnt = cnt_a
    cdef double[:, ::1] rt = rt_a
    cdef double[:, :, ::1] rs = rs_a
    cdef double complex[:, :, :, ::1] rW = rW_a
    cdef double complex[:, :, :, ::1] rU = rU_a

    cdef Work wk
    wk.M1 = <double complex*> malloc(9 * rr * sizeof(double complex))
    wk.M2 = wk.M1 + rr
    wk.M3 = wk.M2 + rr
    wk.M4 = wk.M3 + rr
    wk.k1 = wk.M4 + rr
    wk.k2 = wk.k1 + rr
    wk.k3 = wk.k2 + rr
    wk.k4 = wk.k3 + rr
    wk.tmp = wk.k4 + rr
    cdef double complex* U = <double complex*> malloc(4 * rr * sizeof(double complex))
    cdef double complex* W = U + rr
    cdef double complex* U0 = W + rr
    cdef double complex* W0 = U0 + rr

    cdef double s[4]
    cdef double sn[4]
    cdef double st[16]
    cdef double st_tmp[16]
    cdef double xm[4]
    cdef double t, h, r2, rho2, sgn, lo, hi, mid, F
    cdef double ro2 = r_out * r_out
    cdef double re2 = r_event * r_event
    cdef bint use_event = r_event > 0
    cdef int phase, it, kind, i, j
    cdef long long c
    cdef Py_ssize_t ray
    cdef bint bad

    with nogil:
        for ray in range(n):
            s[0] = x0[ray, 0]; s[1] = x0[ray, 1]; s[2] = v0[ray, 0]; s[3] = v0[ray, 1]
            t = 0.0
            for i in range(rr):
                U[i] = 0.0
                W[i] = 0.0
            for i in range(r):
                U[i * r + i] = 1.0
                W[i * r + i] = 1.0
            phase = 0 if use_event else 1
            ent[ray] = 0 if use_event else 1
            c = 0
            if record and phase == 1:
                rt[ray, 0] = t
                for i in range(4):
                    rs[ray, 0, i] = s[i]
                if transport:
                    for i in range(r):
                        for j in range(r):
                            rW[ray, 0, i, j] = W[i * r + j]
                            if record_U:
                                rU[ray, 0, i, j] = U[i * r + j]
                c = 1
            while True:
                h = dt
                _geo_step(mt, nmt, s, h, sn, st)
                r2 = sn[0] * sn[0] + sn[1] * sn[1]
                # kind: 0 none, 1 exit, 2 enter, 3 leave
                kind = 0
                if r2 > ro2:
                    kind = 1
                elif use_event and phase == 0 and r2 < re2:
                    kind = 2
                elif use_event and phase == 1 and r2 > re2:
                    kind = 3
                if kind != 0:
                    rho2 = ro2 if kind == 1 else re2
                    sgn = -1.0 if kind == 2 else 1.0
                    lo = 0.0
                    hi = dt
                    for it in range(BISECT_ITERS):
                        mid = 0.5 * (lo + hi)
                        _geo_step(mt, nmt, s, mid, xm, st_tmp)
                        F = sgn * (xm[0] * xm[0] + xm[1] * xm[1] - rho2)
                        if F > 0:
                            hi = mid
                        else:
                            lo = mid
                    h = hi
                    _geo_step(mt, nmt, s, h, sn, st)
                if transport:
                    _mat_step(pp, pc, npt, r, phi_sign, gp, gm, ngt, gs, st, h, U, W, &wk)
                for i in range(4):
                    s[i] = sn[i]
                t += h
                bad = not (isfinite(s[0]) and isfinite(s[1]) and isfinite(s[2]) and isfinite(s[3]))
                if transport and not bad:
                    for i in range(rr):
                        if not (isfinite(U[i].real) and isfinite(U[i].imag)):
                            bad = True
                            break
                if kind == 2:
                    phase = 1
                    ent[ray] = 1
                if record and not bad and (phase == 1):
                    if c >= ncap:
                        status[ray] = ST_CAPACITY
                        break
                    rt[ray, c] = t
                    for i in range(4):
                        rs[ray, c, i] = s[i]
                    if transport:
                        for i in range(r):
                            for j in range(r):
                                rW[ray, c, i, j] = W[i * r + j]
                                if record_U:
                                    rU[ray, c, i, j] = U[i * r + j]
                    c += 1
                if kind == 3:
                    phase = 2
                if bad:
                    status[ray] = ST_DIVERGED
                    break
                if kind == 1:
                    break
                if t > max_len:
                    status[ray] = ST_TRAPPED
                    break
            tau[ray] = t
            xo[ray, 0] = s[0]; xo[ray, 1] = s[1]
            vo[ray, 0] = s[2]; vo[ray, 1] = s[3]
            if transport:
                for i in range(r):
                    for j in range(r):
                        Uo[ray, i, j] = U[i * r + j]
                        Wo[ray, i, j] = W[i * r + j]
            cnt[ray] = c
    free(wk.M1)
    free(U)

    out = {"status": status_a, "tau": tau_a, "x": xo_a, "v": vo_a,
           "U": U_a if transport else None, "W": W_a if transport else None,
           "entered": ent_a.astype(bool)}
    if record:
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(cnt_a, out=offsets[1:])
        mask = np.arange(ncap)[None, :] < cnt_a[:, None]
        out["offsets"] = offsets
        out["rec_t"] = rt_a[mask]
        sv = rs_a[mask]
        out["rec_x"] = np.ascontiguousarray(sv[:, :2])
        out["rec_v"] = np.ascontiguousarray(sv[:, 2:])
        if transport:
            out["rec_W"] = rW_a[mask]
            if record_U:
                out["rec_U"] = rU_a[mask]
    return out
