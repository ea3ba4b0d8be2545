# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop for the two-dimensional risk reduction.

For an equivariant estimator h(||X||^2) X the frequentist risk collapses to a
double integral over (t, w); this module evaluates the full inner t-integral
at fixed w as one C loop over precomputed Gauss-Jacobi nodes, so the adaptive
outer rule drives a cheap scalar callback.  The numpy path in `risk` computes
the identical quantity and is selected when this extension is unavailable or
when user-defined models/losses are involved.
"""

from libc.math cimport atan, erf, exp, fabs, log, log1p, pow, sqrt, tanh

cdef double SQRT_HALF = 0.7071067811865476

# model families
cdef int FAM_EXPMIX = 0
cdef int FAM_KOTZ = 1
cdef int FAM_BALL = 2

# loss shapes
cdef int LOSS_IDENTITY = 0
cdef int LOSS_REFNORM = 1
cdef int LOSS_LOG1P = 2
cdef int LOSS_POWSHIFT = 3
cdef int LOSS_RATIONAL = 4
cdef int LOSS_ATAN = 5
cdef int LOSS_TANH = 6
cdef int LOSS_POWER = 7
cdef int LOSS_TNORMCDF = 8

# layout of the packed parameter vector (see _fastpath.pack_parameters)
cdef int P_LAM = 0
cdef int P_CPSI = 1
cdef int P_WEXP = 2      # d/2 - 1
cdef int P_JEXP = 3      # (d - 3)/2
cdef int P_FAMILY = 4
cdef int P_G0 = 5        # kotz: coef; ball: coef
cdef int P_G1 = 6        # kotz: t-exponent
cdef int P_G2 = 7        # kotz: rate
cdef int P_G3 = 8        # kotz: power
cdef int P_ZCUT = 9      # generator support/truncation bound on z
cdef int P_LOSS = 10
cdef int P_LP1 = 11
cdef int P_LP2 = 12
cdef int P_ELLFORM = 13
cdef int P_OMEGA = 14
cdef int P_B = 15
cdef int P_MULTC = 16
PARAM_LEN = 17


cdef inline double loss_value(int kind, double p1, double p2, double t) nogil:
    if t < 0.0:
        t = 0.0
    if kind == LOSS_IDENTITY:
        return t
    elif kind == LOSS_REFNORM:
        return 1.0 - exp(-p1 * t)
    elif kind == LOSS_LOG1P:
        return log1p(t)
    elif kind == LOSS_POWSHIFT:
        return pow(1.0 + t / p1, p2) - 1.0
    elif kind == LOSS_RATIONAL:
        return p1 * p1 * t / (p1 * t + 1.0)
    elif kind == LOSS_ATAN:
        return atan(t)
    elif kind == LOSS_TANH:
        return tanh(t)
    elif kind == LOSS_POWER:
        return pow(t, p1)
    elif kind == LOSS_TNORMCDF:
        return erf(t * SQRT_HALF)
    return 0.0


cdef inline double gen_value(int family, double g0, double g1, double g2,
                             double g3, double z_cut,
                             double[::1] mix_coef, double[::1] mix_rate,
                             double z) nogil:
    cdef double acc
    cdef Py_ssize_t i
    if family == FAM_EXPMIX:
        acc = 0.0
        for i in range(mix_coef.shape[0]):
            acc += mix_coef[i] * exp(-mix_rate[i] * z)
        return acc
    elif family == FAM_KOTZ:
        if z <= 0.0:
            z = 1e-300
        return g0 * pow(z, g1) * exp(-g2 * pow(z, g3))
    else:  # FAM_BALL
        return g0 if z < z_cut else 0.0


def risk_outer_integrand(double w, double[::1] par,
                         double[::1] t_nodes, double[::1] t_wts,
                         double[::1] c_nodes, double[::1] c_wts,
                         double[::1] mix_coef, double[::1] mix_rate):
    """Outer integrand at fixed w: c_psi w^{d/2-1} * inner t-integral.

    t_nodes/t_wts: symmetric Gauss-Jacobi rule with weight (1-t^2)^{(d-3)/2},
    used while the z-range (sqrt(w) -/+ lam)^2 sits inside the generator's
    effective support.  c_nodes/c_wts: Jacobi rule with weight
    (1+x)^{(d-3)/2}, used to integrate over z in [a_z, z_cut] when the range
    pokes past the support bound (exact ball edge handling, and node
    placement on the generator's mass at large lam).
    """
    if w <= 0.0:
        return 0.0

    cdef double lam = par[P_LAM]
    cdef double cpsi = par[P_CPSI]
    cdef double wexp = par[P_WEXP]
    cdef double jexp = par[P_JEXP]
    cdef int family = <int> par[P_FAMILY]
    cdef double g0 = par[P_G0], g1 = par[P_G1], g2 = par[P_G2], g3 = par[P_G3]
    cdef double z_cut = par[P_ZCUT]
    cdef int loss = <int> par[P_LOSS]
    cdef double lp1 = par[P_LP1], lp2 = par[P_LP2]
    cdef int ell_form = <int> par[P_ELLFORM]
    cdef double omega = par[P_OMEGA]
    cdef double b = par[P_B]
    cdef double mult_c = par[P_MULTC]

    cdef double sq = sqrt(w)
    cdef double shr = b / (w + mult_c)          # b * s(w) / w for s = w/(w+c)
    cdef double fit = shr * shr * w             # ||delta - x||^2
    cdef double h = 1.0 - shr
    cdef double h2w = h * h * w
    cdef double lam2 = lam * lam
    cdef double two_lam_sq = 2.0 * lam * sq

    cdef double fit_term = 0.0
    if ell_form == 0:
        fit_term = omega * loss_value(loss, lp1, lp2, fit)

    cdef double acc = 0.0
    cdef double t, z, fz, prec, lval
    cdef double a_z, b_z, half, scale
    cdef Py_ssize_t j, n

    a_z = (sq - lam) * (sq - lam)
    b_z = (sq + lam) * (sq + lam)
    if a_z >= z_cut:
        return 0.0
    if b_z > z_cut:
        half = (z_cut - a_z) * 0.5
        scale = pow(half, jexp + 1.0) / pow(two_lam_sq, 2.0 * jexp + 1.0)
        n = c_nodes.shape[0]
        for j in range(n):
            z = a_z + half * (c_nodes[j] + 1.0)
            fz = gen_value(family, g0, g1, g2, g3, z_cut, mix_coef, mix_rate, z)
            if fz == 0.0:
                continue
            t = (w + lam2 - z) / two_lam_sq
            prec = lam2 + h2w - two_lam_sq * h * t
            if ell_form == 0:
                lval = fit_term + (1.0 - omega) * loss_value(loss, lp1, lp2, prec)
            else:
                if prec < 0.0:
                    prec = 0.0
                lval = loss_value(loss, lp1, lp2, omega * fit + (1.0 - omega) * prec)
            acc += c_wts[j] * pow(b_z - z, jexp) * fz * lval
        return cpsi * pow(w, wexp) * scale * acc

    n = t_nodes.shape[0]
    for j in range(n):
        t = t_nodes[j]
        z = w + lam2 - two_lam_sq * t
        fz = gen_value(family, g0, g1, g2, g3, z_cut, mix_coef, mix_rate, z)
        if fz == 0.0:
            continue
        prec = lam2 + h2w - two_lam_sq * h * t
        if ell_form == 0:
            lval = fit_term + (1.0 - omega) * loss_value(loss, lp1, lp2, prec)
        else:
            if prec < 0.0:
                prec = 0.0
            lval = loss_value(loss, lp1, lp2, omega * fit + (1.0 - omega) * prec)
        acc += t_wts[j] * fz * lval
    return cpsi * pow(w, wexp) * acc
