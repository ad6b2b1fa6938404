"""Sequential LMS inner loops, the runtime hot spots of the simulator.

Both kernels are written as plain Python over preallocated numpy arrays and
compiled with numba when available.  Setting the environment variable
``SHCSIM_DISABLE_NUMBA=1`` (or running without numba installed) selects the
uncompiled fallback; results are identical, only slower.  The functions
``alamouti_lms_python`` / ``alamouti_lms_numba`` stay importable side by side
for the benchmark in benchmarks/equalizer_benchmark.py.

Kernel layout for the Alamouti equalizer: the two "branches" are the full
received stream and its conjugate, both padded with ``pad`` zeros at each
end.  For block n the direct-branch windows (w11, w21) center on the
odd-slot symbol instant pad + 2*sps*n and the conjugate-branch windows
(w12, w22) center one symbol later, on the even slot of the same block.
The windows overlap sample by sample, so the taps can interpolate timing
and absorb channel memory with the shortest possible spans.
"""

import os


def _alamouti_lms_core(
    branch_o,
    branch_e,
    n_blocks,
    sps,
    pad,
    w11,
    w12,
    w21,
    w22,
    p_state,
    mu,
    mu_p,
    n_train,
    train_o,
    train_e,
    const_points,
    phase_mode,
    y_o,
    y_e,
    err_o,
    err_e,
):
    n_taps = w11.shape[0]
    half = n_taps // 2
    n_const = const_points.shape[0]
    p1 = p_state[0]
    p2 = p_state[1]
    for n in range(n_blocks):
        start_o = pad + 2 * sps * n - half
        start_e = start_o + sps
        u1 = 0.0 + 0.0j
        v1 = 0.0 + 0.0j
        u2 = 0.0 + 0.0j
        v2 = 0.0 + 0.0j
        for i in range(n_taps):
            xo = branch_o[start_o + i]
            xe = branch_e[start_e + i]
            u1 += w11[i] * xo
            v1 += w12[i] * xe
            u2 += w21[i] * xo
            v2 += w22[i] * xe
        p = 0.5 * (p1 + p2)
        pc = p.conjugate()
        yo = u1 * p + v1 * pc
        ye = u2 * p + v2 * pc

        if n < n_train:
            do = train_o[n]
            de = train_e[n]
        else:
            best = 0
            bd = 1e308
            for m in range(n_const):
                dr = yo.real - const_points[m].real
                di = yo.imag - const_points[m].imag
                d2 = dr * dr + di * di
                if d2 < bd:
                    bd = d2
                    best = m
            do = const_points[best]
            best = 0
            bd = 1e308
            for m in range(n_const):
                dr = ye.real - const_points[m].real
                di = ye.imag - const_points[m].imag
                d2 = dr * dr + di * di
                if d2 < bd:
                    bd = d2
                    best = m
            de = const_points[best]

        eo = do - yo
        ee = de - ye

        ap = abs(p)
        if ap > 0.0:
            g1 = mu * ap / p
            g2 = mu * ap / pc
        else:
            g1 = mu + 0.0j
            g2 = mu + 0.0j
        go = g1 * eo
        ge = g1 * ee
        ho = g2 * eo
        he = g2 * ee
        for i in range(n_taps):
            xoc = branch_o[start_o + i].conjugate()
            xec = branch_e[start_e + i].conjugate()
            w11[i] += go * xoc
            w21[i] += ge * xoc
            w12[i] += ho * xec
            w22[i] += he * xec

        if phase_mode == 1:
            # Per-output errors: p1 from the odd output, p2 from the even.
            p1 += mu_p * eo * u1.conjugate()
            p2 += mu_p * ee * v2.conjugate()
        elif phase_mode == 2:
            # Single common factor following the Wirtinger gradient of
            # |e_o|^2 in y_o = u1 p + v1 conj(p): dJ/dp* = -(e ubar + ebar v).
            # Loop gain |u1|^2 + |v1|^2 is polarization-rotation invariant.
            # Projecting back onto the unit circle keeps amplitude in the
            # taps, so the phase-tracking bandwidth stays scale independent.
            step = mu_p * (eo * u1.conjugate() + eo.conjugate() * v1)
            if step != 0.0:
                p1 += step
                ap1 = abs(p1)
                if ap1 > 0.0:
                    p1 /= ap1
            p2 = p1
        else:
            # Equation as printed: both updates driven by the odd error.
            p1 += mu_p * eo * u1.conjugate()
            p2 += mu_p * eo * v1.conjugate()

        y_o[n] = yo
        y_e[n] = ye
        err_o[n] = eo
        err_e[n] = ee
    p_state[0] = p1
    p_state[1] = p2


def _single_lms_core(
    x,
    n_symbols,
    stride,
    pad,
    w,
    p_state,
    mu,
    mu_p,
    n_train,
    train,
    const_points,
    y,
    err,
):
    n_taps = w.shape[0]
    half = n_taps // 2
    n_const = const_points.shape[0]
    p = p_state[0]
    for n in range(n_symbols):
        start = pad + stride * n - half
        u = 0.0 + 0.0j
        for i in range(n_taps):
            u += w[i] * x[start + i]
        yv = u * p

        if n < n_train:
            d = train[n]
        else:
            best = 0
            bd = 1e308
            for m in range(n_const):
                dr = yv.real - const_points[m].real
                di = yv.imag - const_points[m].imag
                d2 = dr * dr + di * di
                if d2 < bd:
                    bd = d2
                    best = m
            d = const_points[best]

        e = d - yv
        ap = abs(p)
        g = (mu * ap / p) * e if ap > 0.0 else mu * e
        for i in range(n_taps):
            w[i] += g * x[start + i].conjugate()
        p += mu_p * e * u.conjugate()

        y[n] = yv
        err[n] = e
    p_state[0] = p


alamouti_lms_python = _alamouti_lms_core
single_lms_python = _single_lms_core

NUMBA_DISABLED = os.environ.get("SHCSIM_DISABLE_NUMBA", "").lower() in ("1", "true", "yes")

alamouti_lms_numba = None
single_lms_numba = None
if not NUMBA_DISABLED:
    try:
        import numba
    except ImportError:
        numba = None
    if numba is not None:
        alamouti_lms_numba = numba.njit(cache=True)(_alamouti_lms_core)
        single_lms_numba = numba.njit(cache=True)(_single_lms_core)

NUMBA_ENABLED = alamouti_lms_numba is not None

if NUMBA_ENABLED:
    alamouti_lms = alamouti_lms_numba
    single_lms = single_lms_numba
else:
    alamouti_lms = alamouti_lms_python
    single_lms = single_lms_python
