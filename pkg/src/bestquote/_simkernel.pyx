# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event loop; mirrors ``_simkernel_py.run_events`` line for line."""

from libc.math cimport log

cdef enum:
    LIMIT_SPREAD = 0
    LIMIT_BEST = 1
    LIMIT_BOOK = 2
    MARKET_PARTIAL = 3
    MARKET_AGGRESSIVE = 4
    CANCEL_BEST = 5
    CANCEL_BOOK = 6

cdef enum:
    DONE = 0
    HORIZON = 1
    GROW = 2
    LOG_FULL = 3
    NEED_UNIFORMS = 4


cdef inline long _draw(const double[::1] cdf, double u) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = cdf.shape[0] - 1, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo + 1


def run_events(double[::1] state, const double[:, ::1] uniforms, Py_ssize_t start,
               rates, bint coupled, bint reset_one, long long budget, double horizon,
               const double[::1] cdf_g0, const double[::1] cdf_g1,
               const double[::1] cdf_g2, const double[::1] cdf_pi2,
               double[::1] occ_time, long long[::1] occ_visits, long long[::1] counts,
               bint record, double[::1] log_time, signed char[::1] log_kind,
               long long[::1] log_size, long long[::1] log_x, long long[::1] log_y,
               Py_ssize_t log_pos):
    cdef double lam0 = rates[0], lam1 = rates[1], lam2 = rates[2], mu = rates[3]
    cdef double muA = rates[4], th1 = rates[5], th2 = rates[6]
    cdef double t = state[0], comp = state[1]
    cdef long x = <long>state[2], y = <long>state[3]
    cdef long long done = <long long>state[4]
    cdef Py_ssize_t cap = occ_time.shape[0]
    cdef Py_ssize_t n_rows = uniforms.shape[0]
    cdef Py_ssize_t log_cap = log_time.shape[0]
    cdef Py_ssize_t row = start
    cdef int status = DONE
    cdef double u0, u1, u2, r_partial, r_cbest, r_book, r_cbook, total, dt, yk, tk, v
    cdef long size
    cdef int kind

    with nogil:
        while True:
            if done >= budget:
                status = DONE
                break
            if x >= cap:
                status = GROW
                break
            if record and log_pos >= log_cap:
                status = LOG_FULL
                break
            if row >= n_rows:
                status = NEED_UNIFORMS
                break
            u0 = uniforms[row, 0]
            u1 = uniforms[row, 1]
            u2 = uniforms[row, 2]
            row += 1

            r_partial = mu if x > 1 else 0.0
            r_cbest = (x - 1) * th1
            r_book = lam2 if coupled else 0.0
            r_cbook = (y - 1) * th2 if coupled else 0.0
            total = lam0 + lam1 + r_book + r_partial + muA + r_cbest + r_cbook
            dt = -log(1.0 - u0) / total
            if t + dt >= horizon:
                dt = horizon - t
                occ_time[x] += dt
                occ_visits[x] += 1
                yk = dt - comp
                tk = t + yk
                comp = (tk - t) - yk
                t = horizon
                status = HORIZON
                break
            occ_time[x] += dt
            occ_visits[x] += 1
            yk = dt - comp
            tk = t + yk
            comp = (tk - t) - yk
            t = tk

            v = u1 * total
            if v >= total:
                v = 0.0
            size = 1
            if v < lam0:
                kind = LIMIT_SPREAD
                x = _draw(cdf_g0, u2)
                size = x
            elif v < lam0 + lam1:
                kind = LIMIT_BEST
                size = _draw(cdf_g1, u2)
                x += size
            elif v < lam0 + lam1 + r_book:
                kind = LIMIT_BOOK
                size = _draw(cdf_g2, u2)
                y += size
            elif v < lam0 + lam1 + r_book + r_partial:
                kind = MARKET_PARTIAL
                x -= 1
            elif v < lam0 + lam1 + r_book + r_partial + muA:
                kind = MARKET_AGGRESSIVE
                size = x
                if coupled:
                    x = y
                    y = 1 if reset_one else _draw(cdf_pi2, u2)
                else:
                    x = _draw(cdf_pi2, u2)
            elif v < lam0 + lam1 + r_book + r_partial + muA + r_cbest:
                kind = CANCEL_BEST
                x -= 1
            else:
                kind = CANCEL_BOOK
                y -= 1
            counts[kind] += 1
            done += 1
            if record:
                log_time[log_pos] = t
                log_kind[log_pos] = kind
                log_size[log_pos] = size
                log_x[log_pos] = x
                log_y[log_pos] = y
                log_pos += 1
    state[0] = t
    state[1] = comp
    state[2] = x
    state[3] = y
    state[4] = done
    return status, row, log_pos
