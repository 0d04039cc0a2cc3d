"""Pure-Python event loop, used when the compiled kernel is unavailable.

Must stay operation-for-operation identical to ``_simkernel.pyx`` so both
backends produce bitwise-identical paths from the same uniforms.
"""

import math

# event kinds, shared with the compiled kernel and the log writer
LIMIT_SPREAD, LIMIT_BEST, LIMIT_BOOK, MARKET_PARTIAL, MARKET_AGGRESSIVE, CANCEL_BEST, CANCEL_BOOK = range(7)

DONE, HORIZON, GROW, LOG_FULL, NEED_UNIFORMS = range(5)


def _draw(cdf, u):
    lo, hi = 0, len(cdf) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo + 1


def run_events(state, uniforms, start, rates, coupled, reset_one, budget, horizon,
               cdf_g0, cdf_g1, cdf_g2, cdf_pi2, occ_time, occ_visits, counts,
               record, log_time, log_kind, log_size, log_x, log_y, log_pos):
    """Advance the path until the budget, horizon, or a buffer limit is hit.

    ``state`` is ``[t, kahan_c, x, y, events_done]`` (floats, updated in place).
    Returns ``(status, next_uniform_row, log_pos)``.
    """
    lam0, lam1, lam2, mu, muA, th1, th2 = rates
    t, comp, x, y, done = state[0], state[1], int(state[2]), int(state[3]), int(state[4])
    cap = len(occ_time)
    n_rows = len(uniforms)
    log_cap = len(log_time)
    row = start
    status = DONE
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
        dt = -math.log(1.0 - u0) / total
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
