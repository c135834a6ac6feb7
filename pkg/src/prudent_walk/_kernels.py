"""Compiled inner loops.

Step codes: 0=E, 1=N, 2=W, 3=S.  Under the tilted excursion law each
effective step from height v >= 1 moves up by j >= 0 with mass
q (q rho)^j and down by d >= 1 with mass q (q/rho)^d, a down move of
d >= v landing on 0.  From 0 the first move is to 0 with mass 2q or to
v >= 1 with mass 2 A q (q rho)^v; after at least one step a visit to 0
stops the excursion with probability 1/2 (the continuation weight at 0
is 1/(1 - G) = 2).
"""

import math

import numpy as np
from numba import njit

DX = np.array([1, 0, -1, 0], dtype=np.int64)
DY = np.array([0, 1, 0, -1], dtype=np.int64)


@njit(cache=True)
def _geom0(rng, r):
    # P(j) = (1 - r) r^j, j >= 0
    u = 1.0 - rng.random()
    return int(math.floor(math.log(u) / math.log(r)))


@njit(cache=True)
def pstar_step(rng, v, q, rho):
    """One effective step from height v >= 1; returns the new height."""
    qr = q * rho
    x = q / rho
    p_up = q / (1.0 - qr)
    if rng.random() < p_up:
        return v + _geom0(rng, qr)
    d = 1 + _geom0(rng, x)
    if d >= v:
        return 0
    return v - d


@njit(cache=True)
def pstar_first(rng, q, rho):
    qr = q * rho
    if rng.random() < 2.0 * q:
        return 0
    return 1 + _geom0(rng, qr)


@njit(cache=True)
def pstar_excursion(rng, q, rho, R, buf, t_cap):
    """Sample an excursion under the tilted law, truncated at level R.

    R < 0 means no truncation.  Values V_0..V_N go into buf[0..N].
    Returns (N, T, status) with status 0 for a complete excursion, 1 for
    a truncated one and 2 when the length exceeded t_cap (the draw is
    abandoned; the image length is then known to exceed t_cap).
    """
    buf[0] = 0
    v = pstar_first(rng, q, rho)
    n = 1
    t = 0
    while True:
        if R >= 0 and v > R:
            t += 1 + (R - buf[n - 1])
            buf[n] = R
            return n, t, 2 if t > t_cap else 1
        t += 1 + abs(v - buf[n - 1])
        if t > t_cap:
            return n, t, 2
        buf[n] = v
        if v == 0:
            if rng.random() < 0.5:
                return n, t, 0
            v = pstar_first(rng, q, rho)
        else:
            v = pstar_step(rng, v, q, rho)
        n += 1


@njit(cache=True)
def pstar_many(rng, q, rho, R, count, t_cap):
    """(N, T, eps, max) for `count` independent truncated excursions."""
    out = np.empty((count, 4), dtype=np.int64)
    buf = np.empty(t_cap + 2, dtype=np.int64)
    for i in range(count):
        n, t, st = pstar_excursion(rng, q, rho, R, buf, t_cap)
        if st == 2:
            raise ValueError("excursion longer than t_cap")
        m = 0
        for j in range(n + 1):
            if buf[j] > m:
                m = buf[j]
        eps = 0
        if R >= 0 and (buf[n] == R):
            eps = 1
        out[i, 0] = n
        out[i, 1] = t
        out[i, 2] = eps
        out[i, 3] = m
    return out


# -- lattice assembly ----------------------------------------------------------

@njit(cache=True)
def emit_excursion(steps, pos, state, vals, n, horizontal, two_sided):
    """Append the lattice steps of one excursion.

    state = [x, y, xmin, xmax, ymin, ymax].  For two-sided paths the
    excursion always moves E (horizontal) or N (vertical) with positive
    effective values pointing S / W.  Returns the new write position.
    """
    x, y = state[0], state[1]
    xmin, xmax, ymin, ymax = state[2], state[3], state[4], state[5]
    if horizontal:
        if two_sided:
            along, up, down = 0, 3, 1
        else:
            along = 0 if x == xmax else 2
            if y == ymax and ymax > ymin:
                up, down = 3, 1
            else:
                up, down = 1, 3
    else:
        if two_sided:
            along, up, down = 1, 2, 0
        else:
            along = 1 if y == ymax else 3
            if x == xmax:
                up, down = 2, 0
            else:
                up, down = 0, 2
    for i in range(1, n + 1):
        steps[pos] = along
        pos += 1
        x += DX[along]
        y += DY[along]
        du = vals[i] - vals[i - 1]
        code = up if du > 0 else down
        for _ in range(abs(du)):
            steps[pos] = code
            pos += 1
            x += DX[code]
            y += DY[code]
        if x < xmin:
            xmin = x
        if x > xmax:
            xmax = x
        if y < ymin:
            ymin = y
        if y > ymax:
            ymax = y
    # vertical stretches can extend the box only inside a slab, so the
    # per-stretch update above is exact
    state[0], state[1] = x, y
    state[2], state[3], state[4], state[5] = xmin, xmax, ymin, ymax
    return pos


# -- two-sided pinned renewal --------------------------------------------------

@njit(cache=True)
def two_sided_pinned(rng, L, q, rho, max_restarts, steps, TN):
    """Pinned renewal of tilted excursions with total length exactly L.

    Fills steps[0..L) and TN[k] = (T_k, N_k); returns (count, restarts).
    """
    buf = np.empty(L + 2, dtype=np.int64)
    store = np.empty(2 * L + 4, dtype=np.int64)
    starts = np.empty(L + 1, dtype=np.int64)
    restarts = 0
    while True:
        s = 0
        k = 0
        top = 0
        ok = True
        while s < L:
            n, t, st = pstar_excursion(rng, q, rho, -1, buf, L - s)
            if st != 0:
                ok = False
                break
            starts[k] = top
            for j in range(n + 1):
                store[top + j] = buf[j]
            top += n + 1
            TN[k, 0] = t
            TN[k, 1] = n
            k += 1
            s += t
        if ok:
            break
        restarts += 1
        if restarts > max_restarts:
            return -1, restarts
    state = np.zeros(6, dtype=np.int64)
    pos = 0
    for i in range(k):
        n = TN[i, 1]
        pos = emit_excursion(steps, pos, state, store[starts[i]:starts[i] + n + 1],
                             n, i % 2 == 0, True)
    return k, restarts


@njit(cache=True)
def two_sided_lengths(rng, L, q, rho, max_restarts, TN):
    """As two_sided_pinned but records only (T, N) per excursion."""
    buf = np.empty(L + 2, dtype=np.int64)
    restarts = 0
    while True:
        s = 0
        k = 0
        ok = True
        while s < L:
            n, t, st = pstar_excursion(rng, q, rho, -1, buf, L - s)
            if st != 0:
                ok = False
                break
            TN[k, 0] = t
            TN[k, 1] = n
            k += 1
            s += t
        if ok:
            return k, restarts
        restarts += 1
        if restarts > max_restarts:
            return -1, restarts


# -- confined (slab) walks -----------------------------------------------------

@njit(cache=True)
def slab_forward(R, t_max, beta):
    """Lattice DP for effective paths confined to {0..R}.

    Returns arrays over t = 0..t_max of total weight beta^t for paths
    ending at 0, at R, and strictly inside.  Modes: 0 after a horizontal
    step, 1 after an up step, 2 after a down step.
    """
    H = min(R, t_max)
    cur = np.zeros((3, H + 1))
    nxt = np.zeros((3, H + 1))
    end0 = np.zeros(t_max + 1)
    endR = np.zeros(t_max + 1)
    inner = np.zeros(t_max + 1)
    if t_max == 0:
        return end0, endR, inner
    cur[0, 0] = beta
    for t in range(1, t_max + 1):
        if t > 1:
            nxt[:, :] = 0.0
            for v in range(H + 1):
                tot = cur[0, v] + cur[1, v] + cur[2, v]
                nxt[0, v] += beta * tot
                if v + 1 <= R and v + 1 <= H:
                    nxt[1, v + 1] += beta * (cur[0, v] + cur[1, v])
                if v >= 1:
                    nxt[2, v - 1] += beta * (cur[0, v] + cur[2, v])
            cur, nxt = nxt, cur
        for v in range(H + 1):
            tot = cur[0, v] + cur[1, v] + cur[2, v]
            if v == R:
                endR[t] += tot
            elif v == 0:
                end0[t] += tot
            else:
                inner[t] += tot
    return end0, endR, inner


@njit(cache=True)
def slab_tail_sample(rng, R, t):
    """Uniform confined effective path of lattice length t ending strictly
    inside (0, R).  Writes values into a fresh array; returns it."""
    H = min(R, t)
    # back[s, m, v]: number of ways to finish the remaining t - s steps
    # ending strictly inside, from mode m at height v (counts scaled by 1/2 per step)
    back = np.zeros((t + 1, 3, H + 1))
    for v in range(1, H + 1):
        if v < R:
            for m in range(3):
                back[t, m, v] = 1.0
    for s in range(t - 1, 0, -1):
        for v in range(H + 1):
            for m in range(3):
                acc = 0.5 * back[s + 1, 0, v]
                if m != 2 and v + 1 <= R and v + 1 <= H:
                    acc += 0.5 * back[s + 1, 1, v + 1]
                if m != 1 and v >= 1:
                    acc += 0.5 * back[s + 1, 2, v - 1]
                back[s, m, v] = acc
    vals = np.empty(t + 1, dtype=np.int64)
    vals[0] = 0
    if back[1, 0, 0] <= 0.0:
        return vals[:0]
    n = 0
    v = 0
    m = 0
    for s in range(1, t):
        w0 = back[s + 1, 0, v]
        w1 = back[s + 1, 1, v + 1] if (m != 2 and v + 1 <= R and v + 1 <= H) else 0.0
        w2 = back[s + 1, 2, v - 1] if (m != 1 and v >= 1) else 0.0
        u = rng.random() * (w0 + w1 + w2)
        if u < w0:
            n += 1
            vals[n] = v
            m = 0
        elif u < w0 + w1:
            v += 1
            m = 1
        else:
            v -= 1
            m = 2
    n += 1
    vals[n] = v
    return vals[:n + 1]


# -- importance sampler for the full prudent law -----------------------------

@njit(cache=True)
def uniform_is_path(rng, L, q, rho, log_kappa, log_kappa0, steps, rec, max_tries):
    """One draw of the truncated-excursion importance sampler.

    rec[i] = (T_i, N_i, eps_i, R_{i-1}) for complete excursions.
    Returns (gamma, tail_length, log_weight, tries).  Draws whose tail has
    no interior completion carry weight zero and are redrawn.
    """
    buf = np.empty(L + 2, dtype=np.int64)
    store = np.empty(2 * L + 4, dtype=np.int64)
    starts = np.empty(L + 1, dtype=np.int64)
    tries = 0
    while True:
        tries += 1
        s = 0
        k = 0
        top = 0
        Rm1 = 0  # R_{i-1}
        Rm2 = 0  # R_{i-2}
        logw = 0.0
        tail = 0
        while True:
            n, t, st = pstar_excursion(rng, q, rho, Rm1, buf, L - s)
            if st == 2:
                tail = L - s
                break
            eps = 1 if buf[n] == Rm1 else 0
            if eps == 1:
                if Rm1 == 0:
                    logw -= log_kappa0
                else:
                    logw -= log_kappa[Rm1]
            rec[k, 0] = t
            rec[k, 1] = n
            rec[k, 2] = eps
            rec[k, 3] = Rm1
            starts[k] = top
            for j in range(n + 1):
                store[top + j] = buf[j]
            top += n + 1
            k += 1
            s += t
            Rnew = Rm2 + n
            Rm2 = Rm1
            Rm1 = Rnew
            if s == L:
                break
        tail_vals = np.empty(0, dtype=np.int64)
        if tail > 0:
            e0, eR, inner = slab_forward(Rm1, tail, q)
            if inner[tail] <= 0.0:
                if tries >= max_tries:
                    return -1, tail, -np.inf, tries
                continue
            if Rm1 == 0:
                mass = (1.0 + math.exp(log_kappa0)) * np.sum(eR[1:tail + 1])
            else:
                mass = np.sum(e0[1:tail + 1]) + math.exp(log_kappa[Rm1]) * np.sum(eR[1:tail + 1])
            surv = 1.0 - mass
            logw += math.log(inner[tail]) - math.log(surv)
            tail_vals = slab_tail_sample(rng, Rm1, tail)
        state = np.zeros(6, dtype=np.int64)
        pos = 0
        for i in range(k):
            n = rec[i, 1]
            pos = emit_excursion(steps, pos, state, store[starts[i]:starts[i] + n + 1],
                                 n, i % 2 == 0, False)
        if tail > 0:
            pos = emit_excursion(steps, pos, state, tail_vals, tail_vals.shape[0] - 1,
                                 k % 2 == 0, False)
        return k, tail, logw, tries


# -- path functionals ----------------------------------------------------------

@njit(cache=True)
def diagonal_sup(steps, c):
    """max over vertices of |pi_k/L - c (k/L) e_i| for the four diagonals e_i
    = (+-1, +-1); returns the minimum over i of those sups."""
    L = steps.shape[0]
    best = np.zeros(4)
    x = 0
    y = 0
    sx = np.array([1.0, -1.0, -1.0, 1.0])
    sy = np.array([1.0, 1.0, -1.0, -1.0])
    for k in range(1, L + 1):
        x += DX[steps[k - 1]]
        y += DY[steps[k - 1]]
        tk = k / L
        for i in range(4):
            ex = x / L - c * tk * sx[i]
            ey = y / L - c * tk * sy[i]
            d = math.sqrt(ex * ex + ey * ey)
            if d > best[i]:
                best[i] = d
    m = best[0]
    for i in range(1, 4):
        if best[i] < m:
            m = best[i]
    return m


@njit(cache=True)
def position_at(steps, k):
    x = 0
    y = 0
    for i in range(k):
        x += DX[steps[i]]
        y += DY[steps[i]]
    return x, y
