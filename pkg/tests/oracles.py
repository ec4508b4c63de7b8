"""Independent extended-precision references."""
import mpmath as mp


def bessel_j_series(nu, x, dps=60):
    """Ascending series of J_nu(x) summed in ``dps``-digit arithmetic."""
    with mp.workdps(dps):
        nu, x = mp.mpf(nu), mp.mpf(x)
        q = -(x * x) / 4
        term = 1 / mp.gamma(nu + 1)
        total = term
        k = 0
        while True:
            k += 1
            term *= q / (k * (nu + k))
            total += term
            if k > 10 and abs(term) < mp.mpf(10) ** (-dps + 5) * abs(total):
                break
        return float((x / 2) ** nu * total)


def airy_gen_mp(p, t, dps=40):
    """``(Ai_p(-t), Bi_p(-t))`` from mpmath's Bessel J."""
    with mp.workdps(dps):
        p, t = mp.mpf(p), mp.mpf(t)
        zeta = 2 * p * t ** (1 / (2 * p))
        jm, jp = mp.besselj(-p, zeta), mp.besselj(p, zeta)
        return float(p * mp.sqrt(t) * (jm + jp)), float(mp.sqrt(p * t) * (jm - jp))


def xi_squared_mp(p, t, dps=40):
    """Closed-form width squared at unit rate on either side of the crossing."""
    with mp.workdps(dps):
        p = mp.mpf(p)
        pi = mp.pi
        if t <= 0:
            a = mp.sqrt(pi / (2 * p)) / (2 * mp.cos(p * pi / 2))
            b = mp.sqrt(pi / 2) / (2 * mp.sin(p * pi / 2))
        else:
            a = mp.sqrt(pi / (2 * p)) / (2 * mp.sin(p * pi / 2))
            b = mp.sqrt(pi / 2) / (2 * mp.cos(p * pi / 2))
        ai, bi = airy_gen_mp(p, abs(t), dps)
        return float(a * a * ai * ai + b * b * bi * bi)
