#!/usr/bin/env python3
"""Arbitrary-precision reference evaluation of the closed-form per-channel
nonlinear-interference expression, used to freeze golden constants for the
Rust test suite.

Run:  python3 tools/golden_nli.py

All inputs are exact IEEE-754 doubles (mpmath converts Python floats
bit-exactly), so the printed 17-digit values are directly comparable to the
f64 pipeline at the 1e-10 relative level.
"""

import mpmath as mp

mp.mp.dps = 60

PI = mp.pi


def t_factor(alpha, alpha_bar, p_tot, c_r, f):
    return (alpha + alpha_bar - p_tot * c_r * f) ** 2


def snr_nli_inverse(i, chans, params, beta2, beta3, gamma, span_len, n_spans, epsilon):
    """chans: list of (f, bw, power, kurtosis); params: list of (alpha, alpha_bar, c_r)."""
    p_tot = mp.fsum(c[2] for c in chans)
    n = mp.mpf(n_spans)
    n_tilde = mp.mpf(0) if n_spans == 1 else n

    f_i, b_i, p_i, _ = chans[i]
    alpha_i, bar_i, cr_i = params[i]
    t_i = t_factor(alpha_i, bar_i, p_tot, cr_i, f_i)
    a_i = alpha_i + bar_i
    phi_i = mp.mpf(3) / 2 * PI**2 * (beta2 + 2 * PI * beta3 * f_i)

    spm = (
        mp.mpf(4) / 9
        * PI * gamma**2 * p_i**2 * n ** (1 + epsilon)
        / (b_i**2 * phi_i * bar_i * (2 * alpha_i + bar_i))
        * (
            (t_i - alpha_i**2) / alpha_i * mp.asinh(phi_i * b_i**2 / (PI * alpha_i))
            + (a_i**2 - t_i) / a_i * mp.asinh(phi_i * b_i**2 / (PI * a_i))
        )
    )

    xpm = mp.mpf(0)
    kurt = mp.mpf(0)
    for k, (f_k, b_k, p_k, kurt_k) in enumerate(chans):
        if k == i:
            continue
        alpha_k, bar_k, cr_k = params[k]
        t_k = t_factor(alpha_k, bar_k, p_tot, cr_k, f_k)
        a_k = alpha_k + bar_k
        phi_ik = -2 * PI**2 * (f_k - f_i) * (beta2 + PI * beta3 * (f_i + f_k))
        phi = -4 * PI**2 * (beta2 + PI * beta3 * (f_i + f_k)) * span_len

        common = mp.mpf(32) / 27 * gamma**2 * p_k**2 / b_k
        bracket = (
            (t_k - alpha_k**2) / alpha_k * mp.atan(phi_ik * b_i / alpha_k)
            + (a_k**2 - t_k) / a_k * mp.atan(phi_ik * b_i / a_k)
        )
        main = common / (phi_ik * bar_k * (2 * alpha_k + bar_k)) * bracket
        xpm += n * main
        kurt += mp.mpf(5) / 6 * kurt_k * main

        delta = 2 * abs(f_k - f_i)
        log_bracket = (delta - b_k) * mp.log((delta - b_k) / (delta + b_k)) + 2 * b_k
        kurt += common * (
            mp.mpf(5) / 3 * kurt_k * PI * n_tilde * t_k
            / (abs(phi) * b_k**2 * alpha_k**2 * a_k**2)
            * log_bracket
        )

    return spm, xpm, kurt


def report(name, chans, params, beta2, beta3, gamma, span_len, n_spans, epsilon):
    print(f"--- {name} ---")
    for i in range(len(chans)):
        spm, xpm, kurt = snr_nli_inverse(
            i, chans, params, beta2, beta3, gamma, span_len, n_spans, epsilon
        )
        total = spm + xpm + kurt
        snr_db = -10 * mp.log10(total)
        print(f"channel {i}:")
        print(f"  spm_inverse  = {mp.nstr(spm, 17)}")
        print(f"  xpm_inverse  = {mp.nstr(xpm, 17)}")
        print(f"  kurt_inverse = {mp.nstr(kurt, 17)}")
        print(f"  total_inv    = {mp.nstr(total, 17)}")
        print(f"  snr_nli_db   = {mp.nstr(snr_db, 17)}")


def three_channel_toy(kurtosis, n_spans, epsilon):
    b = 0.04
    p = 1e-3
    chans = [(-0.05, b, p, kurtosis), (0.0, b, p, kurtosis), (0.05, b, p, kurtosis)]
    params = [(0.046, 0.046, 0.01)] * 3
    return chans, params


def main():
    # Case A: Gaussian signaling, single span.
    chans, params = three_channel_toy(0.0, 1, 0.0)
    report("toy A: kurtosis 0, n = 1, eps = 0", chans, params,
           -22.6, 0.0, 1.2, 80.0, 1, 0.0)

    # Case B: 64-QAM kurtosis (nearest double to -13/21), three spans,
    # nonzero coherence exponent. Exercises every term of the expression.
    kurt64 = float(mp.mpf(-13) / 21)
    chans, params = three_channel_toy(kurt64, 3, 0.05)
    report("toy B: kurtosis -13/21, n = 3, eps = 0.05", chans, params,
           -22.6, 0.0, 1.2, 80.0, 3, 0.05)
    print(f"kurt64 f64 = {kurt64!r}")

    # Two-exponential profile value by direct substitution.
    alpha, alpha_bar, t_tilde, z = map(mp.mpf, (0.046, 0.046, 0.2, 80.0))
    val = (1 + t_tilde) * mp.exp(-alpha * z) - t_tilde * mp.exp(-(alpha + alpha_bar) * z)
    print(f"profile(alpha=0.046, bar=0.046, t=0.2, z=80) = {mp.nstr(val, 17)}")

    # Dispersion conversions (c in nm/ps).
    c = mp.mpf("299792.458")
    for d, s, lam in [(18.0, 0.067, 1540.0), (17.0, 0.0, 1550.0)]:
        d, s, lam = map(mp.mpf, (d, s, lam))
        beta2 = -d * lam**2 / (2 * PI * c)
        beta3 = (lam**2 / (2 * PI * c)) ** 2 * (s + 2 * d / lam)
        print(f"D={d}, S={s}, lam={lam}: beta2={mp.nstr(beta2, 17)} beta3={mp.nstr(beta3, 17)}")

    # Square-QAM excess kurtosis, exact rationals.
    for m in (4, 16, 64, 256):
        side = int(mp.sqrt(m))
        levels = [2 * k - side + 1 for k in range(side)]
        pts = [(a, b) for a in levels for b in levels]
        e2 = mp.fsum((a * a + b * b) for a, b in pts) / m
        e4 = mp.fsum((a * a + b * b) ** 2 for a, b in pts) / m
        print(f"{m}-QAM excess kurtosis = {mp.nstr(e4 / e2**2 - 2, 17)}")


if __name__ == "__main__":
    main()
