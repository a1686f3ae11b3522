#!/usr/bin/env python3
"""Independent reference values for the regression tests.

Everything here is computed from the explicit spinor integrands with mpmath
(high-precision quadrature) or numpy (brute-force sums), sharing no code with
the C++ library. The printed values are frozen in tests/oracles.hpp.

    python3 tools/oracles.py
"""

import mpmath as mp
import numpy as np

mp.mp.dps = 30


def n_of(k):
    return k - 1 if k >= 1 else k


def eps(k, a):
    return (2 * n_of(k) + 1) * mp.pi / (4 * a)


class Mode:
    """w_+- = C_+- exp(+-i[f(x) - eta x]) with the wall condition at -a."""

    def __init__(self, k, a, f=lambda x: mp.mpf(0), mean=mp.mpf(0)):
        self.a, self.f = a, f
        self.eta = eps(k, a) + mean
        self.cp = 1 / mp.sqrt(2 * a)
        self.cm = -1j * self.cp * mp.e ** (2j * (f(-a) + self.eta * a))

    def u(self, x):
        ph = self.f(x) - self.eta * x
        return (self.cp * mp.e ** (1j * ph) + self.cm * mp.e ** (-1j * ph)) / 2

    def v(self, x):
        ph = self.f(x) - self.eta * x
        return (self.cp * mp.e ** (1j * ph) - self.cm * mp.e ** (-1j * ph)) / 2j


def braket(m1, m2, a, weight=lambda x: 1, pieces=16):
    nodes = [-a + 2 * a * i / pieces for i in range(pieces + 1)]
    return mp.quad(lambda x: weight(x) * (mp.conj(m1.u(x)) * m2.u(x) + mp.conj(m1.v(x)) * m2.v(x)), nodes)


def fmt(x):
    return mp.nstr(x, 17)


def main():
    a = mp.mpf(1)

    # matrix elements of V = x between unperturbed modes
    v1m1 = braket(Mode(1, a), Mode(-1, a), a, weight=lambda x: x)
    print("V_{1,-1}(x)           =", fmt(mp.re(v1m1)), fmt(mp.im(v1m1)))
    v2m3 = braket(Mode(2, a), Mode(-3, a), a, weight=lambda x: x)
    print("V_{2,-3}(x)           =", fmt(mp.re(v2m3)), fmt(mp.im(v2m3)))
    # sin(pi x) between levels 1 and -2, and the diagonal of x^2
    s1m2 = braket(Mode(1, a), Mode(-2, a), a, weight=lambda x: mp.sin(mp.pi * x))
    print("V_{1,-2}(sin pi x)    =", fmt(mp.re(s1m2)), fmt(mp.im(s1m2)))
    for j in (1, 2, 3):
        d = braket(Mode(-j, a), Mode(-j, a), a, weight=lambda x: mp.sin(mp.pi * x))
        print(f"V_{{-{j},-{j}}}(sin pi x) =", fmt(mp.re(d)))
    q = braket(Mode(-2, a), Mode(-2, a), a, weight=lambda x: x * x)
    print("V_{-2,-2}(x^2)        =", fmt(mp.re(q)))
    print("<phi_1|phi_2>         =", fmt(abs(braket(Mode(1, a), Mode(2, a), a))))

    # overlaps <psi_k|phi_n> for V = lam x, f(x) = lam x^2 / 2
    for lam in (mp.mpf("0.1"), mp.mpf(1)):
        f = lambda x, lam=lam: lam * x * x / 2
        for k, n in ((1, -1), (1, 1), (-2, 3), (2, -1)):
            o = braket(Mode(k, a, f), Mode(n, a), a, pieces=32)
            print(f"<psi_{k}|phi_{n}> lam={lam} =", fmt(mp.re(o)), fmt(mp.im(o)))
    # V = x + 0.3: the perturbed mode carries eta = eps + 0.3
    f = lambda x: x * x / 2 + mp.mpf("0.3") * x
    o = braket(Mode(1, a, f, mp.mpf("0.3")), Mode(-1, a), a, pieces=32)
    print("<psi_1|phi_-1> x+0.3  =", fmt(mp.re(o)), fmt(mp.im(o)))

    # Pauli-enforced second-order sum for V = x at N = 4096 from the closed
    # form |V_{i,-j}|^2 = (1/d^2)^2 (odd shift, d = shift * pi / 2), summed
    # after sorting by magnitude.
    N = 4096
    i = np.arange(1, N + 1, dtype=np.float64)[:, None]
    j = np.arange(1, N + 1, dtype=np.float64)[None, :]
    shift = i - 1 + j
    d = shift * np.pi / 2
    v2 = np.where(shift % 2 == 1, (1.0 / (d * d)) ** 2, 0.0)
    den = -(2 * j - 1) * np.pi / 4 - (2 * (i - 1) + 1) * np.pi / 4
    terms = (v2 / den).ravel()
    print("PP(x) N=4096          =", repr(float(np.sum(terms[np.argsort(np.abs(terms))]))))
    print("-1/(3 pi)             =", repr(-1 / (3 * np.pi)))

    # Exact vacuum shift at N = 64 for V = x and V = sin(pi x) by brute force:
    # every overlap by a 4000-point Gauss-Legendre rule, then the full double sum.
    xs, ws = np.polynomial.legendre.leggauss(4000)
    for name, fx, mean in (("x", lambda x: x * x / 2, 0.0),
                           ("sin", lambda x: (1 - np.cos(np.pi * x)) / np.pi, 0.0)):
        n = 64
        def spinor(k, phase, eta):
            cp = 1 / np.sqrt(2.0)
            cm = -1j * cp * np.exp(2j * (phase[0] + eta))
            ph = phase[1] - eta * xs
            wp, wm = cp * np.exp(1j * ph), cm * np.exp(-1j * ph)
            return (wp + wm) / 2, (wp - wm) / 2j
        levels = list(range(1, n + 1)) + [-j for j in range(1, n + 1)]
        fl, fxs = fx(-1.0), fx(xs)
        pert = {k: spinor(k, (fl, fxs), float(eps(k, 1)) + mean) for k in levels}
        free = {k: spinor(k, (0.0, 0 * xs), float(eps(k, 1))) for k in levels}
        def ov(k, m):
            (u1, v1), (u2, v2) = pert[k], free[m]
            return np.sum(ws * (np.conj(u1) * u2 + np.conj(v1) * v2))
        total = 0.0
        for ii in range(1, n + 1):
            for jj in range(1, n + 1):
                total -= float(eps(ii, 1)) * abs(ov(ii, -jj)) ** 2
                total -= float(-eps(-jj, 1)) * abs(ov(-jj, ii)) ** 2
        print(f"exact shift {name} N=64   =", repr(total))

    # Pauli-enforced sum for sin(pi x) at N = 64 with matrix elements by
    # Gauss-Legendre quadrature of the explicit integrand.
    n = 64
    def free_spinor(k):
        e = float(eps(k, 1))
        cp = 1 / np.sqrt(2.0)
        cm = -1j * cp * np.exp(2j * e)
        wp, wm = cp * np.exp(-1j * e * xs), cm * np.exp(1j * e * xs)
        return (wp + wm) / 2, (wp - wm) / 2j
    sp = {k: free_spinor(k) for k in list(range(1, n + 1)) + [-j for j in range(1, n + 1)]}
    vx = np.sin(np.pi * xs)
    pp = 0.0
    for jj in range(1, n + 1):
        for ii in range(1, n + 1):
            (u1, v1), (u2, v2) = sp[ii], sp[-jj]
            m = np.sum(ws * vx * (np.conj(u1) * u2 + np.conj(v1) * v2))
            pp += abs(m) ** 2 / (float(eps(-jj, 1)) - float(eps(ii, 1)))
    print("PP(sin pi x) N=64     =", repr(pp))


if __name__ == "__main__":
    main()
