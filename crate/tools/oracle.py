"""Arbitrary-precision reference values for the test suite (mpmath).

Run: python3 tools/oracle.py
The printed values are frozen into the Rust tests; this script is not
part of the library.
"""
from mpmath import mp, mpf, mpc, loggamma, zeta, siegelz, siegeltheta, quad, euler, log, pi, sqrt, asinh, im, fabs

mp.dps = 30


def main_term(T):
    T = mpf(T)
    return T * (log(T / (2 * pi)) + 2 * euler - 1)


def zsq(t):
    return fabs(zeta(mpf('0.5') + 1j * t)) ** 2


print("log_gamma(1/2)      =", loggamma(mpf('0.5')))
print("theta(100)          =", im(loggamma(mpf('0.25') + 50j)) - 50 * log(pi))
for t in [20, 50, 100, 1000, 1e5]:
    print("theta(%g) =" % t, siegeltheta(t))
print("zeta(1/2)           =", zeta(mpf('0.5')))
for t in [14.0, 14.2, 20, 30, 50, 100, 200, 500, 1000, 5000, 10000, 100000]:
    print("Z(%g) =" % t, siegelz(t))
print("2gamma - log 2pi    =", 2 * euler - log(2 * pi))
print("main_term(100)      =", main_term(100))
print("2pi(2gamma-1)       =", 2 * pi * (2 * euler - 1))
e10 = quad(zsq, [0, 1, 2, 4, 6, 8, 10]) - main_term(10)
print("E(10)               =", e10)
for m in [0, 1, 2, 5, 10]:
    print("h_%d =" % m, quad(lambda y: zsq(y) * y ** m, [0, 0.5, 1]))
T, n = mpf(10) ** 6, 1
f = 2 * T * asinh(sqrt(pi * n / (2 * T))) + sqrt(2 * pi * n * T + pi ** 2 * n ** 2) - pi / 4
print("f(1e6,1) - (sqrt(8pi n T) - pi/4) =", f - (sqrt(8 * pi * n * T) - pi / 4))
print("L1(50) quad          =", quad(lambda x: zsq(x) * mp.exp(-50 * x), [0, 0.1, 0.3, 1]))
print("zeta(1/2)^2/50       =", zeta(mpf('0.5')) ** 2 / 50)
