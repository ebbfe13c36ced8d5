"""Reference values for special_functions_test.cpp, computed at 40 digits.

Run: python3 tests/oracles/special_values.py
"""
from mpmath import mp, loggamma, digamma, polygamma, log, beta, mpf

mp.dps = 40

POINTS = ["1e-3", "0.1", "0.5", "1", "1.5", "2", "2.5", "3.7", "6", "7.25", "10", "42.5", "100", "1000"]


def fmt(x):
    return mp.nstr(x, 20, min_fixed=-30, max_fixed=30)


print("// x, lgamma, digamma, trigamma")
for s in POINTS:
    x = mpf(s)
    print(f"    {{{s}, {fmt(loggamma(x))}, {fmt(digamma(x))}, {fmt(polygamma(1, x))}}},")

print("// log_beta")
for x, y in [("0.5", "0.5"), ("1.5", "1.5"), ("2", "3"), ("3", "4"), ("0.01", "50"), ("300", "700")]:
    print(f"    {{{x}, {y}, {fmt(log(beta(mpf(x), mpf(y))))}}},")
