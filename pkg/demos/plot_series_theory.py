"""
Correlation functions and the J series
======================================

Normalised product densities convert to n-point correlation functions by a
sum over set partitions. Truncating the power series in the correlation
integrals gives J approximately; the second-order version only needs K.
"""

import math

import numpy as np

from ppstat.moments import (CorrelationStack, NormalizedDensityStack, bell_number, enumerate_partitions,
                            j_second_order, j_series, xi_from_rho)

print("partitions of {1, 2, 3}:", enumerate_partitions(3))
print("Bell numbers:", [bell_number(n) for n in range(1, 8)])

# pair correlation 1.5 and triple density 3 give xi_2 = xi_3 = 0.5
rho = NormalizedDensityStack({1: lambda x: np.ones(x.shape[:-2]),
                              2: lambda x: np.full(x.shape[:-2], 1.5),
                              3: lambda x: np.full(x.shape[:-2], 3.0)})
xi = xi_from_rho(rho)
print("xi_3 =", float(xi(3, np.zeros((3, 2)))))

# a short-range attractive stack: xi_n decays with the pair spread
def decay(x, scale=0.05):
    diff = x[..., :, None, :] - x[..., None, :, :]
    return 0.5 * np.exp(-0.5 * (diff**2).sum(axis=(-1, -2, -3)) / scale**2)

stack = CorrelationStack({2: decay, 3: decay, 4: decay})
lam_bar = 100 * math.exp(-1)
for t in (0.02, 0.05, 0.1):
    res = j_series(stack, lam_bar, t, n_trunc=3)
    print(f"t={t}: J ~ {res.value:.4f}  terms {np.round(res.terms, 4)}  converged={res.converged}")

print("second order, K = 0.9 pi t^2 at t = 0.1:", j_second_order(0.9 * math.pi * 0.01, lam_bar, 0.1))
