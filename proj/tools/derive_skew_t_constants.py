"""Raw moments of the two-piece skew-t by numerical integration of its density.

g(x) = 2/(gamma + 1/gamma) * f(gamma x)  for x < 0
g(x) = 2/(gamma + 1/gamma) * f(x/gamma)  for x >= 0
with f the t density on nu degrees of freedom.

Prints the constants used by core/include/streamstat/sim/generators.hpp.
"""

import argparse

import numpy as np
from scipy import integrate, stats


def density(x, nu, gamma):
    c = 2.0 / (gamma + 1.0 / gamma)
    return np.where(x < 0, c * stats.t.pdf(gamma * x, nu), c * stats.t.pdf(x / gamma, nu))


def moment(k, nu, gamma):
    f = lambda x: x**k * density(x, nu, gamma)
    lo, _ = integrate.quad(f, -np.inf, 0.0, epsabs=1e-14, epsrel=1e-13, limit=500)
    hi, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=500)
    return lo + hi


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nu", type=float, default=3.0)
    parser.add_argument("--gamma", type=float, default=1.5)
    args = parser.parse_args()
    mass = moment(0, args.nu, args.gamma)
    m1 = moment(1, args.nu, args.gamma)
    m2 = moment(2, args.nu, args.gamma)
    print(f"total mass      {mass:.17g}")
    print(f"mean (m1)       {m1:.17g}")
    print(f"second moment   {m2:.17g}")
    print(f"variance        {m2 - m1 * m1:.17g}")


if __name__ == "__main__":
    main()
