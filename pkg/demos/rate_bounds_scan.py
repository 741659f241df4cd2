"""Sweep the infection rate and print the rigorous decay-rate sandwich.

For each lambda the lower bound -mu comes from the unique root of the
killed-walk fixed-point function K, and the upper bound is 2*lambda*d - 1.
Past lambda = 1/(2d) the fixed point no longer exists and only the upper
bound is reported.
"""

import numpy as np

from contact_decay import spectral

D = 1


def main():
    print(f"{'lambda':>7} {'p*':>8} {'lower':>8} {'upper':>8} {'width':>7}")
    for lam in np.arange(0.0, 0.551, 0.05):
        rb = spectral.rate_bounds(float(lam), D)
        p_star = rb.fixed_point.p_star if rb.fixed_point else float("nan")
        width = rb.upper - rb.lower
        print(f"{lam:7.2f} {p_star:8.4f} {rb.lower:8.4f} {rb.upper:8.4f} {width:7.4f}"
              + ("   <- upper bound only" if rb.warning else ""))


if __name__ == "__main__":
    main()
