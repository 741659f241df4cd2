"""High-dimension behaviour at scaled infection rate lambda/d.

As d grows the fixed point p(lambda/d, d) approaches c = 4*lambda/(1+2*lambda)
and the sandwich collapses onto the limit rate 2*lambda - 1.  Small d uses the
certified box solver for the hitting probability; large d switches to the
Monte Carlo walk estimator.
"""

from contact_decay import spectral

LAM = 0.25
D_LIST = [1, 2, 3, 5, 10]


def main():
    c = 4 * LAM / (1 + 2 * LAM)
    print(f"lambda = {LAM}: c = {c:.6f}, limit rate = {2 * LAM - 1:+.3f}\n")
    for model in ("threshold", "classic"):
        rows = spectral.limit_scan(LAM, D_LIST, model=model)
        print(f"{model} model")
        print(f"{'d':>3} {'p*':>8} {'|p*-c|':>8} {'lower':>8} {'upper':>7} {'gap':>7}")
        for row in rows:
            print(f"{row['d']:3d} {row['p_star']:8.4f} {row['gap_p_to_c']:8.4f} "
                  f"{row['lower']:8.4f} {row['upper']:7.3f} "
                  f"{row['gap_lower_to_limit']:7.4f}")
        print()


if __name__ == "__main__":
    main()
