"""Sample sizes with finite population correction, and the interval for a reviewed sample."""

import argparse

from sqlloc.sampling import accuracy_estimate, apply_fpc, required_sample_size, z_score


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--population", type=int, default=10962)
    ap.add_argument("--correct", type=int, default=956)
    ap.add_argument("--reviewed", type=int, default=974)
    args = ap.parse_args()

    print(f"population N = {args.population}")
    print(f"{'confidence':>10} {'margin':>7} {'z':>8} {'n0':>6} {'n':>6}")
    for conf in (0.90, 0.95, 0.99):
        for margin in (0.03, 0.05):
            n0 = required_sample_size(conf, margin)
            print(f"{conf:>10.2f} {margin:>7.2f} {z_score(conf):>8.4f} {n0:>6} {apply_fpc(n0, args.population):>6}")
    print()
    for method in ("wald", "wilson"):
        point, low, high = accuracy_estimate(args.correct, args.reviewed, 0.95, method).as_percent()
        print(f"{method:>6}: {args.correct}/{args.reviewed} correct -> {point}% [{low}, {high}]")


if __name__ == "__main__":
    main()
