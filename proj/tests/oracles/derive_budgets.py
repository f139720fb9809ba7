"""Re-derives MedElim round budgets and WNElim totals in 50-digit arithmetic.

Writes tests/data/medelim_budgets.csv and tests/data/wnelim_totals.csv.
"""
import csv
import itertools
import pathlib

from mpmath import mp, mpf, ceil, log

mp.dps = 50
DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def medelim_budget(sigma2, eps, delta, m, rnd):
    eps_l = eps / 3 * (mpf(3) / 4) ** rnd
    delta_l = delta / 4 / mpf(2) ** rnd
    t = 2 * sigma2 / (eps_l / 2) ** 2 * log(m / delta_l)
    return t


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    rows = []
    for sigma2, eps, delta, m in itertools.product(
        ["0.25", "1", "3.7"], ["0.4", "0.2", "0.05"], ["0.1", "0.01"], [1, 3]
    ):
        for rnd in range(1, 7):
            t = medelim_budget(mpf(sigma2), mpf(eps), mpf(delta), mpf(m), rnd)
            frac = t - mp.floor(t)
            # A budget within 1e-9 of an integer would make the ceiling fragile.
            assert min(frac, 1 - frac) > mpf("1e-9"), (sigma2, eps, delta, m, rnd)
            rows.append([sigma2, eps, delta, m, rnd, mp.nstr(t, 20), int(ceil(t))])
    with open(DATA / "medelim_budgets.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma2", "epsilon", "delta", "m", "round", "exact", "budget"])
        w.writerows(rows)

    cases = [
        (["1", "1"], "0.2", "0.1"),
        (["0.25", "0.5", "1", "2", "4"], "0.2", "0.1"),
        (["3.7"], "0.05", "0.01"),
        (["0.001", "10", "250", "0.3", "7", "7", "7"], "0.5", "0.05"),
    ]
    with open(DATA / "wnelim_totals.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma2", "epsilon", "delta", "exact_total", "ceiling_total"])
        for s2, eps, delta in cases:
            vals = [mpf(x) for x in s2]
            total = sum(vals)
            eps, delta = mpf(eps), mpf(delta)
            per_arm = [2 * v / (eps / 2) ** 2 * log(total / (delta * v)) for v in vals]
            w.writerow([" ".join(s2), mp.nstr(eps, 10), mp.nstr(delta, 10),
                        mp.nstr(sum(per_arm), 25), sum(int(ceil(t)) for t in per_arm)])


if __name__ == "__main__":
    main()
