"""Smoke test for the ppw_lab extension module."""

import math

import ppw_lab


def main():
    c = ppw_lab.ppw_constant(2)
    assert abs(c - 2.5387) < 1e-3, c

    l1, l2 = ppw_lab.first_two(2, 1.0)
    j01, j11 = 2.404825557695773, 3.831705970207512
    assert abs(l1 / j01**2 - 1) < 1e-8 and abs(l2 / j11**2 - 1) < 1e-8

    rows = ppw_lab.scan_ratio(2, "power:k=1,alpha=2", 0.5, 6.0, 12)
    ratios = [r["ratio"] for r in rows]
    assert len(ratios) == 12
    assert all(b <= a + 1e-8 for a, b in zip(ratios, ratios[1:]))

    g = ppw_lab.solve_gaussian("plus", 2, 1.0)
    assert all(c["deviation"] <= 1e-7 for c in g["crosscheck"])

    rep = ppw_lab.verify_shape("square:s=1", 1 / 32, "zero", "zero")
    assert rep["passed"] and rep["margin"] > 0
    assert abs(rep["lambda1_omega"] / (2 * math.pi**2) - 1) < 1e-3

    sweep = ppw_lab.ratio_shift_sweep(10_000, 1)
    assert sweep["failures"] == 0 and sweep["x0_nonnegative"] == 0

    try:
        ppw_lab.solve_gaussian("plus", 2, 7.0)
    except ValueError:
        pass
    else:
        raise AssertionError("radius cap not enforced")

    print(f"ppw_lab {ppw_lab.__version__}: ok (constant {c:.6f})")


if __name__ == "__main__":
    main()
