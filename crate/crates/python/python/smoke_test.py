"""Smoke test for the isac_hybrid_py extension module."""

import json
import math

import isac_hybrid_py as ih


def main():
    s = ih.Scenario()
    s.target = (200.0, 50.0)
    s.ue = (400.0, 50.0)

    b = ih.peb_point(s)
    assert b.peb_limit <= b.peb_hybrid <= b.peb_mono, b
    print(b)

    f = ih.fisher_set(s)
    closed = ih.hybrid_crlb(f, s.target, s.ue, s.speed_of_light)
    numeric = ih.numeric_crlb(f, s.target, s.ue, s.speed_of_light)
    assert math.isclose(closed, numeric, rel_tol=1e-9), (closed, numeric)

    psi = ih.optimal_bistatic_angle(0.5)
    assert math.pi / 2 < psi <= math.pi, psi

    closed_area, quad_area = ih.mono_coverage(s, 1.0)
    assert math.isclose(closed_area, quad_area, rel_tol=0.02)

    region = ih.ue_region(s, 0.5 * (b.peb_limit + b.peb_mono))
    assert region["branch"] in ("full-loop", "partial-loop"), region["branch"]
    low = ih.peb_cdf(s, 1e-5, region["peb_limit"] * 1.5)
    high = ih.peb_cdf(s, 1e-3, region["peb_limit"] * 1.5)
    assert 0.0 <= low <= high <= 1.0, (low, high)

    round_trip = ih.Scenario(s.to_json())
    assert round_trip.target == s.target
    try:
        ih.Scenario(json.dumps({"bogus": 1}))
    except ValueError:
        pass
    else:
        raise AssertionError("unknown field accepted")

    rows = ih.monte_carlo(s, [20.0], trials=20, seed=1)
    assert rows[0]["trials"] == 20 and math.isfinite(rows[0]["rmse_pos_hybrid"])

    print("smoke test passed")


if __name__ == "__main__":
    main()
