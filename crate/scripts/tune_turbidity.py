#!/usr/bin/env python3
"""Calibrate per-site monthly Linke turbidity tables so the annual clear-sky
energy envelope matches the published station ranges. Uses the reference
implementation in clearsky_reference.py."""

from datetime import date, timedelta

from clearsky_reference import SITES, day_stats, interp_tl


def solstice_energy(name: str, d: date, tl: float) -> float:
    _, e = day_stats(SITES[name], d, [tl] * 12)
    return e


def bisect_tl(name: str, d: date, target: float) -> float:
    lo, hi = 1.5, 8.0
    for _ in range(40):
        mid = (lo + hi) / 2.0
        e = solstice_energy(name, d, mid)
        if e > target:
            lo = mid  # more turbidity lowers energy
        else:
            hi = mid
    return (lo + hi) / 2.0


def cosine_table(winter_tl: float, summer_tl: float) -> list[float]:
    import math

    mid = (winter_tl + summer_tl) / 2.0
    amp = (summer_tl - winter_tl) / 2.0
    # minimum at the January midpoint (m=0), maximum at July (m=6)
    return [
        round(mid - amp * math.cos(2 * math.pi * m / 12.0), 2)
        for m in range(12)
    ]


def full_sweep(name: str, monthly_tl: list[float]) -> None:
    site = SITES[name]
    d = date(2015, 1, 1)
    end = date(2018, 12, 31)
    sun = []
    energy = []
    while d <= end:
        s, e = day_stats(site, d, monthly_tl)
        sun.append(s)
        energy.append(e)
        d += timedelta(days=1)
    print(
        f"{name}: sunshine [{min(sun)}, {max(sun)}], "
        f"energy [{min(energy):.3f}, {max(energy):.3f}] kWh/m2"
    )


if __name__ == "__main__":
    golden_summer = bisect_tl("golden", date(2017, 6, 21), 9.04)
    golden_winter = bisect_tl("golden", date(2017, 12, 21), 2.73)
    hawaii_summer = bisect_tl("hawaii", date(2017, 6, 21), 7.75)
    hawaii_winter = bisect_tl("hawaii", date(2017, 12, 21), 4.69)
    print("golden anchors: winter", round(golden_winter, 2), "summer", round(golden_summer, 2))
    print("hawaii anchors: winter", round(hawaii_winter, 2), "summer", round(hawaii_summer, 2))

    golden_table = cosine_table(round(golden_winter, 2), round(golden_summer, 2))
    hawaii_table = cosine_table(round(hawaii_winter, 2), round(hawaii_summer, 2))
    print("golden table:", golden_table)
    print("hawaii table:", hawaii_table)

    full_sweep("golden", golden_table)
    full_sweep("hawaii", hawaii_table)
