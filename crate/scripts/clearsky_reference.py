#!/usr/bin/env python3
"""Reference clear-sky GHI values for the test fixtures.

Implements the Ineichen-Perez clear-sky model on top of the Michalsky (1988)
approximate solar position algorithm and the Kasten-Young (1989) airmass with
a barometric pressure correction. This is an independent evaluation path from
the Rust crate (different solar position algorithm, different pressure
correction, Spencer eccentricity with a 1366.1 W/m^2 solar constant) and is
used only to produce frozen fixture values.

Outputs:
  crates/suncluster/tests/fixtures/clearsky_reference.csv
  (plus a summary of per-site annual clear-sky ranges on stdout)
"""

import csv
import math
import os
import random
from datetime import date, datetime, timedelta

OUT = os.path.join(
    os.path.dirname(__file__), "..", "crates", "suncluster", "tests", "fixtures"
)

SITES = {
    # name: (lat, lon_east, elevation_m, utc_offset_hours)
    "golden": (39.74, -105.18, 1828.8, -7.0),
    "hawaii": (19.72, -156.05, 4.0, -10.0),
    "equator_sea": (0.0, 0.0, 0.0, 0.0),
    "midlat_south": (-33.9, 18.4, 42.0, 2.0),
}


def julian_day(dt_utc: datetime) -> float:
    y, m = dt_utc.year, dt_utc.month
    d = (
        dt_utc.day
        + dt_utc.hour / 24.0
        + dt_utc.minute / 1440.0
        + dt_utc.second / 86400.0
    )
    if m <= 2:
        y -= 1
        m += 12
    a = y // 100
    b = 2 - a + a // 4
    return math.floor(365.25 * (y + 4716)) + math.floor(30.6001 * (m + 1)) + d + b - 1524.5


def michalsky_zenith(dt_utc: datetime, lat: float, lon_east: float) -> float:
    """True (unrefracted) solar zenith in degrees, Michalsky 1988."""
    n = julian_day(dt_utc) - 2451545.0
    mnlong = (280.460 + 0.9856474 * n) % 360.0
    mnanom = math.radians((357.528 + 0.9856003 * n) % 360.0)
    eclong = math.radians(
        (mnlong + 1.915 * math.sin(mnanom) + 0.020 * math.sin(2 * mnanom)) % 360.0
    )
    oblqec = math.radians(23.439 - 0.0000004 * n)
    ra = math.atan2(math.cos(oblqec) * math.sin(eclong), math.cos(eclong))
    dec = math.asin(math.sin(oblqec) * math.sin(eclong))
    ut_hours = dt_utc.hour + dt_utc.minute / 60.0 + dt_utc.second / 3600.0
    gmst = (6.697375 + 0.0657098242 * n + ut_hours) % 24.0
    lmst = (gmst + lon_east / 15.0) % 24.0
    ha = math.radians(lmst * 15.0) - ra
    ha = math.atan2(math.sin(ha), math.cos(ha))  # wrap to (-pi, pi]
    latr = math.radians(lat)
    sin_el = math.sin(latr) * math.sin(dec) + math.cos(latr) * math.cos(dec) * math.cos(ha)
    el = math.asin(max(-1.0, min(1.0, sin_el)))
    return 90.0 - math.degrees(el)


def kasten_young_airmass(zenith_deg: float) -> float:
    return 1.0 / (
        math.cos(math.radians(zenith_deg))
        + 0.50572 * (96.07995 - zenith_deg) ** -1.6364
    )


def absolute_airmass(zenith_deg: float, elevation_m: float) -> float:
    am = kasten_young_airmass(zenith_deg)
    pressure_ratio = (1.0 - 2.25577e-5 * elevation_m) ** 5.25588
    return am * pressure_ratio


def spencer_dni_extra(doy: int) -> float:
    b = 2.0 * math.pi * (doy - 1) / 365.0
    e0 = (
        1.00011
        + 0.034221 * math.cos(b)
        + 0.00128 * math.sin(b)
        + 0.000719 * math.cos(2 * b)
        + 0.000077 * math.sin(2 * b)
    )
    return 1366.1 * e0


def ineichen_ghi(zenith_deg: float, elevation_m: float, tl: float, doy: int) -> float:
    if zenith_deg >= 90.0:
        return 0.0
    am = absolute_airmass(zenith_deg, elevation_m)
    fh1 = math.exp(-elevation_m / 8000.0)
    fh2 = math.exp(-elevation_m / 1250.0)
    cg1 = 5.09e-5 * elevation_m + 0.868
    cg2 = 3.92e-5 * elevation_m + 0.0387
    ghi = (
        cg1
        * spencer_dni_extra(doy)
        * math.cos(math.radians(zenith_deg))
        * math.exp(-cg2 * am * (fh1 + fh2 * (tl - 1.0)))
        * math.exp(0.01 * am ** 1.8)
    )
    return max(ghi, 0.0)


def local_to_utc(dt_local: datetime, utc_offset_hours: float) -> datetime:
    return dt_local - timedelta(hours=utc_offset_hours)


def reference_value(site, dt_local: datetime, tl: float) -> float:
    lat, lon, elev, off = site
    dt_utc = local_to_utc(dt_local, off)
    z = michalsky_zenith(dt_utc, lat, lon)
    doy = dt_local.timetuple().tm_yday
    return ineichen_ghi(z, elev, tl, doy)


def emit_fixture() -> None:
    rng = random.Random(20170217)
    rows = []
    names = sorted(SITES)
    for _ in range(1000):
        name = names[rng.randrange(len(names))]
        lat, lon, elev, off = SITES[name]
        day = date(2015, 1, 1) + timedelta(days=rng.randrange(1461))
        # bias sampling toward daylight hours but keep some night samples
        minute = rng.randrange(4 * 60, 22 * 60)
        dt_local = datetime(day.year, day.month, day.day, minute // 60, minute % 60, 30)
        tl = 2.0 + 3.0 * rng.random()
        ghi = reference_value(SITES[name], dt_local, tl)
        rows.append(
            (
                f"{lat:.4f}",
                f"{lon:.4f}",
                f"{elev:.1f}",
                f"{off:.1f}",
                dt_local.strftime("%Y-%m-%d %H:%M:%S"),
                f"{tl:.6f}",
                f"{ghi:.6f}",
            )
        )
    os.makedirs(OUT, exist_ok=True)
    path = os.path.join(OUT, "clearsky_reference.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["latitude", "longitude", "elevation_m", "utc_offset_h", "local_time", "linke_turbidity", "ghi_wm2"])
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def day_stats(site, d: date, monthly_tl) -> tuple[int, float]:
    """(sunshine minutes, csi energy kWh/m2) for one day, minute midpoints."""
    lat, lon, elev, off = site
    tl = interp_tl(monthly_tl, d)
    csi = []
    for m in range(1440):
        dt_local = datetime(d.year, d.month, d.day, m // 60, m % 60, 30)
        csi.append(reference_value(site, dt_local, tl))
    sunshine = sum(1 for v in csi if v > 0.0)
    energy = sum((csi[i] + csi[i + 1]) / 2.0 for i in range(1439)) / 60000.0
    return sunshine, energy


def interp_tl(monthly_tl, d: date) -> float:
    """Piecewise-linear interpolation between month midpoints, periodic."""
    def midpoint_doy(year, month):
        if month == 12:
            nxt = date(year + 1, 1, 1)
        else:
            nxt = date(year, month + 1, 1)
        days_in = (nxt - date(year, month, 1)).days
        return date(year, month, 1).timetuple().tm_yday + (days_in - 1) / 2.0

    year_len = (date(d.year + 1, 1, 1) - date(d.year, 1, 1)).days
    doy = d.timetuple().tm_yday
    mids = [(midpoint_doy(d.year, m + 1), monthly_tl[m]) for m in range(12)]
    # periodic wrap
    ext = [(mids[-1][0] - year_len, mids[-1][1])] + mids + [(mids[0][0] + year_len, mids[0][1])]
    for (x0, y0), (x1, y1) in zip(ext, ext[1:]):
        if x0 <= doy <= x1:
            t = 0.0 if x1 == x0 else (doy - x0) / (x1 - x0)
            return y0 + t * (y1 - y0)
    return monthly_tl[-1]


def annual_sweep(name, monthly_tl) -> None:
    site = SITES[name]
    d = date(2015, 1, 1)
    end = date(2018, 12, 31)
    sun_min, sun_max = 10**9, -(10**9)
    e_min, e_max = 1e18, -1e18
    while d <= end:
        s, e = day_stats(site, d, monthly_tl)
        sun_min, sun_max = min(sun_min, s), max(sun_max, s)
        e_min, e_max = min(e_min, e), max(e_max, e)
        d += timedelta(days=7)  # weekly stride captures the envelope closely
    print(
        f"{name}: tl={monthly_tl} sunshine [{sun_min}, {sun_max}] min, "
        f"energy [{e_min:.3f}, {e_max:.3f}] kWh/m2"
    )


if __name__ == "__main__":
    emit_fixture()
    # candidate turbidity tables for the acceptance configs
    annual_sweep("golden", [3.0] * 12)
    annual_sweep("hawaii", [3.0] * 12)
