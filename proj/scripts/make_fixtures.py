#!/usr/bin/env python3
"""Regenerate the frozen cumulative tables under data/jhu/.

Daily series are monotone-interpolated through historical country-level
anchor values, with a deterministic day-of-week reporting ripple on the
increments. Each inter-anchor segment is integer-rounded by largest
remainder so every anchor value is hit exactly. No randomness: reruns are
byte-identical.
"""

from __future__ import annotations

import pathlib
from datetime import date, timedelta

import numpy as np
from scipy.interpolate import PchipInterpolator

START = date(2020, 1, 22)
END = date(2020, 5, 28)
CUTS = [date(2020, 3, 19), date(2020, 5, 28)]
ROOT = pathlib.Path(__file__).resolve().parent.parent


def d(m: int, day: int) -> date:
    return date(2020, m, day)


# (date, confirmed, deaths, recovered) anchors per series.
ITALY = [
    (d(1, 31), 2, 0, 0),
    (d(2, 7), 3, 0, 0),
    (d(2, 21), 20, 1, 0),
    (d(2, 28), 888, 21, 46),
    (d(3, 6), 4636, 197, 523),
    (d(3, 9), 9172, 463, 724),
    (d(3, 13), 17660, 1266, 1439),
    (d(3, 16), 27980, 2158, 2749),
    (d(3, 19), 41035, 3405, 4440),
    (d(3, 22), 59138, 5476, 7024),
    (d(3, 25), 74386, 7503, 9362),
    (d(3, 28), 92472, 10023, 12384),
    (d(3, 31), 105792, 12428, 15729),
    (d(4, 3), 119827, 14681, 19758),
    (d(4, 6), 132547, 16523, 22837),
    (d(4, 9), 143626, 18279, 28470),
    (d(4, 12), 156363, 19899, 34211),
    (d(4, 19), 178972, 23660, 47055),
    (d(4, 26), 195351, 26384, 63120),
    (d(5, 3), 210717, 28884, 81654),
    (d(5, 10), 219070, 30560, 105186),
    (d(5, 14), 223096, 31368, 115288),
    (d(5, 21), 228006, 32486, 134560),
    (d(5, 28), 231732, 33142, 150604),
]

UK = [
    (d(1, 31), 2, 0, 0),
    (d(2, 28), 20, 0, 8),
    (d(3, 9), 321, 4, 18),
    (d(3, 16), 1543, 55, 20),
    (d(3, 23), 6650, 335, 135),
    (d(3, 31), 25150, 1789, 179),
    (d(4, 7), 55242, 6159, 260),
    (d(4, 12), 84279, 10612, 344),
    (d(4, 19), 120067, 16060, 436),
    (d(4, 26), 152840, 20732, 622),
    (d(5, 3), 186599, 28446, 859),
    (d(5, 10), 219183, 31855, 925),
    (d(5, 17), 243695, 34636, 1029),
    (d(5, 21), 250908, 36042, 1141),
    (d(5, 28), 269127, 37837, 1161),
]

US = [
    (d(1, 22), 1, 0, 0),
    (d(2, 24), 51, 0, 6),
    (d(3, 1), 74, 1, 7),
    (d(3, 9), 605, 22, 8),
    (d(3, 16), 4632, 85, 17),
    (d(3, 23), 43843, 557, 178),
    (d(3, 31), 188172, 3873, 7024),
    (d(4, 6), 366614, 10783, 19581),
    (d(4, 12), 555313, 22020, 32988),
    (d(4, 19), 759086, 40661, 70337),
    (d(4, 27), 988197, 56259, 111424),
    (d(5, 5), 1204351, 71064, 189791),
    (d(5, 12), 1369376, 82356, 230287),
    (d(5, 21), 1577287, 94699, 298418),
    (d(5, 28), 1721750, 101617, 399991),
]

KOREA = [
    (d(1, 22), 1, 0, 0),
    (d(2, 20), 104, 1, 16),
    (d(3, 1), 3736, 17, 30),
    (d(3, 9), 7382, 51, 166),
    (d(3, 31), 9786, 162, 5408),
    (d(4, 30), 10765, 247, 9059),
    (d(5, 28), 11344, 269, 10340),
]

# Small UK territories, confirmed only, to exercise country aggregation.
GIBRALTAR = [(d(3, 4), 1), (d(3, 16), 5), (d(3, 31), 69), (d(4, 12), 120),
             (d(4, 26), 141), (d(5, 28), 158)]
BERMUDA = [(d(3, 18), 2), (d(3, 31), 32), (d(4, 12), 57), (d(4, 26), 99),
           (d(5, 28), 140)]
CAYMAN = [(d(3, 13), 1), (d(3, 31), 12), (d(4, 12), 54), (d(4, 26), 70),
          (d(5, 28), 134)]


def largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer increments summing to total, proportional to weights."""
    n = len(weights)
    if total == 0:
        return np.zeros(n, dtype=np.int64)
    if weights.sum() <= 0:
        weights = np.ones(n)
    raw = weights * (total / weights.sum())
    base = np.floor(raw).astype(np.int64)
    short = total - base.sum()
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:short]] += 1
    return base


def daily_series(anchors, ripple: float, phase: float) -> np.ndarray:
    """Integer daily cumulative series START..END through the anchors."""
    days = (END - START).days + 1
    out = np.zeros(days, dtype=np.int64)
    idx = np.array([(a[0] - START).days for a in anchors])
    val = np.array([a[1] for a in anchors], dtype=float)
    if len(idx) >= 2:
        smooth = PchipInterpolator(idx, val)(np.arange(idx[0], idx[-1] + 1))
    else:
        smooth = val
    out[idx[0]] = int(val[0])
    for k in range(len(idx) - 1):
        i0, i1 = idx[k], idx[k + 1]
        seg_days = np.arange(i0 + 1, i1 + 1)
        incr = np.diff(smooth[i0 - idx[0]:i1 - idx[0] + 1])
        w = np.maximum(incr, 0.0) * (1.0 + ripple * np.sin(2 * np.pi * (seg_days % 7) / 7 + phase))
        w = np.maximum(w, 0.0)
        steps = largest_remainder(w, int(val[k + 1] - val[k]))
        out[i0 + 1:i1 + 1] = int(val[k]) + np.cumsum(steps)
    out[idx[-1] + 1:] = int(val[-1])
    return out


def country(anchors, phases=(0.0, 1.3, 2.4)):
    c = daily_series([(a[0], a[1]) for a in anchors], 0.35, phases[0])
    dd = daily_series([(a[0], a[2]) for a in anchors], 0.25, phases[1])
    r = daily_series([(a[0], a[3]) for a in anchors], 0.30, phases[2])
    assert np.all(np.diff(c) >= 0) and np.all(np.diff(dd) >= 0) and np.all(np.diff(r) >= 0)
    assert np.all(c - dd - r >= 0), "treated compartment went negative"
    return c, dd, r


def main() -> None:
    italy = country(ITALY)
    uk_total = country(UK, phases=(0.9, 2.2, 3.3))
    us = country(US, phases=(1.7, 3.0, 4.1))
    korea = country(KOREA, phases=(2.5, 3.8, 4.9))

    zeros = np.zeros((END - START).days + 1, dtype=np.int64)
    gib = daily_series(GIBRALTAR, 0.2, 0.4)
    ber = daily_series(BERMUDA, 0.2, 1.1)
    cay = daily_series(CAYMAN, 0.2, 1.8)
    uk_main = tuple(col - extra for col, extra in
                    zip(uk_total, (gib + ber + cay, zeros, zeros)))
    assert all(np.all(np.diff(col) >= 0) for col in uk_main)
    assert np.all(uk_main[0] - uk_main[1] - uk_main[2] >= 0)

    # (province, country, lat, long, (confirmed, deaths, recovered))
    rows = [
        ("", "Italy", "41.8719", "12.5674", italy),
        ("", "Korea, South", "35.9078", "127.7669", korea),
        ("Bermuda", "United Kingdom", "32.3078", "-64.7505", (ber, zeros, zeros)),
        ("Cayman Islands", "United Kingdom", "19.3133", "-81.2546", (cay, zeros, zeros)),
        ("Gibraltar", "United Kingdom", "36.1408", "-5.3536", (gib, zeros, zeros)),
        ("", "United Kingdom", "55.3781", "-3.436", uk_main),
        ("", "US", "37.0902", "-95.7129", us),
    ]

    def quote(field: str) -> str:
        if "," in field or '"' in field:
            return '"' + field.replace('"', '""') + '"'
        return field

    for cut in CUTS:
        ncols = (cut - START).days + 1
        dates = [START + timedelta(days=k) for k in range(ncols)]
        header = "Province/State,Country/Region,Lat,Long," + ",".join(
            f"{dt.month}/{dt.day}/{dt.year % 100}" for dt in dates)
        outdir = ROOT / "data" / "jhu" / cut.isoformat()
        outdir.mkdir(parents=True, exist_ok=True)
        for metric, col in (("confirmed", 0), ("deaths", 1), ("recovered", 2)):
            lines = [header]
            for province, name, lat, lon, series in rows:
                counts = ",".join(str(int(v)) for v in series[col][:ncols])
                lines.append(f"{quote(province)},{quote(name)},{lat},{lon},{counts}")
            path = outdir / f"time_series_covid19_{metric}_global.csv"
            path.write_text("\n".join(lines) + "\n")
            print(f"wrote {path.relative_to(ROOT)} ({len(lines) - 1} rows x {ncols} days)")


if __name__ == "__main__":
    main()
