#!/usr/bin/env python3
"""Writes the synthetic survey fixture used by the offline test suite.

The columns mimic the public survey layout: sixteen occupant targets, a few
descriptive attributes with planted relationships, and columns the default
drop rules remove (an imputation flag, a replicate weight, a dollar amount
and the phone count). A handful of blank, null and infinite cells exercise
the cleaner. Output is deterministic.
"""
import argparse
import csv
import random

COLUMNS = [
    "DOEID", "REGIONC", "METROMICRO", "UATYP10", "TYPEHUQ", "YEARMADERANGE", "TOTROOMS",
    "BEDROOMS", "NCOMBATH", "DISHWASH", "DWASHUSE", "NUMLAPTOP", "ELPERIPH", "INTERNET",
    "CELLPHONE", "HEATHOME", "EQUIPMUSE", "TEMPHOME", "TEMPGONE", "TEMPNITE", "AIRCOND",
    "NUMBERAC", "USEWWAC", "TEMPHOMEAC", "TEMPGONEAC", "TEMPNITEAC", "LGTINNUM", "TOTSQFT_EN",
    "KWH", "DOLLAREL", "HHAGE", "EMPLOYHH", "EDUCATION", "NHSLDMEM", "NUMADULT", "NUMCHILD",
    "ATHOME", "MONEYPY", "ZTYPEHUQ", "BRRWT1",
]


def clamp(v, lo, hi):
    return max(lo, min(hi, v))


def household(rng, i):
    adults = rng.choice([1, 1, 2, 2, 2, 2, 3, 4])
    children = rng.choice([0, 0, 0, 1, 1, 2, 3])
    members = adults + children
    age = clamp(int(rng.gauss(52, 17)), 18, 95)
    employ = 0 if age >= 66 and rng.random() < 0.85 else rng.choice([1, 1, 1, 2, 0])
    education = rng.choice([1, 2, 2, 3, 3, 3, 4, 4, 5])
    income = clamp(education + rng.choice([-2, -1, 0, 0, 1, 2, 3]) + (1 if employ == 1 else 0), 1, 8)
    bedrooms = clamp(members // 2 + rng.choice([0, 1, 1, 2]), 1, 6)
    rooms = bedrooms + rng.choice([2, 3, 3, 4])
    sqft = int(rooms * rng.uniform(180, 320))
    kwh = int(sqft * rng.uniform(4.0, 7.5))
    heat = 0 if rng.random() < 0.06 else 1
    if heat:
        equip = rng.choice([1, 1, 1, 2, 2, 3, 4, 5, 9])
        home = rng.choice(range(64, 77))
        drop = {1: 0, 2: rng.choice([3, 4, 6]), 3: rng.choice([4, 6, 8])}.get(equip, rng.choice([0, 2]))
        gone, nite = home - drop, home - drop // 2 - rng.choice([0, 1, 2])
    else:
        equip, home, gone, nite = -2, -2, -2, -2
    ac = 1 if rng.random() < 0.8 else 0
    units = rng.choice([1, 1, 2, 3]) if ac and rng.random() < 0.45 else 0
    if units:
        useac = rng.choice([1, 1, 2, 3, 4, 4, 5])
        home_ac = rng.choice(range(68, 81))
        gone_ac = home_ac + (0 if useac == 1 else rng.choice([2, 3, 5]))
        nite_ac = home_ac - rng.choice([0, 1, 2])
    else:
        useac, home_ac, gone_ac, nite_ac = -2, -2, -2, -2
    athome = 5 if employ == 0 else rng.choice([0, 1, 2, 3, 4, 5])
    laptops = clamp(education // 2 + rng.choice([-1, 0, 0, 1, 2]) + (1 if children else 0), 0, 6)
    row = {
        "DOEID": 10001 + i,
        "REGIONC": rng.choice([1, 2, 3, 3, 4]),
        "METROMICRO": rng.choice(["METRO", "METRO", "METRO", "MICRO", "NONE"]),
        "UATYP10": rng.choice(["U", "U", "C", "R"]),
        "TYPEHUQ": rng.choice([1, 2, 2, 2, 3, 4, 5]),
        "YEARMADERANGE": rng.choice(range(1, 9)),
        "TOTROOMS": rooms,
        "BEDROOMS": bedrooms,
        "NCOMBATH": clamp(bedrooms // 2 + rng.choice([0, 1]), 1, 4),
        "DISHWASH": 1 if education + rng.choice([-1, 0, 1, 2]) >= 3 else 0,
        "DWASHUSE": rng.choice([11, 12, 13, 20, 30]),
        "NUMLAPTOP": laptops,
        "ELPERIPH": clamp(laptops + rng.choice([-1, 0, 1]), 0, 8),
        "INTERNET": 1 if rng.random() < 0.85 else 0,
        "CELLPHONE": adults + rng.choice([0, 0, 1]),
        "HEATHOME": heat,
        "EQUIPMUSE": equip,
        "TEMPHOME": home,
        "TEMPGONE": gone,
        "TEMPNITE": nite,
        "AIRCOND": ac,
        "NUMBERAC": units,
        "USEWWAC": useac,
        "TEMPHOMEAC": home_ac,
        "TEMPGONEAC": gone_ac,
        "TEMPNITEAC": nite_ac,
        "LGTINNUM": rng.choice([1, 2, 3, 4]),
        "TOTSQFT_EN": sqft,
        "KWH": kwh,
        "DOLLAREL": round(kwh * rng.uniform(0.1, 0.16), 2),
        "HHAGE": age,
        "EMPLOYHH": employ,
        "EDUCATION": education,
        "NHSLDMEM": members,
        "NUMADULT": adults,
        "NUMCHILD": children,
        "ATHOME": athome,
        "MONEYPY": income,
        "ZTYPEHUQ": rng.choice([0, 0, 0, 1]),
        "BRRWT1": round(rng.uniform(2000, 40000), 3),
    }
    return row


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/fixture/recs_fixture.csv")
    ap.add_argument("--rows", type=int, default=200)
    ap.add_argument("--seed", type=int, default=2015)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    rows = [household(rng, i) for i in range(args.rows)]
    # Cells the cleaner must repair.
    for r, c, v in [(3, "NUMBERAC", ""), (17, "KWH", "NA"), (29, "LGTINNUM", ""), (41, "TOTSQFT_EN", "inf"),
                    (58, "ELPERIPH", "null"), (77, "KWH", "Infinity"), (120, "DWASHUSE", "")]:
        if r < len(rows):
            rows[r][c] = v
    with open(args.out, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main()
