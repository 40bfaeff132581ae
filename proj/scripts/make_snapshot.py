#!/usr/bin/env python3
"""Regenerate the bundled reference snapshot under data/.

The snapshot is synthetic. Player outcomes are drawn from a spike-plus-Beta
truth per position group, trades are drawn around a Weibull market curve, and
the rookie cost table is interpolated from an approximate rookie wage scale.
Output is deterministic for a given --seed.

    python3 scripts/make_snapshot.py --out data
"""

import argparse
import csv
import os

import numpy as np
from scipy import special

Y_BUST = 0.005
POSITIONS = ["QB", "WR", "RB", "TE", "OT", "IOL", "DL", "ED", "LB", "CB", "S"]
POSITION_WEIGHTS = np.array([127, 350, 240, 180, 210, 300, 290, 269, 269, 340, 240], float)
NON_MODELED = ["K", "P", "LS"]

# Population coefficients: alpha0, alpha1, beta1..beta4, gamma0, gamma1.
BASE = np.array([-0.85003, 0.00817, -5.56709, -3.05094, -3.3057, -3.76083, 1.06407, 0.03474])

# Per-position offsets from BASE, same coefficient order.
OFFSETS = np.array([
    [0.25, 0.0, 0.55, 0.55, 0.55, 0.55, -0.8, 0.0],              # QB
    [-0.0071, 0.0, 0.149, 0.149, 0.149, 0.149, -0.0038, 0.0],    # WR
    [0.258, 0.0, -0.0506, -0.0506, -0.0506, -0.0506, -0.1327, 0.0],
    [0.231, 0.0, 0.0426, 0.0426, 0.0426, 0.0426, 0.2492, 0.0],
    [-0.116, 0.0, -0.0554, -0.0554, -0.0554, -0.0554, 0.0361, 0.0],
    [-0.0735, 0.0, -0.0845, -0.0845, -0.0845, -0.0845, -0.2138, 0.0],
    [-0.1194, 0.0, 0.0165, 0.0165, 0.0165, 0.0165, 0.0074, 0.0],
    [0.1, 0.0, 0.0599, 0.0599, 0.0599, 0.0599, 0.0767, 0.0],
    [-0.0251, 0.0, -0.0633, -0.0633, -0.0633, -0.0633, -0.0684, 0.0],
    [0.1355, 0.0, -0.0574, -0.0574, -0.0574, -0.0574, -0.1283, 0.0],
    [-0.3834, 0.0, 0.0432, 0.0432, 0.0432, 0.0432, 0.1776, 0.0],  # S
])

# Picks made per draft, 2013..2023 (compensatory picks push some drafts past 256).
PICKS_PER_YEAR = [254, 256, 256, 253, 253, 256, 254, 255, 259, 262, 259]

MARKET_LAMBDA = 0.0405
MARKET_BETA = 1.185
MARKET_RHO = 0.25
MARKET_NOISE_SD = 0.08

# Approximate four-year rookie contract totals (millions of dollars) at anchor picks.
ROOKIE_TOTALS = {
    1: 37.96, 2: 36.3, 3: 35.2, 4: 34.0, 5: 31.9, 8: 25.0, 10: 21.4, 12: 19.0,
    16: 15.6, 20: 14.0, 25: 13.2, 32: 11.9, 33: 9.3, 42: 8.2, 50: 7.0, 64: 5.9,
    65: 5.6, 100: 5.1, 128: 4.6, 150: 4.3, 180: 4.0, 220: 3.9, 256: 3.87,
}
SEASON_WEIGHTS = np.array([0.85, 0.95, 1.05, 1.15])
BASE_CAP = 224_800_000
CAP_GROWTH = 0.07


def bernstein(x):
    t = (x - 1.0) / 255.0
    return np.array([(1 - t) ** 3, 3 * t * (1 - t) ** 2, 3 * t * t * (1 - t), t ** 3])


def draw_outcome(rng, coef, x):
    bp = special.expit(coef[0] + coef[1] * x)
    if rng.random() < bp:
        return 0.0 if rng.random() < 0.7 else rng.uniform(0.0, Y_BUST)
    mu = special.expit(bernstein(x) @ coef[2:6])
    phi = np.exp(coef[6] + coef[7] * x)
    while True:
        y = rng.beta(mu * phi, (1 - mu) * phi)
        if Y_BUST < y < 1.0:
            return y


def write_picks(rng, path):
    weights = POSITION_WEIGHTS / POSITION_WEIGHTS.sum()
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["draft_year", "draft_position", "position_group", "outcome_y"])
        for year, count in zip(range(2013, 2024), PICKS_PER_YEAR):
            for pick in range(1, count + 1):
                if rng.random() < 0.025:
                    out.writerow([year, pick, NON_MODELED[rng.integers(3)], "0.000000"])
                    continue
                k = rng.choice(len(POSITIONS), p=weights)
                y = draw_outcome(rng, BASE + OFFSETS[k], float(min(pick, 256)))
                out.writerow([year, pick, POSITIONS[k], f"{y:.6f}"])


def market_value(x):
    return np.exp(-MARKET_LAMBDA * (x - 1.0) ** MARKET_BETA)


def pick_for_value(value):
    if value >= 1.0:
        return 1
    if value <= 1e-12:
        return 10_000
    return int(round(1.0 + (-np.log(value) / MARKET_LAMBDA) ** (1.0 / MARKET_BETA)))


def draw_trade(rng):
    u = rng.random()
    if u < 0.6:
        top = int(rng.integers(1, 65))
    elif u < 0.9:
        top = int(rng.integers(65, 161))
    else:
        top = int(rng.integers(161, 231))
    down = [(top, 0)]
    if rng.random() < 0.25 and top + 10 < 250:
        down.append((int(rng.integers(top + 10, min(top + 121, 257))), 0))
    target = sum(market_value(x) for x, _ in down) * np.exp(rng.normal(0.0, MARKET_NOISE_SD))
    n_up = rng.choice([1, 2, 3], p=[0.1, 0.7, 0.2])
    if n_up == 1 and len(down) == 1:
        n_up = 2
    future = rng.random() < 0.12
    for _ in range(200):
        up = []
        if n_up == 1:
            first = pick_for_value(target)
        else:
            first = pick_for_value(target * rng.uniform(0.5, 0.85))
        up.append((first, 0))
        remaining = target - market_value(first)
        if n_up >= 2 and remaining <= 1e-12:
            continue
        if n_up == 3:
            second = pick_for_value(remaining * rng.uniform(0.5, 0.8))
            up.append((second, 0))
            remaining -= market_value(second)
        if n_up >= 2:
            if remaining <= 1e-12:
                continue
            if future:
                face = remaining * (1.0 + MARKET_RHO)
                if face >= 1.0:
                    continue
                up.append((pick_for_value(face), 1))
            else:
                up.append((pick_for_value(remaining), 0))
        picks = [x for x, _ in up]
        if max(picks) > 256 or min(picks) <= top:
            continue
        current = [x for x, n in up + down if n == 0]
        if len(set(current)) != len(current):
            continue
        return down, sorted(up)
    return None


def write_trades(rng, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["trade_year", "side", "pick_number", "years_ahead", "trade_id"])
        trade_id = 0
        for year in range(2006, 2024):
            made = 0
            while made < 20:
                trade = draw_trade(rng)
                if trade is None:
                    continue
                down, up = trade
                trade_id += 1
                made += 1
                for side, bundle in (("down", down), ("up", up)):
                    for pick, ahead in sorted(bundle):
                        out.writerow([year, side, pick, ahead, trade_id])


def write_cost_table(path):
    anchors = np.array(sorted(ROOKIE_TOTALS))
    log_totals = np.log([ROOKIE_TOTALS[k] for k in anchors])
    picks = np.arange(1, 257)
    totals = np.exp(np.interp(picks, anchors, log_totals)) * 1e6
    with open(path, "w", newline="") as fh:
        fh.write(f"#meta base_cap_dollars={BASE_CAP} cap_growth_rate={CAP_GROWTH}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["draft_position", "season_index", "compensation_dollars"])
        for pick, total in zip(picks, totals):
            for season, w in enumerate(SEASON_WEIGHTS, start=1):
                out.writerow([pick, season, int(round(total / 4.0 * w / 1000.0) * 1000)])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    ap.add_argument("--seed", type=int, default=20130425)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    # Independent streams so outcome and trade draws do not perturb each other.
    pick_seq, trade_seq = np.random.SeedSequence(args.seed).spawn(2)
    write_picks(np.random.default_rng(pick_seq), os.path.join(args.out, "picks.csv"))
    write_trades(np.random.default_rng(trade_seq), os.path.join(args.out, "trades.csv"))
    write_cost_table(os.path.join(args.out, "cost_table.csv"))


if __name__ == "__main__":
    main()
