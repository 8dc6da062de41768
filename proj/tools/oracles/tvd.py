#!/usr/bin/env python3
"""Independent scaling-fidelity check on two SQLite files.

Usage: tvd.py SOURCE SCALED FACTOR [--tvd 0.1] [--null-drift 0.05] [--max-distinct 20]

Prints one line per checked column and exits 1 when any check fails.
"""
import argparse
import sqlite3
import sys
from collections import Counter


def tables(conn):
    return [r[0] for r in conn.execute(
        "SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE 'sqlite_%' ORDER BY name")]


def columns(conn, table):
    return [r[1] for r in conn.execute(f'PRAGMA table_info("{table}")')]


def references(conn, table):
    return {r[3] for r in conn.execute(f'PRAGMA foreign_key_list("{table}")')}


def frequencies(conn, table, col):
    values = [r[0] for r in conn.execute(f'SELECT "{col}" FROM "{table}" WHERE "{col}" IS NOT NULL')]
    counts = Counter(str(v) for v in values)
    total = sum(counts.values())
    return {k: v / total for k, v in counts.items()} if total else {}


def tvd(p, q):
    keys = set(p) | set(q)
    return sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys) / 2


def null_rate(conn, table, col):
    n, nulls = conn.execute(f'SELECT COUNT(*), SUM("{col}" IS NULL) FROM "{table}"').fetchone()
    return (nulls or 0) / n if n else 0.0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("source")
    ap.add_argument("scaled")
    ap.add_argument("factor", type=int)
    ap.add_argument("--tvd", type=float, default=0.1)
    ap.add_argument("--null-drift", type=float, default=0.05)
    ap.add_argument("--max-distinct", type=int, default=20)
    args = ap.parse_args()

    src = sqlite3.connect(f"file:{args.source}?mode=ro", uri=True)
    big = sqlite3.connect(f"file:{args.scaled}?mode=ro", uri=True)
    failures = []

    if tables(src) != tables(big):
        failures.append("table sets differ")
    orphans = big.execute("PRAGMA foreign_key_check").fetchall()
    if orphans:
        failures.append(f"{len(orphans)} foreign key orphans")

    for t in tables(src):
        n = src.execute(f'SELECT COUNT(*) FROM "{t}"').fetchone()[0]
        m = big.execute(f'SELECT COUNT(*) FROM "{t}"').fetchone()[0]
        if m != args.factor * n:
            failures.append(f"{t}: {m} rows for {n} at factor {args.factor}")
        if n == 0:
            continue
        refs = references(src, t)
        for c in columns(src, t):
            drift = abs(null_rate(src, t, c) - null_rate(big, t, c))
            if drift > args.null_drift:
                failures.append(f"{t}.{c}: null-rate drift {drift:.4f}")
            distinct, unique = src.execute(
                f'SELECT COUNT(DISTINCT "{c}"), COUNT(*) = COUNT(DISTINCT "{c}") FROM "{t}"').fetchone()
            if distinct == 0 or distinct > args.max_distinct or unique or c in refs:
                continue
            d = tvd(frequencies(src, t, c), frequencies(big, t, c))
            print(f"{t}.{c}\tdistinct={distinct}\ttvd={d:.4f}\tnull_drift={drift:.4f}")
            if d > args.tvd:
                failures.append(f"{t}.{c}: TVD {d:.4f}")

    for f in failures:
        print("FAIL", f)
    print("ok" if not failures else f"{len(failures)} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
