"""Percent-change columns recomputed from published English and Turkish corpus means."""

from sqlloc.stats import StatsTable, render_comparison

TRAIN = (
    StatsTable(9428, 14.05, 79.81, 15.74, 9002, 0.0607, 31.03, 21.32),
    StatsTable(9428, 10.21, 75.75, 11.91, 15142, 0.1349, 30.89, 23.31),
)
DEV = (
    StatsTable(1534, 14.55, 82.76, 16.24, 2450, 0.0984, 31.46, 21.49),
    StatsTable(1534, 10.64, 79.18, 12.22, 3704, 0.1976, 31.26, 22.04),
)

if __name__ == "__main__":
    for name, (en, tr) in (("training", TRAIN), ("development", DEV)):
        print(f"{name} split")
        print(render_comparison(en, tr, "English", "Turkish"))
        print()
