"""The horizontal gradients of the penalty at p and q nearly agree.

Along pairs that approach each other with phi ~ t^2, the gap between
|Y_p|^2 and |Y_q|^2 shrinks at least like phi^2.  The fitted exponent
depends on how fast f' vanishes at the base point.
"""

from martinet import MartinetProfile, gap_asymptotics, pinned_family

for name, f in (("x1", MartinetProfile([0, 1])), ("x1^2/2", MartinetProfile([0, 0, 0.5])),
                ("x1^3", MartinetProfile([0, 0, 0, 1]))):
    table = gap_asymptotics(f)
    print(f"f = {name:7s} gap ~ phi^{table.gap_slope:.3f}")
    for row in table.rows[::3]:
        print(f"    t {row['t']:.1e}  phi {row['phi']:.3e}  gap {row['gap']:+.3e}")

table = gap_asymptotics(MartinetProfile([0, 0, 0.5]), pinned_family())
print("pinned first coordinates: gaps", {row["gap"] for row in table.rows})
