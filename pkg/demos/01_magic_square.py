"""The magic square and why no table of predefined +-1 values can fill it.

Run: python demos/01_magic_square.py
"""

from neutron_ks import assignment_contradiction, build_magic_square, classical_bound, verify_square

square = build_magic_square()
report = verify_square(square)

print("Nine spin-path observables, arranged so each row and column commutes:")
for row in square.labels:
    print("   " + "  ".join(f"{label:>10}" for label in row))

# Multiplying along a line gives +I or -I. Rows all give +I, the last column -I.
print("row products   :", report.row_signs)
print("column products:", report.col_signs)

# A noncontextual model would pin each observable to +1 or -1 once and for all.
# The product of all nine values is then +1 by rows and -1 by columns.
c = assignment_contradiction()
print(f"\nchecked {c.assignments_checked} value tables, {len(c.satisfying)} satisfy every line")

# Dropping the contradiction to an inequality: enumerate every table and take
# the largest left-hand side a predefined-value model could ever reach.
for inequality in ("full_5term", "reduced_3term"):
    b = classical_bound(inequality)
    print(f"{inequality:>14}: classical max {b.classical_max:+g} over {b.assignments_checked} tables, "
          f"quantum value {b.qm_value:+g}")
    print(f"{'':>14}  first maximizer {dict(b.maximizing_assignments[0].values)}")
