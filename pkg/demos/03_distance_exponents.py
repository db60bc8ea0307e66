"""How far is a vertical step?

Horizontal curves can only reach x3 by sweeping area.  Where f'(0) != 0 a
vertical step of size delta costs length ~ delta^(1/2); where f vanishes to
order r at 0 it costs ~ delta^(1/(r+1)).  The upper bound below comes from
optimised piecewise-constant controls.
"""

import numpy as np

from martinet import MartinetProfile, ball_box_distance, bracket_order, cc_upper_bound, scaling_exponent

deltas = np.logspace(-3, -1, 5)
for name, f in (("x1", MartinetProfile([0, 1])), ("x1^2/2", MartinetProfile([0, 0, 0.5])),
                ("x1^3", MartinetProfile([0, 0, 0, 1]))):
    r = bracket_order(f, 0.0)
    slope = scaling_exponent(f, (0, 0, 0), 3, deltas)
    print(f"f = {name:7s} bracket order {r}: fitted exponent {slope:.4f}, predicted {1 / (r + 1):.4f}")

# the optimised length stays within constant factors of the ball-box estimate
f = MartinetProfile([0, 0, 0.5])
for d in deltas:
    q = (0.0, 0.0, d)
    L = cc_upper_bound((0, 0, 0), q, f)
    print(f"delta {d:.1e}: length {L:.5f}, ball-box {ball_box_distance((0, 0, 0), q, f):.5f}")
