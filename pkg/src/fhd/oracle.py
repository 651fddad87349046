"""Independent reference for a single (non-fibered) Hénon map.

Plain scalar iteration, no filtration or log-space tracking: iterate until
``max(|x|, |y|)`` passes ESCAPE, then ``G = d^-n (log max(|x_n|, |y_n|) + log|c| / (d - 1))``
where c is the leading coefficient of the step (1 forward, 1/a backward).
The remaining neglected tail is of relative size ``ESCAPE^-1``.
"""

import math

ESCAPE = 1e40


def plain_henon_green(poly, a, z, n_max=200, forward=True):
    """Green function of ``(x, y) -> (y, poly(y) - a x)``; poly lists coefficients lowest first."""
    d = len(poly) - 1
    x, y = complex(z[0]), complex(z[1])
    if not forward:
        x, y = y, x
    for n in range(n_max + 1):
        big = max(abs(x), abs(y))
        if big > ESCAPE:
            # the larger coordinate grows like c times the d-th power of the previous one
            lead = 0.0 if forward else -math.log(abs(a))
            return (math.log(big) + lead / (d - 1)) / d**n
        if n == n_max:
            return 0.0
        acc = 0j
        for c in reversed(poly):
            acc = acc * y + c
        if forward:
            x, y = y, acc - a * x
        else:
            x, y = y, (acc - x) / a
    return 0.0
