"""
Hardcoded constants. The decimal strings carry 30 significant digits and are
checked against mpmath in the test suite, the floats are what the numerics use.
"""

import math

GAMMA_ONE_THIRD_STR = "2.67893853470774763365569294097"
ZETA_PRIME_MINUS_ONE_STR = "-0.165421143700450929213919660243"

GAMMA_ONE_THIRD = float(GAMMA_ONE_THIRD_STR)
ZETA_PRIME_MINUS_ONE = float(ZETA_PRIME_MINUS_ONE_STR)
ZETA_MINUS_ONE = -1.0 / 12.0

SQRT3 = math.sqrt(3.0)
RHO = complex(0.5, SQRT3 / 2)  # e^{i pi / 3}
R0 = 2.0 - SQRT3

# |w| <= 1 - pi / (2 sqrt 3) is the disk on which the sixth order estimates hold
SMALL_DISK_RADIUS = 1.0 - math.pi / (2.0 * SQRT3)

# coefficient of Re(w^3) in the expansion of g_D, used as f'(0) / 13824
MODEL_DENOMINATOR = 13824.0

# published reference values, used as defaults and in reports
H_F_ZERO = -0.748752485503338
MU_UPPER = -0.7486227509
MU_LOWER = -0.74862360
COR_BRACKET_LOW = -0.7486222078
COR_BRACKET_HIGH = -0.7486221244
COR_BRACKET_DENOMINATOR = 165888

# f'(0) = ((sqrt 3 / pi) Gamma(1/3)^2)^9, the derivative of j_D(w) = f(w^3) at 0
GAMMA_ZERO = SQRT3 / math.pi * GAMMA_ONE_THIRD**2
F_PRIME_0 = GAMMA_ZERO**9
