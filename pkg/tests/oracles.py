"""Frozen reference values, computed independently of the package.

Each value records how it was obtained so it can be regenerated.
"""

import math

# sum_{l<=10} (2l+1) exp(-l(l+1)) / (4 pi), mpmath at 30 digits
HEAT_DIAG_T1 = 0.112876078715221718559628823014

# sqrt(3 / 4 pi): max of Y_10, attained at the poles
Y10_MAX = 0.488602511902919921586384622838

# |grad (Y_10 / sqrt 2)| on the equator
Y10_EQUATOR_SPEED = 0.345494149471335479265244646032

# 2^alpha Gamma(1 + alpha/2) / (pi |Gamma(-alpha/2)|) at alpha = 1
C_ALPHA_1 = 1.0 / (2.0 * math.pi)

# Gamma(l+1+a/2)/Gamma(l+1-a/2) at l = 1, a = 1: Gamma(5/2)/Gamma(3/2)
CONFORMAL_L1_A1 = 1.5

# largest deviations of the rotation generator on the 32x32 box at h = 0.1,
# from the closed-form orbit derivative (see test_geometry for the sympy check)
EXPANSION_H01_DEV11 = 0.0025100033109677344
EXPANSION_H01_DEV12 = 0.005016607345747782
