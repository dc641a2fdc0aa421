"""Physical constants and unit conversions, CGS throughout.

All internal physics is CGS (cm, g, s, erg); lab-facing unit conversion
happens only at the cli_io boundary.
"""

# CODATA 2018
HBAR = 1.054571817e-27   # erg s
C_LIGHT = 2.99792458e10  # cm/s (exact)

# lab unit conversions
W_PER_CM2_TO_CGS = 1.0e7          # W/cm^2 -> erg s^-1 cm^-2
MHZ_TO_RAD_PER_S = 2.0e6 * 3.141592653589793
NM_TO_CM = 1.0e-7
