"""Physical constants (SI, CODATA 2018)."""

EPS0 = 8.8541878128e-12     # vacuum permittivity (F/m)
MU0 = 1.25663706212e-6      # vacuum permeability (H/m)
CHI0 = MU0 * EPS0 * EPS0    # vacuum gauge coefficient mu*eps^2
