"""Numerical tolerances, kept in one place so they can be audited together."""

# tip exclusion radius, as a multiple of the local round-model radius
TIP_FRACTION = 1e-4

# seam agreement for profile values and first derivatives
GLUE = 1e-9

# size of every left derivative at the flat end of a torpedo profile
FLAT = 1e-8

# comparison of curvature values against closed forms
CURVATURE = 1e-6

# descriptor seams and canonical comparison of numeric fields
SEAM = 1e-9

# edge lengths and disk data in W-equality
LENGTH = 1e-9

# relative slack when deciding that a requested (lambda, r) is the site's own
SAME_PARAMS = 1e-12

# little-disk operad axioms
OPERAD = 1e-12
