"""Physical constants shared across the toolkit.

All distances are kilometers, all times seconds, all angles radians
unless a name says otherwise.
"""

# Spherical Earth model.
EARTH_RADIUS_KM = 6371.0

# Standard gravitational parameter of Earth, km^3/s^2.
MU_EARTH = 398600.4418

# Earth rotation rate, rad/s.
EARTH_ROTATION_RAD_S = 7.2921159e-5

# Speed of light.
LIGHT_SPEED_KM_S = 299792.458
LIGHT_SPEED_KM_MS = 299.792458
