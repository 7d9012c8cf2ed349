# cython: language_level=3, boundscheck=False, cdivision=True
"""Compiled geometry kernels; see _pure.py for the reference semantics."""

from libc.math cimport asin, atan2, cos, fabs, fmod, sin, sqrt

cdef double DEG = 0.017453292519943295  # pi / 180
EARTH_RADIUS_KM = 6371.0


cpdef double wrap_deg(double angle):
    cdef double a = fmod(angle, 360.0)
    if a < 0.0:
        a += 360.0
    if a == 360.0:
        a = 0.0
    return a


cpdef double circle_dist_deg(double a, double b):
    cdef double d = fmod(fabs(a - b), 360.0)
    if d > 180.0:
        d = 360.0 - d
    return d


cpdef double haversine_km(double lon_w1, double lat1, double lon_w2, double lat2,
                          double radius_km=6371.0):
    cdef double phi1 = lat1 * DEG
    cdef double phi2 = lat2 * DEG
    cdef double dphi = phi2 - phi1
    cdef double dlam = (lon_w2 - lon_w1) * DEG
    cdef double sp = sin(dphi * 0.5)
    cdef double sl = sin(dlam * 0.5)
    cdef double h = sp * sp + cos(phi1) * cos(phi2) * sl * sl
    if h > 1.0:
        h = 1.0
    return 2.0 * radius_km * asin(sqrt(h))


cpdef double equirect_bearing_deg(double sensor_lon_w, double sensor_lat,
                                  double lon_w, double lat):
    cdef double east = (sensor_lon_w - lon_w) * cos(sensor_lat * DEG)
    cdef double north = lat - sensor_lat
    return wrap_deg(atan2(east, north) / DEG)


cpdef tuple dead_reckon_deg(double lon_w, double lat, double vx_w_kmh,
                            double vy_n_kmh, double t_h, double radius_km,
                            double lon_ref_lat_deg):
    cdef double km_per_deg = DEG * radius_km
    cdef double lon = lon_w + vx_w_kmh * t_h / (km_per_deg * cos(lon_ref_lat_deg * DEG))
    return lon, lat + vy_n_kmh * t_h / km_per_deg
