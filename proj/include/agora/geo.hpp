#pragma once

#include <variant>

namespace agora::geo {

/// IUGG mean Earth radius, meters.
inline constexpr double kEarthRadiusM = 6'371'008.8;

/// WGS84 position in decimal degrees. Construction validates ranges; a
/// longitude of exactly +180 is folded onto -180.
class GeoPoint {
 public:
  GeoPoint() = default;
  GeoPoint(double lat_deg, double lon_deg);

  double lat_deg() const noexcept { return lat_; }
  double lon_deg() const noexcept { return lon_; }

  bool operator==(const GeoPoint&) const = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

struct Circle {
  GeoPoint center;
  double radius_m = 0.0;

  bool operator==(const Circle&) const = default;
};

struct Ellipse {
  GeoPoint center;
  double semi_major_m = 0.0;
  double semi_minor_m = 0.0;
  /// Direction of the minor axis, clockwise from true north, in [0, 360).
  double minor_axis_bearing_deg = 0.0;

  bool operator==(const Ellipse&) const = default;
};

using LocalizationZone = std::variant<Circle, Ellipse>;

Circle make_circle(GeoPoint center, double radius_m);
/// Bearing is normalized into [0, 360); lengths must satisfy 0 < minor <= major.
Ellipse make_ellipse(GeoPoint center, double semi_major_m, double semi_minor_m, double minor_axis_bearing_deg);

const GeoPoint& zone_center(const LocalizationZone& zone) noexcept;
/// Largest distance from the center that can still be inside the zone.
double zone_extent_m(const LocalizationZone& zone) noexcept;

double haversine_distance(const GeoPoint& a, const GeoPoint& b) noexcept;

/// Forward azimuth at `from`, degrees in [0, 360). Throws CoincidentPoints.
double initial_bearing(const GeoPoint& from, const GeoPoint& to);

/// Point reached by travelling `distance_m` along the great circle that
/// leaves `from` at `bearing_deg`.
GeoPoint destination_point(const GeoPoint& from, double bearing_deg, double distance_m);

/// Great-circle interpolation; fraction 0 gives `a`, 1 gives `b`.
GeoPoint interpolate(const GeoPoint& a, const GeoPoint& b, double fraction);

/// Local east/north offsets of `p` from `origin` on the equirectangular
/// tangent plane, in meters.
struct PlaneOffset {
  double east_m = 0.0;
  double north_m = 0.0;
};
PlaneOffset to_tangent_plane(const GeoPoint& origin, const GeoPoint& p) noexcept;
GeoPoint from_tangent_plane(const GeoPoint& origin, PlaneOffset offset);

bool zone_contains(const LocalizationZone& zone, const GeoPoint& p) noexcept;

/// Ellipse whose minor axis points from `center` toward `next_poi`.
Ellipse ellipse_toward(const GeoPoint& center, const GeoPoint& next_poi, double semi_major_m, double semi_minor_m);

}  // namespace agora::geo
