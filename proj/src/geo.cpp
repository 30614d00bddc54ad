#include "agora/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "agora/error.hpp"

namespace agora::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double wrap_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative value can round up to exactly 360
  return r >= 360.0 ? 0.0 : r;
}

double wrap_pi(double rad) {
  return std::remainder(rad, 2.0 * std::numbers::pi);
}

void require_length(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw Error(ErrorCode::Range, std::string(what) + " must be a finite positive length");
  }
}

}  // namespace

GeoPoint::GeoPoint(double lat_deg, double lon_deg) : lat_(lat_deg), lon_(lon_deg) {
  if (!std::isfinite(lat_deg) || !std::isfinite(lon_deg)) {
    throw Error(ErrorCode::Range, "coordinates must be finite");
  }
  if (lat_deg < -90.0 || lat_deg > 90.0) {
    throw Error(ErrorCode::Range, "latitude out of range [-90, 90]");
  }
  if (lon_deg < -180.0 || lon_deg > 180.0) {
    throw Error(ErrorCode::Range, "longitude out of range [-180, 180)");
  }
  if (lon_deg == 180.0) lon_ = -180.0;
}

Circle make_circle(GeoPoint center, double radius_m) {
  require_length(radius_m, "radius");
  return Circle{center, radius_m};
}

Ellipse make_ellipse(GeoPoint center, double semi_major_m, double semi_minor_m, double minor_axis_bearing_deg) {
  require_length(semi_major_m, "semi-major axis");
  require_length(semi_minor_m, "semi-minor axis");
  if (semi_minor_m > semi_major_m) {
    throw Error(ErrorCode::Range, "semi-minor axis exceeds semi-major axis");
  }
  if (!std::isfinite(minor_axis_bearing_deg)) {
    throw Error(ErrorCode::Range, "bearing must be finite");
  }
  return Ellipse{center, semi_major_m, semi_minor_m, wrap_degrees(minor_axis_bearing_deg)};
}

const GeoPoint& zone_center(const LocalizationZone& zone) noexcept {
  return std::visit([](const auto& z) -> const GeoPoint& { return z.center; }, zone);
}

double zone_extent_m(const LocalizationZone& zone) noexcept {
  if (const auto* c = std::get_if<Circle>(&zone)) return c->radius_m;
  return std::get<Ellipse>(zone).semi_major_m;
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double phi1 = a.lat_deg() * kDegToRad;
  const double phi2 = b.lat_deg() * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.lon_deg() - a.lon_deg()) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  // Symmetric in (a, b): cos products commute and the squared sines are even.
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

double initial_bearing(const GeoPoint& from, const GeoPoint& to) {
  if (from == to) {
    throw Error(ErrorCode::CoincidentPoints, "bearing between coincident points is undefined");
  }
  const double phi1 = from.lat_deg() * kDegToRad;
  const double phi2 = to.lat_deg() * kDegToRad;
  const double dlambda = (to.lon_deg() - from.lon_deg()) * kDegToRad;
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  return wrap_degrees(std::atan2(y, x) * kRadToDeg);
}

GeoPoint destination_point(const GeoPoint& from, double bearing_deg, double distance_m) {
  const double delta = distance_m / kEarthRadiusM;
  const double theta = bearing_deg * kDegToRad;
  const double phi1 = from.lat_deg() * kDegToRad;
  const double lambda1 = from.lon_deg() * kDegToRad;
  const double sin_phi2 = std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(theta);
  const double phi2 = std::asin(std::clamp(sin_phi2, -1.0, 1.0));
  const double lambda2 = lambda1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                                              std::cos(delta) - std::sin(phi1) * sin_phi2);
  return GeoPoint(phi2 * kRadToDeg, wrap_pi(lambda2) * kRadToDeg);
}

GeoPoint interpolate(const GeoPoint& a, const GeoPoint& b, double fraction) {
  if (fraction <= 0.0) return a;
  if (fraction >= 1.0) return b;
  const double delta = haversine_distance(a, b) / kEarthRadiusM;
  if (delta == 0.0) return a;
  const double phi1 = a.lat_deg() * kDegToRad, lambda1 = a.lon_deg() * kDegToRad;
  const double phi2 = b.lat_deg() * kDegToRad, lambda2 = b.lon_deg() * kDegToRad;
  const double wa = std::sin((1.0 - fraction) * delta) / std::sin(delta);
  const double wb = std::sin(fraction * delta) / std::sin(delta);
  const double x = wa * std::cos(phi1) * std::cos(lambda1) + wb * std::cos(phi2) * std::cos(lambda2);
  const double y = wa * std::cos(phi1) * std::sin(lambda1) + wb * std::cos(phi2) * std::sin(lambda2);
  const double z = wa * std::sin(phi1) + wb * std::sin(phi2);
  const double lat = std::atan2(z, std::hypot(x, y)) * kRadToDeg;
  const double lon = std::atan2(y, x) * kRadToDeg;
  return GeoPoint(std::clamp(lat, -90.0, 90.0), lon);
}

PlaneOffset to_tangent_plane(const GeoPoint& origin, const GeoPoint& p) noexcept {
  const double dphi = (p.lat_deg() - origin.lat_deg()) * kDegToRad;
  const double dlambda = wrap_pi((p.lon_deg() - origin.lon_deg()) * kDegToRad);
  return PlaneOffset{kEarthRadiusM * dlambda * std::cos(origin.lat_deg() * kDegToRad), kEarthRadiusM * dphi};
}

GeoPoint from_tangent_plane(const GeoPoint& origin, PlaneOffset offset) {
  const double lat = origin.lat_deg() + offset.north_m / kEarthRadiusM * kRadToDeg;
  const double coslat = std::cos(origin.lat_deg() * kDegToRad);
  const double dlon = coslat > 1e-12 ? offset.east_m / (kEarthRadiusM * coslat) * kRadToDeg : 0.0;
  return GeoPoint(std::clamp(lat, -90.0, 90.0), wrap_pi((origin.lon_deg() + dlon) * kDegToRad) * kRadToDeg);
}

bool zone_contains(const LocalizationZone& zone, const GeoPoint& p) noexcept {
  if (const auto* c = std::get_if<Circle>(&zone)) {
    return haversine_distance(c->center, p) <= c->radius_m;
  }
  const auto& e = std::get<Ellipse>(zone);
  const PlaneOffset d = to_tangent_plane(e.center, p);
  const double theta = e.minor_axis_bearing_deg * kDegToRad;
  // u runs along the minor axis, v along the major axis (bearing + 90).
  const double u = d.east_m * std::sin(theta) + d.north_m * std::cos(theta);
  const double v = d.east_m * std::cos(theta) - d.north_m * std::sin(theta);
  const double nu = u / e.semi_minor_m;
  const double nv = v / e.semi_major_m;
  return nu * nu + nv * nv <= 1.0;
}

Ellipse ellipse_toward(const GeoPoint& center, const GeoPoint& next_poi, double semi_major_m, double semi_minor_m) {
  return make_ellipse(center, semi_major_m, semi_minor_m, initial_bearing(center, next_poi));
}

}  // namespace agora::geo
