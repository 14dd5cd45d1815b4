#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace driveby::geo {

inline constexpr double kEarthRadiusMeters = 6371008.8;

// Great-circle distance in meters between two WGS84 points given in degrees.
inline double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * rad;
  const double dlon = (lon2 - lon1) * rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(a)));
}

}  // namespace driveby::geo
