#include "agora/kernels.hpp"

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "agora/error.hpp"

namespace agora::kernels {

namespace {

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::BadRequest, "output span does not match input size");
}

// Inbound contacts per node, built serially so the parallel phase only reads.
std::vector<std::vector<int>> callers_of(std::span<const int> partners) {
  std::vector<std::vector<int>> callers(partners.size());
  for (std::size_t j = 0; j < partners.size(); ++j) {
    if (partners[j] >= 0) callers[static_cast<std::size_t>(partners[j])].push_back(static_cast<int>(j));
  }
  return callers;
}

aggregation::Store merged_view(std::span<const aggregation::Store> stores, std::span<const int> partners,
                               const std::vector<std::vector<int>>& callers, std::size_t i) {
  aggregation::Store out = stores[i];
  if (partners[i] >= 0) aggregation::merge_into(out, stores[static_cast<std::size_t>(partners[i])]);
  for (int j : callers[i]) aggregation::merge_into(out, stores[static_cast<std::size_t>(j)]);
  return out;
}

}  // namespace

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void contains_batch(const geo::LocalizationZone& zone, std::span<const geo::GeoPoint> points,
                    std::span<std::uint8_t> out) {
  require_same_size(points.size(), out.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = geo::zone_contains(zone, points[static_cast<std::size_t>(i)]) ? 1 : 0;
  }
}

void contains_batch_serial(const geo::LocalizationZone& zone, std::span<const geo::GeoPoint> points,
                           std::span<std::uint8_t> out) {
  require_same_size(points.size(), out.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = geo::zone_contains(zone, points[i]) ? 1 : 0;
}

void distances_batch(const geo::GeoPoint& origin, std::span<const geo::GeoPoint> points, std::span<double> out) {
  require_same_size(points.size(), out.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = geo::haversine_distance(origin, points[static_cast<std::size_t>(i)]);
  }
}

void distances_batch_serial(const geo::GeoPoint& origin, std::span<const geo::GeoPoint> points,
                            std::span<double> out) {
  require_same_size(points.size(), out.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = geo::haversine_distance(origin, points[i]);
}

std::vector<aggregation::Store> merge_round(std::span<const aggregation::Store> stores, std::span<const int> partners) {
  require_same_size(stores.size(), partners.size());
  const auto callers = callers_of(partners);
  std::vector<aggregation::Store> next(stores.size());
  const auto n = static_cast<std::ptrdiff_t>(stores.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    next[static_cast<std::size_t>(i)] = merged_view(stores, partners, callers, static_cast<std::size_t>(i));
  }
  return next;
}

std::vector<aggregation::Store> merge_round_serial(std::span<const aggregation::Store> stores,
                                                   std::span<const int> partners) {
  require_same_size(stores.size(), partners.size());
  const auto callers = callers_of(partners);
  std::vector<aggregation::Store> next;
  next.reserve(stores.size());
  for (std::size_t i = 0; i < stores.size(); ++i) next.push_back(merged_view(stores, partners, callers, i));
  return next;
}

}  // namespace agora::kernels
