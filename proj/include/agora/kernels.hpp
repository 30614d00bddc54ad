#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "agora/aggregation.hpp"
#include "agora/geo.hpp"

// Data-parallel kernels. Each has a serial reference used by the tests
// and benchmarks; results are identical, not merely close.
namespace agora::kernels {

int max_threads() noexcept;

/// out[i] = zone_contains(zone, points[i]); `out` must match `points` in size.
void contains_batch(const geo::LocalizationZone& zone, std::span<const geo::GeoPoint> points,
                    std::span<std::uint8_t> out);
void contains_batch_serial(const geo::LocalizationZone& zone, std::span<const geo::GeoPoint> points,
                           std::span<std::uint8_t> out);

void distances_batch(const geo::GeoPoint& origin, std::span<const geo::GeoPoint> points, std::span<double> out);
void distances_batch_serial(const geo::GeoPoint& origin, std::span<const geo::GeoPoint> points,
                            std::span<double> out);

/// Synchronous push-pull merge: result[i] is stores[i] merged with
/// stores[partners[i]] and with every stores[j] where partners[j] == i.
/// A negative partner means the node has no neighbor.
std::vector<aggregation::Store> merge_round(std::span<const aggregation::Store> stores, std::span<const int> partners);
std::vector<aggregation::Store> merge_round_serial(std::span<const aggregation::Store> stores,
                                                   std::span<const int> partners);

}  // namespace agora::kernels
