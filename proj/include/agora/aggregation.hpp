#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agora/time.hpp"

namespace agora::aggregation {

enum class Fn { Sum, Avg, Max, Min, Count };
std::string_view to_string(Fn fn) noexcept;
std::optional<Fn> fn_from(std::string_view name) noexcept;
inline constexpr Fn kAllFns[] = {Fn::Sum, Fn::Avg, Fn::Max, Fn::Min, Fn::Count};

struct Contribution {
  std::string participant;
  std::string task;
  double value = 0.0;
  std::uint64_t version = 0;
  bool tombstone = false;

  bool operator==(const Contribution&) const = default;
};

/// Multiset of live values. Extremes come from the multiset itself, so they
/// stay exact after any removal.
class AggregateState {
 public:
  void add(double v);
  /// Precondition: `v` is in the multiset.
  void remove(double v);

  std::int64_t count() const noexcept { return count_; }
  double sum() const noexcept;
  double sum_of_squares() const noexcept;
  std::optional<double> min() const noexcept;
  std::optional<double> max() const noexcept;
  std::optional<double> avg() const noexcept;
  /// nullopt is Empty: avg/min/max of an empty multiset. Sum and count are
  /// always defined.
  std::optional<double> read(Fn fn) const noexcept;

  const std::map<double, std::int64_t>& counts() const noexcept { return counts_; }
  bool operator==(const AggregateState&) const = default;

 private:
  std::map<double, std::int64_t> counts_;
  std::int64_t count_ = 0;
};

struct Event {
  enum class Kind { Join, Update, Leave };
  Timestamp t;
  Kind kind = Kind::Join;
  std::string participant;
  std::optional<double> value;

  bool operator==(const Event&) const = default;
};
std::string_view to_string(Event::Kind k) noexcept;
std::optional<Event::Kind> event_kind_from(std::string_view name) noexcept;

/// Centralized localized aggregation for one task: one live contribution
/// per participant, rolled back when the participant departs.
class LocalizedAggregator {
 public:
  explicit LocalizedAggregator(std::string task_id = {}) : task_(std::move(task_id)) {}

  /// Throws AlreadyJoined.
  void join(const std::string& participant, double value, Timestamp t = {});
  /// Throws NotJoined.
  void update(const std::string& participant, double value, Timestamp t = {});
  /// Tombstones the contribution. Throws NotJoined.
  void leave(const std::string& participant, Timestamp t = {});
  void apply(const Event& e);

  bool is_live(const std::string& participant) const;
  std::optional<double> read(Fn fn) const noexcept { return state_.read(fn); }
  const AggregateState& state() const noexcept { return state_; }
  const std::map<std::string, Contribution>& contributions() const noexcept { return contributions_; }
  const std::vector<Event>& log() const noexcept { return log_; }
  std::optional<Timestamp> updated_at() const noexcept;

 private:
  std::string task_;
  AggregateState state_;
  std::map<std::string, Contribution> contributions_;
  std::vector<Event> log_;
};

/// Brute-force ground truth: replays `events` into a plain list of live
/// values and evaluates `fn` directly. Throws the same event-order errors
/// as the engine.
std::optional<double> oracle_aggregate(std::span<const Event> events, Fn fn);

// Decentralized variant.

using Store = std::map<std::string, Contribution>;

/// Keeps the highest version per participant; on equal versions a tombstone
/// wins, then the larger value, so merging is a join-semilattice.
void merge_into(Store& into, const Store& from);
AggregateState live_state(const Store& store);

struct GossipNode {
  int id = 0;
  Store store;
  std::vector<int> neighbors;
};

class GossipNetwork {
 public:
  static GossipNetwork complete(int n);
  static GossipNetwork ring(int n);
  /// Connected simple d-regular graph drawn by the pairing model.
  static GossipNetwork random_regular(int n, int d, std::uint64_t seed);

  std::size_t size() const noexcept { return nodes_.size(); }
  const GossipNode& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  std::vector<GossipNode>& nodes() noexcept { return nodes_; }
  const std::vector<GossipNode>& nodes() const noexcept { return nodes_; }

  // Events originate at the participant's home node, which issues versions.
  void local_join(int node, const std::string& participant, double value);
  void local_update(int node, const std::string& participant, double value);
  void local_leave(int node, const std::string& participant);

  std::optional<double> read(int node, Fn fn) const;
  bool connected() const;
  int diameter() const;

 private:
  Contribution& live_at(int node, const std::string& participant);

  std::vector<GossipNode> nodes_;
};

/// Partner choice of every node for one round: each node picks one
/// neighbor uniformly under `seed`.
std::vector<int> choose_partners(const GossipNetwork& net, std::uint64_t seed);

/// One synchronous push-pull round: every node merges the pre-round store of
/// its chosen partner and of every node that chose it. Runs in parallel
/// across nodes; gossip_round_serial is the reference implementation.
GossipNetwork gossip_round(GossipNetwork net, std::uint64_t seed);
GossipNetwork gossip_round_serial(GossipNetwork net, std::uint64_t seed);

}  // namespace agora::aggregation
