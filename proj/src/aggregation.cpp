#include "agora/aggregation.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <random>

#include "agora/error.hpp"
#include "agora/kernels.hpp"

namespace agora::aggregation {

std::string_view to_string(Fn fn) noexcept {
  switch (fn) {
    case Fn::Sum: return "sum";
    case Fn::Avg: return "avg";
    case Fn::Max: return "max";
    case Fn::Min: return "min";
    case Fn::Count: return "count";
  }
  return "";
}

std::optional<Fn> fn_from(std::string_view name) noexcept {
  for (Fn fn : kAllFns) {
    if (to_string(fn) == name) return fn;
  }
  return std::nullopt;
}

std::string_view to_string(Event::Kind k) noexcept {
  switch (k) {
    case Event::Kind::Join: return "join";
    case Event::Kind::Update: return "update";
    case Event::Kind::Leave: return "leave";
  }
  return "";
}

std::optional<Event::Kind> event_kind_from(std::string_view name) noexcept {
  if (name == "join") return Event::Kind::Join;
  if (name == "update") return Event::Kind::Update;
  if (name == "leave") return Event::Kind::Leave;
  return std::nullopt;
}

void AggregateState::add(double v) {
  ++counts_[v];
  ++count_;
}

void AggregateState::remove(double v) {
  auto it = counts_.find(v);
  if (it == counts_.end()) throw Error(ErrorCode::NotJoined, "value is not in the multiset");
  if (--it->second == 0) counts_.erase(it);
  --count_;
}

double AggregateState::sum() const noexcept {
  double s = 0.0;
  for (const auto& [v, n] : counts_) s += v * static_cast<double>(n);
  return s;
}

double AggregateState::sum_of_squares() const noexcept {
  double s = 0.0;
  for (const auto& [v, n] : counts_) s += v * v * static_cast<double>(n);
  return s;
}

std::optional<double> AggregateState::min() const noexcept {
  if (counts_.empty()) return std::nullopt;
  return counts_.begin()->first;
}

std::optional<double> AggregateState::max() const noexcept {
  if (counts_.empty()) return std::nullopt;
  return counts_.rbegin()->first;
}

std::optional<double> AggregateState::avg() const noexcept {
  if (count_ == 0) return std::nullopt;
  return sum() / static_cast<double>(count_);
}

std::optional<double> AggregateState::read(Fn fn) const noexcept {
  switch (fn) {
    case Fn::Sum: return sum();
    case Fn::Avg: return avg();
    case Fn::Max: return max();
    case Fn::Min: return min();
    case Fn::Count: return static_cast<double>(count_);
  }
  return std::nullopt;
}

bool LocalizedAggregator::is_live(const std::string& participant) const {
  const auto it = contributions_.find(participant);
  return it != contributions_.end() && !it->second.tombstone;
}

void LocalizedAggregator::join(const std::string& participant, double value, Timestamp t) {
  if (is_live(participant)) {
    throw Error(ErrorCode::AlreadyJoined, participant + " already contributes to task " + task_);
  }
  auto& c = contributions_[participant];
  c = Contribution{participant, task_, value, c.version + 1, false};
  state_.add(value);
  log_.push_back(Event{t, Event::Kind::Join, participant, value});
}

void LocalizedAggregator::update(const std::string& participant, double value, Timestamp t) {
  if (!is_live(participant)) throw Error(ErrorCode::NotJoined, participant + " is not localized");
  auto& c = contributions_.at(participant);
  state_.remove(c.value);
  state_.add(value);
  c.value = value;
  ++c.version;
  log_.push_back(Event{t, Event::Kind::Update, participant, value});
}

void LocalizedAggregator::leave(const std::string& participant, Timestamp t) {
  if (!is_live(participant)) throw Error(ErrorCode::NotJoined, participant + " is not localized");
  auto& c = contributions_.at(participant);
  state_.remove(c.value);
  c.tombstone = true;
  ++c.version;
  log_.push_back(Event{t, Event::Kind::Leave, participant, std::nullopt});
}

void LocalizedAggregator::apply(const Event& e) {
  switch (e.kind) {
    case Event::Kind::Join:
      if (!e.value) throw Error(ErrorCode::BadRequest, "join without a value");
      join(e.participant, *e.value, e.t);
      break;
    case Event::Kind::Update:
      if (!e.value) throw Error(ErrorCode::BadRequest, "update without a value");
      update(e.participant, *e.value, e.t);
      break;
    case Event::Kind::Leave:
      leave(e.participant, e.t);
      break;
  }
}

std::optional<Timestamp> LocalizedAggregator::updated_at() const noexcept {
  if (log_.empty()) return std::nullopt;
  return log_.back().t;
}

std::optional<double> oracle_aggregate(std::span<const Event> events, Fn fn) {
  std::vector<std::pair<std::string, double>> live;
  auto find = [&](const std::string& p) {
    return std::find_if(live.begin(), live.end(), [&](const auto& kv) { return kv.first == p; });
  };
  for (const auto& e : events) {
    auto it = find(e.participant);
    switch (e.kind) {
      case Event::Kind::Join:
        if (it != live.end()) throw Error(ErrorCode::AlreadyJoined, e.participant + " already joined");
        if (!e.value) throw Error(ErrorCode::BadRequest, "join without a value");
        live.emplace_back(e.participant, *e.value);
        break;
      case Event::Kind::Update:
        if (it == live.end()) throw Error(ErrorCode::NotJoined, e.participant + " not joined");
        if (!e.value) throw Error(ErrorCode::BadRequest, "update without a value");
        it->second = *e.value;
        break;
      case Event::Kind::Leave:
        if (it == live.end()) throw Error(ErrorCode::NotJoined, e.participant + " not joined");
        live.erase(it);
        break;
    }
  }
  std::vector<double> values;
  values.reserve(live.size());
  for (const auto& kv : live) values.push_back(kv.second);
  std::sort(values.begin(), values.end());
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  switch (fn) {
    case Fn::Count: return static_cast<double>(values.size());
    case Fn::Sum: return total;
    case Fn::Avg:
      if (values.empty()) return std::nullopt;
      return total / static_cast<double>(values.size());
    case Fn::Min:
      if (values.empty()) return std::nullopt;
      return values.front();
    case Fn::Max:
      if (values.empty()) return std::nullopt;
      return values.back();
  }
  return std::nullopt;
}

void merge_into(Store& into, const Store& from) {
  for (const auto& [participant, c] : from) {
    auto [it, inserted] = into.try_emplace(participant, c);
    if (inserted) continue;
    Contribution& mine = it->second;
    if (c.version > mine.version) {
      mine = c;
    } else if (c.version == mine.version && !(c == mine)) {
      if ((c.tombstone && !mine.tombstone) || (c.tombstone == mine.tombstone && c.value > mine.value)) mine = c;
    }
  }
}

AggregateState live_state(const Store& store) {
  AggregateState s;
  for (const auto& [participant, c] : store) {
    if (!c.tombstone) s.add(c.value);
  }
  return s;
}

GossipNetwork GossipNetwork::complete(int n) {
  GossipNetwork net;
  net.nodes_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    net.nodes_[static_cast<std::size_t>(i)].id = i;
    for (int j = 0; j < n; ++j) {
      if (j != i) net.nodes_[static_cast<std::size_t>(i)].neighbors.push_back(j);
    }
  }
  return net;
}

GossipNetwork GossipNetwork::ring(int n) {
  GossipNetwork net;
  net.nodes_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& node = net.nodes_[static_cast<std::size_t>(i)];
    node.id = i;
    if (n == 1) continue;
    node.neighbors.push_back((i + n - 1) % n);
    if (n > 2) node.neighbors.push_back((i + 1) % n);
    std::sort(node.neighbors.begin(), node.neighbors.end());
  }
  return net;
}

GossipNetwork GossipNetwork::random_regular(int n, int d, std::uint64_t seed) {
  if (n <= d || (n * d) % 2 != 0) throw Error(ErrorCode::BadRequest, "no simple d-regular graph for these sizes");
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 10'000; ++attempt) {
    std::vector<int> stubs;
    for (int i = 0; i < n; ++i) stubs.insert(stubs.end(), static_cast<std::size_t>(d), i);
    std::shuffle(stubs.begin(), stubs.end(), rng);
    GossipNetwork net;
    net.nodes_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) net.nodes_[static_cast<std::size_t>(i)].id = i;
    bool simple = true;
    for (std::size_t k = 0; k + 1 < stubs.size() && simple; k += 2) {
      const int a = stubs[k], b = stubs[k + 1];
      auto& na = net.nodes_[static_cast<std::size_t>(a)].neighbors;
      if (a == b || std::find(na.begin(), na.end(), b) != na.end()) {
        simple = false;
        break;
      }
      na.push_back(b);
      net.nodes_[static_cast<std::size_t>(b)].neighbors.push_back(a);
    }
    if (!simple) continue;
    for (auto& node : net.nodes_) std::sort(node.neighbors.begin(), node.neighbors.end());
    if (net.connected()) return net;
  }
  throw Error(ErrorCode::BadRequest, "could not draw a connected d-regular graph");
}

Contribution& GossipNetwork::live_at(int node, const std::string& participant) {
  auto& store = nodes_.at(static_cast<std::size_t>(node)).store;
  const auto it = store.find(participant);
  if (it == store.end() || it->second.tombstone) {
    throw Error(ErrorCode::NotJoined, participant + " is not live at node " + std::to_string(node));
  }
  return it->second;
}

void GossipNetwork::local_join(int node, const std::string& participant, double value) {
  auto& store = nodes_.at(static_cast<std::size_t>(node)).store;
  const auto it = store.find(participant);
  if (it != store.end() && !it->second.tombstone) {
    throw Error(ErrorCode::AlreadyJoined, participant + " already joined");
  }
  const std::uint64_t version = it == store.end() ? 1 : it->second.version + 1;
  store[participant] = Contribution{participant, {}, value, version, false};
}

void GossipNetwork::local_update(int node, const std::string& participant, double value) {
  auto& c = live_at(node, participant);
  c.value = value;
  ++c.version;
}

void GossipNetwork::local_leave(int node, const std::string& participant) {
  auto& c = live_at(node, participant);
  c.tombstone = true;
  ++c.version;
}

std::optional<double> GossipNetwork::read(int node, Fn fn) const {
  return live_state(nodes_.at(static_cast<std::size_t>(node)).store).read(fn);
}

bool GossipNetwork::connected() const {
  if (nodes_.empty()) return true;
  std::vector<bool> seen(nodes_.size(), false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : nodes_[static_cast<std::size_t>(u)].neighbors) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++reached;
        q.push(v);
      }
    }
  }
  return reached == nodes_.size();
}

int GossipNetwork::diameter() const {
  int best = 0;
  for (std::size_t s = 0; s < nodes_.size(); ++s) {
    std::vector<int> dist(nodes_.size(), -1);
    std::queue<int> q;
    dist[s] = 0;
    q.push(static_cast<int>(s));
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : nodes_[static_cast<std::size_t>(u)].neighbors) {
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          q.push(v);
        }
      }
    }
    for (int d : dist) {
      if (d < 0) throw Error(ErrorCode::BadRequest, "network is not connected");
      best = std::max(best, d);
    }
  }
  return best;
}

std::vector<int> choose_partners(const GossipNetwork& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> partners;
  partners.reserve(net.size());
  for (const auto& node : net.nodes()) {
    if (node.neighbors.empty()) {
      partners.push_back(-1);
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, node.neighbors.size() - 1);
    partners.push_back(node.neighbors[pick(rng)]);
  }
  return partners;
}

namespace {

template <typename MergeFn>
GossipNetwork run_round(GossipNetwork net, std::uint64_t seed, MergeFn merge) {
  const auto partners = choose_partners(net, seed);
  std::vector<Store> stores;
  stores.reserve(net.size());
  for (auto& node : net.nodes()) stores.push_back(std::move(node.store));
  auto next = merge(std::span<const Store>(stores), std::span<const int>(partners));
  for (std::size_t i = 0; i < next.size(); ++i) net.nodes()[i].store = std::move(next[i]);
  return net;
}

}  // namespace

GossipNetwork gossip_round(GossipNetwork net, std::uint64_t seed) {
  return run_round(std::move(net), seed, [](auto s, auto p) { return kernels::merge_round(s, p); });
}

GossipNetwork gossip_round_serial(GossipNetwork net, std::uint64_t seed) {
  return run_round(std::move(net), seed, [](auto s, auto p) { return kernels::merge_round_serial(s, p); });
}

}  // namespace agora::aggregation
