#include <cmath>
#include <random>

#include <doctest.h>

#include "agora/sensing.hpp"
#include "suites.hpp"

using namespace agora::sensing;
using agora::Timestamp;
using agora::asset::Frequency;
using agora::asset::SensorKind;

namespace {

SensorSample sample(SensorKind kind, std::int64_t t_ms, std::size_t n_values = 0) {
  SensorSample s;
  s.session_id = "s-1";
  s.kind = kind;
  s.captured_at = Timestamp{t_ms};
  s.values.assign(n_values ? n_values : arity(kind), 0.5);
  return s;
}

/// One-question asset at (47, 8) with a Light sensor, and a session that
/// entered the zone at t = 1000 ms.
struct Inside {
  std::shared_ptr<const agora::asset::Asset> asset;
  agora::modality::TaskSession session;
  SamplingPlan plan;

  explicit Inside(const std::string& frequency = "Medium", const std::string& time = "3", double vicinity = 25.0)
      : asset(make(frequency, time, vicinity)),
        session(suites::start(asset)),
        plan(plans_for_question(*asset, 1).front()) {
    session.on_location_update(asset->questions[0].location, Timestamp{1000});
  }

  static std::shared_ptr<const agora::asset::Asset> make(const std::string& f, const std::string& t, double v) {
    fixtures::Poi p{1, 47.0, 8.0};
    p.sensors = {"Light", "Location"};
    p.frequency = f;
    p.time = t;
    p.vicinity = v;
    return suites::share(fixtures::asset_json("Simple", {p}));
  }
};

}  // namespace

TEST_CASE("frequency table is exactly Low 2000, Medium 250, High 200") {
  CHECK(period_ms(Frequency::Low) == 2000);
  CHECK(period_ms(Frequency::Medium) == 250);
  CHECK(period_ms(Frequency::High) == 200);
  const auto r = suites::frequency_table();
  for (const auto& f : r.failures) FAIL_CHECK(f);
}

TEST_CASE("Sample asset yields gyroscope and location plans at 250 ms for 3 minutes in a 25 m circle") {
  const auto a = agora::asset::parse_asset(fixtures::listing1_text());
  const auto plans = plans_for_question(a, 1);
  REQUIRE(plans.size() == 2);
  CHECK(plans[0].kind() == SensorKind::Gyroscope);
  CHECK(plans[1].kind() == SensorKind::Location);
  for (const auto& p : plans) {
    CHECK(p.period_ms() == 250);
    CHECK(p.duration_min() == 3.0);
    CHECK(p.duration_ms() == 180000);
    REQUIRE(std::holds_alternative<agora::geo::Circle>(p.zone()));
    CHECK(std::get<agora::geo::Circle>(p.zone()).radius_m == 25.0);
    CHECK_FALSE(passive_mode(p));
  }
}

TEST_CASE("questions without sensors have no plans; negative durations are refused") {
  fixtures::Poi p{1, 47.0, 8.0};
  const auto a = agora::asset::from_json(fixtures::asset_json("Simple", {p}));
  CHECK(plans_for_question(a, 1).empty());
  CHECK_THROWS_AS(SamplingPlan(1, SensorKind::Light, Frequency::Low, -1.0, agora::geo::make_circle({0, 0}, 5)),
                  agora::Error);
  CHECK_THROWS_AS(SamplingPlan(1, SensorKind::Light, Frequency::Low, NAN, agora::geo::make_circle({0, 0}, 5)),
                  agora::Error);
}

TEST_CASE("arity per kind") {
  CHECK(arity(SensorKind::Light) == 1);
  CHECK(arity(SensorKind::Gyroscope) == 3);
  CHECK(arity(SensorKind::Proximity) == 1);
  CHECK(arity(SensorKind::Accelerometer) == 3);
  CHECK(arity(SensorKind::Location) == 2);
  CHECK(arity(SensorKind::Noise) == 1);
  CHECK(arity_ok(SensorKind::Location, 3));
  CHECK_FALSE(arity_ok(SensorKind::Location, 4));
  CHECK_FALSE(arity_ok(SensorKind::Gyroscope, 2));
}

TEST_CASE("gate examples") {
  Inside in;
  StreamState stream;
  const Timestamp entered{1000};

  // 10 s after entry, inside, then 250 ms spacing.
  CHECK(gate_sample(in.plan, in.session, sample(SensorKind::Light, 11000), entered, stream) == GateDecision::accept());
  record_accept(stream, entered, Timestamp{11000});
  CHECK(gate_sample(in.plan, in.session, sample(SensorKind::Light, 11250), entered, stream).accepted);

  // 50 ms after the previous accepted one.
  CHECK(gate_sample(in.plan, in.session, sample(SensorKind::Light, 11050), entered, stream) ==
        GateDecision::drop(DropReason::TooFrequent));
  // Half a period exactly is allowed.
  CHECK(gate_sample(in.plan, in.session, sample(SensorKind::Light, 11125), entered, stream).accepted);

  // 4 minutes after entry on a 3-minute plan.
  CHECK(gate_sample(in.plan, in.session, sample(SensorKind::Light, 1000 + 240000), entered, stream) ==
        GateDecision::drop(DropReason::Expired));
  // The last instant of the window is still inside it.
  CHECK(gate_sample(in.plan, in.session, sample(SensorKind::Light, 1000 + 180000), entered, stream).accepted);

  CHECK(gate_sample(in.plan, in.session, sample(SensorKind::Light, 12000, 3), entered, stream) ==
        GateDecision::drop(DropReason::WrongArity));
  CHECK(gate_sample(in.plan, in.session, sample(SensorKind::Noise, 12000), entered, stream) ==
        GateDecision::drop(DropReason::WrongArity));

  auto far = sample(SensorKind::Light, 12000);
  far.location = agora::geo::destination_point(in.asset->questions[0].location, 0.0, 40.0);
  CHECK(gate_sample(in.plan, in.session, far, entered, stream) == GateDecision::drop(DropReason::OutsideZone));

  CHECK(gate_sample(in.plan, in.session, sample(SensorKind::Light, 500), entered, stream) ==
        GateDecision::drop(DropReason::OutsideZone));
}

TEST_CASE("outside the zone everything is dropped") {
  Inside in;
  in.session.on_location_update({47.01, 8.0}, Timestamp{2000});
  StreamState stream;
  CHECK(gate_sample(in.plan, in.session, sample(SensorKind::Light, 2500), Timestamp{1000}, stream) ==
        GateDecision::drop(DropReason::OutsideZone));
}

TEST_CASE("schedule budget: no more than one sample per period since entry") {
  Inside in;
  StreamState stream;
  const Timestamp entered{1000};
  // Half-period spacing right after entry would exceed the budget.
  for (std::int64_t t : {1000, 1125}) {
    const auto d = gate_sample(in.plan, in.session, sample(SensorKind::Light, t), entered, stream);
    if (t == 1000) {
      CHECK(d.accepted);
      record_accept(stream, entered, Timestamp{t});
    } else {
      CHECK(d == GateDecision::drop(DropReason::TooFrequent));
    }
  }
  CHECK(gate_sample(in.plan, in.session, sample(SensorKind::Light, 1250), entered, stream).accepted);
}

TEST_CASE("re-entry restarts the window") {
  Inside in("Low", "0.1");
  SampleGate gate;
  CHECK(gate.offer(in.session, sample(SensorKind::Light, 1000)).accepted);
  CHECK(gate.offer(in.session, sample(SensorKind::Light, 1000 + 7000)) == GateDecision::drop(DropReason::Expired));
  in.session.on_location_update({47.01, 8.0}, Timestamp{9000});
  CHECK(gate.offer(in.session, sample(SensorKind::Light, 9500)) == GateDecision::drop(DropReason::OutsideZone));
  in.session.on_location_update(in.asset->questions[0].location, Timestamp{10000});
  CHECK(gate.offer(in.session, sample(SensorKind::Light, 10000)).accepted);
  CHECK(gate.offer(in.session, sample(SensorKind::Light, 12000)).accepted);
}

TEST_CASE("collection continues after answering while still present") {
  Inside in;
  SampleGate gate;
  const auto where = in.asset->questions[0].location;
  in.session.submit_answer(1, agora::modality::AnswerPayload{std::vector<std::int64_t>{1}}, where, std::nullopt,
                           Timestamp{1500});
  CHECK(gate.offer(in.session, sample(SensorKind::Light, 2000)).accepted);
  in.session.on_location_update({47.01, 8.0}, Timestamp{3000});
  CHECK_FALSE(gate.offer(in.session, sample(SensorKind::Light, 3500)).accepted);
}

TEST_CASE("accepted count never exceeds ceil(60000 T / p) + 1 and spacing is at least half a period") {
  std::mt19937_64 rng(99);
  const char* freqs[] = {"Low", "Medium", "High"};
  std::uniform_real_distribution<double> minutes(0.0, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::string f = freqs[trial % 3];
    const double t_min = std::round(minutes(rng) * 100.0) / 100.0;
    Inside in(f, fixtures::num(t_min));
    const std::int64_t p = in.plan.period_ms();
    std::uniform_int_distribution<std::int64_t> gap(0, 2 * p);
    SampleGate gate;
    std::int64_t t = 1000, accepted = 0;
    std::optional<std::int64_t> last;
    const std::int64_t end = 1000 + static_cast<std::int64_t>(t_min * 60000.0) + 5 * p;
    while (t <= end) {
      auto s = sample(SensorKind::Light, t);
      if (gate.offer(in.session, s).accepted) {
        ++accepted;
        CHECK(t - 1000 <= in.plan.duration_ms());
        if (last) CHECK(2 * (t - *last) >= p);
        last = t;
      }
      t += gap(rng);
    }
    const auto bound = static_cast<std::int64_t>(std::ceil(60000.0 * t_min / static_cast<double>(p))) + 1;
    CHECK(accepted <= bound);
  }
}

TEST_CASE("passive mode starts at a 10 km extent") {
  const auto plan_with = [](double radius) {
    return SamplingPlan(1, SensorKind::Noise, Frequency::Low, 1.0, agora::geo::make_circle({47.0, 8.0}, radius));
  };
  CHECK_FALSE(passive_mode(plan_with(25.0)));
  CHECK_FALSE(passive_mode(plan_with(9999.999)));
  CHECK(passive_mode(plan_with(10000.0)));
  CHECK(passive_mode(plan_with(50000.0)));
  const auto ellipse = SamplingPlan(1, SensorKind::Noise, Frequency::Low, 1.0,
                                    agora::geo::make_ellipse({47.0, 8.0}, 10000.0, 5000.0, 0.0));
  CHECK(passive_mode(ellipse));
}

TEST_CASE("gate decisions are deterministic") {
  for (int run = 0; run < 2; ++run) {
    static std::vector<bool> first;
    Inside in("High", "1");
    SampleGate gate;
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::int64_t> gap(0, 400);
    std::vector<bool> got;
    std::int64_t t = 900;
    for (int i = 0; i < 500; ++i) got.push_back(gate.offer(in.session, sample(SensorKind::Light, t += gap(rng))).accepted);
    if (run == 0) first = got;
    else CHECK(got == first);
  }
}
