#include <doctest.h>

#include "agora/presence.hpp"
#include "suites.hpp"

using namespace agora::modality;
using agora::Error;
using agora::ErrorCode;
using agora::Timestamp;
using suites::share;
using suites::start;
using fixtures::Json;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::BadRequest;
}

AnswerPayload pick(std::int64_t opt) { return std::vector<std::int64_t>{opt}; }

std::vector<PoiStatus> statuses(const TaskSession& s) {
  std::vector<PoiStatus> out;
  for (const auto& [q, st] : s.statuses()) out.push_back(st);
  return out;
}

}  // namespace

TEST_CASE("start_session unlocks per modality") {
  auto simple = start(share(fixtures::asset_json("Simple", fixtures::four_pois())));
  CHECK(simple.unlocked_pois() == std::set<std::int64_t>{1, 2, 3, 4});

  auto seq = start(share(fixtures::asset_json("Sequential", fixtures::four_pois())));
  CHECK(statuses(seq) ==
        std::vector<PoiStatus>{PoiStatus::Unlocked, PoiStatus::Locked, PoiStatus::Locked, PoiStatus::Locked});
  CHECK(seq.unlocked_pois() == std::set<std::int64_t>{1});

  auto dyn = start(share(suites::dynamic_graph_asset()));
  CHECK(dyn.unlocked_pois() == std::set<std::int64_t>{1});
}

TEST_CASE("start_session refuses unenrolled participants and closed tasks") {
  const auto a = share(fixtures::asset_json("Simple", fixtures::four_pois()));
  agora::asset::Assignment open{"as-1", a->id, "t-1", {}, {}};
  agora::asset::Assignment closed_list{"as-2", a->id, "t-1", {"u-9"}, {}};
  agora::asset::Participant enrolled{"u-1", "anon", {"p-1"}};
  agora::asset::Participant stranger{"u-2", "anon", {"p-7"}};
  using agora::asset::TaskStatus;
  CHECK(code_of([&] { TaskSession::start("s", open, stranger, a, "p-1", TaskStatus::Active, {}); }) ==
        ErrorCode::NotEnrolled);
  CHECK(code_of([&] { TaskSession::start("s", closed_list, enrolled, a, "p-1", TaskStatus::Active, {}); }) ==
        ErrorCode::NotEnrolled);
  CHECK(code_of([&] { TaskSession::start("s", open, enrolled, a, "p-1", TaskStatus::Closed, {}); }) ==
        ErrorCode::AssignmentClosed);
}

TEST_CASE("Sample asset: inside the 25 m zone, option Safe earns the default 3 credits") {
  auto s = start(share(fixtures::listing1_json()));
  const auto& q = s.asset().questions[0];
  const auto near = agora::geo::destination_point(q.location, 45.0, 20.0);
  const auto far = agora::geo::destination_point(q.location, 45.0, 30.0);

  CHECK(s.on_location_update(far, Timestamp{1}).empty());
  const auto in = s.on_location_update(near, Timestamp{2});
  REQUIRE(in.size() == 1);
  CHECK(in[0] == ZoneEvent{ZoneEvent::Kind::Entered, 1, Timestamp{2}});
  CHECK(s.status(1) == PoiStatus::Inside);

  CHECK(code_of([&] { s.submit_answer(1, pick(1), far, std::nullopt, Timestamp{3}); }) == ErrorCode::NotLocalized);
  CHECK(code_of([&] { s.submit_answer(1, pick(3), near, std::nullopt, Timestamp{3}); }) ==
        ErrorCode::PayloadMismatch);
  CHECK(code_of([&] { s.submit_answer(1, std::string("safe"), near, std::nullopt, Timestamp{3}); }) ==
        ErrorCode::PayloadMismatch);
  CHECK(code_of([&] { s.submit_answer(1, AnswerPayload{std::vector<std::int64_t>{1, 2}}, near, std::nullopt,
                                      Timestamp{3}); }) == ErrorCode::PayloadMismatch);

  const auto out = s.submit_answer(1, pick(1), near, std::nullopt, Timestamp{4});
  CHECK(out.credits_awarded == 3);
  CHECK(out.completed);
  CHECK(out.value == 1.0);
  CHECK(s.status(1) == PoiStatus::Answered);
  CHECK(s.credits_earned() == 3);
  CHECK(s.completed_at() == Timestamp{4});
  REQUIRE(s.answers().size() == 1);
  CHECK(s.answers()[0].location == near);

  // Complete but still present: departure is reported, then updates stop.
  const auto left = s.on_location_update(far, Timestamp{5});
  REQUIRE(left.size() == 1);
  CHECK(left[0].kind == ZoneEvent::Kind::Left);
  CHECK(code_of([&] { s.on_location_update(near, Timestamp{6}); }) == ErrorCode::SessionComplete);
}

TEST_CASE("trace crossing a zone emits Entered then Left") {
  auto s = start(share(fixtures::asset_json("Simple", fixtures::four_pois())));
  const auto c = s.asset().find_question(2)->location;
  const auto a = agora::geo::destination_point(c, 270.0, 100.0);
  const auto b = agora::geo::destination_point(c, 90.0, 100.0);
  std::vector<ZoneEvent> seen;
  for (int i = 0; i <= 40; ++i) {
    const auto p = agora::geo::interpolate(a, b, i / 40.0);
    const bool oracle = agora::geo::haversine_distance(c, p) <= 25.0;
    for (const auto& e : s.on_location_update(p, Timestamp{i})) seen.push_back(e);
    CHECK(s.is_present(2) == oracle);
  }
  REQUIRE(seen.size() == 2);
  CHECK(seen[0].kind == ZoneEvent::Kind::Entered);
  CHECK(seen[1].kind == ZoneEvent::Kind::Left);
  CHECK(s.status(2) == PoiStatus::Unlocked);
  // Re-entry keeps progress.
  s.on_location_update(c, Timestamp{50});
  CHECK(s.status(2) == PoiStatus::Inside);
}

TEST_CASE("sequential: answering question 2 unlocks question 3") {
  auto s = start(share(fixtures::asset_json("Sequential", fixtures::four_pois())));
  std::int64_t clock = 0;
  CHECK_FALSE(suites::visit_and_answer(s, 1, 1, clock));
  CHECK(s.unlocked_pois() == std::set<std::int64_t>{2});
  const auto where = s.asset().find_question(2)->location;
  s.on_location_update(where, Timestamp{clock += 10});
  const auto out = s.submit_answer(2, pick(2), where, std::nullopt, Timestamp{clock += 10});
  CHECK(out.unlocked == std::vector<std::int64_t>{3});
  CHECK(s.status(3) == PoiStatus::Unlocked);
  CHECK(s.status(4) == PoiStatus::Locked);
  CHECK(suites::visit_and_answer(s, 2, 1, clock) == ErrorCode::AlreadyAnswered);
  CHECK(s.credits_earned() == 6);
}

TEST_CASE("sequential: optional questions may be skipped") {
  auto pois = fixtures::four_pois();
  pois[1].mandatory = false;
  auto s = start(share(fixtures::asset_json("Sequential", pois)));
  std::int64_t clock = 0;
  CHECK_FALSE(suites::visit_and_answer(s, 1, 1, clock));
  CHECK(s.unlocked_pois() == std::set<std::int64_t>{2, 3});
  CHECK_FALSE(suites::visit_and_answer(s, 3, 1, clock));
  CHECK_FALSE(suites::visit_and_answer(s, 4, 1, clock));
  CHECK(s.complete());
}

TEST_CASE("dynamic: next_question 5 unlocks 5, null ends the session") {
  auto s = start(share(suites::dynamic_graph_asset()));
  std::int64_t clock = 0;
  CHECK_FALSE(suites::visit_and_answer(s, 1, 1, clock));
  CHECK(s.unlocked_pois() == std::set<std::int64_t>{2});
  CHECK_FALSE(suites::visit_and_answer(s, 2, 2, clock));
  CHECK(s.unlocked_pois() == std::set<std::int64_t>{5});
  CHECK(s.status(3) == PoiStatus::Locked);
  CHECK_FALSE(suites::visit_and_answer(s, 5, 1, clock));
  CHECK(s.complete());
  CHECK(s.unlocked_pois().empty());

  // Answer 1 with next=3 on the other branch.
  auto u = start(share(suites::dynamic_graph_asset()));
  clock = 0;
  CHECK_FALSE(suites::visit_and_answer(u, 1, 2, clock));
  CHECK(u.unlocked_pois() == std::set<std::int64_t>{3});
}

TEST_CASE("checkbox credits sum the selected options and branch on the lowest id") {
  auto pois = fixtures::four_pois("checkbox");
  pois.resize(3);
  pois[0].options = {{1, 3}, {2, 2}, {3, 2}};
  pois[0].credits = {"5", "", "1"};
  auto s = start(share(fixtures::asset_json("Dynamic", pois, 2)));
  const auto where = s.asset().find_question(1)->location;
  s.on_location_update(where, Timestamp{1});
  CHECK(code_of([&] { s.submit_answer(1, AnswerPayload{std::vector<std::int64_t>{}}, where, std::nullopt, {}); }) ==
        ErrorCode::PayloadMismatch);
  CHECK(code_of([&] { s.submit_answer(1, AnswerPayload{std::vector<std::int64_t>{2, 2}}, where, std::nullopt,
                                      {}); }) == ErrorCode::PayloadMismatch);
  const auto out = s.submit_answer(1, AnswerPayload{std::vector<std::int64_t>{3, 2, 1}}, where, std::nullopt, {});
  CHECK(out.credits_awarded == 5 + 2 + 1);
  CHECK_FALSE(out.value.has_value());
  CHECK(s.unlocked_pois() == std::set<std::int64_t>{3});
}

TEST_CASE("textbox answers need non-empty text") {
  fixtures::Poi p{1, 47.0, 8.0};
  p.type = "textbox";
  auto s = start(share(fixtures::asset_json("Simple", {p}, 4)));
  const auto where = s.asset().questions[0].location;
  s.on_location_update(where, Timestamp{1});
  CHECK(code_of([&] { s.submit_answer(1, std::string("  \t"), where, std::nullopt, {}); }) ==
        ErrorCode::PayloadMismatch);
  CHECK(code_of([&] { s.submit_answer(1, pick(1), where, std::nullopt, {}); }) == ErrorCode::PayloadMismatch);
  CHECK(s.submit_answer(1, std::string("rough asphalt"), where, std::nullopt, {}).credits_awarded == 4);
}

TEST_CASE("proof-required questions accept only a verified proof for that question") {
  Json extra = Json::object();
  extra["ProofPolicy"] = "Mandatory";
  auto pois = fixtures::four_pois();
  pois[1].mandatory = false;
  const auto asset = share(fixtures::asset_json("Simple", pois, 3, extra));
  auto s = start(asset);
  CHECK(s.proof_required(1));
  CHECK_FALSE(s.proof_required(2));

  agora::presence::ChallengeRegistry reg("secret");
  const auto ch = reg.issue_challenge(*asset, 1, agora::presence::ChallengeKind::QrToken, 600, Timestamp{0});
  const auto where = asset->find_question(1)->location;
  s.on_location_update(where, Timestamp{1});
  CHECK(code_of([&] { s.submit_answer(1, pick(1), where, std::nullopt, Timestamp{2}); }) == ErrorCode::ProofRequired);
  auto bad = reg.prove(ch.id, "not-a-token", Timestamp{2});
  CHECK(bad.verdict == agora::presence::Verdict::Rejected);
  CHECK(code_of([&] { s.submit_answer(1, pick(1), where, bad, Timestamp{2}); }) == ErrorCode::ProofInvalid);
  CHECK(s.status(1) == PoiStatus::Inside);
  auto good = reg.prove(ch.id, ch.token, Timestamp{3});
  CHECK(good.verdict == agora::presence::Verdict::Verified);
  auto wrong_q = good;
  wrong_q.question_id = 2;
  CHECK(code_of([&] { s.submit_answer(1, pick(1), where, wrong_q, Timestamp{3}); }) == ErrorCode::ProofInvalid);
  s.submit_answer(1, pick(1), where, good, Timestamp{4});
  CHECK(s.answers().back().proof_id == ch.id);
}

TEST_CASE("unknown question ids are reported") {
  auto s = start(share(fixtures::asset_json("Simple", fixtures::four_pois())));
  CHECK(code_of([&] { (void)s.status(42); }) == ErrorCode::UnknownQuestion);
  CHECK(code_of([&] { s.submit_answer(42, pick(1), {}, std::nullopt, {}); }) == ErrorCode::UnknownQuestion);
}

TEST_CASE("closed sessions refuse further updates") {
  auto s = start(share(fixtures::asset_json("Simple", fixtures::four_pois())));
  s.close(Timestamp{9});
  CHECK(s.closed());
  CHECK(code_of([&] { s.on_location_update({47.0, 8.0}, Timestamp{10}); }) == ErrorCode::SessionComplete);
}

TEST_CASE("credit conservation and idempotent awarding") {
  auto pois = fixtures::four_pois();
  pois[0].credits = {"10", "1"};
  pois[2].credits = {"", "4"};
  auto s = start(share(fixtures::asset_json("Simple", pois, 2)));
  std::int64_t clock = 0;
  for (int q = 1; q <= 4; ++q) CHECK_FALSE(suites::visit_and_answer(s, q, 1, clock));
  CHECK(s.credits_earned() == 10 + 2 + 2 + 2);
  std::int64_t sum = 0;
  for (const auto& a : s.answers()) sum += a.credits;
  CHECK(sum == s.credits_earned());
}

TEST_CASE("sequential mode rejects every out-of-order answer across all 24 orderings") {
  const auto r = suites::sequential_orderings();
  CHECK(r.cases == 24);
  for (const auto& f : r.failures) FAIL_CHECK(f);
}

TEST_CASE("simple mode accepts every ordering with the same final state") {
  const auto r = suites::simple_orderings();
  CHECK(r.cases == 24);
  for (const auto& f : r.failures) FAIL_CHECK(f);
}

TEST_CASE("dynamic mode follows every path of the five-node graph") {
  const auto r = suites::dynamic_paths();
  CHECK(r.cases == 8);
  for (const auto& f : r.failures) FAIL_CHECK(f);
}

TEST_CASE("answers are accepted exactly where zone_contains holds") {
  const auto r = suites::localization_gating(2000, 5);
  CHECK(r.cases == 2000);
  for (const auto& f : r.failures) FAIL_CHECK(f);
  const auto e = suites::round_ellipse_agreement(2000, 6);
  for (const auto& f : e.failures) FAIL_CHECK(f);
}
