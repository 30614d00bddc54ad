#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <atomic>
#include <thread>

#include <doctest.h>

#include "agora/presence.hpp"
#include "suites.hpp"

using namespace agora::presence;
using agora::Error;
using agora::ErrorCode;
using agora::Timestamp;

namespace {

agora::asset::Asset one_question(std::int64_t qid = 1, const std::string& asset_id = "test-asset") {
  fixtures::Poi poi{qid, 47.0, 8.0};
  auto doc = fixtures::asset_json("Simple", {poi});
  doc["Id"] = asset_id;
  return agora::asset::from_json(doc);
}

// Oracle straight on OpenSSL: decode the base64 and recompute the tag over
// the first 28 bytes.
bool oracle_tag_ok(const std::string& token, const std::string& key) {
  if (token.size() != 80) return false;
  unsigned char raw[64];
  if (EVP_DecodeBlock(raw, reinterpret_cast<const unsigned char*>(token.data()), 80) != 60) return false;
  unsigned char tag[32];
  unsigned int n = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), raw, 28, tag, &n);
  return n == 32 && std::equal(tag, tag + 32, raw + 28);
}

}  // namespace

TEST_CASE("QR token verifies immediately and carries question, nonce and expiry") {
  ChallengeRegistry reg("secret");
  const auto a = one_question(7);
  const Timestamp now{1'623'484'800'000};
  const auto ch = reg.issue_challenge(a, 7, ChallengeKind::QrToken, 3600, now);
  CHECK(ch.id == "ch-1");
  CHECK(ch.scope == "test-asset");
  CHECK(ch.expires_at == now.plus_ms(3'600'000));
  CHECK(ch.token.size() == 80);
  CHECK(oracle_tag_ok(ch.token, reg.mac_key_for("test-asset")));
  const auto f = decode_token(ch.token, reg.mac_key_for("test-asset"));
  REQUIRE(f);
  CHECK(f->question_id == 7);
  CHECK(f->expiry_ms == ch.expires_at.ms);
  CHECK(reg.find_by_token(ch.token)->id == ch.id);
  CHECK(reg.verify(ch, ch.token, now) == Verdict::Verified);
}

TEST_CASE("one flipped character breaks the recomputed tag") {
  ChallengeRegistry reg("secret");
  const auto a = one_question();
  const auto ch = reg.issue_challenge(a, 1, ChallengeKind::QrToken, 60, Timestamp{0});
  const std::string key = reg.mac_key_for(ch.scope);
  for (std::size_t i = 0; i < ch.token.size(); ++i) {
    std::string m = ch.token;
    m[i] = m[i] == 'A' ? 'B' : 'A';
    CHECK_FALSE(oracle_tag_ok(m, key));
    CHECK_FALSE(decode_token(m, key));
    CHECK(reg.verify(ch, m, Timestamp{0}) == Verdict::Rejected);
  }
}

TEST_CASE("every single-character mutation is rejected; reuse throws AlreadyUsed") {
  for (std::uint64_t v = 0; v < 3; ++v) {
    const auto r = suites::token_mutations(v);
    CHECK(r.cases > 10000);
    for (const auto& f : r.failures) FAIL_CHECK(f);
  }
}

TEST_CASE("tokens are bound to scope, question and expiry") {
  ChallengeRegistry reg("secret");
  const auto a = one_question(1, "asset-a");
  auto b_doc = fixtures::asset_json("Simple", {fixtures::Poi{1, 47.0, 8.0}, fixtures::Poi{2, 47.01, 8.0}});
  b_doc["Id"] = "asset-b";
  const auto b = agora::asset::from_json(b_doc);
  const auto ch_a = reg.issue_challenge(a, 1, ChallengeKind::QrToken, 60, Timestamp{0});
  const auto ch_b1 = reg.issue_challenge(b, 1, ChallengeKind::QrToken, 60, Timestamp{0});
  const auto ch_b2 = reg.issue_challenge(b, 2, ChallengeKind::QrToken, 60, Timestamp{0});
  // Another question's token, or another asset's token for the same id.
  CHECK(reg.verify(ch_b1, ch_b2.token, Timestamp{1}) == Verdict::Rejected);
  CHECK(reg.verify(ch_b1, ch_a.token, Timestamp{1}) == Verdict::Rejected);
  CHECK_FALSE(decode_token(ch_a.token, reg.mac_key_for("asset-b")));
  // Same inputs under another deployment secret give another token.
  ChallengeRegistry other("other-secret");
  CHECK(other.issue_challenge(a, 1, ChallengeKind::QrToken, 60, Timestamp{0}).token != ch_a.token);
  // Expiry.
  CHECK(reg.verify(ch_a, ch_a.token, Timestamp{60'001}) == Verdict::Rejected);
  CHECK(reg.verify(ch_a, ch_a.token, Timestamp{60'000}) == Verdict::Verified);
}

TEST_CASE("ttl 0 verifies only at the issuing instant") {
  ChallengeRegistry reg("secret");
  const auto a = one_question();
  const auto ch = reg.issue_challenge(a, 1, ChallengeKind::QrToken, 0, Timestamp{5000});
  CHECK(reg.verify(ch, ch.token, Timestamp{5001}) == Verdict::Rejected);
  CHECK(reg.verify(ch, ch.token, Timestamp{5000}) == Verdict::Verified);
}

TEST_CASE("rejections do not consume; issuing is deterministic") {
  ChallengeRegistry r1("secret"), r2("secret");
  const auto a = one_question();
  const auto c1 = r1.issue_challenge(a, 1, ChallengeKind::QrToken, 60, Timestamp{0});
  const auto c2 = r2.issue_challenge(a, 1, ChallengeKind::QrToken, 60, Timestamp{0});
  CHECK(c1.token == c2.token);
  CHECK(r1.issue_challenge(a, 1, ChallengeKind::QrToken, 60, Timestamp{0}).token != c1.token);
  CHECK(r1.verify(c1, "garbage", Timestamp{1}) == Verdict::Rejected);
  CHECK(r1.verify(c1, c1.token, Timestamp{1}) == Verdict::Verified);
  CHECK_THROWS_AS(r1.verify(c1, "garbage", Timestamp{1}), Error);
}

TEST_CASE("challenge questions compare case-folded and trimmed") {
  ChallengeRegistry reg("secret");
  const auto a = one_question();
  ChallengeSpec spec;
  spec.prompt = "color of the station door?";
  spec.accepted = {"Red"};
  const auto ch = reg.issue_challenge(a, 1, ChallengeKind::ChallengeQuestion, 600, Timestamp{0}, spec);
  CHECK(ch.prompt == "color of the station door?");
  CHECK(ch.accepted == std::set<std::string>{"red"});
  CHECK(reg.find(ch.id)->kind == ChallengeKind::ChallengeQuestion);
  CHECK(reg.verify(ch, "blue", Timestamp{1}) == Verdict::Rejected);
  CHECK(reg.verify(ch, "  RED \n", Timestamp{1}) == Verdict::Verified);
  try {
    reg.verify(ch, "red", Timestamp{2});
    FAIL("reuse accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AlreadyUsed);
  }
  CHECK(normalize_answer("\t Mixed Case ") == "mixed case");
}

TEST_CASE("puzzles go through registered verifiers") {
  ChallengeRegistry reg("secret");
  const auto a = one_question();
  ChallengeSpec spec;
  spec.puzzle_kind = "sum";
  spec.puzzle_spec = "3+4";
  const auto ch = reg.issue_challenge(a, 1, ChallengeKind::Puzzle, 600, Timestamp{0}, spec);
  CHECK(reg.verify(ch, "7", Timestamp{1}) == Verdict::Rejected);  // no verifier yet
  reg.register_puzzle_verifier("sum", [](std::string_view s, std::string_view resp) {
    const auto plus = s.find('+');
    const int want = std::stoi(std::string(s.substr(0, plus))) + std::stoi(std::string(s.substr(plus + 1)));
    return resp == std::to_string(want);
  });
  CHECK(reg.verify(ch, "8", Timestamp{1}) == Verdict::Rejected);
  CHECK(reg.verify(ch, "7", Timestamp{1}) == Verdict::Verified);
}

TEST_CASE("issue_challenge errors") {
  ChallengeRegistry reg("secret");
  const auto a = one_question();
  try {
    reg.issue_challenge(a, 2, ChallengeKind::QrToken, 60, Timestamp{0});
    FAIL("unknown question accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownQuestion);
  }
  CHECK_THROWS_AS(reg.issue_challenge(a, 1, ChallengeKind::QrToken, -1, Timestamp{0}), Error);
  CHECK_THROWS_AS(reg.prove("ch-404", "x", Timestamp{0}), Error);
}

TEST_CASE("prove binds the verdict to the challenge's question") {
  ChallengeRegistry reg("secret");
  const auto a = one_question(3);
  const auto ch = reg.issue_challenge(a, 3, ChallengeKind::QrToken, 60, Timestamp{0});
  const auto p = reg.prove(ch.id, ch.token, Timestamp{10});
  CHECK(p.challenge_id == ch.id);
  CHECK(p.question_id == 3);
  CHECK(p.submitted_at == Timestamp{10});
  CHECK(p.verdict == Verdict::Verified);
}

TEST_CASE("require_proof per policy") {
  auto listing = agora::asset::parse_asset(fixtures::listing1_text());
  const auto& q = listing.questions[0];
  using K = agora::asset::ProofPolicy::Kind;
  CHECK(require_proof(q, {K::Mandatory, {}}));
  CHECK_FALSE(require_proof(q, {K::None, {}}));
  CHECK_FALSE(require_proof(q, {K::Listed, {2}}));
  CHECK(require_proof(q, {K::Listed, {1}}));
  CHECK(require_proof(q, {K::All, {}}));
  auto optional = q;
  optional.mandatory = false;
  CHECK_FALSE(require_proof(optional, {K::Mandatory, {}}));
}

TEST_CASE("concurrent verification of one token yields one Verified") {
  ChallengeRegistry reg("secret");
  const auto a = one_question();
  const auto ch = reg.issue_challenge(a, 1, ChallengeKind::QrToken, 60, Timestamp{0});
  std::atomic<int> verified{0}, used{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      try {
        if (reg.verify(ch, ch.token, Timestamp{1}) == Verdict::Verified) ++verified;
      } catch (const Error&) {
        ++used;
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(verified == 1);
  CHECK(used == 7);
}
