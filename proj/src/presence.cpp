#include "agora/presence.hpp"

#include <algorithm>
#include <cctype>

#include "agora/crypto.hpp"
#include "agora/error.hpp"

namespace agora::presence {

namespace {

constexpr std::size_t kSignedBytes = 4 + 16 + 8;

void put_be(std::uint8_t* out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v & 0xFF);
    v >>= 8;
  }
}

std::uint64_t get_be(const std::uint8_t* in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | in[i];
  return v;
}

}  // namespace

std::string_view to_string(ChallengeKind k) noexcept {
  switch (k) {
    case ChallengeKind::QrToken: return "QrToken";
    case ChallengeKind::ChallengeQuestion: return "ChallengeQuestion";
    case ChallengeKind::Puzzle: return "Puzzle";
  }
  return "";
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pending: return "Pending";
    case Verdict::Verified: return "Verified";
    case Verdict::Rejected: return "Rejected";
  }
  return "";
}

std::optional<ChallengeKind> challenge_kind_from(std::string_view name) noexcept {
  if (name == "QrToken") return ChallengeKind::QrToken;
  if (name == "ChallengeQuestion") return ChallengeKind::ChallengeQuestion;
  if (name == "Puzzle") return ChallengeKind::Puzzle;
  return std::nullopt;
}

std::string encode_token(const TokenFields& fields, std::string_view mac_key) {
  std::array<std::uint8_t, kTokenBytes> raw{};
  put_be(raw.data(), fields.question_id, 4);
  std::copy(fields.nonce.begin(), fields.nonce.end(), raw.begin() + 4);
  put_be(raw.data() + 20, static_cast<std::uint64_t>(fields.expiry_ms), 8);
  const auto tag = crypto::hmac_sha256(mac_key, std::span<const std::uint8_t>(raw.data(), kSignedBytes));
  std::copy(tag.begin(), tag.end(), raw.begin() + kSignedBytes);
  return crypto::base64_encode(raw);
}

std::optional<TokenFields> decode_token(std::string_view token, std::string_view mac_key) {
  const auto raw = crypto::base64_decode(token);
  if (!raw || raw->size() != kTokenBytes) return std::nullopt;
  const auto tag = crypto::hmac_sha256(mac_key, std::span<const std::uint8_t>(raw->data(), kSignedBytes));
  if (!crypto::equal(tag, std::span<const std::uint8_t>(raw->data() + kSignedBytes, tag.size()))) {
    return std::nullopt;
  }
  TokenFields f;
  f.question_id = static_cast<std::uint32_t>(get_be(raw->data(), 4));
  std::copy(raw->begin() + 4, raw->begin() + 20, f.nonce.begin());
  f.expiry_ms = static_cast<std::int64_t>(get_be(raw->data() + 20, 8));
  return f;
}

std::string normalize_answer(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool require_proof(const asset::PoiQuestion& question, const asset::ProofPolicy& policy) noexcept {
  using Kind = asset::ProofPolicy::Kind;
  switch (policy.kind) {
    case Kind::None: return false;
    case Kind::Mandatory: return question.mandatory;
    case Kind::All: return true;
    case Kind::Listed: return policy.questions.contains(question.id);
  }
  return false;
}

ChallengeRegistry::ChallengeRegistry(std::string secret_key) : secret_(std::move(secret_key)) {}

std::string ChallengeRegistry::mac_key_for(std::string_view scope) const {
  const auto derived = crypto::hmac_sha256(secret_, "token-scope:" + std::string(scope));
  return std::string(derived.begin(), derived.end());
}

Challenge ChallengeRegistry::issue_challenge(const asset::Asset& scope_asset, QuestionId question_id,
                                             ChallengeKind kind, std::int64_t ttl_s, Timestamp now,
                                             const ChallengeSpec& spec) {
  if (scope_asset.find_question(question_id) == nullptr) {
    throw Error(ErrorCode::UnknownQuestion, "unknown question " + std::to_string(question_id));
  }
  if (question_id < 0 || question_id > 0xFFFFFFFFLL) {
    throw Error(ErrorCode::Range, "question id does not fit a token");
  }
  if (ttl_s < 0) throw Error(ErrorCode::Range, "ttl must be non-negative");

  std::lock_guard lock(mutex_);
  const std::uint64_t serial = ++issued_;
  const auto nonce_src = crypto::hmac_sha256(secret_, "nonce:" + std::to_string(serial));

  Challenge ch;
  ch.id = "ch-" + std::to_string(serial);
  ch.scope = scope_asset.id;
  ch.question_id = question_id;
  ch.kind = kind;
  ch.issued_at = now;
  ch.expires_at = now.plus_ms(ttl_s * 1000);
  switch (kind) {
    case ChallengeKind::QrToken: {
      TokenFields f;
      f.question_id = static_cast<std::uint32_t>(question_id);
      std::copy_n(nonce_src.begin(), f.nonce.size(), f.nonce.begin());
      f.expiry_ms = ch.expires_at.ms;
      ch.token = encode_token(f, mac_key_for(ch.scope));
      by_token_[ch.token] = ch.id;
      break;
    }
    case ChallengeKind::ChallengeQuestion:
      ch.prompt = spec.prompt;
      for (const auto& a : spec.accepted) ch.accepted.insert(normalize_answer(a));
      break;
    case ChallengeKind::Puzzle:
      ch.puzzle_kind = spec.puzzle_kind;
      ch.puzzle_spec = spec.puzzle_spec;
      break;
  }
  challenges_[ch.id] = ch;
  return ch;
}

Verdict ChallengeRegistry::decide(const Challenge& ch, std::string_view response, Timestamp now) const {
  if (now > ch.expires_at) return Verdict::Rejected;
  switch (ch.kind) {
    case ChallengeKind::QrToken: {
      const auto fields = decode_token(response, mac_key_for(ch.scope));
      if (!fields) return Verdict::Rejected;
      if (static_cast<QuestionId>(fields->question_id) != ch.question_id) return Verdict::Rejected;
      if (now.ms > fields->expiry_ms) return Verdict::Rejected;
      // Only the token printed for this challenge counts.
      return response == ch.token ? Verdict::Verified : Verdict::Rejected;
    }
    case ChallengeKind::ChallengeQuestion:
      return ch.accepted.contains(normalize_answer(response)) ? Verdict::Verified : Verdict::Rejected;
    case ChallengeKind::Puzzle: {
      const auto it = puzzles_.find(ch.puzzle_kind);
      if (it == puzzles_.end()) return Verdict::Rejected;
      return it->second(ch.puzzle_spec, response) ? Verdict::Verified : Verdict::Rejected;
    }
  }
  return Verdict::Rejected;
}

Verdict ChallengeRegistry::verify(const Challenge& challenge, std::string_view response, Timestamp now) {
  std::lock_guard lock(mutex_);
  if (consumed_.contains(challenge.id)) {
    throw Error(ErrorCode::AlreadyUsed, "challenge " + challenge.id + " was already used");
  }
  const Verdict v = decide(challenge, response, now);
  if (v == Verdict::Verified) consumed_.insert(challenge.id);
  return v;
}

Proof ChallengeRegistry::prove(const std::string& challenge_id, std::string_view response, Timestamp now) {
  const auto ch = find(challenge_id);
  if (!ch) throw Error(ErrorCode::NotFound, "unknown challenge " + challenge_id);
  Proof p;
  p.challenge_id = ch->id;
  p.question_id = ch->question_id;
  p.response = std::string(response);
  p.submitted_at = now;
  p.verdict = verify(*ch, response, now);
  return p;
}

std::optional<Challenge> ChallengeRegistry::find_by_token(std::string_view token) const {
  std::lock_guard lock(mutex_);
  const auto it = by_token_.find(std::string(token));
  if (it == by_token_.end()) return std::nullopt;
  return challenges_.at(it->second);
}

std::optional<Challenge> ChallengeRegistry::find(const std::string& challenge_id) const {
  std::lock_guard lock(mutex_);
  const auto it = challenges_.find(challenge_id);
  if (it == challenges_.end()) return std::nullopt;
  return it->second;
}

void ChallengeRegistry::register_puzzle_verifier(std::string puzzle_kind, PuzzleVerifier verifier) {
  std::lock_guard lock(mutex_);
  puzzles_[std::move(puzzle_kind)] = std::move(verifier);
}

}  // namespace agora::presence
