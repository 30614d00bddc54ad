#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "agora/asset.hpp"
#include "agora/time.hpp"

namespace agora::presence {

using asset::QuestionId;

enum class ChallengeKind { QrToken, ChallengeQuestion, Puzzle };
enum class Verdict { Pending, Verified, Rejected };

std::string_view to_string(ChallengeKind k) noexcept;
std::string_view to_string(Verdict v) noexcept;
std::optional<ChallengeKind> challenge_kind_from(std::string_view name) noexcept;

struct Challenge {
  std::string id;
  /// Asset the challenge belongs to; tokens are keyed per scope.
  std::string scope;
  QuestionId question_id = 0;
  ChallengeKind kind = ChallengeKind::QrToken;
  std::string token;
  std::string prompt;
  /// Already case-folded and trimmed.
  std::set<std::string> accepted;
  std::string puzzle_kind;
  std::string puzzle_spec;
  Timestamp issued_at;
  Timestamp expires_at;
};

struct Proof {
  std::string challenge_id;
  QuestionId question_id = 0;
  std::string response;
  Timestamp submitted_at;
  Verdict verdict = Verdict::Pending;
};

/// Kind-specific inputs for issue_challenge.
struct ChallengeSpec {
  std::string prompt;
  std::set<std::string> accepted;
  std::string puzzle_kind;
  std::string puzzle_spec;
};

/// Decoded QR token. Wire layout before base64 (60 bytes, big-endian):
/// question id u32 | nonce 16 bytes | expiry ms i64 | HMAC-SHA-256 tag over
/// the preceding 28 bytes.
struct TokenFields {
  std::uint32_t question_id = 0;
  std::array<std::uint8_t, 16> nonce{};
  std::int64_t expiry_ms = 0;
};

inline constexpr std::size_t kTokenBytes = 60;

std::string encode_token(const TokenFields& fields, std::string_view mac_key);
/// Returns the fields only when the text is canonical base64 of exactly
/// 60 bytes and the tag verifies under `mac_key`.
std::optional<TokenFields> decode_token(std::string_view token, std::string_view mac_key);

/// Case-folded, whitespace-trimmed form used for challenge answers.
std::string normalize_answer(std::string_view text);

bool require_proof(const asset::PoiQuestion& question, const asset::ProofPolicy& policy) noexcept;

using PuzzleVerifier = std::function<bool(std::string_view spec, std::string_view response)>;

/// Issues challenges and decides proofs. Nonces derive from the deployment
/// secret and an issue counter, so a replayed sequence of calls reproduces
/// the same tokens. All members are safe to call concurrently.
class ChallengeRegistry {
 public:
  explicit ChallengeRegistry(std::string secret_key);

  ChallengeRegistry(const ChallengeRegistry&) = delete;
  ChallengeRegistry& operator=(const ChallengeRegistry&) = delete;

  /// Throws UnknownQuestion when `question_id` is not in `scope_asset`.
  Challenge issue_challenge(const asset::Asset& scope_asset, QuestionId question_id, ChallengeKind kind,
                            std::int64_t ttl_s, Timestamp now, const ChallengeSpec& spec = {});

  /// Decides a proof. A Verified decision consumes the challenge; a second
  /// attempt throws AlreadyUsed. Rejections do not consume.
  Verdict verify(const Challenge& challenge, std::string_view response, Timestamp now);

  /// Looks up the challenge by id and returns the decided proof.
  Proof prove(const std::string& challenge_id, std::string_view response, Timestamp now);

  /// Finds the challenge a scanned QR token was issued for, if any.
  std::optional<Challenge> find_by_token(std::string_view token) const;
  std::optional<Challenge> find(const std::string& challenge_id) const;

  void register_puzzle_verifier(std::string puzzle_kind, PuzzleVerifier verifier);

  std::string mac_key_for(std::string_view scope) const;

 private:
  Verdict decide(const Challenge& challenge, std::string_view response, Timestamp now) const;

  std::string secret_;
  mutable std::mutex mutex_;
  std::uint64_t issued_ = 0;
  std::map<std::string, Challenge> challenges_;
  std::map<std::string, std::string> by_token_;
  std::set<std::string> consumed_;
  std::map<std::string, PuzzleVerifier> puzzles_;
};

}  // namespace agora::presence
