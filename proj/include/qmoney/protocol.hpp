#pragma once

// The six-message verification dialogue between a coin holder and the bank.
//
//   holder -> bank   init      coin id
//   bank   -> holder challenge t positions
//   holder -> bank   subset    2t/3 of those positions
//   bank   -> holder queries   one bit per subset position
//   holder -> bank   answers   one (a, b) pair per subset position
//   bank   -> holder verdict
//
// Positions are 0-based and strictly increasing on the wire. The bank may
// answer with an early verdict{false} after init (unknown id) or after subset
// (malformed subset).

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qmoney/hmp.hpp"
#include "qmoney/money.hpp"
#include "qmoney/rng.hpp"

namespace qmoney::protocol {

using Positions = std::vector<std::uint32_t>;

struct Init {
  money::CoinId coin_id;
  bool operator==(const Init&) const = default;
};
struct Challenge {
  Positions positions;
  bool operator==(const Challenge&) const = default;
};
struct Subset {
  Positions positions;
  bool operator==(const Subset&) const = default;
};
struct Queries {
  std::vector<hmp::Query> bits;
  bool operator==(const Queries&) const = default;
};
struct Answers {
  std::vector<hmp::Answer> pairs;
  bool operator==(const Answers&) const = default;
};
struct Verdict {
  bool valid = false;
  bool operator==(const Verdict&) const = default;
};

using Message = std::variant<Init, Challenge, Subset, Queries, Answers, Verdict>;

/// Malformed or non-canonical wire line.
class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A message arrived in a state that does not accept it, or a peer closed
/// the session mid-dialogue.
class ProtocolAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One compact JSON object, fields in fixed order, no trailing newline.
std::string encode(const Message& msg);
/// Accepts exactly the bytes encode() would produce; throws WireError otherwise.
Message decode(std::string_view line);

const char* type_name(const Message& msg);

// ---- Validation shared by the live bank and transcript replay -------------

bool strictly_increasing(const Positions& p);
/// `subset` has `expected_size` distinct positions, all inside `challenge`.
bool subset_is_valid(const Positions& subset, const Positions& challenge, std::size_t expected_size);
/// Every answer satisfies the relation for its register's coloring.
bool answers_are_valid(const money::SecretRecord& record, const Positions& subset, const Queries& queries,
                       const Answers& answers);

// ---- Bank side -------------------------------------------------------------

class BankSession {
 public:
  enum class State { AwaitInit, AwaitSubset, AwaitAnswers, Done };

  BankSession(const money::BankDb& db, Rng rng);

  /// Challenge, or Verdict{false} for an unknown coin id.
  Message bank_on_init(const Init& msg);
  /// Queries, or Verdict{false} for a malformed subset.
  Message bank_on_subset(const Subset& msg);
  Verdict bank_on_answers(const Answers& msg);

  /// Dispatches on message type. Throws ProtocolAbort (and moves to Done) on
  /// a message the current state does not accept.
  Message handle(const Message& msg);

  /// Ends the session without a verdict.
  void abort() noexcept { state_ = State::Done; }

  State state() const noexcept { return state_; }
  bool done() const noexcept { return state_ == State::Done; }
  std::optional<money::CoinId> coin_id() const noexcept { return coin_id_; }
  std::optional<bool> verdict() const noexcept { return verdict_; }

 private:
  void expect(State s, const char* what);
  Verdict finish(bool valid);

  const money::BankDb* db_;
  Rng rng_;
  State state_ = State::AwaitInit;
  std::optional<money::CoinId> coin_id_;
  const money::SecretRecord* record_ = nullptr;
  Challenge challenge_;
  Subset subset_;
  Queries queries_;
  std::optional<bool> verdict_;
};

/// Bank front end shared by all sessions. The database is read-only here.
class BankService {
 public:
  BankService(const money::BankDb& db, std::uint64_t seed) : db_(&db), seed_(seed) {}

  /// Session whose randomness is the stream (seed, "bank-session", index).
  BankSession open(std::uint64_t session_index) const;
  /// Next index from the service-wide counter.
  std::uint64_t next_index() noexcept { return counter_.fetch_add(1, std::memory_order_relaxed); }

  /// Decodes one line, advances the session and encodes the reply. Returns
  /// nullopt when the line is malformed or out of order; the session is then
  /// over and the connection should close.
  std::optional<std::string> respond(BankSession& session, std::string_view line) const;

  const money::BankDb& db() const noexcept { return *db_; }

 private:
  const money::BankDb* db_;
  std::uint64_t seed_;
  std::atomic<std::uint64_t> counter_{0};
};

// ---- Transports ------------------------------------------------------------

/// One verification session as seen by the holder: send a line, receive a line.
class SessionLink {
 public:
  virtual ~SessionLink() = default;
  /// Throws TransportError on I/O failure and ProtocolAbort when the bank
  /// ends the session without replying.
  virtual std::string exchange(const std::string& line) = 0;
};

class BankEndpoint {
 public:
  virtual ~BankEndpoint() = default;
  virtual std::unique_ptr<SessionLink> open_session() = 0;
};

/// In-process link carrying the same bytes as the TCP transport.
class LocalSessionLink final : public SessionLink {
 public:
  LocalSessionLink(const BankService& service, BankSession session)
      : service_(&service), session_(std::move(session)) {}
  std::string exchange(const std::string& line) override;
  const BankSession& session() const noexcept { return session_; }

 private:
  const BankService* service_;
  BankSession session_;
};

class LocalEndpoint final : public BankEndpoint {
 public:
  explicit LocalEndpoint(BankService& service) : service_(&service) {}
  std::unique_ptr<SessionLink> open_session() override;

 private:
  BankService* service_;
};

// ---- Holder side -----------------------------------------------------------

/// Anything that can play the holder's half of the dialogue: the honest
/// holder or a counterfeit.
class VerHolder {
 public:
  virtual ~VerHolder() = default;
  /// Begins a new session and returns the init message.
  virtual Init start() = 0;
  /// nullopt when the challenge leaves too few usable positions.
  virtual std::optional<Subset> on_challenge(const Challenge& msg, Rng& rng) = 0;
  virtual Answers on_queries(const Queries& msg, Rng& rng) = 0;
  virtual void on_verdict(const Verdict&) {}
};

/// Thrown by HolderSession::start for a coin that must go back to the bank.
class CoinRetired : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The honest holder. Mutates its coin: marks usage and collapses measured registers.
class HolderSession final : public VerHolder {
 public:
  enum class State { Idle, AwaitChallenge, AwaitQueries, AwaitVerdict, Done };

  explicit HolderSession(money::Coin& coin) : coin_(&coin) {}

  Init start() override;
  std::optional<Subset> holder_on_challenge(const Challenge& msg, Rng& rng);
  Answers holder_on_queries(const Queries& msg, Rng& rng);

  std::optional<Subset> on_challenge(const Challenge& msg, Rng& rng) override { return holder_on_challenge(msg, rng); }
  Answers on_queries(const Queries& msg, Rng& rng) override { return holder_on_queries(msg, rng); }
  void on_verdict(const Verdict&) override { state_ = State::Done; }

  State state() const noexcept { return state_; }

 private:
  money::Coin* coin_;
  State state_ = State::Idle;
  Subset subset_;
};

/// Uniform random subset of `count` elements of `from`, returned sorted.
Positions random_subset(const Positions& from, std::size_t count, Rng& rng);

// ---- Transcripts and the driver -------------------------------------------

enum class Direction { HolderToBank, BankToHolder };

struct Transcript {
  struct Entry {
    Direction direction;
    Message message;
    bool operator==(const Entry&) const = default;
  };
  std::vector<Entry> entries;

  std::optional<bool> verdict() const;
  /// One line per message: "H <wire>" or "B <wire>".
  std::string to_text() const;
  static Transcript parse(std::string_view text);

  bool operator==(const Transcript&) const = default;
};

/// Recomputes the bank's verdict from a transcript and the coin's record.
bool replay_verdict(const money::SecretRecord& record, const money::VerParams& params, const Transcript& transcript);

struct RunOptions {
  /// Extra attempts after the holder reports too few unmarked positions.
  std::size_t retry_cap = 3;
};

struct VerRun {
  enum class Status { Accepted, Rejected, Aborted, TransportFailed, RetriesExhausted, Refused };
  Status status = Status::Aborted;
  /// Transcript of the last attempt.
  Transcript transcript;
  std::size_t attempts = 0;
  std::string error;

  bool accepted() const noexcept { return status == Status::Accepted; }
  bool has_verdict() const noexcept { return status == Status::Accepted || status == Status::Rejected; }
};

/// Drives messages 1-6 between `holder` and a fresh bank session, retrying
/// when the holder cannot pick a subset.
VerRun run_ver(BankEndpoint& bank, VerHolder& holder, Rng& holder_rng, const RunOptions& options = {});

/// Single attempt over an already opened link. A holder that declines the
/// challenge yields RetriesExhausted.
VerRun run_ver_once(SessionLink& link, VerHolder& holder, Rng& holder_rng);

const char* to_string(VerRun::Status s);

}  // namespace qmoney::protocol
