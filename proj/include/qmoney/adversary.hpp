#pragma once

// Counterfeiting attacks and the evaluation harness that scores a pair of
// counterfeits by the probability that both pass verification.
//
// Counterfeits are products of per-register response sources; nothing here
// entangles registers.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qmoney/games.hpp"
#include "qmoney/money.hpp"
#include "qmoney/montecarlo.hpp"
#include "qmoney/protocol.hpp"

namespace qmoney::adversary {

/// A held quantum register; measured honestly on demand and collapsed.
struct QuantumRegister {
  qsim::StateVec state;
};
/// Fixed classical answers for m = 0 and m = 1.
struct AnswerTable {
  std::array<hmp::Answer, 2> by_query;
};
/// Uniformly random (a, b).
struct RandomAnswer {};

using Responder = std::variant<QuantumRegister, AnswerTable, RandomAnswer>;

struct Counterfeit {
  money::CoinId claimed_id;
  std::vector<Responder> responders;

  /// All registers of `coin` as quantum responders.
  static Counterfeit from_coin(const money::Coin& coin);
  static Counterfeit random_answers(money::CoinId id, std::size_t k);
};

/// Plays the holder's side from a counterfeit. Ignores usage marks: the
/// subset is a uniform 2t/3 subset of every challenge.
class CounterfeitHolder final : public protocol::VerHolder {
 public:
  explicit CounterfeitHolder(Counterfeit& c) : c_(&c) {}
  protocol::Init start() override { return protocol::Init{c_->claimed_id}; }
  std::optional<protocol::Subset> on_challenge(const protocol::Challenge& msg, Rng& rng) override;
  protocol::Answers on_queries(const protocol::Queries& msg, Rng& rng) override;

 private:
  Counterfeit* c_;
  protocol::Subset subset_;
};

hmp::Answer respond(Responder& r, hmp::Query q, Rng& rng);

struct AttackBudget {
  std::size_t max_aux_instances = 0;
  std::size_t aux_completed = 0;
  std::size_t aux_won = 0;
};

class BudgetExceeded : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Endpoint wrapper that counts every opened session against a budget and
/// refuses to open one past the limit.
class MeteredEndpoint final : public protocol::BankEndpoint {
 public:
  MeteredEndpoint(protocol::BankEndpoint& inner, AttackBudget& budget) : inner_(&inner), budget_(&budget) {}
  std::unique_ptr<protocol::SessionLink> open_session() override;
  bool exhausted() const noexcept { return budget_->aux_completed >= budget_->max_aux_instances; }

 private:
  protocol::BankEndpoint* inner_;
  AttackBudget* budget_;
};

using CounterfeitPair = std::pair<Counterfeit, Counterfeit>;

/// Real coin in one hand, random answers in the other.
CounterfeitPair attack_clone_split(const money::Coin& coin);

/// Measures every register once with `strategy` (labels in the G_H answer
/// space) and hands out the resulting answer tables twice. Collapses the
/// coin's registers.
CounterfeitPair attack_measure_all(money::Coin& coin, const games::MeasurementStrategy& strategy, Rng& rng);

/// Per-register belief of the adaptive attacker.
struct RegisterBelief {
  bool touched = false;
  /// Answers known to be valid, per query.
  std::array<std::optional<hmp::Answer>, 2> certain;
  /// Confidence per (a, b), index 2a + b; lowered on rejections.
  std::array<std::array<double, 4>, 2> confidence{{{1, 1, 1, 1}, {1, 1, 1, 1}}};

  hmp::Answer best(hmp::Query q) const;
};

/// Runs up to budget.max_aux_instances verification sessions against `bank`,
/// answering from known-valid answers or by measuring the (possibly already
/// collapsed) registers, and learns from verdicts: an accepted session
/// confirms every answer played; a rejection with one unconfirmed answer
/// refutes it; a rejection with several lowers each one's confidence equally.
/// Registers never touched are measured with the Hadamard strategy at the end,
/// so a zero budget reproduces attack_measure_all.
CounterfeitPair attack_adaptive_replay(money::Coin& coin, protocol::BankEndpoint& bank, AttackBudget& budget,
                                       Rng& rng, std::vector<RegisterBelief>* beliefs_out = nullptr);

enum class Schedule { Parallel, Serial };

/// Fraction of trials in which two independent verification sessions, one
/// per counterfeit, both accept. Counterfeits are copied per trial, so
/// quantum responders start every trial from the same snapshot.
mc::Estimate evaluate_counterfeits(const money::BankDb& db, const Counterfeit& c1, const Counterfeit& c2,
                                   std::uint64_t trials, std::uint64_t seed, Schedule schedule = Schedule::Parallel);

enum class Strategy { CloneSplit, MeasureAll, AdaptiveReplay };

Strategy parse_strategy(std::string_view name);
const char* to_string(Strategy s);

/// Full experiment: each trial mints a fresh coin, mounts the attack and
/// runs one both-must-pass evaluation.
mc::Estimate run_attack_experiment(Strategy strategy, const money::VerParams& params, std::size_t budget,
                                   std::uint64_t trials, std::uint64_t seed,
                                   Schedule schedule = Schedule::Parallel);

/// "strategy,k,t,U,trials,both_pass_rate,stderr,seed"
std::string csv_header();
std::string csv_row(Strategy strategy, const money::VerParams& params, std::size_t budget, const mc::Estimate& e,
                     std::uint64_t seed);

}  // namespace qmoney::adversary
