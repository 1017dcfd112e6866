#pragma once

// Quantum retrieval games over C^4: a family of subnormalized hypotheses
// rho_a together with a relation between answers and hypotheses.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "qmoney/hmp.hpp"
#include "qmoney/qsim.hpp"

namespace qmoney::games {

class RetrievalGame {
 public:
  /// `relation[i][a]` is true when answer i is correct for hypothesis a.
  /// Throws std::invalid_argument if some rho_a is not PSD (min eigenvalue
  /// below -1e-10), if the total trace differs from 1 by more than 1e-9, or
  /// if the relation has the wrong shape.
  RetrievalGame(std::vector<qsim::HermitianOp> hypotheses, std::vector<std::vector<bool>> relation);

  /// Same as the constructor after dividing every hypothesis by the total trace.
  static RetrievalGame normalized(std::vector<qsim::HermitianOp> hypotheses,
                                  std::vector<std::vector<bool>> relation);

  std::size_t hypothesis_count() const noexcept { return hypotheses_.size(); }
  std::size_t answer_count() const noexcept { return relation_.size(); }
  const qsim::HermitianOp& hypothesis(std::size_t a) const { return hypotheses_.at(a); }
  bool related(std::size_t answer, std::size_t hypothesis) const { return relation_[answer][hypothesis]; }

  /// sum_a rho_a
  const qsim::HermitianOp& total() const noexcept { return total_; }
  /// sum over hypotheses related to `answer` of rho_a.
  const qsim::HermitianOp& correctness(std::size_t answer) const { return correctness_.at(answer); }

 private:
  std::vector<qsim::HermitianOp> hypotheses_;
  std::vector<std::vector<bool>> relation_;
  qsim::HermitianOp total_;
  std::vector<qsim::HermitianOp> correctness_;
};

/// Rank-1 projective measurement with a deterministic answer per outcome.
struct MeasurementStrategy {
  qsim::ProjectiveBasis basis;
  std::array<std::size_t, 4> answer_assignment{};
};

// ---- The double-answer game G_H -------------------------------------------

/// An answer to both HMP queries: (a0, b0) for m = 0 and (a1, b1) for m = 1.
struct DoubleAnswer {
  hmp::Answer for_m0;
  hmp::Answer for_m1;
  constexpr bool operator==(const DoubleAnswer&) const = default;
};

/// Label order is lexicographic in (a0, b0, a1, b1).
constexpr std::size_t gh_label(DoubleAnswer d) {
  return (std::size_t{d.for_m0.a} << 3) | (std::size_t{d.for_m0.b} << 2) | (std::size_t{d.for_m1.a} << 1) |
         std::size_t{d.for_m1.b};
}
constexpr DoubleAnswer gh_answer(std::size_t label) {
  return {{((label >> 3) & 1U) != 0, ((label >> 2) & 1U) != 0}, {((label >> 1) & 1U) != 0, (label & 1U) != 0}};
}
constexpr bool gh_related(DoubleAnswer d, const hmp::Coloring& x) {
  return hmp::hmp_relation(x, hmp::Query{false}, d.for_m0) && hmp::hmp_relation(x, hmp::Query{true}, d.for_m1);
}

/// Hypotheses (1/16)|alpha(x)><alpha(x)| indexed by Coloring::index(), answers
/// indexed by gh_label().
const RetrievalGame& game_gh();

/// Hadamard-basis strategy: each outcome answers the lexicographically
/// smallest valid tuple of the even-parity coloring whose state it equals.
MeasurementStrategy hadamard_strategy();

// ---- Values ----------------------------------------------------------------

/// Supremum over selective projections, computed as the best generalized
/// Rayleigh quotient <e|C_i|e>/<e|T|e> over answers i, restricted to the
/// support of T = sum_a rho_a. Throws std::domain_error if T is zero.
double selective_value(const RetrievalGame& game);

/// sum_{(i,a) in sigma} <e_j|rho_a|e_j> over outcomes j assigned answer i.
double evaluate_strategy(const RetrievalGame& game, const MeasurementStrategy& strategy);

struct SearchResult {
  double value;
  MeasurementStrategy strategy;
  /// Value trace of the winning restart, one entry per accepted iteration.
  std::vector<double> trajectory;
};

/// Seesaw over rank-1 projective strategies. Each restart starts from a
/// Haar-random basis and alternates a polar-decomposition basis update with
/// greedy outcome reassignment; restarts run in parallel on streams derived
/// from `seed` and are merged by max (earliest restart wins ties).
SearchResult physical_value_search(const RetrievalGame& game, std::size_t restarts, std::uint64_t seed);

/// Greedy assignment for a fixed basis; ties go to the smallest answer label.
std::array<std::size_t, 4> best_assignment(const RetrievalGame& game, const qsim::ProjectiveBasis& basis);

/// One round of the k-fold product of G_H under a strategy over G_H labels:
/// true iff all k independent instances are won.
bool product_game_trial(std::size_t k, const MeasurementStrategy& strategy, Rng& rng);

}  // namespace qmoney::games
