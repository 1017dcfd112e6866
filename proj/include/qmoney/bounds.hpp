#pragma once

// Concentration bounds, the set-intersection lemma and the mutual-information
// lemma as evaluable formulas and exact checkers.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qmoney/rng.hpp"

namespace qmoney::bounds {

/// P[sum X_i >= (1+lambda) mu n] <= exp(-n lambda^2 mu / (2 + lambda)).
/// Requires n >= 1, mu in (0,1], lambda >= 0; throws std::domain_error otherwise.
double chernoff_upper(std::size_t n, double mu, double lambda);

/// P[sum X_i <= (1-lambda) mu n] <= exp(-n lambda^2 mu / 2), lambda in [0,1].
double chernoff_lower(std::size_t n, double mu, double lambda);

/// Booleans with P[all of S] <= delta^|S|:
/// P[sum X_i >= (1+lambda) delta n] <= exp(-2 n lambda^2 delta^2).
double generalized_chernoff(std::size_t n, double delta, double lambda);

struct SetFamily {
  std::size_t universe_size = 0;
  /// Sorted, deduplicated on construction.
  std::vector<std::vector<std::size_t>> sets;

  /// Throws std::invalid_argument for indices outside [0, universe_size).
  SetFamily(std::size_t n, std::vector<std::vector<std::size_t>> sets);
};

struct SetLemmaReport {
  bool holds = false;
  std::size_t n = 0;
  std::size_t count = 0;
  /// Average set size.
  double average_size = 0;
  /// Largest pairwise intersection.
  std::size_t max_intersection = 0;
  bool few_sets = false;          // N < 2n/t
  bool large_intersection = false;  // s > t^2/(2n)
};

/// Evaluates "N < 2n/t or s > t^2/2n" in exact integer arithmetic.
/// Requires at least two sets.
SetLemmaReport check_set_lemma(const SetFamily& family);

/// Joint distribution of (A, B); rows index A, columns index B.
class JointPmf {
 public:
  /// Throws std::invalid_argument on negative entries, ragged rows, or a
  /// total differing from 1 by more than 1e-12.
  explicit JointPmf(std::vector<std::vector<double>> p);

  std::size_t size_a() const noexcept { return p_.size(); }
  std::size_t size_b() const noexcept { return p_.empty() ? 0 : p_[0].size(); }
  double operator()(std::size_t a, std::size_t b) const { return p_[a][b]; }
  double marginal_a(std::size_t a) const;
  double marginal_b(std::size_t b) const;

 private:
  std::vector<std::vector<double>> p_;
};

/// I(A:B) = E_b[KL(mu_b || mu)] in nats, with 0 log 0 = 0.
double mutual_information(const JointPmf& joint);

struct MutLemmaReport {
  bool holds = false;
  /// False when beta < alpha and the inequality says nothing.
  bool applicable = false;
  double alpha = 0;
  double beta = 0;
  double info = 0;
  double bound = 0;
};

/// `condition[b]` lists the values of A that satisfy the condition when B = b.
/// alpha = max_b mu(X_b), beta = sum_b p(b) mu_b(X_b); checks
/// I(A:B) >= 2 (beta - alpha)^2 - 1e-12 whenever beta >= alpha.
MutLemmaReport check_mut_lemma(const JointPmf& joint, const std::vector<std::vector<std::size_t>>& condition);

// ---- Randomized checks -------------------------------------------------------

struct CheckSummary {
  std::uint64_t instances = 0;
  std::uint64_t violations = 0;
  /// Human-readable dump of the first violating instance.
  std::string first_violation;
};

/// Random families with n <= 64 and N <= 64.
CheckSummary random_set_lemma_checks(std::uint64_t trials, std::uint64_t seed);
/// Random joints with |X|, |Y| <= 6 and random condition sets.
CheckSummary random_mut_lemma_checks(std::uint64_t trials, std::uint64_t seed);

struct TailPoint {
  std::size_t n;
  double mu;
  double lambda;
  double upper_empirical, upper_bound;
  double lower_empirical, lower_bound;
  double generalized_empirical, generalized_bound;

  bool ok() const {
    return upper_empirical <= upper_bound && lower_empirical <= lower_bound &&
           generalized_empirical <= generalized_bound;
  }
};

/// Empirical tails of sums of n independent Bernoulli(mu) variables against
/// all three bounds (the generalized bound with delta = mu).
TailPoint empirical_tails(std::size_t n, double mu, double lambda, std::uint64_t samples, std::uint64_t seed);

/// The 20-point grid used by the tail checks.
std::vector<TailPoint> chernoff_grid(std::uint64_t samples, std::uint64_t seed);

/// Tail of a correlated Boolean sequence: p drawn once per run from
/// {delta, delta/4}, then n Bernoulli(p) draws. Each conditional success
/// probability stays at or below delta, yet the variables are dependent.
double correlated_tail(std::size_t n, double delta, double lambda, std::uint64_t runs, std::uint64_t seed);

}  // namespace qmoney::bounds
