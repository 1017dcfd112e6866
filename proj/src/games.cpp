#include "qmoney/games.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>


namespace qmoney::games {

using qsim::HermitianOp;
using qsim::Matrix4;

namespace {

constexpr double kPsdTolerance = 1e-10;
constexpr double kTraceTolerance = 1e-9;
constexpr double kTieTolerance = 1e-12;
constexpr int kMaxSeesawIterations = 1000;

HermitianOp sum_of(const std::vector<HermitianOp>& ops) {
  HermitianOp total = HermitianOp::zero();
  for (const auto& op : ops) total += op;
  return total;
}

}  // namespace

RetrievalGame::RetrievalGame(std::vector<HermitianOp> hypotheses, std::vector<std::vector<bool>> relation)
    : hypotheses_(std::move(hypotheses)), relation_(std::move(relation)), total_(sum_of(hypotheses_)) {
  if (hypotheses_.empty()) throw std::invalid_argument("RetrievalGame: no hypotheses");
  if (relation_.empty()) throw std::invalid_argument("RetrievalGame: no answers");
  for (const auto& rho : hypotheses_) {
    if (qsim::eigen_decompose(rho).values[0] < -kPsdTolerance) {
      throw std::invalid_argument("RetrievalGame: hypothesis is not positive semidefinite");
    }
  }
  if (std::abs(total_.trace() - 1.0) > kTraceTolerance) {
    throw std::invalid_argument("RetrievalGame: total trace must be 1");
  }
  correctness_.reserve(relation_.size());
  for (const auto& row : relation_) {
    if (row.size() != hypotheses_.size()) throw std::invalid_argument("RetrievalGame: relation shape");
    HermitianOp c = HermitianOp::zero();
    for (std::size_t a = 0; a < row.size(); ++a)
      if (row[a]) c += hypotheses_[a];
    correctness_.push_back(c);
  }
}

RetrievalGame RetrievalGame::normalized(std::vector<HermitianOp> hypotheses,
                                        std::vector<std::vector<bool>> relation) {
  const double tr = sum_of(hypotheses).trace();
  if (!(tr > 0.0)) throw std::domain_error("RetrievalGame: zero total trace");
  for (auto& h : hypotheses) h = (1.0 / tr) * h;
  return RetrievalGame(std::move(hypotheses), std::move(relation));
}

const RetrievalGame& game_gh() {
  static const RetrievalGame game = [] {
    std::vector<HermitianOp> hyps;
    for (unsigned v = 0; v < 16; ++v) {
      hyps.push_back((1.0 / 16.0) * HermitianOp::projector(hmp::hmp_state(hmp::Coloring::from_index(v))));
    }
    std::vector<std::vector<bool>> rel(16, std::vector<bool>(16, false));
    for (std::size_t label = 0; label < 16; ++label)
      for (unsigned v = 0; v < 16; ++v) rel[label][v] = gh_related(gh_answer(label), hmp::Coloring::from_index(v));
    return RetrievalGame(std::move(hyps), std::move(rel));
  }();
  return game;
}

MeasurementStrategy hadamard_strategy() {
  // h_j equals alpha(y) for the even-parity colorings 0000, 0101, 0011, 0110.
  static constexpr std::array<unsigned, 4> kEven = {0b0000, 0b0101, 0b0011, 0b0110};
  std::array<qsim::StateVec, 4> vecs = {
      hmp::hmp_state(hmp::Coloring::from_index(kEven[0])), hmp::hmp_state(hmp::Coloring::from_index(kEven[1])),
      hmp::hmp_state(hmp::Coloring::from_index(kEven[2])), hmp::hmp_state(hmp::Coloring::from_index(kEven[3]))};
  MeasurementStrategy s{qsim::ProjectiveBasis(vecs), {}};
  for (std::size_t j = 0; j < 4; ++j) {
    const auto y = hmp::Coloring::from_index(kEven[j]);
    for (std::size_t label = 0; label < 16; ++label) {
      if (gh_related(gh_answer(label), y)) {
        s.answer_assignment[j] = label;
        break;
      }
    }
  }
  return s;
}

double selective_value(const RetrievalGame& game) {
  const qsim::Spectrum spec = qsim::eigen_decompose(game.total());
  const double scale = std::max(std::abs(spec.values[0]), std::abs(spec.values[3]));
  if (!(scale > 0.0)) throw std::domain_error("selective_value: sum of hypotheses is zero");

  // Whitening map onto the support of T: W = V_s diag(lambda_s^{-1/2}).
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < 4; ++i)
    if (spec.values[static_cast<std::size_t>(i)] > 1e-12 * scale) support.push_back(i);
  const auto r = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXcd w(4, r);
  for (Eigen::Index c = 0; c < r; ++c) {
    const auto col = support[static_cast<std::size_t>(c)];
    w.col(c) = spec.vectors.col(col) / std::sqrt(spec.values[static_cast<std::size_t>(col)]);
  }

  double best = 0.0;
  for (std::size_t i = 0; i < game.answer_count(); ++i) {
    Eigen::MatrixXcd m = w.adjoint() * game.correctness(i).matrix() * w;
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m, Eigen::EigenvaluesOnly);
    best = std::max(best, solver.eigenvalues()[r - 1]);
  }
  return best;
}

double evaluate_strategy(const RetrievalGame& game, const MeasurementStrategy& strategy) {
  double value = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    const std::size_t answer = strategy.answer_assignment[j];
    for (std::size_t a = 0; a < game.hypothesis_count(); ++a) {
      if (game.related(answer, a)) value += qsim::expectation(game.hypothesis(a), strategy.basis[j]);
    }
  }
  return value;
}

std::array<std::size_t, 4> best_assignment(const RetrievalGame& game, const qsim::ProjectiveBasis& basis) {
  std::array<std::size_t, 4> out{};
  for (std::size_t j = 0; j < 4; ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < game.answer_count(); ++i) {
      const double score = qsim::expectation(game.correctness(i), basis[j]);
      if (score > best + kTieTolerance) {
        best = score;
        out[j] = i;
      }
    }
  }
  return out;
}

namespace {

SearchResult seesaw_restart(const RetrievalGame& game, Rng& rng) {
  Matrix4 u = qsim::random_unitary(rng);
  MeasurementStrategy current{qsim::ProjectiveBasis::from_unitary(u), {}};
  current.answer_assignment = best_assignment(game, current.basis);
  double value = evaluate_strategy(game, current);
  std::vector<double> trajectory{value};

  for (int it = 0; it < kMaxSeesawIterations; ++it) {
    // f(E) = sum_j <e_j|C_j|e_j> is convex in E, so the unitary maximizing
    // Re tr(G^dagger E) with G = [C_j e_j] does not decrease it.
    Matrix4 g;
    for (Eigen::Index j = 0; j < 4; ++j) {
      const auto& c = game.correctness(current.answer_assignment[static_cast<std::size_t>(j)]).matrix();
      g.col(j) = c * current.basis[static_cast<std::size_t>(j)].amplitudes();
    }
    Eigen::JacobiSVD<Matrix4> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix4 polar = svd.matrixU() * svd.matrixV().adjoint();

    MeasurementStrategy next{qsim::ProjectiveBasis::from_unitary(polar), {}};
    next.answer_assignment = best_assignment(game, next.basis);
    const double next_value = evaluate_strategy(game, next);
    if (!(next_value > value + 1e-15)) break;
    current = next;
    value = next_value;
    trajectory.push_back(value);
  }
  return {value, current, std::move(trajectory)};
}

}  // namespace

SearchResult physical_value_search(const RetrievalGame& game, std::size_t restarts, std::uint64_t seed) {
  if (restarts == 0) throw std::invalid_argument("physical_value_search: restarts must be >= 1");
  std::vector<SearchResult> results(restarts, SearchResult{0.0, hadamard_strategy(), {}});
  const auto n = static_cast<std::int64_t>(restarts);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t r = 0; r < n; ++r) {
    Rng rng = derive_stream(seed, "seesaw", static_cast<std::uint64_t>(r));
    results[static_cast<std::size_t>(r)] = seesaw_restart(game, rng);
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r)
    if (results[r].value > results[best].value) best = r;
  SearchResult out = std::move(results[best]);
  out.value = evaluate_strategy(game, out.strategy);
  return out;
}

bool product_game_trial(std::size_t k, const MeasurementStrategy& strategy, Rng& rng) {
  if (k == 0) throw std::invalid_argument("product_game_trial: k must be >= 1");
  bool all_won = true;
  // Every instance is played so the stream consumption does not depend on
  // earlier outcomes.
  for (std::size_t i = 0; i < k; ++i) {
    const auto x = hmp::Coloring::from_index(static_cast<unsigned>(rng.below(16)));
    const auto result = qsim::measure(hmp::hmp_state(x), strategy.basis, rng);
    if (!gh_related(gh_answer(strategy.answer_assignment[result.outcome]), x)) all_won = false;
  }
  return all_won;
}

}  // namespace qmoney::games
