#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "qmoney/games.hpp"
#include "qmoney/montecarlo.hpp"

using namespace qmoney::games;
using namespace qmoney::qsim;
using qmoney::Rng;
using qmoney::hmp::Coloring;
using qmoney::hmp::Query;

namespace {

std::array<oracle::Vec, 4> to_oracle(const ProjectiveBasis& b) {
  std::array<oracle::Vec, 4> out{};
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 4; ++i) out[j][i] = b[j][i];
  return out;
}

std::array<std::array<int, 4>, 4> to_tuples(const std::array<std::size_t, 4>& labels) {
  std::array<std::array<int, 4>, 4> t{};
  for (std::size_t j = 0; j < 4; ++j) {
    const auto d = gh_answer(labels[j]);
    t[j] = {d.for_m0.a, d.for_m0.b, d.for_m1.a, d.for_m1.b};
  }
  return t;
}

/// Measures in the m=0 basis and guesses a fixed answer for m=1.
MeasurementStrategy m0_basis_with_guess(qmoney::hmp::Answer guess) {
  const auto& qb = qmoney::hmp::query_basis(Query{false});
  MeasurementStrategy s{qb.basis, {}};
  for (std::size_t j = 0; j < 4; ++j) s.answer_assignment[j] = gh_label({qb.answer_map[j], guess});
  return s;
}

}  // namespace

TEST_CASE("G_H has 16 hypotheses, 16 answers and 64 related pairs") {
  const auto& g = game_gh();
  CHECK(g.hypothesis_count() == 16);
  CHECK(g.answer_count() == 16);
  int pairs = 0;
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t a = 0; a < 16; ++a) {
      const auto d = gh_answer(i);
      const unsigned x = static_cast<unsigned>(a);
      const bool expect = oracle::relation(x, 0, d.for_m0.a, d.for_m0.b) && oracle::relation(x, 1, d.for_m1.a, d.for_m1.b);
      CHECK(g.related(i, a) == expect);
      pairs += expect;
    }
  CHECK(pairs == 64);
  CHECK(g.total().trace() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((g.total().matrix() - 0.25 * Matrix4::Identity()).norm() < 1e-14);
}

TEST_CASE("labels round-trip") {
  for (std::size_t i = 0; i < 16; ++i) CHECK(gh_label(gh_answer(i)) == i);
  CHECK(gh_label({{false, true}, {false, false}}) == 4);
}

TEST_CASE("selective value of G_H is 3/4 and matches the power-iteration oracle") {
  CHECK(selective_value(game_gh()) == doctest::Approx(0.75).epsilon(1e-9));

  // T = I/4 has full support, so the value is max_i lambda_max(4 C_i).
  double best = 0;
  for (std::size_t i = 0; i < 16; ++i) {
    oracle::Mat c{};
    const auto d = gh_answer(i);
    for (unsigned x = 0; x < 16; ++x)
      if (oracle::relation(x, 0, d.for_m0.a, d.for_m0.b) && oracle::relation(x, 1, d.for_m1.a, d.for_m1.b))
        oracle::add(c, oracle::outer(oracle::alpha(x), 4.0 / 16.0));
    best = std::max(best, oracle::top_eigenvalue(c));
  }
  CHECK(best == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("Hadamard strategy is worth 5/8") {
  const auto s = hadamard_strategy();
  CHECK(evaluate_strategy(game_gh(), s) == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(oracle::gh_value(to_oracle(s.basis), to_tuples(s.answer_assignment)) == doctest::Approx(0.625).epsilon(1e-12));
  // Either answer on its own is right three times in four.
  CHECK(oracle::gh_single_value(to_oracle(s.basis), to_tuples(s.answer_assignment), 0) ==
        doctest::Approx(0.75).epsilon(1e-12));
  CHECK(oracle::gh_single_value(to_oracle(s.basis), to_tuples(s.answer_assignment), 1) ==
        doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("Hadamard strategy tuples") {
  const auto s = hadamard_strategy();
  const std::array<std::size_t, 4> expect{0, 4, 1, 5};
  CHECK(s.answer_assignment == expect);
}

TEST_CASE("m=0 basis with a fixed m=1 guess is worth 1/2") {
  const auto s = m0_basis_with_guess({false, false});
  CHECK(evaluate_strategy(game_gh(), s) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(oracle::gh_value(to_oracle(s.basis), to_tuples(s.answer_assignment)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("strategy evaluation agrees with the enumeration oracle on random strategies") {
  Rng rng(99);
  for (int rep = 0; rep < 50; ++rep) {
    MeasurementStrategy s{ProjectiveBasis::from_unitary(random_unitary(rng)), {}};
    for (auto& l : s.answer_assignment) l = rng.below(16);
    const double v = evaluate_strategy(game_gh(), s);
    CHECK(v == doctest::Approx(oracle::gh_value(to_oracle(s.basis), to_tuples(s.answer_assignment))).epsilon(1e-12));
    CHECK(v <= 0.75 + 1e-12);
    // The greedy assignment can only help.
    MeasurementStrategy g{s.basis, best_assignment(game_gh(), s.basis)};
    CHECK(evaluate_strategy(game_gh(), g) >= v - 1e-15);
  }
}

TEST_CASE("physical search lands in [5/8, 3/4] and is deterministic") {
  const auto r = physical_value_search(game_gh(), 16, 1);
  CHECK(r.value >= 0.625 - 1e-12);
  CHECK(r.value <= 0.75 + 1e-6);
  CHECK(evaluate_strategy(game_gh(), r.strategy) == doctest::Approx(r.value).epsilon(1e-12));
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) CHECK(r.trajectory[i] >= r.trajectory[i - 1] - 1e-12);
  const auto again = physical_value_search(game_gh(), 16, 1);
  CHECK(again.value == r.value);
}

TEST_CASE("selective value of a perfectly distinguishable game is 1") {
  std::vector<HermitianOp> hyps{0.5 * HermitianOp::projector(StateVec::basis_state(0)),
                                0.5 * HermitianOp::projector(StateVec::basis_state(1))};
  RetrievalGame g(hyps, {{true, false}, {false, true}});
  CHECK(selective_value(g) == doctest::Approx(1.0));
  const auto r = physical_value_search(g, 8, 3);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("game constructor validation") {
  const auto p0 = HermitianOp::projector(StateVec::basis_state(0));
  CHECK_THROWS_AS(RetrievalGame({p0, p0}, {{true, true}}), std::invalid_argument);       // trace 2
  CHECK_THROWS_AS(RetrievalGame({p0}, {{true, true}}), std::invalid_argument);           // ragged relation
  Matrix4 neg = Matrix4::Zero();
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(RetrievalGame({HermitianOp(neg)}, {{true}}), std::invalid_argument);  // not PSD
  CHECK_NOTHROW(RetrievalGame::normalized({p0, p0}, {{true, false}}));
}

TEST_CASE("product game k=1 matches the strategy value") {
  const auto s = hadamard_strategy();
  const auto e = qmoney::mc::count_successes(100000, 5, "product",
                                             [&](std::uint64_t, Rng& rng) { return product_game_trial(1, s, rng); });
  CHECK(std::abs(e.rate() - 0.625) < 4 * e.std_error());
  const auto e2 = qmoney::mc::count_successes(100000, 6, "product",
                                              [&](std::uint64_t, Rng& rng) { return product_game_trial(2, s, rng); });
  CHECK(std::abs(e2.rate() - 0.625 * 0.625) < 4 * e2.std_error());
}

TEST_CASE("sequential measurement of both queries on one register is right half the time") {
  const auto e = qmoney::mc::count_successes(100000, 8, "seq", [](std::uint64_t, Rng& rng) {
    const auto x = Coloring::from_index(static_cast<unsigned>(rng.below(16)));
    const auto first = qmoney::hmp::answer_query(qmoney::hmp::hmp_state(x), Query{false}, rng);
    const auto second = qmoney::hmp::answer_query(first.collapsed, Query{true}, rng);
    return qmoney::hmp::hmp_relation(x, Query{false}, first.answer) &&
           qmoney::hmp::hmp_relation(x, Query{true}, second.answer);
  });
  CHECK(std::abs(e.rate() - 0.5) < 4 * e.std_error());
}

TEST_CASE("physical search never beats the selective value") {
  for (std::uint64_t seed : {2ULL, 3ULL, 4ULL}) {
    const auto r = physical_value_search(game_gh(), 4, seed);
    CHECK(r.value <= selective_value(game_gh()) + 1e-9);
  }
}

TEST_CASE("Hadamard product game k=1 over a million trials") {
  const auto s = hadamard_strategy();
  const auto e = qmoney::mc::count_successes(1000000, 12, "product",
                                             [&](std::uint64_t, Rng& rng) { return product_game_trial(1, s, rng); });
  CHECK(std::abs(e.rate() - 0.625) <= 0.002);
}
