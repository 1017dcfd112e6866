#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "qmoney/adversary.hpp"

using namespace qmoney;
using namespace qmoney::adversary;

namespace {

bool within(const mc::Estimate& e, double p, double sigmas = 4.0) {
  const double sd = std::sqrt(p * (1 - p) / static_cast<double>(e.trials));
  return std::abs(e.rate() - p) <= sigmas * sd;
}

}  // namespace

TEST_CASE("responders answer according to their kind") {
  Rng rng(1);
  const auto x = hmp::Coloring::parse("1001");
  Responder q = QuantumRegister{hmp::hmp_state(x)};
  for (int i = 0; i < 50; ++i) {
    Responder fresh = QuantumRegister{hmp::hmp_state(x)};
    const hmp::Query query{i % 2 == 1};
    CHECK(hmp::hmp_relation(x, query, respond(fresh, query, rng)));
  }
  Responder t = AnswerTable{{hmp::Answer{true, false}, hmp::Answer{false, true}}};
  CHECK(respond(t, hmp::Query{false}, rng) == hmp::Answer{true, false});
  CHECK(respond(t, hmp::Query{true}, rng) == hmp::Answer{false, true});
  Responder r = RandomAnswer{};
  std::array<int, 4> hist{};
  for (int i = 0; i < 40000; ++i) {
    const auto a = respond(r, hmp::Query{false}, rng);
    ++hist[(a.a ? 2 : 0) + (a.b ? 1 : 0)];
  }
  for (int h : hist) CHECK(h == doctest::Approx(10000).epsilon(0.05));
  (void)q;
}

TEST_CASE("random answers pass with probability 2^(-2t/3)") {
  money::BankDb db({24, 6});
  Rng rng(2);
  const auto coin = db.mint(rng);
  const auto real = Counterfeit::from_coin(coin);
  const auto fake = Counterfeit::random_answers(coin.id, 24);
  const auto e = evaluate_counterfeits(db, real, fake, 40000, 3);
  CHECK(within(e, 1.0 / 16));
  const auto both_fake = evaluate_counterfeits(db, fake, fake, 40000, 4);
  CHECK(within(both_fake, 1.0 / 256));
}

TEST_CASE("an untouched coin copied twice always passes both sessions") {
  // Not a physical attack: the harness copies quantum responders per trial,
  // so this only checks the plumbing.
  money::BankDb db({24, 6});
  Rng rng(5);
  const auto c = Counterfeit::from_coin(db.mint(rng));
  const auto e = evaluate_counterfeits(db, c, c, 2000, 6);
  CHECK(e.successes == e.trials);
}

TEST_CASE("serial and parallel evaluation agree exactly") {
  money::BankDb db({24, 6});
  Rng rng(7);
  auto coin = db.mint(rng);
  auto pair = attack_measure_all(coin, games::hadamard_strategy(), rng);
  const auto p = evaluate_counterfeits(db, pair.first, pair.second, 5000, 8, Schedule::Parallel);
  const auto s = evaluate_counterfeits(db, pair.first, pair.second, 5000, 8, Schedule::Serial);
  CHECK(p.successes == s.successes);
  CHECK_THROWS_AS(evaluate_counterfeits(db, pair.first, pair.second, 0, 8), std::invalid_argument);

  for (auto strat : {Strategy::CloneSplit, Strategy::MeasureAll, Strategy::AdaptiveReplay}) {
    const auto a = run_attack_experiment(strat, {24, 6}, 4, 300, 9, Schedule::Parallel);
    const auto b = run_attack_experiment(strat, {24, 6}, 4, 300, 9, Schedule::Serial);
    CHECK(a.successes == b.successes);
  }
}

TEST_CASE("clone-split both-pass rate is 1/16") {
  const auto e = run_attack_experiment(Strategy::CloneSplit, {24, 6}, 0, 20000, 10);
  CHECK(within(e, 1.0 / 16));
}

TEST_CASE("measure-all answers the m=0 query correctly three times in four") {
  const auto strat = games::hadamard_strategy();
  std::array<oracle::Vec, 4> basis{};
  std::array<std::array<int, 4>, 4> tuples{};
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t i = 0; i < 4; ++i) basis[j][i] = strat.basis[j][i];
    const auto d = games::gh_answer(strat.answer_assignment[j]);
    tuples[j] = {d.for_m0.a, d.for_m0.b, d.for_m1.a, d.for_m1.b};
  }
  CHECK(oracle::gh_single_value(basis, tuples, 0) == doctest::Approx(0.75).epsilon(1e-12));

  const auto e = mc::count_successes(100000, 11, "m0", [&](std::uint64_t, Rng& rng) {
    money::Coin coin{money::CoinId{1}, {}, {false}};
    const auto x = hmp::Coloring::from_index(static_cast<unsigned>(rng.below(16)));
    coin.registers.push_back(hmp::hmp_state(x));
    auto pair = attack_measure_all(coin, strat, rng);
    const auto& table = std::get<AnswerTable>(pair.first.responders[0]);
    return hmp::hmp_relation(x, hmp::Query{false}, table.by_query[0]);
  });
  CHECK(within(e, 0.75));
}

TEST_CASE("measure-all collapses the coin") {
  money::BankDb db({24, 6});
  Rng rng(12);
  auto coin = db.mint(rng);
  const auto before = coin.serialize();
  attack_measure_all(coin, games::hadamard_strategy(), rng);
  CHECK(coin.serialize() != before);
}

TEST_CASE("adaptive attack with zero budget is measure-all") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto a = run_attack_experiment(Strategy::AdaptiveReplay, {24, 6}, 0, 2000, seed);
    const auto m = run_attack_experiment(Strategy::MeasureAll, {24, 6}, 0, 2000, seed);
    CHECK(a.successes == m.successes);
  }
}

TEST_CASE("adaptive attack spends exactly its budget and its certain answers are valid") {
  money::BankDb db({24, 6});
  Rng mint_rng(13);
  protocol::BankService service(db, 14);
  for (int rep = 0; rep < 20; ++rep) {
    auto coin = db.mint(mint_rng);
    const auto& record = *db.find(coin.id);
    protocol::LocalEndpoint ep(service);
    AttackBudget budget{16};
    Rng rng = derive_stream(15, "adaptive", static_cast<std::uint64_t>(rep));
    std::vector<RegisterBelief> beliefs;
    auto pair = attack_adaptive_replay(coin, ep, budget, rng, &beliefs);
    CHECK(budget.aux_completed == 16);
    CHECK(budget.aux_won <= 16);
    REQUIRE(beliefs.size() == 24);
    for (std::size_t r = 0; r < 24; ++r)
      for (int m = 0; m < 2; ++m)
        if (beliefs[r].certain[m]) CHECK(hmp::hmp_relation(record.colorings[r], hmp::Query{m == 1}, *beliefs[r].certain[m]));
    CHECK(pair.first.responders.size() == 24);
  }
}

TEST_CASE("metered endpoint refuses sessions past the budget") {
  money::BankDb db({24, 6});
  protocol::BankService service(db, 1);
  protocol::LocalEndpoint inner(service);
  AttackBudget budget{2};
  MeteredEndpoint ep(inner, budget);
  CHECK_NOTHROW(ep.open_session());
  CHECK_NOTHROW(ep.open_session());
  CHECK(ep.exhausted());
  CHECK_THROWS_AS(ep.open_session(), BudgetExceeded);
  CHECK(budget.aux_completed == 2);
}

TEST_CASE("more auxiliary sessions do not hurt the adaptive attacker") {
  const auto u0 = run_attack_experiment(Strategy::AdaptiveReplay, {24, 6}, 0, 3000, 21);
  const auto u8 = run_attack_experiment(Strategy::AdaptiveReplay, {24, 6}, 8, 3000, 21);
  CHECK(u8.rate() >= u0.rate() - 3 * std::hypot(u0.std_error(), u8.std_error()));
}

TEST_CASE("a tampered coin is caught") {
  money::BankDb db({24, 6});
  Rng rng(16);
  auto coin = db.mint(rng);
  const auto& record = *db.find(coin.id);
  // Flip x4 in every register: any a=1 answer becomes wrong.
  for (std::size_t i = 0; i < coin.size(); ++i)
    coin.registers[i] = hmp::hmp_state(hmp::Coloring::from_index(record.colorings[i].index() ^ 1U));
  protocol::BankService service(db, 17);
  protocol::LocalEndpoint ep(service);
  int rejected = 0;
  for (int run = 0; run < 200; ++run) {
    auto copy = coin;
    protocol::HolderSession holder(copy);
    Rng hr = derive_stream(18, "tamper", static_cast<std::uint64_t>(run));
    const auto r = protocol::run_ver(ep, holder, hr);
    REQUIRE(r.has_verdict());
    rejected += r.status == protocol::VerRun::Status::Rejected;
  }
  CHECK(rejected >= 1);
}

TEST_CASE("counterfeit holder ignores usage marks") {
  money::BankDb db({24, 6});
  Rng rng(19);
  auto coin = db.mint(rng);
  for (auto&& u : coin.usage) u = true;
  auto c = Counterfeit::from_coin(coin);
  CounterfeitHolder holder(c);
  protocol::BankService service(db, 20);
  protocol::LocalEndpoint ep(service);
  CHECK(protocol::run_ver(ep, holder, rng).accepted());
}

TEST_CASE("strategy names and csv") {
  CHECK(parse_strategy("clone-split") == Strategy::CloneSplit);
  CHECK(parse_strategy("measure-all") == Strategy::MeasureAll);
  CHECK(parse_strategy("adaptive-replay") == Strategy::AdaptiveReplay);
  CHECK_THROWS_AS(parse_strategy("bogus"), std::invalid_argument);
  for (auto s : {Strategy::CloneSplit, Strategy::MeasureAll, Strategy::AdaptiveReplay})
    CHECK(parse_strategy(to_string(s)) == s);
  CHECK(csv_header() == "strategy,k,t,U,trials,both_pass_rate,stderr,seed");
  CHECK(csv_row(Strategy::MeasureAll, {24, 6}, 8, mc::Estimate{1, 4}, 7) ==
        "measure-all,24,6,8,4,0.25,0.21650635094610965,7");
}

TEST_CASE("measure-all both-pass rate is below one and falls as t grows with k = 4t") {
  double previous = 1.0;
  for (std::size_t t : {3, 6, 9}) {
    const auto e = run_attack_experiment(Strategy::MeasureAll, {4 * t, t}, 0, 20000, 30 + t);
    CHECK(e.rate() < 1.0);
    CHECK(e.rate() < previous);
    previous = e.rate();
  }
}
