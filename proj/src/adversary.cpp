#include "qmoney/adversary.hpp"

#include <cstdio>
#include <stdexcept>

namespace qmoney::adversary {

using protocol::Answers;
using protocol::Challenge;
using protocol::Queries;
using protocol::Subset;

namespace {

hmp::Answer random_answer(Rng& rng) {
  const bool a = rng.bit();
  const bool b = rng.bit();
  return {a, b};
}

std::size_t answer_index(hmp::Answer a) { return (a.a ? 2U : 0U) + (a.b ? 1U : 0U); }

AnswerTable table_from_measurement(qsim::StateVec& reg, const games::MeasurementStrategy& strategy, Rng& rng) {
  auto [outcome, collapsed] = qsim::measure(reg, strategy.basis, rng);
  reg = collapsed;
  const auto d = games::gh_answer(strategy.answer_assignment[outcome]);
  return AnswerTable{{d.for_m0, d.for_m1}};
}

}  // namespace

hmp::Answer respond(Responder& r, hmp::Query q, Rng& rng) {
  if (auto* reg = std::get_if<QuantumRegister>(&r)) {
    auto answered = hmp::answer_query(reg->state, q, rng);
    reg->state = answered.collapsed;
    return answered.answer;
  }
  if (auto* table = std::get_if<AnswerTable>(&r)) return table->by_query[q.m ? 1 : 0];
  return random_answer(rng);
}

Counterfeit Counterfeit::from_coin(const money::Coin& coin) {
  Counterfeit c{coin.id, {}};
  c.responders.reserve(coin.size());
  for (const auto& reg : coin.registers) c.responders.emplace_back(QuantumRegister{reg});
  return c;
}

Counterfeit Counterfeit::random_answers(money::CoinId id, std::size_t k) {
  return Counterfeit{id, std::vector<Responder>(k, RandomAnswer{})};
}

std::optional<Subset> CounterfeitHolder::on_challenge(const Challenge& msg, Rng& rng) {
  const std::size_t want = 2 * msg.positions.size() / 3;
  for (auto p : msg.positions)
    if (p >= c_->responders.size()) throw protocol::ProtocolAbort("counterfeit: challenge out of range");
  subset_ = Subset{protocol::random_subset(msg.positions, want, rng)};
  return subset_;
}

Answers CounterfeitHolder::on_queries(const Queries& msg, Rng& rng) {
  if (msg.bits.size() != subset_.positions.size()) throw protocol::ProtocolAbort("counterfeit: query count mismatch");
  Answers out;
  for (std::size_t i = 0; i < msg.bits.size(); ++i)
    out.pairs.push_back(respond(c_->responders[subset_.positions[i]], msg.bits[i], rng));
  return out;
}

std::unique_ptr<protocol::SessionLink> MeteredEndpoint::open_session() {
  if (exhausted()) throw BudgetExceeded("auxiliary verification budget exhausted");
  ++budget_->aux_completed;
  return inner_->open_session();
}

CounterfeitPair attack_clone_split(const money::Coin& coin) {
  return {Counterfeit::from_coin(coin), Counterfeit::random_answers(coin.id, coin.size())};
}

CounterfeitPair attack_measure_all(money::Coin& coin, const games::MeasurementStrategy& strategy, Rng& rng) {
  Counterfeit c{coin.id, {}};
  c.responders.reserve(coin.size());
  for (auto& reg : coin.registers) c.responders.emplace_back(table_from_measurement(reg, strategy, rng));
  return {c, c};
}

hmp::Answer RegisterBelief::best(hmp::Query q) const {
  const std::size_t m = q.m ? 1 : 0;
  if (certain[m]) return *certain[m];
  std::size_t arg = 0;
  for (std::size_t i = 1; i < 4; ++i)
    if (confidence[m][i] > confidence[m][arg]) arg = i;
  return hmp::Answer{arg >= 2, (arg & 1U) != 0};
}

namespace {

/// Holder used for the adaptive attacker's auxiliary sessions.
class ProbeHolder final : public protocol::VerHolder {
 public:
  struct Played {
    std::uint32_t reg;
    hmp::Query query;
    hmp::Answer answer;
  };

  ProbeHolder(money::Coin& coin, std::vector<RegisterBelief>& beliefs) : coin_(&coin), beliefs_(&beliefs) {}

  protocol::Init start() override {
    unconfirmed.clear();
    return protocol::Init{coin_->id};
  }

  std::optional<Subset> on_challenge(const Challenge& msg, Rng& rng) override {
    for (auto p : msg.positions)
      if (p >= coin_->size()) throw protocol::ProtocolAbort("probe: challenge out of range");
    subset_ = Subset{protocol::random_subset(msg.positions, 2 * msg.positions.size() / 3, rng)};
    return subset_;
  }

  Answers on_queries(const Queries& msg, Rng& rng) override {
    if (msg.bits.size() != subset_.positions.size()) throw protocol::ProtocolAbort("probe: query count mismatch");
    Answers out;
    for (std::size_t i = 0; i < msg.bits.size(); ++i) {
      const auto r = subset_.positions[i];
      const auto q = msg.bits[i];
      auto& belief = (*beliefs_)[r];
      const std::size_t m = q.m ? 1 : 0;
      if (belief.certain[m]) {
        out.pairs.push_back(*belief.certain[m]);
        continue;
      }
      auto answered = hmp::answer_query(coin_->registers[r], q, rng);
      coin_->registers[r] = answered.collapsed;
      if (!belief.touched) {
        // First measurement of an untouched register is honest and therefore valid.
        belief.touched = true;
        belief.certain[m] = answered.answer;
      } else {
        unconfirmed.push_back({r, q, answered.answer});
      }
      out.pairs.push_back(answered.answer);
    }
    return out;
  }

  std::vector<Played> unconfirmed;

 private:
  money::Coin* coin_;
  std::vector<RegisterBelief>* beliefs_;
  Subset subset_;
};

void learn(std::vector<RegisterBelief>& beliefs, const std::vector<ProbeHolder::Played>& played, bool accepted) {
  if (accepted) {
    for (const auto& p : played) beliefs[p.reg].certain[p.query.m ? 1 : 0] = p.answer;
    return;
  }
  if (played.empty()) return;
  if (played.size() == 1) {
    // The only unconfirmed answer was wrong, so the other b for the same a is right.
    const auto& p = played.front();
    auto& belief = beliefs[p.reg];
    const std::size_t m = p.query.m ? 1 : 0;
    belief.confidence[m][answer_index(p.answer)] = 0.0;
    belief.certain[m] = hmp::Answer{p.answer.a, !p.answer.b};
    return;
  }
  const double keep = 1.0 - 1.0 / static_cast<double>(played.size());
  for (const auto& p : played) {
    auto& belief = beliefs[p.reg];
    const std::size_t m = p.query.m ? 1 : 0;
    if (!belief.certain[m]) belief.confidence[m][answer_index(p.answer)] *= keep;
  }
}

}  // namespace

CounterfeitPair attack_adaptive_replay(money::Coin& coin, protocol::BankEndpoint& bank, AttackBudget& budget, Rng& rng,
                                       std::vector<RegisterBelief>* beliefs_out) {
  std::vector<RegisterBelief> beliefs(coin.size());
  MeteredEndpoint metered(bank, budget);
  ProbeHolder probe(coin, beliefs);

  while (!metered.exhausted()) {
    auto link = metered.open_session();
    const auto run = protocol::run_ver_once(*link, probe, rng);
    if (!run.has_verdict()) continue;
    if (run.accepted()) ++budget.aux_won;
    learn(beliefs, probe.unconfirmed, run.accepted());
  }
  if (budget.aux_completed > budget.max_aux_instances) throw BudgetExceeded("attack exceeded its budget");

  const auto hadamard = games::hadamard_strategy();
  Counterfeit c{coin.id, {}};
  c.responders.reserve(coin.size());
  for (std::size_t r = 0; r < coin.size(); ++r) {
    if (!beliefs[r].touched) {
      c.responders.emplace_back(table_from_measurement(coin.registers[r], hadamard, rng));
    } else {
      c.responders.emplace_back(AnswerTable{{beliefs[r].best(hmp::Query{false}), beliefs[r].best(hmp::Query{true})}});
    }
  }
  if (beliefs_out) *beliefs_out = std::move(beliefs);
  return {c, c};
}

namespace {

/// Both counterfeits against independent bank sessions; true iff both accept.
bool both_pass(const protocol::BankService& service, std::uint64_t session_base, Counterfeit c1, Counterfeit c2,
               Rng& rng) {
  CounterfeitHolder h1(c1);
  CounterfeitHolder h2(c2);
  protocol::LocalSessionLink l1(service, service.open(session_base));
  protocol::LocalSessionLink l2(service, service.open(session_base + 1));
  const bool first = protocol::run_ver_once(l1, h1, rng).accepted();
  const bool second = protocol::run_ver_once(l2, h2, rng).accepted();
  return first && second;
}

template <class Trial>
mc::Estimate drive(Schedule schedule, std::uint64_t trials, std::uint64_t seed, std::string_view tag, Trial&& trial) {
  return schedule == Schedule::Parallel ? mc::count_successes(trials, seed, tag, trial)
                                        : mc::count_successes_serial(trials, seed, tag, trial);
}

}  // namespace

mc::Estimate evaluate_counterfeits(const money::BankDb& db, const Counterfeit& c1, const Counterfeit& c2,
                                   std::uint64_t trials, std::uint64_t seed, Schedule schedule) {
  if (trials == 0) throw std::invalid_argument("evaluate_counterfeits: trials must be >= 1");
  const protocol::BankService service(db, splitmix64(seed ^ fnv1a("evaluate-bank")));
  return drive(schedule, trials, seed, "evaluate", [&](std::uint64_t i, Rng& rng) {
    return both_pass(service, 2 * i, c1, c2, rng);
  });
}

Strategy parse_strategy(std::string_view name) {
  if (name == "clone-split") return Strategy::CloneSplit;
  if (name == "measure-all") return Strategy::MeasureAll;
  if (name == "adaptive-replay") return Strategy::AdaptiveReplay;
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::CloneSplit: return "clone-split";
    case Strategy::MeasureAll: return "measure-all";
    case Strategy::AdaptiveReplay: return "adaptive-replay";
  }
  return "unknown";
}

mc::Estimate run_attack_experiment(Strategy strategy, const money::VerParams& params, std::size_t budget,
                                   std::uint64_t trials, std::uint64_t seed, Schedule schedule) {
  params.validate();
  const auto hadamard = games::hadamard_strategy();
  return drive(schedule, trials, seed, "attack", [&](std::uint64_t, Rng& rng) {
    money::BankDb db(params);
    money::Coin coin = db.mint(rng);
    // Auxiliary and final sessions draw bank randomness from separate services.
    protocol::BankService aux_service(db, rng.next());
    const protocol::BankService final_service(db, rng.next());

    CounterfeitPair pair = [&] {
      switch (strategy) {
        case Strategy::CloneSplit: return attack_clone_split(coin);
        case Strategy::MeasureAll: return attack_measure_all(coin, hadamard, rng);
        case Strategy::AdaptiveReplay: {
          protocol::LocalEndpoint endpoint(aux_service);
          AttackBudget b{budget};
          return attack_adaptive_replay(coin, endpoint, b, rng);
        }
      }
      throw std::logic_error("unreachable");
    }();
    return both_pass(final_service, 0, std::move(pair.first), std::move(pair.second), rng);
  });
}

std::string csv_header() { return "strategy,k,t,U,trials,both_pass_rate,stderr,seed"; }

std::string csv_row(Strategy strategy, const money::VerParams& params, std::size_t budget, const mc::Estimate& e,
                    std::uint64_t seed) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,%llu,%.17g,%.17g,%llu", to_string(strategy), params.k, params.t,
                budget, static_cast<unsigned long long>(e.trials), e.rate(), e.std_error(),
                static_cast<unsigned long long>(seed));
  return buf;
}

}  // namespace qmoney::adversary
