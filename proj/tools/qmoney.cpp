// qmoney: mint coins, run the bank, verify, attack, analyse games and check bounds.
//
// Exit codes: 0 success/valid, 1 counterfeit/violation, 2 usage, 3 protocol abort.

#include <cmath>
#include <csignal>
#include <mutex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qmoney/adversary.hpp"
#include "qmoney/bounds.hpp"
#include "qmoney/games.hpp"
#include "qmoney/money.hpp"
#include "qmoney/montecarlo.hpp"
#include "qmoney/net.hpp"
#include "qmoney/protocol.hpp"

namespace fs = std::filesystem;
using namespace qmoney;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAbort = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::optional<std::uint64_t> seed;
  std::size_t k = 24;
  std::size_t t = 6;

  std::uint64_t resolved_seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("QM_SEED")) {
      try {
        return std::stoull(env);
      } catch (const std::exception&) {
        throw UsageError("QM_SEED must be an unsigned integer");
      }
    }
    return 0;
  }

  money::VerParams params() const {
    money::VerParams p{k, t};
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return p;
  }
};

void add_seed(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master seed (falls back to $QM_SEED, then 0)");
}
void add_params(CLI::App* cmd, Common& c) {
  cmd->add_option("--k", c.k, "Registers per coin")->capture_default_str();
  cmd->add_option("--t", c.t, "Challenge size (multiple of 3)")->capture_default_str();
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Bank randomness for a given master seed; shared by `serve` and in-process `verify`.
std::uint64_t bank_seed(std::uint64_t seed) { return derive_stream(seed, "bank", 0).next(); }

// ---- mint ------------------------------------------------------------------

struct MintOpts {
  Common common;
  std::string db;
  std::string out;
};

int cmd_mint(const MintOpts& o) {
  const auto params = o.common.params();
  money::BankDb db = fs::exists(o.db) ? money::BankDb::load(o.db, params) : money::BankDb(params);
  Rng rng = derive_stream(o.common.resolved_seed(), "mint", db.size());
  const money::Coin coin = db.mint(rng);
  money::write_file(o.out, coin.serialize());
  db.save(o.db);
  std::cout << "minted coin " << coin.id.value << " (k=" << params.k << ")\n";
  return kExitOk;
}

// ---- serve -----------------------------------------------------------------

struct ServeOpts {
  Common common;
  std::string db;
  std::uint16_t port = 7070;
  std::uint64_t max_sessions = 0;
  bool any_interface = false;
};

int cmd_serve(const ServeOpts& o) {
  const auto params = o.common.params();
  const money::BankDb db = money::BankDb::load(o.db, params);
  protocol::BankService service(db, bank_seed(o.common.resolved_seed()));

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::mutex log_mu;
  std::optional<net::TcpServer> server;
  try {
    server.emplace(service, o.port,
                   [&](money::CoinId id, bool valid) {
                     std::lock_guard lock(log_mu);
                     std::cout << "coin=" << id.value << " valid=" << (valid ? "true" : "false") << std::endl;
                   },
                   o.any_interface);
  } catch (const protocol::TransportError& e) {
    std::cerr << "serve: " << e.what() << '\n';
    return kExitFail;
  }
  std::cerr << "listening on port " << server->port() << std::endl;
  server->start();

  timespec tick{0, 100'000'000};
  for (;;) {
    const int sig = sigtimedwait(&signals, nullptr, &tick);
    if (sig == SIGINT || sig == SIGTERM) break;
    if (o.max_sessions != 0 && server->sessions_served() >= o.max_sessions) break;
  }
  server->stop();
  return kExitOk;
}

// ---- verify ----------------------------------------------------------------

struct VerifyOpts {
  Common common;
  std::string coin;
  std::string db;
  std::string connect;
  std::string transcript;
  std::size_t retries = 3;
};

int cmd_verify(const VerifyOpts& o) {
  if (o.db.empty() == o.connect.empty()) throw UsageError("exactly one of --db and --connect is required");
  const auto params = o.common.params();
  const std::uint64_t seed = o.common.resolved_seed();

  money::Coin coin = money::Coin::parse(money::read_file(o.coin));
  protocol::HolderSession holder(coin);
  Rng holder_rng = derive_stream(seed, "verify-holder", 0);
  protocol::RunOptions run_opts{o.retries};

  protocol::VerRun run;
  if (!o.db.empty()) {
    const money::BankDb db = money::BankDb::load(o.db, params);
    protocol::BankService service(db, bank_seed(seed));
    protocol::LocalEndpoint endpoint(service);
    run = protocol::run_ver(endpoint, holder, holder_rng, run_opts);
  } else {
    const auto colon = o.connect.rfind(':');
    if (colon == std::string::npos) throw UsageError("--connect expects host:port");
    int port = 0;
    try {
      port = std::stoi(o.connect.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("--connect expects host:port");
    }
    if (port <= 0 || port > 65535) throw UsageError("--connect: port out of range");
    net::TcpEndpoint endpoint(o.connect.substr(0, colon), static_cast<std::uint16_t>(port));
    run = protocol::run_ver(endpoint, holder, holder_rng, run_opts);
  }

  money::write_file(o.coin, coin.serialize());
  const std::string transcript_path = o.transcript.empty() ? o.coin + ".transcript" : o.transcript;
  money::write_file(transcript_path, run.transcript.to_text());

  switch (run.status) {
    case protocol::VerRun::Status::Accepted:
      std::cout << "valid\n";
      return kExitOk;
    case protocol::VerRun::Status::Rejected:
      std::cout << "counterfeit\n";
      return kExitFail;
    default:
      std::cerr << "verify: " << protocol::to_string(run.status) << ": " << run.error << '\n';
      return kExitAbort;
  }
}

// ---- attack ----------------------------------------------------------------

struct AttackOpts {
  Common common;
  std::string strategy;
  std::vector<std::size_t> budgets{0};
  std::uint64_t trials = 10000;
  std::string out;
};

int cmd_attack(const AttackOpts& o) {
  adversary::Strategy strategy;
  try {
    strategy = adversary::parse_strategy(o.strategy);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto params = o.common.params();
  const std::uint64_t seed = o.common.resolved_seed();
  if (o.trials == 0) throw UsageError("--trials must be >= 1");

  std::string csv = adversary::csv_header() + "\n";
  for (std::size_t u : o.budgets) {
    const auto e = adversary::run_attack_experiment(strategy, params, u, o.trials, seed);
    csv += adversary::csv_row(strategy, params, u, e, seed) + "\n";
  }
  if (o.out.empty()) {
    std::cout << csv;
  } else {
    money::write_file(o.out, csv);
  }
  return kExitOk;
}

// ---- game ------------------------------------------------------------------

struct GameOpts {
  Common common;
  bool selective = false;
  bool physical = false;
  bool product = false;
  std::size_t restarts = 64;
  std::size_t k = 1;
  std::uint64_t trials = 1000000;
};

void dump_strategy(const games::MeasurementStrategy& s) {
  for (std::size_t j = 0; j < 4; ++j) {
    const auto d = games::gh_answer(s.answer_assignment[j]);
    std::cout << "outcome " << j << " answer " << d.for_m0.a << d.for_m0.b << d.for_m1.a << d.for_m1.b << " vector";
    for (std::size_t i = 0; i < 4; ++i) std::cout << ' ' << fmt17(s.basis[j][i].real()) << ' ' << fmt17(s.basis[j][i].imag());
    std::cout << '\n';
  }
}

int cmd_game(const GameOpts& o) {
  const auto& game = games::game_gh();
  const std::uint64_t seed = o.common.resolved_seed();
  const bool all = !o.selective && !o.physical && !o.product;
  if (o.selective || all) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", games::selective_value(game));
    std::cout << "selective_value " << buf << '\n';
  }
  std::optional<games::SearchResult> found;
  if (o.physical || o.product || all) {
    if (o.restarts == 0) throw UsageError("--restarts must be >= 1");
    found = games::physical_value_search(game, o.restarts, seed);
  }
  if (o.physical || all) {
    std::cout << "physical_value " << fmt17(found->value) << " restarts " << o.restarts << '\n';
    dump_strategy(found->strategy);
  }
  if (o.product) {
    if (o.k == 0) throw UsageError("--k must be >= 1");
    const auto e = mc::count_successes(o.trials, seed, "product-game", [&](std::uint64_t, Rng& rng) {
      return games::product_game_trial(o.k, found->strategy, rng);
    });
    std::cout << "product k=" << o.k << " trials=" << e.trials << " win_rate=" << fmt17(e.rate())
              << " stderr=" << fmt17(e.std_error()) << " selective_bound=" << fmt17(std::pow(0.75, double(o.k)))
              << '\n';
  }
  return kExitOk;
}

// ---- bounds ----------------------------------------------------------------

struct BoundsOpts {
  Common common;
  std::string check = "all";
  std::uint64_t trials = 10000;
  std::uint64_t samples = 100000;
};

int cmd_bounds(const BoundsOpts& o) {
  const std::uint64_t seed = o.common.resolved_seed();
  const bool all = o.check == "all";
  if (!all && o.check != "sets" && o.check != "mutinfo" && o.check != "chernoff") {
    throw UsageError("--check must be sets, mutinfo, chernoff or all");
  }
  std::uint64_t violations = 0;
  auto report = [&](const char* name, const bounds::CheckSummary& s) {
    std::cout << name << " instances=" << s.instances << " violations=" << s.violations << '\n';
    if (s.violations) std::cout << "  first violation: " << s.first_violation << '\n';
    violations += s.violations;
  };
  if (all || o.check == "sets") report("sets", bounds::random_set_lemma_checks(o.trials, seed));
  if (all || o.check == "mutinfo") report("mutinfo", bounds::random_mut_lemma_checks(o.trials, seed));
  if (all || o.check == "chernoff") {
    std::uint64_t bad = 0;
    const auto grid = bounds::chernoff_grid(o.samples, seed);
    for (const auto& p : grid) {
      if (!p.ok()) {
        ++bad;
        std::cout << "  violation n=" << p.n << " mu=" << p.mu << " lambda=" << p.lambda << " upper "
                  << fmt17(p.upper_empirical) << "/" << fmt17(p.upper_bound) << " lower " << fmt17(p.lower_empirical)
                  << "/" << fmt17(p.lower_bound) << " generalized " << fmt17(p.generalized_empirical) << "/"
                  << fmt17(p.generalized_bound) << '\n';
      }
    }
    std::cout << "chernoff points=" << grid.size() << " violations=" << bad << '\n';
    violations += bad;
  }
  return violations == 0 ? kExitOk : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum money with classical verification: simulator and analysis toolkit"};
  app.require_subcommand(1);

  MintOpts mint;
  auto* mint_cmd = app.add_subcommand("mint", "Mint a coin and record it in the bank database");
  add_seed(mint_cmd, mint.common);
  add_params(mint_cmd, mint.common);
  mint_cmd->add_option("--db", mint.db, "Bank database file (created if missing)")->required();
  mint_cmd->add_option("--out", mint.out, "Coin file to write")->required();

  ServeOpts serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the bank's verification service over TCP");
  add_seed(serve_cmd, serve.common);
  add_params(serve_cmd, serve.common);
  serve_cmd->add_option("--db", serve.db, "Bank database file")->required();
  serve_cmd->add_option("--port", serve.port, "TCP port (0 picks one)")->capture_default_str();
  serve_cmd->add_option("--max-sessions", serve.max_sessions, "Exit after this many sessions (0 = run until signalled)");
  serve_cmd->add_flag("--any-interface", serve.any_interface, "Listen on all interfaces instead of loopback");

  VerifyOpts verify;
  auto* verify_cmd = app.add_subcommand("verify", "Verify a coin in-process (--db) or against a server (--connect)");
  add_seed(verify_cmd, verify.common);
  add_params(verify_cmd, verify.common);
  verify_cmd->add_option("--coin", verify.coin, "Coin file (updated in place)")->required();
  auto* db_opt = verify_cmd->add_option("--db", verify.db, "Bank database for in-process verification");
  auto* connect_opt = verify_cmd->add_option("--connect", verify.connect, "host:port of a running bank");
  db_opt->excludes(connect_opt);
  verify_cmd->add_option("--transcript", verify.transcript, "Transcript output (default <coin>.transcript)");
  verify_cmd->add_option("--retries", verify.retries, "Retries when too few positions are unmarked")->capture_default_str();

  AttackOpts attack;
  auto* attack_cmd = app.add_subcommand("attack", "Evaluate a counterfeiting strategy; writes CSV");
  add_seed(attack_cmd, attack.common);
  add_params(attack_cmd, attack.common);
  attack_cmd->add_option("--strategy", attack.strategy, "clone-split | measure-all | adaptive-replay")->required();
  attack_cmd->add_option("--budget", attack.budgets, "Auxiliary verification budget U (repeatable)");
  attack_cmd->add_option("--trials", attack.trials, "Trials per row")->capture_default_str();
  attack_cmd->add_option("--out", attack.out, "CSV output file (default stdout)");

  GameOpts game;
  auto* game_cmd = app.add_subcommand("game", "Values of the double-answer retrieval game");
  add_seed(game_cmd, game.common);
  game_cmd->add_flag("--selective", game.selective, "Exact selective value");
  game_cmd->add_flag("--physical", game.physical, "Searched physical value and strategy");
  game_cmd->add_flag("--product", game.product, "Monte Carlo win rate of the k-fold product game");
  game_cmd->add_option("--restarts", game.restarts, "Seesaw restarts")->capture_default_str();
  game_cmd->add_option("--k", game.k, "Instances in the product game")->capture_default_str();
  game_cmd->add_option("--trials", game.trials, "Product-game trials")->capture_default_str();

  BoundsOpts bnd;
  auto* bounds_cmd = app.add_subcommand("bounds", "Randomized checks of the set, mutual-information and Chernoff bounds");
  add_seed(bounds_cmd, bnd.common);
  bounds_cmd->add_option("--check", bnd.check, "sets | mutinfo | chernoff | all")->capture_default_str();
  bounds_cmd->add_option("--trials", bnd.trials, "Random instances per lemma")->capture_default_str();
  bounds_cmd->add_option("--samples", bnd.samples, "Samples per Chernoff grid point")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*mint_cmd) return cmd_mint(mint);
    if (*serve_cmd) return cmd_serve(serve);
    if (*verify_cmd) return cmd_verify(verify);
    if (*attack_cmd) return cmd_attack(attack);
    if (*game_cmd) return cmd_game(game);
    if (*bounds_cmd) return cmd_bounds(bnd);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
