#include <doctest.h>

#include <algorithm>
#include <optional>
#include <string>

#include "qmoney/protocol.hpp"

using namespace qmoney::protocol;
using qmoney::Rng;
using qmoney::money::BankDb;
using qmoney::money::Coin;
using qmoney::money::CoinId;
using qmoney::money::VerParams;

namespace {

struct Fixture {
  BankDb db{VerParams{24, 6}};
  Rng mint_rng{17};
  BankService service{db, 1234};
  LocalEndpoint endpoint{service};
};

}  // namespace

TEST_CASE("canonical encodings") {
  CHECK(encode(Init{CoinId{42}}) == R"({"type":"init","coin_id":"42"})");
  CHECK(encode(Challenge{{1, 5, 9}}) == R"({"type":"challenge","positions":[1,5,9]})");
  CHECK(encode(Subset{{1, 9}}) == R"({"type":"subset","positions":[1,9]})");
  CHECK(encode(Queries{{{false}, {true}}}) == R"({"type":"queries","m":[0,1]})");
  CHECK(encode(Answers{{{false, true}, {true, true}}}) == R"({"type":"answers","pairs":[[0,1],[1,1]]})");
  CHECK(encode(Verdict{true}) == R"({"type":"verdict","valid":true})");
  CHECK(encode(Verdict{false}) == R"({"type":"verdict","valid":false})");
}

TEST_CASE("decode inverts encode") {
  const std::vector<Message> msgs{Init{CoinId{18446744073709551615ULL}}, Challenge{{0, 23}}, Subset{{}},
                                  Queries{{{true}}}, Answers{{{true, false}}}, Verdict{false}};
  for (const auto& m : msgs) CHECK(decode(encode(m)) == m);
}

TEST_CASE("decode rejects non-canonical or malformed lines") {
  const char* bad[] = {
      "",
      "{}",
      "[]",
      "not json",
      R"({"type":"init","coin_id":42})",
      R"({"type":"init","coin_id":"4a"})",
      R"({"type":"init","coin_id":""})",
      R"({"type":"init","coin_id":"-1"})",
      R"({"type":"init","coin_id":"042"})",
      R"({"type":"init", "coin_id":"42"})",
      R"({"coin_id":"42","type":"init"})",
      R"({"type":"init","coin_id":"42","extra":1})",
      R"({"type":"challenge","positions":[5,1]})",
      R"({"type":"challenge","positions":[1,1]})",
      R"({"type":"challenge","positions":[-1]})",
      R"({"type":"challenge","positions":[1.0]})",
      R"({"type":"challenge","positions":[4294967296]})",
      R"({"type":"queries","m":[2]})",
      R"({"type":"queries","m":[true]})",
      R"({"type":"answers","pairs":[[0,1,1]]})",
      R"({"type":"answers","pairs":[0,1]})",
      R"({"type":"verdict","valid":1})",
      R"({"type":"refund"})",
      R"({"type":"verdict","valid":true} )",
  };
  for (const char* line : bad) {
    INFO(line);
    CHECK_THROWS_AS(decode(line), WireError);
  }
}

TEST_CASE("subset and position helpers") {
  CHECK(strictly_increasing({}));
  CHECK(strictly_increasing({0, 3, 7}));
  CHECK(!strictly_increasing({0, 3, 3}));
  CHECK(subset_is_valid({1, 5}, {1, 2, 5}, 2));
  CHECK(!subset_is_valid({1, 4}, {1, 2, 5}, 2));
  CHECK(!subset_is_valid({1}, {1, 2, 5}, 2));
  CHECK(!subset_is_valid({5, 1}, {1, 2, 5}, 2));
  Rng rng(3);
  const Positions from{2, 4, 6, 8, 10, 12};
  for (int i = 0; i < 100; ++i) {
    const auto s = random_subset(from, 4, rng);
    CHECK(subset_is_valid(s, from, 4));
  }
  CHECK_THROWS(random_subset(from, 7, rng));
}

TEST_CASE("honest verification accepts and marks exactly 2t/3 positions") {
  Fixture f;
  Coin coin = f.db.mint(f.mint_rng);
  HolderSession holder(coin);
  Rng rng(5);
  const auto run = run_ver(f.endpoint, holder, rng);
  CHECK(run.status == VerRun::Status::Accepted);
  CHECK(run.transcript.entries.size() == 6);
  CHECK(run.transcript.verdict() == true);
  CHECK(coin.marked_count() == 4);
  CHECK(replay_verdict(*f.db.find(coin.id), f.db.params(), run.transcript));
  CHECK(holder.state() == HolderSession::State::Done);
}

TEST_CASE("honest completeness over many fresh coins") {
  Fixture f;
  for (int i = 0; i < 500; ++i) {
    Coin coin = f.db.mint(f.mint_rng);
    HolderSession holder(coin);
    Rng rng = qmoney::derive_stream(9, "holder", static_cast<std::uint64_t>(i));
    REQUIRE(run_ver(f.endpoint, holder, rng).accepted());
  }
}

TEST_CASE("transcript text round-trips and replays to the same verdict") {
  Fixture f;
  Coin coin = f.db.mint(f.mint_rng);
  HolderSession holder(coin);
  Rng rng(6);
  const auto run = run_ver(f.endpoint, holder, rng);
  const auto back = Transcript::parse(run.transcript.to_text());
  CHECK(back == run.transcript);
  CHECK(back.to_text() == run.transcript.to_text());
  CHECK_THROWS_AS(Transcript::parse("X {}\n"), WireError);
}

TEST_CASE("replay catches a tampered answer") {
  Fixture f;
  Coin coin = f.db.mint(f.mint_rng);
  HolderSession holder(coin);
  Rng rng(7);
  auto t = run_ver(f.endpoint, holder, rng).transcript;
  const auto& rec = *f.db.find(coin.id);
  REQUIRE(replay_verdict(rec, f.db.params(), t));
  for (auto& e : t.entries)
    if (auto* a = std::get_if<Answers>(&e.message)) a->pairs[0].b = !a->pairs[0].b;
  CHECK(!replay_verdict(rec, f.db.params(), t));
}

TEST_CASE("unknown coin id gets an immediate negative verdict") {
  Fixture f;
  f.db.mint(f.mint_rng);
  BankSession s = f.service.open(0);
  const auto reply = s.handle(Init{CoinId{999}});
  CHECK(reply == Message{Verdict{false}});
  CHECK(s.done());
  CHECK(s.verdict() == false);
}

TEST_CASE("a malformed subset gets a negative verdict") {
  Fixture f;
  const Coin coin = f.db.mint(f.mint_rng);
  BankSession s = f.service.open(0);
  const auto ch = std::get<Challenge>(s.handle(Init{coin.id}));
  CHECK(ch.positions.size() == 6);
  // Wrong size: the whole challenge.
  CHECK(s.handle(Subset{ch.positions}) == Message{Verdict{false}});
  CHECK(s.done());
}

TEST_CASE("a subset outside the challenge gets a negative verdict") {
  Fixture f;
  const Coin coin = f.db.mint(f.mint_rng);
  BankSession s = f.service.open(0);
  const auto ch = std::get<Challenge>(s.handle(Init{coin.id}));
  Positions outside;
  for (std::uint32_t i = 0; i < 24 && outside.size() < 4; ++i)
    if (!std::binary_search(ch.positions.begin(), ch.positions.end(), i)) outside.push_back(i);
  CHECK(s.handle(Subset{outside}) == Message{Verdict{false}});
}

TEST_CASE("out-of-order messages abort the bank session") {
  Fixture f;
  const Coin coin = f.db.mint(f.mint_rng);
  {
    BankSession s = f.service.open(0);
    CHECK_THROWS_AS(s.handle(Answers{}), ProtocolAbort);
    CHECK(s.done());
    CHECK(!s.verdict());
  }
  {
    BankSession s = f.service.open(1);
    s.handle(Init{coin.id});
    CHECK_THROWS_AS(s.handle(Init{coin.id}), ProtocolAbort);
  }
  {
    BankSession s = f.service.open(2);
    CHECK_THROWS_AS(s.handle(Verdict{true}), ProtocolAbort);
  }
  {
    BankSession s = f.service.open(3);
    CHECK(!f.service.respond(s, "garbage"));
    CHECK(!f.service.respond(s, encode(Init{coin.id})));  // session is already over
  }
}

TEST_CASE("retired coins are refused without contacting the bank") {
  Fixture f;
  Coin coin = f.db.mint(f.mint_rng);
  for (std::size_t i = 0; i < 6; ++i) coin.usage[i] = true;
  HolderSession holder(coin);
  Rng rng(1);
  const auto run = run_ver(f.endpoint, holder, rng);
  CHECK(run.status == VerRun::Status::Refused);
  CHECK(run.transcript.entries.empty());
}

TEST_CASE("holder with too few unmarked positions retries up to the cap") {
  // k=8, t=3: retirement needs 2 marks, subset size 2. Mark one position, then
  // only challenges that include it with another unmarked one pass.
  BankDb db(VerParams{8, 3});
  Rng mint_rng(2);
  BankService service(db, 5);
  LocalEndpoint endpoint(service);
  Coin coin = db.mint(mint_rng);
  coin.usage[0] = true;
  HolderSession holder(coin);
  Rng rng(3);
  const auto run = run_ver(endpoint, holder, rng, RunOptions{3});
  CHECK(run.attempts >= 1);
  CHECK(run.attempts <= 4);
  CHECK((run.accepted() || run.status == VerRun::Status::RetriesExhausted));
}

TEST_CASE("holder rejects malformed challenges") {
  Fixture f;
  Coin coin = f.db.mint(f.mint_rng);
  Rng rng(1);
  {
    HolderSession h(coin);
    h.start();
    CHECK_THROWS_AS(h.holder_on_challenge(Challenge{{1, 2}}, rng), ProtocolAbort);
  }
  {
    HolderSession h(coin);
    h.start();
    CHECK_THROWS_AS(h.holder_on_challenge(Challenge{{1, 2, 99}}, rng), ProtocolAbort);
  }
  {
    HolderSession h(coin);
    CHECK_THROWS_AS(h.holder_on_queries(Queries{}, rng), ProtocolAbort);
  }
  CHECK(coin.marked_count() == 0);
}

TEST_CASE("identical seeds give identical transcripts") {
  auto once = [] {
    Fixture f;
    Coin coin = f.db.mint(f.mint_rng);
    HolderSession holder(coin);
    Rng rng(11);
    return run_ver(f.endpoint, holder, rng).transcript.to_text();
  };
  CHECK(once() == once());
}

namespace {

std::string mutate(std::string s, Rng& rng) {
  const int edits = 1 + static_cast<int>(rng.below(3));
  static const std::string alphabet = "{}[]\",:0123456789truefalsnyp -\\x";
  for (int e = 0; e < edits; ++e) {
    switch (rng.below(4)) {
      case 0:
        if (!s.empty()) s[rng.below(s.size())] = alphabet[rng.below(alphabet.size())];
        break;
      case 1:
        s.insert(s.begin() + static_cast<std::ptrdiff_t>(rng.below(s.size() + 1)), alphabet[rng.below(alphabet.size())]);
        break;
      case 2:
        if (!s.empty()) s.erase(rng.below(s.size()), 1);
        break;
      default:
        s.resize(rng.below(s.size() + 1));
        break;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("mutated wire lines never crash and never earn acceptance") {
  Fixture f;
  Coin coin = f.db.mint(f.mint_rng);
  const auto& record = *f.db.find(coin.id);
  Rng rng(2718);
  int accepted = 0;
  for (int i = 0; i < 10000; ++i) {
    // Play an honest prefix of random length, then send one mutated line.
    Coin copy = coin;
    HolderSession holder(copy);
    BankSession bank = f.service.open(static_cast<std::uint64_t>(i));
    const int stage = static_cast<int>(rng.below(3));
    Subset subset;
    Queries queries;
    std::string line = encode(holder.start());
    if (stage >= 1) {
      auto reply = f.service.respond(bank, line);
      REQUIRE(reply);
      subset = *holder.holder_on_challenge(std::get<Challenge>(decode(*reply)), rng);
      line = encode(subset);
    }
    if (stage >= 2) {
      auto reply = f.service.respond(bank, line);
      REQUIRE(reply);
      queries = std::get<Queries>(decode(*reply));
      line = encode(holder.holder_on_queries(queries, rng));
    }
    const std::string bad = mutate(line, rng);
    std::optional<Message> parsed;
    try {
      parsed = decode(bad);
      CHECK(encode(*parsed) == bad);
    } catch (const WireError&) {
    }
    const auto reply = f.service.respond(bank, bad);
    if (!reply) {
      CHECK(bank.done());
      CHECK(!bank.verdict());
      continue;
    }
    if (decode(*reply) == Message{Verdict{true}}) {
      // Only a mutation that still spells out valid answers may pass.
      REQUIRE(stage == 2);
      REQUIRE(parsed);
      const auto* answers = std::get_if<Answers>(&*parsed);
      REQUIRE(answers);
      CHECK(answers_are_valid(record, subset.positions, queries, *answers));
      ++accepted;
    }
  }
  CHECK(accepted < 500);
}

TEST_CASE("verification never changes the bank database") {
  Fixture f;
  std::vector<Coin> coins;
  for (int i = 0; i < 20; ++i) coins.push_back(f.db.mint(f.mint_rng));
  const auto before = f.db.serialize();
  Rng rng(21);
  for (auto& c : coins) {
    HolderSession h(c);
    run_ver(f.endpoint, h, rng);
    Coin forged = c;
    forged.id = CoinId{c.id.value + 1000};
    HolderSession hf(forged);
    run_ver(f.endpoint, hf, rng);
  }
  CHECK(f.db.serialize() == before);
}
