#include "qmoney/protocol.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include "json.hpp"

namespace qmoney::protocol {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json positions_json(const Positions& p) {
  ordered_json a = ordered_json::array();
  for (auto v : p) a.push_back(v);
  return a;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Positions positions_from(const nlohmann::json& j) {
  if (!j.is_array()) throw WireError("positions must be an array");
  Positions out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > UINT32_MAX) throw WireError("position out of range");
    out.push_back(static_cast<std::uint32_t>(v.get<std::uint64_t>()));
  }
  if (!strictly_increasing(out)) throw WireError("positions must be strictly increasing");
  return out;
}

bool bit_from(const nlohmann::json& v) {
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 1) throw WireError("expected 0/1");
  return v.get<std::uint64_t>() == 1;
}

const nlohmann::json& field(const nlohmann::json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw WireError(std::string("missing field ") + name);
  return *it;
}

}  // namespace

const char* type_name(const Message& msg) {
  static constexpr const char* kNames[] = {"init", "challenge", "subset", "queries", "answers", "verdict"};
  return kNames[msg.index()];
}

std::string encode(const Message& msg) {
  ordered_json j;
  j["type"] = type_name(msg);
  std::visit(overloaded{
                 [&](const Init& m) { j["coin_id"] = std::to_string(m.coin_id.value); },
                 [&](const Challenge& m) { j["positions"] = positions_json(m.positions); },
                 [&](const Subset& m) { j["positions"] = positions_json(m.positions); },
                 [&](const Queries& m) {
                   ordered_json a = ordered_json::array();
                   for (auto q : m.bits) a.push_back(q.m ? 1 : 0);
                   j["m"] = std::move(a);
                 },
                 [&](const Answers& m) {
                   ordered_json a = ordered_json::array();
                   for (auto p : m.pairs) a.push_back(ordered_json::array({p.a ? 1 : 0, p.b ? 1 : 0}));
                   j["pairs"] = std::move(a);
                 },
                 [&](const Verdict& m) { j["valid"] = m.valid; },
             },
             msg);
  return j.dump();
}

Message decode(std::string_view line) {
  const auto j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw WireError("not a JSON object");
  const auto& type = field(j, "type");
  if (!type.is_string()) throw WireError("type must be a string");
  const auto& t = type.get_ref<const std::string&>();

  Message msg;
  if (t == "init") {
    const auto& id = field(j, "coin_id");
    if (!id.is_string()) throw WireError("coin_id must be a decimal string");
    const auto& s = id.get_ref<const std::string&>();
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) throw WireError("coin_id must be a decimal string");
    msg = Init{money::CoinId{v}};
  } else if (t == "challenge") {
    msg = Challenge{positions_from(field(j, "positions"))};
  } else if (t == "subset") {
    msg = Subset{positions_from(field(j, "positions"))};
  } else if (t == "queries") {
    const auto& m = field(j, "m");
    if (!m.is_array()) throw WireError("m must be an array");
    Queries q;
    for (const auto& v : m) q.bits.push_back(hmp::Query{bit_from(v)});
    msg = std::move(q);
  } else if (t == "answers") {
    const auto& pairs = field(j, "pairs");
    if (!pairs.is_array()) throw WireError("pairs must be an array");
    Answers a;
    for (const auto& p : pairs) {
      if (!p.is_array() || p.size() != 2) throw WireError("pair must have two entries");
      a.pairs.push_back(hmp::Answer{bit_from(p[0]), bit_from(p[1])});
    }
    msg = std::move(a);
  } else if (t == "verdict") {
    const auto& v = field(j, "valid");
    if (!v.is_boolean()) throw WireError("valid must be a boolean");
    msg = Verdict{v.get<bool>()};
  } else {
    throw WireError("unknown message type");
  }
  // Field order, spacing and number formatting are fixed: only the canonical
  // encoding is accepted.
  if (encode(msg) != line) throw WireError("non-canonical encoding");
  return msg;
}

bool strictly_increasing(const Positions& p) { return std::adjacent_find(p.begin(), p.end(), std::greater_equal<>{}) == p.end(); }

bool subset_is_valid(const Positions& subset, const Positions& challenge, std::size_t expected_size) {
  if (subset.size() != expected_size || !strictly_increasing(subset)) return false;
  return std::includes(challenge.begin(), challenge.end(), subset.begin(), subset.end());
}

bool answers_are_valid(const money::SecretRecord& record, const Positions& subset, const Queries& queries,
                       const Answers& answers) {
  if (queries.bits.size() != subset.size() || answers.pairs.size() != subset.size()) return false;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] >= record.colorings.size()) return false;
    if (!hmp::hmp_relation(record.colorings[subset[i]], queries.bits[i], answers.pairs[i])) return false;
  }
  return true;
}

Positions random_subset(const Positions& from, std::size_t count, Rng& rng) {
  if (count > from.size()) throw std::invalid_argument("random_subset: count exceeds population");
  Positions pool = from;
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

// ---- BankSession -----------------------------------------------------------

BankSession::BankSession(const money::BankDb& db, Rng rng) : db_(&db), rng_(rng) {}

void BankSession::expect(State s, const char* what) {
  if (state_ != s) {
    state_ = State::Done;
    throw ProtocolAbort(std::string("bank: unexpected ") + what);
  }
}

Verdict BankSession::finish(bool valid) {
  state_ = State::Done;
  verdict_ = valid;
  return Verdict{valid};
}

Message BankSession::bank_on_init(const Init& msg) {
  expect(State::AwaitInit, "init");
  coin_id_ = msg.coin_id;
  record_ = db_->find(msg.coin_id);
  if (record_ == nullptr) return finish(false);

  const auto& params = db_->params();
  Positions all(params.k);
  std::iota(all.begin(), all.end(), 0U);
  challenge_ = Challenge{random_subset(all, params.t, rng_)};
  state_ = State::AwaitSubset;
  return challenge_;
}

Message BankSession::bank_on_subset(const Subset& msg) {
  expect(State::AwaitSubset, "subset");
  if (!subset_is_valid(msg.positions, challenge_.positions, db_->params().subset_size())) return finish(false);
  subset_ = msg;
  queries_.bits.clear();
  for (std::size_t i = 0; i < subset_.positions.size(); ++i) queries_.bits.push_back(hmp::Query{rng_.bit()});
  state_ = State::AwaitAnswers;
  return queries_;
}

Verdict BankSession::bank_on_answers(const Answers& msg) {
  expect(State::AwaitAnswers, "answers");
  return finish(answers_are_valid(*record_, subset_.positions, queries_, msg));
}

Message BankSession::handle(const Message& msg) {
  return std::visit(overloaded{
                        [&](const Init& m) -> Message { return bank_on_init(m); },
                        [&](const Subset& m) -> Message { return bank_on_subset(m); },
                        [&](const Answers& m) -> Message { return bank_on_answers(m); },
                        [&](const auto&) -> Message {
                          state_ = State::Done;
                          throw ProtocolAbort(std::string("bank: holder sent ") + type_name(msg));
                        },
                    },
                    msg);
}

// ---- BankService and local transport ---------------------------------------

BankSession BankService::open(std::uint64_t session_index) const {
  return BankSession(*db_, derive_stream(seed_, "bank-session", session_index));
}

std::optional<std::string> BankService::respond(BankSession& session, std::string_view line) const {
  try {
    return encode(session.handle(decode(line)));
  } catch (const WireError&) {
  } catch (const ProtocolAbort&) {
  }
  session.abort();
  return std::nullopt;
}

std::string LocalSessionLink::exchange(const std::string& line) {
  auto reply = service_->respond(session_, line);
  if (!reply) throw ProtocolAbort("bank closed the session");
  return *reply;
}

std::unique_ptr<SessionLink> LocalEndpoint::open_session() {
  return std::make_unique<LocalSessionLink>(*service_, service_->open(service_->next_index()));
}

// ---- HolderSession ---------------------------------------------------------

Init HolderSession::start() {
  if (money::is_retired(*coin_)) throw CoinRetired("coin must be returned to the bank");
  state_ = State::AwaitChallenge;
  return Init{coin_->id};
}

std::optional<Subset> HolderSession::holder_on_challenge(const Challenge& msg, Rng& rng) {
  if (state_ != State::AwaitChallenge) throw ProtocolAbort("holder: unexpected challenge");
  const auto& p = msg.positions;
  if (p.empty() || p.size() % 3 != 0 || !strictly_increasing(p) || p.back() >= coin_->size()) {
    state_ = State::Done;
    throw ProtocolAbort("holder: malformed challenge");
  }
  Positions unmarked;
  for (auto i : p)
    if (!coin_->usage[i]) unmarked.push_back(i);
  const std::size_t want = 2 * p.size() / 3;
  if (unmarked.size() < want) {
    state_ = State::Done;
    return std::nullopt;
  }
  subset_ = Subset{random_subset(unmarked, want, rng)};
  for (auto i : subset_.positions) coin_->usage[i] = true;
  state_ = State::AwaitQueries;
  return subset_;
}

Answers HolderSession::holder_on_queries(const Queries& msg, Rng& rng) {
  if (state_ != State::AwaitQueries) throw ProtocolAbort("holder: unexpected queries");
  if (msg.bits.size() != subset_.positions.size()) {
    state_ = State::Done;
    throw ProtocolAbort("holder: query count does not match subset");
  }
  Answers out;
  out.pairs.reserve(msg.bits.size());
  for (std::size_t i = 0; i < msg.bits.size(); ++i) {
    auto& reg = coin_->registers[subset_.positions[i]];
    auto answered = hmp::answer_query(reg, msg.bits[i], rng);
    reg = answered.collapsed;
    out.pairs.push_back(answered.answer);
  }
  state_ = State::AwaitVerdict;
  return out;
}

// ---- Transcript ------------------------------------------------------------

std::optional<bool> Transcript::verdict() const {
  if (entries.empty()) return std::nullopt;
  if (const auto* v = std::get_if<Verdict>(&entries.back().message)) return v->valid;
  return std::nullopt;
}

std::string Transcript::to_text() const {
  std::string out;
  for (const auto& e : entries) {
    out += e.direction == Direction::HolderToBank ? "H " : "B ";
    out += encode(e.message);
    out += '\n';
  }
  return out;
}

Transcript Transcript::parse(std::string_view text) {
  Transcript t;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty()) continue;
    if (line.size() < 3 || (line[0] != 'H' && line[0] != 'B') || line[1] != ' ') throw WireError("transcript: bad line");
    t.entries.push_back({line[0] == 'H' ? Direction::HolderToBank : Direction::BankToHolder, decode(line.substr(2))});
  }
  return t;
}

bool replay_verdict(const money::SecretRecord& record, const money::VerParams& params, const Transcript& transcript) {
  const Challenge* challenge = nullptr;
  const Subset* subset = nullptr;
  const Queries* queries = nullptr;
  const Answers* answers = nullptr;
  for (const auto& e : transcript.entries) {
    if (const auto* c = std::get_if<Challenge>(&e.message)) challenge = c;
    if (const auto* s = std::get_if<Subset>(&e.message)) subset = s;
    if (const auto* q = std::get_if<Queries>(&e.message)) queries = q;
    if (const auto* a = std::get_if<Answers>(&e.message)) answers = a;
  }
  if (!challenge || !subset || !queries || !answers) return false;
  if (challenge->positions.size() != params.t || !strictly_increasing(challenge->positions)) return false;
  if (!subset_is_valid(subset->positions, challenge->positions, params.subset_size())) return false;
  return answers_are_valid(record, subset->positions, *queries, *answers);
}

// ---- Driver ----------------------------------------------------------------

const char* to_string(VerRun::Status s) {
  switch (s) {
    case VerRun::Status::Accepted: return "accepted";
    case VerRun::Status::Rejected: return "rejected";
    case VerRun::Status::Aborted: return "aborted";
    case VerRun::Status::TransportFailed: return "transport-failed";
    case VerRun::Status::RetriesExhausted: return "retries-exhausted";
    case VerRun::Status::Refused: return "refused";
  }
  return "unknown";
}

namespace {

Message send(SessionLink& link, Transcript& t, const Message& msg) {
  t.entries.push_back({Direction::HolderToBank, msg});
  Message reply = decode(link.exchange(encode(msg)));
  t.entries.push_back({Direction::BankToHolder, reply});
  return reply;
}

VerRun finish_with_verdict(VerRun run, VerHolder& holder, const Verdict& v) {
  holder.on_verdict(v);
  run.status = v.valid ? VerRun::Status::Accepted : VerRun::Status::Rejected;
  return run;
}

VerRun attempt(SessionLink& link, VerHolder& holder, const Init& init, Rng& rng) {
  VerRun run;
  run.attempts = 1;
  try {
    Message reply = send(link, run.transcript, init);
    if (const auto* v = std::get_if<Verdict>(&reply)) return finish_with_verdict(std::move(run), holder, *v);
    const auto* challenge = std::get_if<Challenge>(&reply);
    if (!challenge) throw ProtocolAbort(std::string("expected challenge, got ") + type_name(reply));

    auto subset = holder.on_challenge(*challenge, rng);
    if (!subset) {
      run.status = VerRun::Status::RetriesExhausted;
      run.error = "too few unmarked positions in challenge";
      return run;
    }
    reply = send(link, run.transcript, *subset);
    if (const auto* v = std::get_if<Verdict>(&reply)) return finish_with_verdict(std::move(run), holder, *v);
    const auto* queries = std::get_if<Queries>(&reply);
    if (!queries) throw ProtocolAbort(std::string("expected queries, got ") + type_name(reply));

    reply = send(link, run.transcript, holder.on_queries(*queries, rng));
    const auto* v = std::get_if<Verdict>(&reply);
    if (!v) throw ProtocolAbort(std::string("expected verdict, got ") + type_name(reply));
    return finish_with_verdict(std::move(run), holder, *v);
  } catch (const TransportError& e) {
    run.status = VerRun::Status::TransportFailed;
    run.error = e.what();
  } catch (const ProtocolAbort& e) {
    run.status = VerRun::Status::Aborted;
    run.error = e.what();
  } catch (const WireError& e) {
    run.status = VerRun::Status::Aborted;
    run.error = e.what();
  }
  return run;
}

}  // namespace

VerRun run_ver_once(SessionLink& link, VerHolder& holder, Rng& holder_rng) {
  Init init;
  try {
    init = holder.start();
  } catch (const CoinRetired& e) {
    VerRun run;
    run.status = VerRun::Status::Refused;
    run.error = e.what();
    return run;
  }
  return attempt(link, holder, init, holder_rng);
}

VerRun run_ver(BankEndpoint& bank, VerHolder& holder, Rng& holder_rng, const RunOptions& options) {
  VerRun run;
  for (std::size_t n = 0; n <= options.retry_cap; ++n) {
    Init init;
    try {
      init = holder.start();
    } catch (const CoinRetired& e) {
      run.status = VerRun::Status::Refused;
      run.error = e.what();
      run.attempts = n;
      return run;
    }
    std::unique_ptr<SessionLink> link;
    try {
      link = bank.open_session();
    } catch (const TransportError& e) {
      run = VerRun{VerRun::Status::TransportFailed, {}, n + 1, e.what()};
      return run;
    }
    const std::size_t previous = n;
    run = attempt(*link, holder, init, holder_rng);
    run.attempts = previous + 1;
    if (run.status != VerRun::Status::RetriesExhausted) return run;
  }
  return run;
}

}  // namespace qmoney::protocol
