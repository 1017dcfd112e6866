#include "qmoney/money.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qmoney::money {

void VerParams::validate() const {
  if (t == 0 || t % 3 != 0) throw std::invalid_argument("VerParams: t must be a positive multiple of 3");
  if (t > k) throw std::invalid_argument("VerParams: t must not exceed k");
  if (8 * t > 3 * k) throw std::invalid_argument("VerParams: 8t must not exceed 3k");
}

std::size_t lifespan(const VerParams& params) { return (3 * params.k) / (8 * params.t); }

std::string SecretRecord::to_bits() const {
  std::string out;
  out.reserve(4 * colorings.size());
  for (const auto& x : colorings) out += x.to_string();
  return out;
}

SecretRecord SecretRecord::from_bits(std::string_view bits) {
  if (bits.empty() || bits.size() % 4 != 0) throw std::invalid_argument("SecretRecord: length must be 4k");
  SecretRecord r;
  for (std::size_t i = 0; i < bits.size(); i += 4) r.colorings.push_back(hmp::Coloring::parse(bits.substr(i, 4)));
  return r;
}

Coin Coin::fresh(CoinId id, const SecretRecord& record) {
  Coin c{id, {}, std::vector<bool>(record.colorings.size(), false)};
  c.registers.reserve(record.colorings.size());
  for (const auto& x : record.colorings) c.registers.push_back(hmp::hmp_state(x));
  return c;
}

std::size_t Coin::marked_count() const { return static_cast<std::size_t>(std::count(usage.begin(), usage.end(), true)); }

bool is_retired(const Coin& coin) { return coin.marked_count() >= (coin.size() + 3) / 4; }

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end || s.empty()) throw std::invalid_argument("expected unsigned integer: " + std::string(s));
  return v;
}

double parse_double(std::string_view s) {
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end || s.empty()) throw std::invalid_argument("expected number: " + std::string(s));
  return v;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) words.push_back(line.substr(start, i - start));
  }
  return words;
}

}  // namespace

std::string Coin::serialize() const {
  std::string out = "coin " + std::to_string(id.value) + "\nusage ";
  for (bool u : usage) out += u ? '1' : '0';
  out += '\n';
  for (const auto& reg : registers) {
    out += "register";
    for (std::size_t i = 0; i < qsim::kDim; ++i) {
      out += ' ';
      append_double(out, reg[i].real());
      out += ' ';
      append_double(out, reg[i].imag());
    }
    out += '\n';
  }
  return out;
}

Coin Coin::parse(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.size() < 3) throw std::invalid_argument("coin file: too short");
  auto head = split_words(lines[0]);
  if (head.size() != 2 || head[0] != "coin") throw std::invalid_argument("coin file: expected 'coin <id>'");
  Coin c;
  c.id = CoinId{parse_u64(head[1])};

  auto usage = split_words(lines[1]);
  if (usage.size() != 2 || usage[0] != "usage") throw std::invalid_argument("coin file: expected 'usage <bits>'");
  for (char ch : usage[1]) {
    if (ch != '0' && ch != '1') throw std::invalid_argument("coin file: usage must be a 0/1 string");
    c.usage.push_back(ch == '1');
  }
  for (std::size_t l = 2; l < lines.size(); ++l) {
    auto words = split_words(lines[l]);
    if (words.empty()) continue;
    if (words.size() != 9 || words[0] != "register") throw std::invalid_argument("coin file: bad register line");
    qsim::Amplitudes a;
    for (Eigen::Index i = 0; i < 4; ++i) {
      a[i] = qsim::Complex(parse_double(words[static_cast<std::size_t>(1 + 2 * i)]),
                           parse_double(words[static_cast<std::size_t>(2 + 2 * i)]));
    }
    c.registers.emplace_back(a);
  }
  if (c.registers.size() != c.usage.size() || c.registers.empty()) {
    throw std::invalid_argument("coin file: register count does not match usage length");
  }
  return c;
}

BankDb::BankDb(VerParams params) : params_(params) { params_.validate(); }

const SecretRecord* BankDb::find(CoinId id) const {
  auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

Coin BankDb::mint(Rng& rng) {
  if (next_id_ == std::numeric_limits<std::uint64_t>::max()) throw std::overflow_error("BankDb: coin id space exhausted");
  const CoinId id{next_id_++};
  SecretRecord record;
  record.colorings.reserve(params_.k);
  for (std::size_t i = 0; i < params_.k; ++i) {
    record.colorings.push_back(hmp::Coloring::from_index(static_cast<unsigned>(rng.below(16))));
  }
  Coin coin = Coin::fresh(id, record);
  records_.emplace(id, std::move(record));
  return coin;
}

std::string BankDb::serialize() const {
  std::string out;
  for (const auto& [id, record] : records_) {
    out += std::to_string(id.value);
    out += ' ';
    out += record.to_bits();
    out += '\n';
  }
  return out;
}

BankDb BankDb::parse(std::string_view text, VerParams params) {
  BankDb db(params);
  for (auto line : split_lines(text)) {
    if (line.empty()) continue;
    auto words = split_words(line);
    if (words.size() != 2) throw std::invalid_argument("bank db: expected '<id> <bits>'");
    const CoinId id{parse_u64(words[0])};
    SecretRecord record = SecretRecord::from_bits(words[1]);
    if (record.colorings.size() != params.k) throw std::invalid_argument("bank db: record length is not 4k");
    if (!db.records_.emplace(id, std::move(record)).second) throw std::invalid_argument("bank db: duplicate id");
    db.next_id_ = std::max(db.next_id_, id.value + 1);
  }
  return db;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void BankDb::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

BankDb BankDb::load(const std::filesystem::path& path, VerParams params) { return parse(read_file(path), params); }

}  // namespace qmoney::money
