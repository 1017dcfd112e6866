#pragma once

// Coins, secret records and the bank's static database.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qmoney/hmp.hpp"
#include "qmoney/qsim.hpp"
#include "qmoney/rng.hpp"

namespace qmoney::money {

/// Register count k and challenge size t.
struct VerParams {
  std::size_t k = 24;
  std::size_t t = 6;

  /// Throws std::invalid_argument unless t > 0, 3 | t, t <= k and 8t <= 3k.
  void validate() const;
  /// Size of the holder's subset, 2t/3.
  std::size_t subset_size() const noexcept { return 2 * t / 3; }
  /// Registers after which a coin is retired: ceil(k/4).
  std::size_t retirement_threshold() const noexcept { return (k + 3) / 4; }

  bool operator==(const VerParams&) const = default;
};

/// Number of Ver runs a coin supports: floor(3k / 8t).
std::size_t lifespan(const VerParams& params);

struct CoinId {
  std::uint64_t value = 0;
  auto operator<=>(const CoinId&) const = default;
};

/// The colorings x_1..x_k behind one coin.
struct SecretRecord {
  std::vector<hmp::Coloring> colorings;

  /// 4k characters, x_1 first and within each coloring bit x1 first.
  std::string to_bits() const;
  static SecretRecord from_bits(std::string_view bits);

  bool operator==(const SecretRecord&) const = default;
};

struct Coin {
  CoinId id;
  std::vector<qsim::StateVec> registers;
  /// The classical register P; true marks a used position. Maintained by
  /// the holder, never seen by the bank.
  std::vector<bool> usage;

  static Coin fresh(CoinId id, const SecretRecord& record);

  std::size_t size() const noexcept { return registers.size(); }
  std::size_t marked_count() const;

  /// Text form: "coin <id>", "usage <bits>", then one "register" line per
  /// register with 8 floats (re, im for each amplitude) at 17 significant digits.
  std::string serialize() const;
  /// Throws std::invalid_argument on malformed input.
  static Coin parse(std::string_view text);
};

/// True once at least ceil(k/4) positions are marked.
bool is_retired(const Coin& coin);

class BankDb {
 public:
  explicit BankDb(VerParams params);

  const VerParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return records_.size(); }
  const std::map<CoinId, SecretRecord>& records() const noexcept { return records_; }

  /// nullptr for unknown ids.
  const SecretRecord* find(CoinId id) const;

  /// Draws k uniform colorings under a fresh id. Not thread-safe; callers
  /// serialize minting. Throws std::overflow_error if the id space is exhausted.
  Coin mint(Rng& rng);

  /// One line per coin: "<id-decimal> <4k-bit string>\n", ascending ids.
  std::string serialize() const;
  /// Throws std::invalid_argument on malformed lines, duplicate ids or a
  /// record length other than 4k.
  static BankDb parse(std::string_view text, VerParams params);

  void save(const std::filesystem::path& path) const;
  static BankDb load(const std::filesystem::path& path, VerParams params);

 private:
  VerParams params_;
  std::map<CoinId, SecretRecord> records_;
  std::uint64_t next_id_ = 1;
};

/// Free-function form of BankDb::mint.
inline Coin mint(BankDb& db, Rng& rng) { return db.mint(rng); }

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace qmoney::money
