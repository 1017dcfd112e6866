#pragma once

// Hidden Matching relation on four vertices: states, query bases and the
// honest answering measurement.
//
// Coordinates |1>..|4> live in amplitude slots 0..3; coloring bits keep their
// 1-based names (x1..x4).

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "qmoney/qsim.hpp"

namespace qmoney::hmp {

/// x in {0,1}^4.
class Coloring {
 public:
  constexpr Coloring() = default;
  constexpr Coloring(bool x1, bool x2, bool x3, bool x4) : bits_{x1, x2, x3, x4} {}

  /// 0..15 with x1 as the most significant bit, so index("0101") == 5.
  static constexpr Coloring from_index(unsigned v) {
    return Coloring((v >> 3) & 1U, (v >> 2) & 1U, (v >> 1) & 1U, v & 1U);
  }
  /// Parses "x1x2x3x4"; throws std::invalid_argument on anything else.
  static Coloring parse(std::string_view s);

  /// Bit x_i for i in 1..4.
  constexpr bool x(int i) const { return bits_[static_cast<std::size_t>(i - 1)]; }

  constexpr unsigned index() const {
    return (unsigned{bits_[0]} << 3) | (unsigned{bits_[1]} << 2) | (unsigned{bits_[2]} << 1) | unsigned{bits_[3]};
  }
  std::string to_string() const;

  constexpr bool operator==(const Coloring&) const = default;

 private:
  std::array<bool, 4> bits_{};
};

struct Query {
  bool m = false;
  constexpr bool operator==(const Query&) const = default;
};

struct Answer {
  bool a = false;
  bool b = false;
  constexpr bool operator==(const Answer&) const = default;
};

/// (x, m, a, b) in HMP iff b = x1 ^ x_{2+m} when a = 0, and b = x_{3-m} ^ x4 when a = 1.
constexpr bool hmp_relation(const Coloring& x, Query q, Answer ans) {
  const int m = q.m ? 1 : 0;
  const bool parity = ans.a ? (x.x(3 - m) != x.x(4)) : (x.x(1) != x.x(2 + m));
  return ans.b == parity;
}

/// The valid b for a given (x, m, a).
constexpr bool valid_b(const Coloring& x, Query q, bool a) {
  return hmp_relation(x, q, Answer{a, true});
}

/// alpha(x) = 1/2 * sum_i (-1)^{x_i} |i>
qsim::StateVec hmp_state(const Coloring& x);

struct QueryBasis {
  qsim::ProjectiveBasis basis;
  std::array<Answer, 4> answer_map;
};

/// Measurement basis {v1..v4} for query m together with the outcome-to-answer
/// map v1->(0,0), v2->(0,1), v3->(1,0), v4->(1,1).
const QueryBasis& query_basis(Query q);

struct AnsweredQuery {
  Answer answer;
  qsim::StateVec collapsed;
};

/// Honest answering procedure. Accepts any register state; for alpha(x) the
/// answer is always valid for x.
AnsweredQuery answer_query(const qsim::StateVec& reg, Query q, Rng& rng);

}  // namespace qmoney::hmp
