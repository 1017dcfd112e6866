#include "qmoney/hmp.hpp"

#include <cmath>
#include <stdexcept>

namespace qmoney::hmp {

Coloring Coloring::parse(std::string_view s) {
  if (s.size() != 4) throw std::invalid_argument("Coloring: expected 4 characters");
  std::array<bool, 4> b{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (s[i] != '0' && s[i] != '1') throw std::invalid_argument("Coloring: expected 0/1 characters");
    b[i] = s[i] == '1';
  }
  return Coloring(b[0], b[1], b[2], b[3]);
}

std::string Coloring::to_string() const {
  std::string s(4, '0');
  for (std::size_t i = 0; i < 4; ++i) s[i] = bits_[i] ? '1' : '0';
  return s;
}

qsim::StateVec hmp_state(const Coloring& x) {
  qsim::Amplitudes a;
  for (int i = 1; i <= 4; ++i) a[i - 1] = x.x(i) ? -0.5 : 0.5;
  return qsim::StateVec(a);
}

namespace {

QueryBasis make_query_basis(bool m) {
  const double r = 1.0 / std::sqrt(2.0);
  // m = 0 pairs (|1>,|2>) and (|3>,|4>); m = 1 pairs (|1>,|3>) and (|2>,|4>).
  const int p0 = 0;
  const int q0 = m ? 2 : 1;
  const int p1 = m ? 1 : 2;
  const int q1 = 3;
  auto pair_vec = [r](int i, int j, double sign) {
    qsim::Amplitudes a = qsim::Amplitudes::Zero();
    a[i] = r;
    a[j] = sign * r;
    return qsim::StateVec::normalized(a);
  };
  return QueryBasis{
      qsim::ProjectiveBasis({pair_vec(p0, q0, 1.0), pair_vec(p0, q0, -1.0), pair_vec(p1, q1, 1.0),
                             pair_vec(p1, q1, -1.0)}),
      {Answer{false, false}, Answer{false, true}, Answer{true, false}, Answer{true, true}}};
}

}  // namespace

const QueryBasis& query_basis(Query q) {
  static const QueryBasis bases[2] = {make_query_basis(false), make_query_basis(true)};
  return bases[q.m ? 1 : 0];
}

AnsweredQuery answer_query(const qsim::StateVec& reg, Query q, Rng& rng) {
  const QueryBasis& qb = query_basis(q);
  auto [outcome, collapsed] = qsim::measure(reg, qb.basis, rng);
  return {qb.answer_map[outcome], collapsed};
}

}  // namespace qmoney::hmp
