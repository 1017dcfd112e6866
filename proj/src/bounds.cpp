#include "qmoney/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qmoney::bounds {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(what);
}

}  // namespace

double chernoff_upper(std::size_t n, double mu, double lambda) {
  require(n >= 1, "chernoff_upper: n must be >= 1");
  require(mu > 0.0 && mu <= 1.0, "chernoff_upper: mu must lie in (0,1]");
  require(lambda >= 0.0 && std::isfinite(lambda), "chernoff_upper: lambda must be >= 0");
  return std::exp(-static_cast<double>(n) * lambda * lambda * mu / (2.0 + lambda));
}

double chernoff_lower(std::size_t n, double mu, double lambda) {
  require(n >= 1, "chernoff_lower: n must be >= 1");
  require(mu > 0.0 && mu <= 1.0, "chernoff_lower: mu must lie in (0,1]");
  require(lambda >= 0.0 && lambda <= 1.0, "chernoff_lower: lambda must lie in [0,1]");
  return std::exp(-static_cast<double>(n) * lambda * lambda * mu / 2.0);
}

double generalized_chernoff(std::size_t n, double delta, double lambda) {
  require(n >= 1, "generalized_chernoff: n must be >= 1");
  require(delta > 0.0 && delta <= 1.0, "generalized_chernoff: delta must lie in (0,1]");
  require(lambda >= 0.0 && std::isfinite(lambda), "generalized_chernoff: lambda must be >= 0");
  return std::exp(-2.0 * static_cast<double>(n) * lambda * lambda * delta * delta);
}

SetFamily::SetFamily(std::size_t n, std::vector<std::vector<std::size_t>> s) : universe_size(n), sets(std::move(s)) {
  for (auto& set : sets) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    if (!set.empty() && set.back() >= n) throw std::invalid_argument("SetFamily: index outside universe");
  }
}

SetLemmaReport check_set_lemma(const SetFamily& family) {
  const std::size_t count = family.sets.size();
  if (count < 2) throw std::invalid_argument("check_set_lemma: need at least two sets");
  const std::uint64_t n = family.universe_size;

  std::uint64_t total = 0;
  for (const auto& s : family.sets) total += s.size();
  std::size_t s_max = 0;
  std::vector<std::size_t> tmp;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      tmp.clear();
      std::set_intersection(family.sets[i].begin(), family.sets[i].end(), family.sets[j].begin(),
                            family.sets[j].end(), std::back_inserter(tmp));
      s_max = std::max(s_max, tmp.size());
    }
  }

  SetLemmaReport r;
  r.n = family.universe_size;
  r.count = count;
  r.average_size = static_cast<double>(total) / static_cast<double>(count);
  r.max_intersection = s_max;
  // With t = total/N:  N < 2n/t  <=>  total < 2n (or t = 0),
  //                    s > t^2/2n <=>  2n s N^2 > total^2.
  const auto N = static_cast<unsigned __int128>(count);
  r.few_sets = total == 0 || total < 2 * n;
  r.large_intersection = static_cast<unsigned __int128>(2 * n) * s_max * N * N >
                         static_cast<unsigned __int128>(total) * total;
  r.holds = r.few_sets || r.large_intersection;
  return r;
}

JointPmf::JointPmf(std::vector<std::vector<double>> p) : p_(std::move(p)) {
  if (p_.empty() || p_[0].empty()) throw std::invalid_argument("JointPmf: empty");
  double total = 0.0;
  for (const auto& row : p_) {
    if (row.size() != p_[0].size()) throw std::invalid_argument("JointPmf: ragged rows");
    for (double v : row) {
      if (!(v >= 0.0)) throw std::invalid_argument("JointPmf: negative probability");
      total += v;
    }
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("JointPmf: probabilities must sum to 1");
}

double JointPmf::marginal_a(std::size_t a) const {
  double s = 0.0;
  for (double v : p_[a]) s += v;
  return s;
}

double JointPmf::marginal_b(std::size_t b) const {
  double s = 0.0;
  for (const auto& row : p_) s += row[b];
  return s;
}

double mutual_information(const JointPmf& joint) {
  double info = 0.0;
  for (std::size_t b = 0; b < joint.size_b(); ++b) {
    const double pb = joint.marginal_b(b);
    if (pb <= 0.0) continue;
    double kl = 0.0;
    for (std::size_t a = 0; a < joint.size_a(); ++a) {
      const double cond = joint(a, b) / pb;
      if (cond <= 0.0) continue;
      kl += cond * std::log(cond / joint.marginal_a(a));
    }
    info += pb * kl;
  }
  return std::max(info, 0.0);
}

MutLemmaReport check_mut_lemma(const JointPmf& joint, const std::vector<std::vector<std::size_t>>& condition) {
  if (condition.size() != joint.size_b()) throw std::invalid_argument("check_mut_lemma: one condition set per b");
  MutLemmaReport r;
  for (std::size_t b = 0; b < joint.size_b(); ++b) {
    double mu_xb = 0.0;
    double joint_xb = 0.0;
    for (auto a : condition[b]) {
      if (a >= joint.size_a()) throw std::invalid_argument("check_mut_lemma: condition index out of range");
      mu_xb += joint.marginal_a(a);
      joint_xb += joint(a, b);
    }
    r.alpha = std::max(r.alpha, mu_xb);
    r.beta += joint_xb;  // p(b) * mu_b(X_b)
  }
  r.info = mutual_information(joint);
  r.applicable = r.beta >= r.alpha;
  r.bound = r.applicable ? 2.0 * (r.beta - r.alpha) * (r.beta - r.alpha) : 0.0;
  r.holds = !r.applicable || r.info >= r.bound - 1e-12;
  return r;
}

// ---- Randomized checks -------------------------------------------------------

CheckSummary random_set_lemma_checks(std::uint64_t trials, std::uint64_t seed) {
  CheckSummary summary;
  for (std::uint64_t i = 0; i < trials; ++i) {
    Rng rng = derive_stream(seed, "set-lemma", i);
    const std::size_t n = 1 + rng.below(64);
    const std::size_t count = 2 + rng.below(63);
    const double density = rng.uniform();
    std::vector<std::vector<std::size_t>> sets(count);
    const auto style = rng.below(4);
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t x = 0; x < n; ++x) {
        bool take = rng.bernoulli(density);
        if (style == 1 && s > 0) take = std::binary_search(sets[0].begin(), sets[0].end(), x);  // copies
        if (style == 2) take = x % count == s;                                                   // disjoint
        if (take) sets[s].push_back(x);
      }
    }
    const SetFamily family(n, std::move(sets));
    const auto report = check_set_lemma(family);
    ++summary.instances;
    if (!report.holds) {
      if (summary.violations++ == 0) {
        std::ostringstream os;
        os << "n=" << n << " N=" << count << " t=" << report.average_size << " s=" << report.max_intersection;
        summary.first_violation = os.str();
      }
    }
  }
  return summary;
}

CheckSummary random_mut_lemma_checks(std::uint64_t trials, std::uint64_t seed) {
  CheckSummary summary;
  for (std::uint64_t i = 0; i < trials; ++i) {
    Rng rng = derive_stream(seed, "mut-lemma", i);
    const std::size_t nx = 1 + rng.below(6);
    const std::size_t ny = 1 + rng.below(6);
    std::vector<std::vector<double>> w(nx, std::vector<double>(ny));
    double total = 0.0;
    const bool sparse = rng.bit();
    for (auto& row : w) {
      for (double& v : row) {
        v = (sparse && rng.below(3) == 0) ? 0.0 : -std::log(1.0 - rng.uniform());
        total += v;
      }
    }
    if (total == 0.0) {
      w[0][0] = 1.0;
      total = 1.0;
    }
    for (auto& row : w)
      for (double& v : row) v /= total;
    const JointPmf joint(w);

    // Either random condition sets or the most likely value of A given b.
    const bool greedy = rng.bit();
    std::vector<std::vector<std::size_t>> cond(ny);
    for (std::size_t b = 0; b < ny; ++b) {
      if (greedy) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < nx; ++a)
          if (joint(a, b) > joint(best, b)) best = a;
        cond[b].push_back(best);
      } else {
        for (std::size_t a = 0; a < nx; ++a)
          if (rng.bit()) cond[b].push_back(a);
      }
    }
    const auto report = check_mut_lemma(joint, cond);
    ++summary.instances;
    if (!report.holds) {
      if (summary.violations++ == 0) {
        std::ostringstream os;
        os.precision(17);
        os << "|X|=" << nx << " |Y|=" << ny << " alpha=" << report.alpha << " beta=" << report.beta
           << " info=" << report.info << " joint=";
        for (const auto& row : w) {
          os << '[';
          for (double v : row) os << v << ' ';
          os << ']';
        }
        summary.first_violation = os.str();
      }
    }
  }
  return summary;
}

TailPoint empirical_tails(std::size_t n, double mu, double lambda, std::uint64_t samples, std::uint64_t seed) {
  const double nd = static_cast<double>(n);
  const double hi = (1.0 + lambda) * mu * nd;
  const double lo = (1.0 - lambda) * mu * nd;
  std::uint64_t upper = 0;
  std::uint64_t lower = 0;
  const auto total = static_cast<std::int64_t>(samples);
#pragma omp parallel for schedule(static) reduction(+ : upper, lower)
  for (std::int64_t i = 0; i < total; ++i) {
    Rng rng = derive_stream(seed, "chernoff", static_cast<std::uint64_t>(i));
    std::size_t sum = 0;
    for (std::size_t j = 0; j < n; ++j) sum += rng.bernoulli(mu) ? 1U : 0U;
    if (static_cast<double>(sum) >= hi) ++upper;
    if (static_cast<double>(sum) <= lo) ++lower;
  }
  const double s = static_cast<double>(samples);
  TailPoint p{n, mu, lambda, 0, 0, 0, 0, 0, 0};
  p.upper_empirical = static_cast<double>(upper) / s;
  p.upper_bound = chernoff_upper(n, mu, lambda);
  p.lower_empirical = static_cast<double>(lower) / s;
  p.lower_bound = chernoff_lower(n, mu, std::min(lambda, 1.0));
  // Independent Bernoulli(mu) meet the generalized hypothesis with delta = mu.
  p.generalized_empirical = p.upper_empirical;
  p.generalized_bound = generalized_chernoff(n, mu, lambda);
  return p;
}

std::vector<TailPoint> chernoff_grid(std::uint64_t samples, std::uint64_t seed) {
  std::vector<TailPoint> out;
  std::uint64_t idx = 0;
  for (std::size_t n : {20, 50, 100, 200, 400})
    for (double mu : {0.2, 0.5})
      for (double lambda : {0.25, 0.5}) out.push_back(empirical_tails(n, mu, lambda, samples, splitmix64(seed + idx++)));
  return out;
}

double correlated_tail(std::size_t n, double delta, double lambda, std::uint64_t runs, std::uint64_t seed) {
  const double threshold = (1.0 + lambda) * delta * static_cast<double>(n);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < runs; ++i) {
    Rng rng = derive_stream(seed, "correlated", i);
    const double p = rng.bit() ? delta : delta / 4.0;
    std::size_t sum = 0;
    for (std::size_t j = 0; j < n; ++j) sum += rng.bernoulli(p) ? 1U : 0U;
    if (static_cast<double>(sum) >= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(runs);
}

}  // namespace qmoney::bounds
