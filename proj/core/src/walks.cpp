#include "rwrs/walks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "rwrs/errors.hpp"

namespace rwrs {

namespace {

constexpr double kProbTol = 1e-9;

void check_probs(const std::vector<double>& probs, std::size_t expected_size,
                 const char* what) {
  if (probs.size() != expected_size) {
    throw UsageError(std::string(what) + ": probs size does not match support size");
  }
  double sum = 0;
  for (double p : probs) {
    if (!(p > 0)) throw UsageError(std::string(what) + ": probabilities must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbTol) {
    throw UsageError(std::string(what) + ": probabilities sum to " + std::to_string(sum) +
                     ", expected 1");
  }
}

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw UsageError("dimension " + std::to_string(dim) + " outside supported range [1, " +
                     std::to_string(kMaxDim) + "]");
  }
}

// Rank of the linear span of the step vectors ("truly d-dimensional").
int span_rank(const std::vector<Site>& steps, int dim) {
  std::vector<std::array<double, kMaxDim>> rows;
  for (const Site& s : steps) {
    std::array<double, kMaxDim> v{};
    for (int i = 0; i < dim; ++i) v[i] = static_cast<double>(s[i]);
    for (const auto& r : rows) {
      int pivot = -1;
      for (int i = 0; i < dim; ++i) {
        if (std::abs(r[i]) > 1e-12) { pivot = i; break; }
      }
      if (pivot < 0) continue;
      double f = v[pivot] / r[pivot];
      for (int i = 0; i < dim; ++i) v[i] -= f * r[i];
    }
    double norm = 0;
    for (int i = 0; i < dim; ++i) norm += std::abs(v[i]);
    if (norm > 1e-9) rows.push_back(v);
    if (static_cast<int>(rows.size()) == dim) break;
  }
  return static_cast<int>(rows.size());
}

Site negated(const Site& s, int dim) {
  Site out{};
  for (int i = 0; i < dim; ++i) out[i] = -s[i];
  return out;
}

std::vector<double> cumulative(const std::vector<double>& probs) {
  std::vector<double> cum(probs.size());
  double acc = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cum[i] = acc;
  }
  cum.back() = 1.0;  // guard: next_unit() < 1, scan always terminates
  return cum;
}

}  // namespace

// ---------------------------------------------------------------------------
// Law helpers
// ---------------------------------------------------------------------------

double RenewalFinite::mean() const {
  double m = 0;
  for (std::size_t i = 0; i < support.size(); ++i) m += probs[i] * static_cast<double>(support[i]);
  return m;
}

int dimension(const IncrementLaw& law) {
  return std::visit(
      [](const auto& l) -> int {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, RenewalFinite>) return 1;
        else return l.dim;
      },
      law);
}

bool is_renewal(const IncrementLaw& law) {
  return std::holds_alternative<RenewalFinite>(law);
}

std::string describe(const IncrementLaw& law) {
  std::ostringstream os;
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, RenewalFinite>) {
          os << "renewal_finite{support=[";
          for (std::size_t i = 0; i < l.support.size(); ++i) {
            os << (i ? "," : "") << l.support[i];
          }
          os << "], probs=[";
          for (std::size_t i = 0; i < l.probs.size(); ++i) os << (i ? "," : "") << l.probs[i];
          os << "]}";
        } else if constexpr (std::is_same_v<T, SimpleWalk>) {
          os << "simple{dim=" << l.dim << "}";
        } else if constexpr (std::is_same_v<T, FiniteStepSymmetric>) {
          os << "finite_step_symmetric{dim=" << l.dim << ", steps=" << l.steps.size() << "}";
        } else {
          os << "stable_tail{dim=" << l.dim << ", alpha=" << l.alpha << "}";
        }
      },
      law);
  return os.str();
}

std::string to_string(Theorem t) {
  switch (t) {
    case Theorem::kRenewal: return "renewal";
    case Theorem::kPlanar: return "planar";
    case Theorem::kTransient: return "transient";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

std::vector<HypothesisViolation> validate(const IncrementLaw& law) {
  std::vector<HypothesisViolation> out;
  auto block = [&](std::optional<Theorem> t, std::string msg) {
    out.push_back({t, std::move(msg)});
  };

  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, RenewalFinite>) {
          if (l.support.empty()) {
            block(std::nullopt, "empty support");
            return;
          }
          for (std::int64_t s : l.support) {
            if (s < 1) {
              block(std::nullopt,
                    "support contains " + std::to_string(s) + ", renewal steps must be >= 1");
            }
          }
          std::int64_t g = 0;
          for (std::int64_t s : l.support) g = std::gcd(g, s);
          if (g != 1) {
            block(Theorem::kRenewal, "support gcd=" + std::to_string(g) + ", not aperiodic");
          }
          block(Theorem::kPlanar, "renewal law has dimension 1, planar case requires d=2");
          block(Theorem::kTransient,
                "renewal law satisfies neither d>=3 square-integrable nor stable-tail d>alpha");
        } else if constexpr (std::is_same_v<T, SimpleWalk>) {
          block(Theorem::kRenewal, "simple walk steps are not a subset of N*");
          if (l.dim != 2) {
            block(Theorem::kPlanar,
                  "dimension d=" + std::to_string(l.dim) + ", planar case requires d=2");
          }
          if (l.dim < 3) {
            block(Theorem::kTransient,
                  "simple walk with d=" + std::to_string(l.dim) +
                      " is recurrent; transient case requires d>=3");
          }
        } else if constexpr (std::is_same_v<T, FiniteStepSymmetric>) {
          if (l.steps.empty()) {
            block(std::nullopt, "empty step set");
            return;
          }
          // aggregate probabilities per step, then require p(s) == p(-s)
          std::map<Site, double> mass;
          for (std::size_t i = 0; i < l.steps.size(); ++i) {
            Site key{};
            for (int d = 0; d < l.dim; ++d) key[d] = l.steps[i][d];
            mass[key] += l.probs[i];
          }
          bool symmetric = true;
          for (const auto& [s, p] : mass) {
            auto it = mass.find(negated(s, l.dim));
            if (it == mass.end() || std::abs(it->second - p) > kProbTol) {
              symmetric = false;
              break;
            }
          }
          if (!symmetric) {
            block(Theorem::kPlanar, "law is not symmetric (some step s lacks -s at equal probability)");
            block(Theorem::kTransient, "law is not symmetric");
          }
          int rank = span_rank(l.steps, l.dim);
          if (rank < l.dim) {
            block(std::nullopt, "support spans only " + std::to_string(rank) + " of " +
                                    std::to_string(l.dim) + " dimensions, walk is not truly d-dimensional");
          } else {
            SquareMatrix sigma = covariance(IncrementLaw(l));
            if (sigma.determinant() <= 0) {
              block(Theorem::kPlanar, "covariance matrix is singular");
            }
          }
          block(Theorem::kRenewal, "symmetric steps are not a subset of N*");
          if (l.dim != 2) {
            block(Theorem::kPlanar,
                  "dimension d=" + std::to_string(l.dim) + ", planar case requires d=2");
          }
          if (l.dim < 3) {
            block(Theorem::kTransient,
                  "finite-step symmetric walk with d=" + std::to_string(l.dim) +
                      " is recurrent; transient case requires d>=3");
          }
        } else {  // StableTail
          if (!(l.alpha > 0 && l.alpha < 2)) {
            block(std::nullopt, "alpha=" + std::to_string(l.alpha) + " outside (0,2)");
          }
          block(Theorem::kRenewal, "stable-tail steps are not a subset of N*");
          block(Theorem::kPlanar, "infinite-variance law has no finite covariance matrix");
          if (!(static_cast<double>(l.dim) > l.alpha)) {
            block(Theorem::kTransient, "stable case requires d>alpha (d=" + std::to_string(l.dim) +
                                           ", alpha=" + std::to_string(l.alpha) + ")");
          }
        }
      },
      law);
  return out;
}

bool admissible(const IncrementLaw& law, Theorem t) {
  for (const HypothesisViolation& v : validate(law)) {
    if (!v.blocks.has_value() || *v.blocks == t) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// covariance
// ---------------------------------------------------------------------------

double SquareMatrix::determinant() const {
  std::array<double, kMaxDim * kMaxDim> m = a;
  auto at_ = [&](int i, int j) -> double& { return m[static_cast<std::size_t>(i) * kMaxDim + j]; };
  double det = 1.0;
  for (int c = 0; c < dim; ++c) {
    int pivot = c;
    for (int r = c + 1; r < dim; ++r) {
      if (std::abs(at_(r, c)) > std::abs(at_(pivot, c))) pivot = r;
    }
    if (std::abs(at_(pivot, c)) < 1e-300) return 0.0;
    if (pivot != c) {
      for (int j = 0; j < dim; ++j) std::swap(at_(pivot, j), at_(c, j));
      det = -det;
    }
    det *= at_(c, c);
    for (int r = c + 1; r < dim; ++r) {
      double f = at_(r, c) / at_(c, c);
      for (int j = c; j < dim; ++j) at_(r, j) -= f * at_(c, j);
    }
  }
  return det;
}

SquareMatrix SquareMatrix::identity(int dim, double scale) {
  SquareMatrix m;
  m.dim = dim;
  for (int i = 0; i < dim; ++i) m.at(i, i) = scale;
  return m;
}

SquareMatrix covariance(const IncrementLaw& law) {
  return std::visit(
      [](const auto& l) -> SquareMatrix {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, RenewalFinite>) {
          SquareMatrix m;
          m.dim = 1;
          double s2 = 0;
          for (std::size_t i = 0; i < l.support.size(); ++i) {
            s2 += l.probs[i] * static_cast<double>(l.support[i]) * static_cast<double>(l.support[i]);
          }
          m.at(0, 0) = s2;
          return m;
        } else if constexpr (std::is_same_v<T, SimpleWalk>) {
          return SquareMatrix::identity(l.dim, 1.0 / static_cast<double>(l.dim));
        } else if constexpr (std::is_same_v<T, FiniteStepSymmetric>) {
          SquareMatrix m;
          m.dim = l.dim;
          for (std::size_t k = 0; k < l.steps.size(); ++k) {
            for (int i = 0; i < l.dim; ++i) {
              for (int j = 0; j < l.dim; ++j) {
                m.at(i, j) += l.probs[k] * static_cast<double>(l.steps[k][i]) *
                              static_cast<double>(l.steps[k][j]);
              }
            }
          }
          return m;
        } else {
          throw UsageError("covariance is unsupported for infinite-support laws (stable tail)");
        }
      },
      law);
}

// ---------------------------------------------------------------------------
// WalkModel
// ---------------------------------------------------------------------------

WalkModel::WalkModel(IncrementLaw law) : law_(std::move(law)) {
  dim_ = dimension(law_);
  check_dim(dim_);
  renewal_ = is_renewal(law_);

  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, RenewalFinite>) {
          if (l.support.empty()) throw UsageError("renewal law: empty support");
          check_probs(l.probs, l.support.size(), "renewal law");
          for (std::int64_t s : l.support) {
            if (s < 1) throw UsageError("renewal law: steps must be positive integers");
          }
          std::vector<std::int64_t> sorted = l.support;
          std::sort(sorted.begin(), sorted.end());
          if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw UsageError("renewal law: duplicate support values (merge their probabilities)");
          }
          detail::FiniteStepKernel k;
          k.dim = 1;
          k.renewal = true;
          for (std::int64_t s : l.support) {
            Site site{};
            site[0] = s;
            k.steps.push_back(site);
          }
          k.cum = cumulative(l.probs);
          kernel_ = std::move(k);
        } else if constexpr (std::is_same_v<T, SimpleWalk>) {
          kernel_ = detail::SimpleWalkKernel{l.dim};
        } else if constexpr (std::is_same_v<T, FiniteStepSymmetric>) {
          if (l.steps.empty()) throw UsageError("finite-step law: empty step set");
          check_probs(l.probs, l.steps.size(), "finite-step law");
          detail::FiniteStepKernel k;
          k.dim = l.dim;
          k.steps = l.steps;
          k.cum = cumulative(l.probs);
          kernel_ = std::move(k);
        } else {  // StableTail
          if (!(l.alpha > 0 && l.alpha < 2)) {
            throw UsageError("stable-tail law: alpha must lie in (0,2)");
          }
          detail::StableKernel k;
          k.dim = l.dim;
          k.table = detail::StableMagnitudeTable::build(l.alpha);
          kernel_ = std::move(k);
        }
      },
      law_);
}

std::vector<Site> sample_path(const WalkModel& model, std::int64_t n, RngStream stream) {
  std::vector<Site> positions;
  positions.reserve(static_cast<std::size_t>(n));
  Site pos{};
  model.with_kernel([&](const auto& kernel) {
    for (std::int64_t k = 0; k < n; ++k) {
      kernel.advance(stream, pos);
      positions.push_back(pos);
    }
  });
  return positions;
}

// ---------------------------------------------------------------------------
// Stable magnitude sampler
// ---------------------------------------------------------------------------

namespace detail {

std::shared_ptr<const StableMagnitudeTable> StableMagnitudeTable::build(double alpha,
                                                                        std::int64_t cap) {
  if (!(alpha > 0 && alpha < 2)) throw UsageError("stable magnitude: alpha outside (0,2)");
  if (cap < kHeadSize) throw UsageError("stable magnitude: cap below head size");

  auto t = std::make_shared<StableMagnitudeTable>();
  t->alpha = alpha;
  t->inv_alpha = 1.0 / alpha;
  t->cap = cap;

  const double zeta = std::riemann_zeta(1.0 + alpha);
  t->cum.resize(static_cast<std::size_t>(cap));
  long double acc = 0.0L;
  for (std::int64_t k = 1; k <= cap; ++k) {
    acc += static_cast<long double>(std::pow(static_cast<double>(k), -(1.0 + alpha)));
    t->cum[static_cast<std::size_t>(k - 1)] = static_cast<double>(acc / zeta);
  }
  t->head_mass = t->cum[kHeadSize - 1];
  t->cap_mass = t->cum.back();

  // Vose alias table over the head, conditioned on magnitude <= kHeadSize.
  std::vector<double> scaled(kHeadSize);
  for (int k = 1; k <= kHeadSize; ++k) {
    double p = (t->cum[static_cast<std::size_t>(k - 1)] -
                (k >= 2 ? t->cum[static_cast<std::size_t>(k - 2)] : 0.0)) /
               t->head_mass;
    scaled[static_cast<std::size_t>(k - 1)] = p * kHeadSize;
  }
  t->alias_cut.assign(kHeadSize, 1.0);
  t->alias_val.assign(kHeadSize, 0);
  std::vector<std::int32_t> small, large;
  for (std::int32_t i = 0; i < kHeadSize; ++i) {
    (scaled[static_cast<std::size_t>(i)] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    std::int32_t s = small.back();
    small.pop_back();
    std::int32_t l = large.back();
    t->alias_cut[static_cast<std::size_t>(s)] = scaled[static_cast<std::size_t>(s)];
    t->alias_val[static_cast<std::size_t>(s)] = l + 1;  // magnitudes are 1-based
    scaled[static_cast<std::size_t>(l)] -= 1.0 - scaled[static_cast<std::size_t>(s)];
    if (scaled[static_cast<std::size_t>(l)] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::int32_t i : small) {
    t->alias_cut[static_cast<std::size_t>(i)] = 1.0;
    t->alias_val[static_cast<std::size_t>(i)] = i + 1;
  }
  for (std::int32_t i : large) {
    t->alias_cut[static_cast<std::size_t>(i)] = 1.0;
    t->alias_val[static_cast<std::size_t>(i)] = i + 1;
  }
  return t;
}

std::int64_t StableMagnitudeTable::sample(RngStream& g) const {
  double u = g.next_unit();
  if (u < head_mass) {
    double v = u / head_mass * kHeadSize;
    auto slot = static_cast<std::int64_t>(v);
    if (slot >= kHeadSize) slot = kHeadSize - 1;
    double frac = v - static_cast<double>(slot);
    if (frac < alias_cut[static_cast<std::size_t>(slot)]) return slot + 1;
    return alias_val[static_cast<std::size_t>(slot)];
  }
  if (u < cap_mass) {
    auto it = std::upper_bound(cum.begin() + (kHeadSize - 1), cum.end(), u);
    return static_cast<std::int64_t>(it - cum.begin()) + 1;
  }
  // Beyond the cap: Pareto-style continuation with the same exponent.
  double v = (1.0 - u) / (1.0 - cap_mass);
  if (v <= 0) v = std::numeric_limits<double>::min();
  double x = static_cast<double>(cap) * std::pow(v, -inv_alpha);
  constexpr double kMagLimit = 1e17;  // keeps positions far from int64 overflow
  if (x > kMagLimit) x = kMagLimit;
  return static_cast<std::int64_t>(x) + 1;
}

double StableMagnitudeTable::tail_probability(std::int64_t t) const {
  if (t <= 0) return 1.0;
  if (t > cap) throw UsageError("tail_probability beyond table cap");
  return 1.0 - cum[static_cast<std::size_t>(t - 1)];
}

}  // namespace detail

}  // namespace rwrs
