#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rwrs/lattice.hpp"
#include "rwrs/rng.hpp"

namespace rwrs {

// ---------------------------------------------------------------------------
// Increment laws
// ---------------------------------------------------------------------------

// d=1 walk with positive integer steps; strictly increasing, so every site is
// visited at most once.
struct RenewalFinite {
  std::vector<std::int64_t> support;
  std::vector<double> probs;

  double mean() const;
};

// Nearest-neighbour walk on Z^d: steps +-e_i with probability 1/(2d).
struct SimpleWalk {
  int dim = 3;
};

// Finite-step walk, intended symmetric (law invariant under negation).
struct FiniteStepSymmetric {
  int dim = 2;
  std::vector<Site> steps;   // only the first `dim` coordinates are used
  std::vector<double> probs;
};

// Symmetric heavy-tailed walk: P(X = +-k e_i) proportional to k^-(1+alpha),
// k >= 1, axis i <= d. Lies in the domain of attraction of a strictly stable
// law of index alpha.
struct StableTail {
  int dim = 1;
  double alpha = 0.8;
};

using IncrementLaw = std::variant<RenewalFinite, SimpleWalk, FiniteStepSymmetric, StableTail>;

int dimension(const IncrementLaw& law);
bool is_renewal(const IncrementLaw& law);
std::string describe(const IncrementLaw& law);

// ---------------------------------------------------------------------------
// Hypothesis validation
// ---------------------------------------------------------------------------

enum class Theorem { kRenewal, kPlanar, kTransient };

std::string to_string(Theorem t);

struct HypothesisViolation {
  // Theorem whose hypotheses the condition violates; empty for structural
  // problems that invalidate the law outright.
  std::optional<Theorem> blocks;
  std::string message;
};

// Checks every hypothesis of all three limit theorems against the law and
// returns the violated ones. Empty result means the law is admissible for
// every theorem (which no single law is; query per theorem via admissible()).
std::vector<HypothesisViolation> validate(const IncrementLaw& law);

bool admissible(const IncrementLaw& law, Theorem t);

// ---------------------------------------------------------------------------
// Covariance
// ---------------------------------------------------------------------------

struct SquareMatrix {
  int dim = 0;
  std::array<double, kMaxDim * kMaxDim> a{};

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * kMaxDim + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * kMaxDim + j]; }
  double determinant() const;
  static SquareMatrix identity(int dim, double scale = 1.0);
};

// Exact second-moment matrix sum_s p_s s s^T (the covariance for mean-zero
// laws). Throws UsageError for infinite-support laws.
SquareMatrix covariance(const IncrementLaw& law);

// ---------------------------------------------------------------------------
// Sampling kernels
// ---------------------------------------------------------------------------
// WalkModel is the compiled, immutable form of a law: sampling tables are
// built once and shared (the stable-tail cumulative table is large). Hot
// loops dispatch once via with_kernel() and then run a fully inlined
// per-variant loop body.

namespace detail {

struct FiniteStepKernel {
  int dim = 1;
  bool renewal = false;
  std::vector<Site> steps;
  std::vector<double> cum;  // cum.back() == 1.0

  std::size_t draw_index(RngStream& g) const {
    double u = g.next_unit();
    std::size_t i = 0;
    while (u >= cum[i]) ++i;
    return i;
  }
  void advance(RngStream& g, Site& pos) const {
    const Site& s = steps[draw_index(g)];
    for (int i = 0; i < dim; ++i) pos[i] += s[i];
  }
  void step(RngStream& g, Site& out) const {
    out = steps[draw_index(g)];
  }
};

struct SimpleWalkKernel {
  int dim = 3;

  void advance(RngStream& g, Site& pos) const {
    std::uint64_t r = g.next_below(static_cast<std::uint64_t>(2 * dim));
    pos[r >> 1] += (r & 1) ? 1 : -1;
  }
  void step(RngStream& g, Site& out) const {
    out = Site{};
    std::uint64_t r = g.next_below(static_cast<std::uint64_t>(2 * dim));
    out[r >> 1] = (r & 1) ? 1 : -1;
  }
};

// Exact magnitude sampler for the stable-tail law. Head (k <= kHeadSize) via
// a Vose alias table, mid-range via binary search in the exact cumulative
// table up to the cap K = 1e7, and an analytic Pareto-style sampler beyond
// the cap so the tail exponent is never truncated.
struct StableMagnitudeTable {
  double alpha = 0;
  double inv_alpha = 0;
  std::int64_t cap = 0;
  double head_mass = 0;
  double cap_mass = 0;
  std::vector<double> alias_cut;        // head, conditioned on k <= head size
  std::vector<std::int32_t> alias_val;
  std::vector<double> cum;              // cum[k-1] = P(magnitude <= k), k <= cap

  static constexpr int kHeadSize = 2048;
  static constexpr std::int64_t kDefaultCap = 10'000'000;

  static std::shared_ptr<const StableMagnitudeTable> build(double alpha,
                                                           std::int64_t cap = kDefaultCap);

  std::int64_t sample(RngStream& g) const;

  // Exact normalized tail P(magnitude > t); the normalizer is
  // zeta(1 + alpha). Valid for 0 <= t <= cap.
  double tail_probability(std::int64_t t) const;
};

struct StableKernel {
  int dim = 1;
  std::shared_ptr<const StableMagnitudeTable> table;

  void advance(RngStream& g, Site& pos) const {
    std::uint64_t r = g.next_below(static_cast<std::uint64_t>(2 * dim));
    std::int64_t m = table->sample(g);
    pos[r >> 1] += (r & 1) ? m : -m;
  }
  void step(RngStream& g, Site& out) const {
    out = Site{};
    std::uint64_t r = g.next_below(static_cast<std::uint64_t>(2 * dim));
    std::int64_t m = table->sample(g);
    out[r >> 1] = (r & 1) ? m : -m;
  }
};

using Kernel = std::variant<FiniteStepKernel, SimpleWalkKernel, StableKernel>;

}  // namespace detail

class WalkModel {
 public:
  // Throws UsageError on structurally invalid laws (bad probabilities, empty
  // support, alpha outside (0,2), unsupported dimension). Theorem-hypothesis
  // failures are validate()'s business, not construction errors.
  explicit WalkModel(IncrementLaw law);

  const IncrementLaw& law() const { return law_; }
  int dim() const { return dim_; }
  bool renewal() const { return renewal_; }

  template <class F>
  decltype(auto) with_kernel(F&& f) const {
    return std::visit(std::forward<F>(f), kernel_);
  }

  // One increment (convenience / tests; hot loops use with_kernel).
  Site sample_increment(RngStream& g) const {
    Site s{};
    with_kernel([&](const auto& k) { k.step(g, s); });
    return s;
  }

 private:
  IncrementLaw law_;
  int dim_ = 1;
  bool renewal_ = false;
  detail::Kernel kernel_;
};

// Materialized positions S_1..S_n (tests and small horizons; experiments
// stream increments instead).
std::vector<Site> sample_path(const WalkModel& model, std::int64_t n, RngStream stream);

}  // namespace rwrs
