#include "rwrs/scenery.hpp"

#include <cmath>
#include <ostream>

#include "rwrs/errors.hpp"
#include "rwrs/rng.hpp"

namespace rwrs {

namespace {

constexpr std::uint64_t kSceneryDomainTag = 0x5CE4E5B9D1CE4E5Bull;
constexpr double kTwoPi = 6.283185307179586476925287;
constexpr double kTwoSqrt3 = 3.4641016151377545870548926;  // 2 * sqrt(3)

inline std::uint64_t site_state(std::uint64_t seed, std::span<const std::int64_t> site) {
  std::uint64_t h = mix64(seed ^ kSceneryDomainTag);
  for (std::int64_t c : site) {
    h = mix64(h ^ (zigzag(c) + kGolden));
  }
  return h;
}

inline std::uint64_t site_word(std::uint64_t state, std::uint64_t j) {
  return mix64(state + (j + 1) * kGolden);
}

inline double draw(SceneryLaw law, std::uint64_t state) {
  switch (law) {
    case SceneryLaw::kRademacher:
      return (site_word(state, 0) >> 63) ? 1.0 : -1.0;
    case SceneryLaw::kStandardGaussian: {
      double u1 = unit_open_from_bits(site_word(state, 0));
      double u2 = unit_from_bits(site_word(state, 1));
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }
    case SceneryLaw::kCenteredUniform:
      return (unit_from_bits(site_word(state, 0)) - 0.5) * kTwoSqrt3;
  }
  throw UsageError("unknown scenery law");
}

}  // namespace

std::string to_string(SceneryLaw law) {
  switch (law) {
    case SceneryLaw::kRademacher: return "rademacher";
    case SceneryLaw::kStandardGaussian: return "standard_gaussian";
    case SceneryLaw::kCenteredUniform: return "centered_uniform";
  }
  return "unknown";
}

SceneryLaw scenery_law_from_string(const std::string& name) {
  if (name == "rademacher") return SceneryLaw::kRademacher;
  if (name == "standard_gaussian") return SceneryLaw::kStandardGaussian;
  if (name == "centered_uniform") return SceneryLaw::kCenteredUniform;
  throw UsageError("unknown scenery law '" + name +
                   "' (expected rademacher, standard_gaussian or centered_uniform)");
}

double SiteField::eval(std::span<const std::int64_t> site) const {
  if (site.size() != static_cast<std::size_t>(dim)) {
    throw UsageError("scenery evaluated with " + std::to_string(site.size()) +
                     " coordinates, field dimension is " + std::to_string(dim));
  }
  return draw(law, site_state(seed, site));
}

std::vector<double> SiteField::eval_batch(std::span<const Site> sites) const {
  std::vector<double> out;
  out.reserve(sites.size());
  for (const Site& s : sites) out.push_back(eval(s));
  return out;
}

void dump_window(const SiteField& field, const Site& lo, const Site& hi, std::ostream& out) {
  for (int i = 0; i < field.dim; ++i) {
    if (lo[i] > hi[i]) throw UsageError("dump_window: lo > hi on axis " + std::to_string(i));
  }
  for (int i = 0; i < field.dim; ++i) out << "x" << i << ",";
  out << "value\n";

  Site cur = lo;
  while (true) {
    for (int i = 0; i < field.dim; ++i) out << cur[i] << ",";
    out << field.eval(cur) << "\n";
    int axis = field.dim - 1;
    while (axis >= 0) {
      if (++cur[axis] <= hi[axis]) break;
      cur[axis] = lo[axis];
      --axis;
    }
    if (axis < 0) break;
  }
}

}  // namespace rwrs
