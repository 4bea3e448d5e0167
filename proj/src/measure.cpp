#include "packdim/measure.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "packdim/error.hpp"
#include "packdim/text.hpp"

namespace packdim {

namespace {

constexpr double kWeightSumTolerance = 1e-9;
constexpr double kMergeResolution = 1e12;

void check_cap(std::size_t count, std::size_t cap) {
  if (count > cap) {
    throw CapacityError("measure would have " + std::to_string(count) + " atoms, cap is " +
                        std::to_string(cap));
  }
}

// Saturating k^depth so the cap check cannot overflow.
std::size_t saturating_power(std::size_t base, int exponent) {
  std::size_t result = 1;
  for (int i = 0; i < exponent; ++i) {
    if (base != 0 && result > std::numeric_limits<std::size_t>::max() / base) {
      return std::numeric_limits<std::size_t>::max();
    }
    result *= base;
  }
  return result;
}

struct KeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& key) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : key) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

PointMeasure::PointMeasure(std::size_t ambient_dim, std::vector<double> coords,
                           std::vector<double> weights, std::map<std::string, double> meta)
    : dim_(ambient_dim), coords_(std::move(coords)), weights_(std::move(weights)), meta_(std::move(meta)) {
  if (dim_ == 0) throw ParameterError("ambient dimension must be >= 1");
  if (weights_.empty()) throw ParameterError("measure needs at least one atom");
  if (coords_.size() != dim_ * weights_.size()) {
    throw ParameterError("coordinate array does not match ambient dimension x atom count");
  }
  for (double c : coords_) {
    if (!(c >= 0.0 && c <= 1.0)) throw ParameterError("atom coordinate outside [0,1]");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ParameterError("atom weight must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    throw ParameterError("weights sum to " + format_double(total) + ", expected 1");
  }
}

PointMeasure PointMeasure::with_meta(std::map<std::string, double> meta) const {
  PointMeasure copy = *this;
  copy.meta_ = std::move(meta);
  return copy;
}

PointMeasure normalize(std::size_t ambient_dim, std::vector<double> coords, std::vector<double> weights,
                       std::map<std::string, double> meta) {
  if (ambient_dim == 0 || weights.empty() || coords.size() != ambient_dim * weights.size()) {
    throw ParameterError("normalize: inconsistent atom arrays");
  }
  std::unordered_map<std::vector<std::int64_t>, std::size_t, KeyHash> slot;
  slot.reserve(weights.size());
  std::vector<double> out_coords;
  std::vector<double> out_weights;
  out_coords.reserve(coords.size());
  out_weights.reserve(weights.size());
  std::vector<std::int64_t> key(ambient_dim);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) throw ParameterError("normalize: weights must be positive");
    for (std::size_t k = 0; k < ambient_dim; ++k) {
      key[k] = std::llround(coords[i * ambient_dim + k] * kMergeResolution);
    }
    auto [it, inserted] = slot.try_emplace(key, out_weights.size());
    if (inserted) {
      out_coords.insert(out_coords.end(), coords.begin() + static_cast<std::ptrdiff_t>(i * ambient_dim),
                        coords.begin() + static_cast<std::ptrdiff_t>((i + 1) * ambient_dim));
      out_weights.push_back(weights[i]);
    } else {
      out_weights[it->second] += weights[i];
    }
  }
  const double total = std::accumulate(out_weights.begin(), out_weights.end(), 0.0);
  if (total != 1.0) {
    for (double& w : out_weights) w /= total;
  }
  return PointMeasure(ambient_dim, std::move(out_coords), std::move(out_weights), std::move(meta));
}

PointMeasure normalize(const PointMeasure& mu) {
  return normalize(mu.ambient_dim(), {mu.coords().begin(), mu.coords().end()},
                   {mu.weights().begin(), mu.weights().end()}, mu.meta());
}

IfsSystem::IfsSystem(std::size_t ambient_dim, std::vector<Similarity> maps, std::vector<double> probabilities)
    : dim_(ambient_dim), maps_(std::move(maps)), probabilities_(std::move(probabilities)) {
  if (dim_ == 0) throw ParameterError("IFS ambient dimension must be >= 1");
  if (maps_.empty()) throw ParameterError("IFS needs at least one map");
  if (probabilities_.size() != maps_.size()) throw ParameterError("IFS needs one probability per map");
  for (const auto& m : maps_) {
    if (!(m.ratio > 0.0 && m.ratio < 1.0)) {
      throw ParameterError("IFS ratio " + format_double(m.ratio) + " outside (0,1)");
    }
    if (m.translation.size() != dim_) throw ParameterError("IFS translation has wrong dimension");
    for (double b : m.translation) {
      if (b < 0.0 || b + m.ratio > 1.0 + 1e-12) {
        throw ParameterError("IFS map does not send [0,1]^n into itself");
      }
    }
  }
  double total = 0.0;
  for (double p : probabilities_) {
    if (!(p > 0.0)) throw ParameterError("IFS probabilities must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) throw ParameterError("IFS probabilities must sum to 1");
}

IfsSystem IfsSystem::uniform(std::size_t ambient_dim, std::vector<Similarity> maps) {
  const std::size_t k = maps.size();
  return IfsSystem(ambient_dim, std::move(maps), std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

IfsSystem IfsSystem::cantor(double ratio) {
  if (!(ratio > 0.0 && ratio <= 0.5)) throw ParameterError("Cantor ratio must lie in (0, 1/2]");
  return uniform(1, {{ratio, {0.0}}, {ratio, {1.0 - ratio}}});
}

double IfsSystem::similarity_dimension() const {
  if (maps_.size() == 1) return 0.0;
  auto moment = [&](double s) {
    double sum = 0.0;
    for (const auto& m : maps_) sum += std::pow(m.ratio, s);
    return sum;
  };
  bool equal_ratios = std::all_of(maps_.begin(), maps_.end(),
                                  [&](const Similarity& m) { return m.ratio == maps_.front().ratio; });
  if (equal_ratios) {
    return std::log(static_cast<double>(maps_.size())) / std::log(1.0 / maps_.front().ratio);
  }
  // sum r_i^s is strictly decreasing from k at s = 0.
  double lo = 0.0;
  double hi = 1.0;
  while (moment(hi) > 1.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (moment(mid) > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

PointMeasure make_ifs_measure(const IfsSystem& system, int depth, std::size_t atom_cap) {
  if (depth < 1) throw ParameterError("IFS depth must be >= 1");
  const std::size_t n = system.ambient_dim();
  const std::size_t k = system.maps().size();
  check_cap(saturating_power(k, depth), atom_cap);

  std::vector<double> coords(n, 0.0);
  std::vector<double> weights{1.0};
  for (int level = 0; level < depth; ++level) {
    std::vector<double> next_coords;
    std::vector<double> next_weights;
    next_coords.reserve(coords.size() * k);
    next_weights.reserve(weights.size() * k);
    for (std::size_t m = 0; m < k; ++m) {
      const auto& map = system.maps()[m];
      for (std::size_t a = 0; a < weights.size(); ++a) {
        for (std::size_t c = 0; c < n; ++c) {
          next_coords.push_back(map.ratio * coords[a * n + c] + map.translation[c]);
        }
        next_weights.push_back(weights[a] * system.probabilities()[m]);
      }
    }
    coords = std::move(next_coords);
    weights = std::move(next_weights);
  }
  // Sort anchors lexicographically so atom order does not depend on map order.
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(coords.begin() + a * n, coords.begin() + (a + 1) * n,
                                        coords.begin() + b * n, coords.begin() + (b + 1) * n);
  });
  std::vector<double> sorted_coords;
  std::vector<double> sorted_weights;
  sorted_coords.reserve(coords.size());
  sorted_weights.reserve(weights.size());
  for (auto i : order) {
    for (std::size_t c = 0; c < n; ++c) sorted_coords.push_back(std::min(1.0, coords[i * n + c]));
    sorted_weights.push_back(weights[i]);
  }
  return normalize(n, std::move(sorted_coords), std::move(sorted_weights),
                   {{"similarity_dim", system.similarity_dimension()}});
}

PointMeasure make_product_measure(const PointMeasure& a, const PointMeasure& b, std::size_t atom_cap) {
  const std::size_t na = a.ambient_dim();
  const std::size_t nb = b.ambient_dim();
  if (a.size() != 0 && b.size() > atom_cap / a.size()) {
    throw CapacityError("product measure exceeds atom cap");
  }
  check_cap(a.size() * b.size(), atom_cap);
  std::vector<double> coords;
  std::vector<double> weights;
  coords.reserve(a.size() * b.size() * (na + nb));
  weights.reserve(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      auto x = a.atom(i);
      auto y = b.atom(j);
      coords.insert(coords.end(), x.begin(), x.end());
      coords.insert(coords.end(), y.begin(), y.end());
      weights.push_back(a.weight(i) * b.weight(j));
    }
  }
  std::map<std::string, double> meta;
  auto ma = a.meta().find("similarity_dim");
  auto mb = b.meta().find("similarity_dim");
  if (ma != a.meta().end() && mb != b.meta().end()) meta["similarity_dim"] = ma->second + mb->second;
  return normalize(na + nb, std::move(coords), std::move(weights), std::move(meta));
}

PointMeasure make_sparse_scale_measure(double lower, double upper, int depth, std::uint64_t seed,
                                       std::size_t atom_cap) {
  if (!(lower >= 0.0 && lower <= upper && upper <= 1.0)) {
    throw ParameterError("sparse-scale measure needs 0 <= h <= p <= 1 for binary branching on [0,1]");
  }
  if (depth < 1) throw ParameterError("sparse-scale depth must be >= 1");
  constexpr double kFirstBlockOctaves = 10.0;
  constexpr double kBlockGrowth = 1.5;

  std::mt19937_64 rng(seed);
  std::vector<double> offsets{0.0};
  double cell = 1.0;
  double octave = 0.0;
  double block_end = kFirstBlockOctaves;
  double block_len = kFirstBlockOctaves;
  bool high_block = true;
  std::size_t binary_levels = 0;

  for (int level = 0; level < depth; ++level) {
    while (octave >= block_end) {
      block_len *= kBlockGrowth;
      block_end += block_len;
      high_block = !high_block;
    }
    const double exponent = (lower == upper || high_block) ? upper : lower;
    if (exponent > 0.0) {
      const double ratio = std::exp2(-1.0 / exponent);
      ++binary_levels;
      check_cap(std::size_t{1} << std::min<std::size_t>(binary_levels, 63), atom_cap);
      std::vector<double> next;
      next.reserve(offsets.size() * 2);
      for (double o : offsets) {
        next.push_back(o);
        next.push_back(o + cell * (1.0 - ratio));
      }
      offsets = std::move(next);
      cell *= ratio;
      octave += 1.0 / exponent;
    } else {
      const double ratio = 0.5;
      const bool right = (rng() & 1u) != 0;
      for (double& o : offsets) o += right ? cell * (1.0 - ratio) : 0.0;
      cell *= ratio;
      octave += 1.0;
    }
  }
  std::vector<double> weights(offsets.size(), 1.0 / static_cast<double>(offsets.size()));
  for (double& o : offsets) o = std::min(o, 1.0);
  return normalize(1, std::move(offsets), std::move(weights), {{"target_h", lower}, {"target_p", upper}});
}

PointMeasure make_grid_measure(std::size_t ambient_dim, std::size_t per_axis, std::size_t atom_cap) {
  if (ambient_dim == 0 || per_axis == 0) throw ParameterError("grid needs dimension and size >= 1");
  const std::size_t count = saturating_power(per_axis, static_cast<int>(ambient_dim));
  check_cap(count, atom_cap);
  std::vector<double> coords;
  coords.reserve(count * ambient_dim);
  std::vector<std::size_t> index(ambient_dim, 0);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t c = 0; c < ambient_dim; ++c) {
      coords.push_back(static_cast<double>(index[c]) / static_cast<double>(per_axis));
    }
    for (std::size_t c = ambient_dim; c-- > 0;) {
      if (++index[c] < per_axis) break;
      index[c] = 0;
    }
  }
  std::vector<double> weights(count, 1.0 / static_cast<double>(count));
  return PointMeasure(ambient_dim, std::move(coords), std::move(weights),
                      {{"similarity_dim", static_cast<double>(ambient_dim)}});
}

PointMeasure make_dirac(std::vector<double> point) {
  const std::size_t n = point.size();
  return PointMeasure(n, std::move(point), {1.0}, {{"similarity_dim", 0.0}});
}

std::filesystem::path meta_path(const std::filesystem::path& measure_path) {
  auto p = measure_path;
  p += ".meta.json";
  return p;
}

void save_measure(const PointMeasure& mu, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "n=" << mu.ambient_dim() << " N=" << mu.size() << '\n';
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (double c : mu.atom(i)) out << format_double(c) << ' ';
    out << format_double(mu.weight(i)) << '\n';
  }
  if (!out) throw FormatError("write failed for " + path.string());
  const auto sidecar = meta_path(path);
  if (!mu.meta().empty()) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : mu.meta()) j[k] = v;
    std::ofstream meta(sidecar, std::ios::binary);
    meta << j.dump(2) << '\n';
  } else {
    std::error_code ec;
    std::filesystem::remove(sidecar, ec);
  }
}

PointMeasure load_measure(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open measure file " + path.string());
  std::string header;
  // leading '#' lines carry provenance and are skipped
  do {
    if (!std::getline(in, header)) throw FormatError("empty measure file " + path.string());
  } while (header.rfind('#', 0) == 0);
  std::size_t n = 0;
  std::size_t count = 0;
  {
    std::istringstream hs(header);
    std::string a;
    std::string b;
    hs >> a >> b;
    if (a.rfind("n=", 0) != 0 || b.rfind("N=", 0) != 0 || !parse_size(a.substr(2), n) ||
        !parse_size(b.substr(2), count) || n == 0 || count == 0) {
      throw FormatError("bad header line '" + header + "', expected 'n=<int> N=<int>'");
    }
  }
  std::vector<double> coords;
  std::vector<double> weights;
  coords.reserve(n * count);
  weights.reserve(count);
  std::string line;
  std::vector<double> fields;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) {
      throw FormatError("measure file ends after " + std::to_string(i) + " of " + std::to_string(count) + " atoms");
    }
    if (!parse_doubles(line, fields)) throw FormatError("unparsable atom line " + std::to_string(i + 2));
    if (fields.size() != n + 1) {
      throw FormatError("dimension mismatch on line " + std::to_string(i + 2) + ": expected " +
                        std::to_string(n + 1) + " fields, got " + std::to_string(fields.size()));
    }
    coords.insert(coords.end(), fields.begin(), fields.end() - 1);
    weights.push_back(fields.back());
  }
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) throw FormatError("trailing data after atoms");
  }
  std::map<std::string, double> meta;
  const auto sidecar = meta_path(path);
  if (std::filesystem::exists(sidecar)) {
    std::ifstream ms(sidecar);
    try {
      auto j = nlohmann::json::parse(ms);
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.value().is_number()) meta[it.key()] = it.value().get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bad metadata sidecar " + sidecar.string() + ": " + e.what());
    }
  }
  try {
    return PointMeasure(n, std::move(coords), std::move(weights), std::move(meta));
  } catch (const ParameterError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace packdim
