#include "packdim/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "packdim/error.hpp"
#include "packdim/kernel.hpp"
#include "packdim/text.hpp"

namespace packdim {

namespace {

using Cube = std::vector<std::uint64_t>;

std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

bool lex_less(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::vector<Cube> unflatten(const std::vector<std::uint64_t>& flat, std::size_t n) {
  std::vector<Cube> out(flat.size() / n);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].assign(flat.begin() + i * n, flat.begin() + (i + 1) * n);
  return out;
}

std::vector<std::uint64_t> flatten(const std::vector<Cube>& cubes) {
  std::vector<std::uint64_t> out;
  for (const auto& c : cubes) out.insert(out.end(), c.begin(), c.end());
  return out;
}

Cube parent_of(const Cube& c, std::uint64_t base) {
  Cube p(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) p[k] = c[k] / base;
  return p;
}

std::uint64_t branching_for(double constant, double t, std::uint64_t base) {
  const double raw = constant * std::pow(static_cast<double>(base), t);
  return static_cast<std::uint64_t>(std::ceil(raw - 1e-9));
}

}  // namespace

DyadicTree::DyadicTree(std::size_t ambient_dim, std::uint64_t base, int depth, std::uint64_t branching,
                       std::vector<std::vector<std::uint64_t>> levels)
    : dim_(ambient_dim), base_(base), branching_(branching), levels_(std::move(levels)) {
  if (dim_ == 0) throw ParameterError("tree dimension must be positive");
  if (base_ < 2) throw ParameterError("tree base must be at least 2");
  if (depth < 0 || levels_.size() != static_cast<std::size_t>(depth) + 1) {
    throw ParameterError("tree needs depth+1 levels");
  }
  if (static_cast<double>(depth) * std::log2(static_cast<double>(base_)) > 62.0) {
    throw ParameterError("tree depth too large for 64-bit cube coordinates");
  }
  for (int m = 0; m <= depth; ++m) {
    const auto& lv = levels_[m];
    if (lv.size() % dim_ != 0) throw ParameterError("tree level " + std::to_string(m) + " has a partial cube");
    const std::uint64_t side = ipow(base_, m);
    for (auto v : lv) {
      if (v >= side) throw ParameterError("tree level " + std::to_string(m) + " has a cube outside the unit cube");
    }
    for (std::size_t i = 1; i < count(m); ++i) {
      if (!lex_less(cube(m, i - 1), cube(m, i))) {
        throw ParameterError("tree level " + std::to_string(m) + " is not strictly sorted");
      }
    }
  }
}

bool DyadicTree::contains_cube(int level, std::span<const std::uint64_t> index) const {
  std::size_t lo = 0;
  std::size_t hi = count(level);
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (lex_less(cube(level, mid), index)) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo < count(level) && std::equal(index.begin(), index.end(), cube(level, lo).begin());
}

DyadicTree DyadicTree::without_cube(int level, std::size_t i) const {
  auto levels = levels_;
  auto& lv = levels[level];
  lv.erase(lv.begin() + static_cast<std::ptrdiff_t>(i * dim_), lv.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
  return DyadicTree(dim_, base_, depth(), branching_, std::move(levels));
}

EnvelopeMeasure::EnvelopeMeasure(std::shared_ptr<const DyadicTree> tree) : tree_(std::move(tree)) {
  if (!tree_) throw ParameterError("envelope measure needs a tree");
}

double EnvelopeMeasure::cube_mass(int level) const {
  return std::pow(static_cast<double>(tree_->branching()), -static_cast<double>(level));
}

PointMeasure EnvelopeMeasure::atoms() const {
  const int depth = tree_->depth();
  const double side = static_cast<double>(ipow(tree_->base(), depth));
  const auto& leaf = tree_->level(depth);
  std::vector<double> coords(leaf.size());
  for (std::size_t i = 0; i < leaf.size(); ++i) coords[i] = (static_cast<double>(leaf[i]) + 0.5) / side;
  const std::size_t count = tree_->count(depth);
  return PointMeasure(tree_->ambient_dim(), std::move(coords),
                      std::vector<double>(count, 1.0 / static_cast<double>(count)));
}

double Envelope::achieved_exponent() const {
  return std::log(static_cast<double>(tree->branching())) / std::log(static_cast<double>(tree->base()));
}

std::uint64_t cube_coordinate(double x, std::uint64_t base, int level) {
  const double cells = static_cast<double>(ipow(base, level));
  const double v = x * cells;
  double f = std::floor(v);
  if (v - f > 1.0 - 1e-9) f += 1.0;
  return static_cast<std::uint64_t>(std::clamp(f, 0.0, cells - 1.0));
}

std::uint64_t minimal_base(double constant, double t, std::size_t ambient_dim) {
  for (std::uint64_t b = 2; b < (std::uint64_t{1} << 20); ++b) {
    const double cap = std::pow(static_cast<double>(b), static_cast<double>(ambient_dim));
    if (static_cast<double>(branching_for(constant, t, b)) <= cap) return b;
  }
  return 0;
}

Envelope build_envelope(const PointMeasure& points, double constant, double t, std::uint64_t base, int depth,
                        std::size_t cube_cap) {
  if (!(constant > 0.0)) throw ParameterError("envelope constant C must be positive");
  if (!(t >= 0.0)) throw ParameterError("envelope exponent t must be non-negative");
  if (base < 2) throw ParameterError("envelope base must be at least 2");
  if (depth < 0) throw ParameterError("envelope depth must be non-negative");
  const std::size_t n = points.ambient_dim();
  const std::uint64_t branching = branching_for(constant, t, base);
  const double children = std::pow(static_cast<double>(base), static_cast<double>(n));
  if (static_cast<double>(branching) > children) {
    const auto b = minimal_base(constant, t, n);
    throw ParameterError("M = ceil(C b^t) = " + std::to_string(branching) + " exceeds b^n = " + format_double(children) +
                         (b != 0 ? "; smallest admissible base is " + std::to_string(b)
                                 : "; no base admits these parameters"));
  }
  if (children > static_cast<double>(std::size_t{1} << 20)) throw CapacityError("b^n children per cube exceeds 2^20");
  if (static_cast<double>(depth) * std::log2(static_cast<double>(base)) > 62.0) {
    throw ParameterError("envelope depth too large for 64-bit cube coordinates");
  }
  {
    double total = 0.0;
    for (int m = 0; m <= depth; ++m) total += std::pow(static_cast<double>(branching), m);
    if (total > static_cast<double>(cube_cap)) {
      throw CapacityError("envelope would select " + format_double(total) + " cubes, cap is " +
                          std::to_string(cube_cap));
    }
  }

  // Local child offsets in lexicographic order.
  const auto per_cube = static_cast<std::size_t>(children);
  std::vector<Cube> offsets(per_cube, Cube(n));
  for (std::size_t c = 0; c < per_cube; ++c) {
    std::size_t rest = c;
    for (std::size_t k = n; k-- > 0;) {
      offsets[c][k] = rest % base;
      rest /= base;
    }
  }

  std::vector<std::vector<std::uint64_t>> levels;
  levels.push_back(Cube(n, 0));
  std::vector<Cube> current{Cube(n, 0)};
  std::size_t padded = 0;
  for (int m = 1; m <= depth; ++m) {
    std::map<Cube, std::vector<std::size_t>> occupied;  // parent -> occupied child offsets
    for (std::size_t i = 0; i < points.size(); ++i) {
      Cube child(n);
      for (std::size_t k = 0; k < n; ++k) child[k] = cube_coordinate(points.atom(i)[k], base, m);
      const Cube parent = parent_of(child, base);
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n; ++k) offset = offset * base + (child[k] - parent[k] * base);
      occupied[parent].push_back(offset);
    }
    std::vector<Cube> next;
    next.reserve(current.size() * branching);
    for (const auto& parent : current) {
      std::vector<std::size_t> keep;
      if (auto it = occupied.find(parent); it != occupied.end()) {
        keep = it->second;
        std::sort(keep.begin(), keep.end());
        keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
      }
      if (keep.size() > branching) {
        throw ParameterError("a level-" + std::to_string(m - 1) + " cube has " + std::to_string(keep.size()) +
                             " occupied children but M = " + std::to_string(branching) +
                             "; C is below the covering constant of the set");
      }
      if (keep.size() < branching) {
        std::vector<std::pair<std::uint64_t, std::size_t>> candidates;
        for (std::size_t c = 0; c < per_cube; ++c) {
          if (std::binary_search(keep.begin(), keep.end(), c)) continue;
          std::uint64_t nearest = 0;
          if (!keep.empty()) {
            nearest = UINT64_MAX;
            for (auto o : keep) {
              std::uint64_t d2 = 0;
              for (std::size_t k = 0; k < n; ++k) {
                const auto a = offsets[c][k];
                const auto b = offsets[o][k];
                const auto diff = a > b ? a - b : b - a;
                d2 += diff * diff;
              }
              nearest = std::min(nearest, d2);
            }
          }
          candidates.emplace_back(nearest, c);
        }
        std::sort(candidates.begin(), candidates.end());
        const std::size_t extra = branching - keep.size();
        for (std::size_t e = 0; e < extra; ++e) keep.push_back(candidates[e].second);
        padded += extra;
      }
      for (auto c : keep) {
        Cube child(n);
        for (std::size_t k = 0; k < n; ++k) child[k] = parent[k] * base + offsets[c][k];
        next.push_back(std::move(child));
      }
    }
    std::sort(next.begin(), next.end());
    levels.push_back(flatten(next));
    current = std::move(next);
  }
  auto tree = std::make_shared<const DyadicTree>(n, base, depth, branching, std::move(levels));
  return Envelope{tree, EnvelopeMeasure(tree), padded};
}

bool envelope_contains(const DyadicTree& tree, const PointMeasure& points) {
  if (points.ambient_dim() != tree.ambient_dim()) throw ParameterError("point set dimension does not match tree");
  Cube c(tree.ambient_dim());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int m = 0; m <= tree.depth(); ++m) {
      for (std::size_t k = 0; k < c.size(); ++k) c[k] = cube_coordinate(points.atom(i)[k], tree.base(), m);
      if (!tree.contains_cube(m, c)) return false;
    }
  }
  return true;
}

std::string tree_defect(const DyadicTree& tree) {
  const std::size_t n = tree.ambient_dim();
  if (tree.count(0) != 1) return "level 0 must hold exactly one cube";
  for (int m = 1; m <= tree.depth(); ++m) {
    std::map<Cube, std::uint64_t> children;
    for (const auto& c : unflatten(tree.level(m), n)) {
      const Cube p = parent_of(c, tree.base());
      if (!tree.contains_cube(m - 1, p)) return "level " + std::to_string(m) + " cube without a selected parent";
      ++children[p];
    }
    for (std::size_t i = 0; i < tree.count(m - 1); ++i) {
      const auto p = tree.cube(m - 1, i);
      const auto it = children.find(Cube(p.begin(), p.end()));
      const std::uint64_t got = it == children.end() ? 0 : it->second;
      if (got != tree.branching()) {
        return "level " + std::to_string(m - 1) + " cube has " + std::to_string(got) + " selected children, expected " +
               std::to_string(tree.branching());
      }
    }
  }
  return {};
}

RegularityReport verify_regularity(const EnvelopeMeasure& measure, double r_lo, double r_hi, std::size_t samples,
                                   std::uint64_t seed) {
  if (samples == 0) throw ParameterError("regularity check needs at least one sample");
  if (!(r_lo > 0.0 && r_lo < r_hi && r_hi <= 1.0)) throw ParameterError("regularity window needs 0 < r_lo < r_hi <= 1");
  const PointMeasure atoms = measure.atoms();
  const double ratio = std::pow(static_cast<double>(measure.tree().base()), -0.25);
  const ScaleGrid grid = ScaleGrid::from_window(r_lo, r_hi, ratio);

  RegularityReport report;
  report.expected = std::log(static_cast<double>(measure.tree().branching())) /
                    std::log(static_cast<double>(measure.tree().base()));
  report.r_lo = grid.radii().back();
  report.r_hi = r_hi;
  report.samples = samples;
  report.radii = grid.size();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, atoms.size() - 1);
  std::vector<double> mean_log(grid.size(), 0.0);
  std::vector<std::vector<double>> logs(samples, std::vector<double>(grid.size()));
  for (std::size_t i = 0; i < samples; ++i) {
    RadialProfile profile(atoms, atoms.atom(pick(rng)));
    for (std::size_t j = 0; j < grid.size(); ++j) {
      logs[i][j] = std::log(profile.ball_mass(grid[j]));
      mean_log[j] += logs[i][j] / static_cast<double>(samples);
    }
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    mx += std::log(grid[j]);
    my += mean_log[j];
  }
  mx /= static_cast<double>(grid.size());
  my /= static_cast<double>(grid.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double dx = std::log(grid[j]) - mx;
    sxx += dx * dx;
    sxy += dx * (mean_log[j] - my);
  }
  report.exponent = sxy / sxx;
  double lo = INFINITY;
  double hi = -INFINITY;
  for (const auto& row : logs) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double v = row[j] - report.exponent * std::log(grid[j]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  report.log_spread = hi - lo;
  return report;
}

GrowthReport growth_check(const PointMeasure& mu, const GrowthParams& params, const Exec& exec) {
  if (!(params.a > 0.0 && params.a < 1.0)) throw ParameterError("growth check needs a in (0,1)");
  if (!(params.s >= 0.0 && params.epsilon >= 0.0)) throw ParameterError("growth check needs s, epsilon >= 0");
  if (!(params.rho_lo > 0.0 && params.rho_lo <= params.rho_hi && params.rho_hi < 1.0)) {
    throw ParameterError("growth check needs 0 < rho_lo <= rho_hi < 1");
  }
  const auto refs = sample_references(mu, params.centres, params.seed);
  const double power = params.s * (1.0 + params.epsilon);
  std::vector<std::size_t> violations(refs.size(), 0);
  std::vector<double> worst(refs.size(), 0.0);
  parallel_for(refs.size(), exec, [&](std::size_t i) {
    RadialProfile profile(mu, refs.point(i));
    std::seed_seq seq{params.seed, static_cast<std::uint64_t>(i)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double log_lo = std::log(params.rho_lo);
    const double log_hi = std::log(params.rho_hi);
    for (std::size_t k = 0; k < params.pairs_per_centre; ++k) {
      const double rho = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
      const double r = std::exp(params.a * std::log(rho) * (1.0 - unit(rng)));
      const double lhs = profile.ball_mass(r);
      const double rhs = std::pow(4.0 * r / rho, power) * profile.ball_mass(rho);
      const double ratio = lhs / rhs;
      worst[i] = std::max(worst[i], ratio);
      if (ratio > 1.0 + 1e-12) ++violations[i];
    }
  });
  GrowthReport report;
  report.triples = refs.size() * params.pairs_per_centre;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    report.violations += violations[i];
    report.worst_ratio = std::max(report.worst_ratio, worst[i]);
  }
  return report;
}

void save_tree(const DyadicTree& tree, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write tree file " + path.string());
  out << "n=" << tree.ambient_dim() << " b=" << tree.base() << " depth=" << tree.depth()
      << " M=" << tree.branching() << '\n';
  for (int m = 0; m <= tree.depth(); ++m) {
    out << "level " << m << ' ' << tree.count(m) << '\n';
    for (std::size_t i = 0; i < tree.count(m); ++i) {
      const auto c = tree.cube(m, i);
      for (std::size_t k = 0; k < c.size(); ++k) out << (k ? " " : "") << c[k];
      out << '\n';
    }
  }
  if (!out) throw FormatError("failed writing tree file " + path.string());
}

DyadicTree load_tree(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open tree file " + path.string());
  std::string line;
  do {
    if (!std::getline(in, line)) throw FormatError("empty tree file " + path.string());
  } while (line.rfind('#', 0) == 0);
  std::size_t n = 0;
  std::size_t base = 0;
  std::size_t depth = 0;
  std::size_t branching = 0;
  {
    std::istringstream hs(line);
    std::string f[4];
    hs >> f[0] >> f[1] >> f[2] >> f[3];
    const char* keys[4] = {"n=", "b=", "depth=", "M="};
    std::size_t* dest[4] = {&n, &base, &depth, &branching};
    for (int k = 0; k < 4; ++k) {
      const std::string key = keys[k];
      if (f[k].rfind(key, 0) != 0 || !parse_size(std::string_view(f[k]).substr(key.size()), *dest[k])) {
        throw FormatError("bad tree header '" + line + "'");
      }
    }
    if (n == 0 || depth > 64) throw FormatError("bad tree header '" + line + "'");
  }
  std::vector<std::vector<std::uint64_t>> levels(depth + 1);
  for (std::size_t m = 0; m <= depth; ++m) {
    if (!std::getline(in, line)) throw FormatError("tree file ends before level " + std::to_string(m));
    std::istringstream ls(line);
    std::string word;
    std::size_t index = 0;
    std::size_t count = 0;
    if (!(ls >> word >> index >> count) || word != "level" || index != m) {
      throw FormatError("expected 'level " + std::to_string(m) + " <count>', got '" + line + "'");
    }
    for (std::size_t i = 0; i < count; ++i) {
      if (!std::getline(in, line)) throw FormatError("tree file ends inside level " + std::to_string(m));
      std::istringstream cs(line);
      std::size_t got = 0;
      std::uint64_t v = 0;
      while (cs >> v) {
        levels[m].push_back(v);
        ++got;
      }
      if (got != n || !cs.eof()) throw FormatError("bad cube line '" + line + "' at level " + std::to_string(m));
    }
  }
  try {
    return DyadicTree(n, base, static_cast<int>(depth), branching, std::move(levels));
  } catch (const ParameterError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace packdim
