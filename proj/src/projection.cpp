#include "packdim/projection.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "packdim/error.hpp"
#include "packdim/text.hpp"

namespace packdim {

namespace {

constexpr double kTwoTau = 0.1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Verdict verdict(std::string id, std::string statement, double lhs, double rhs, double tol, bool pass) {
  return Verdict{std::move(id), std::move(statement), lhs, rhs, tol, pass};
}

}  // namespace

Frame::Frame(Eigen::MatrixXd basis) : basis_(std::move(basis)) {
  if (basis_.cols() < 1 || basis_.cols() > basis_.rows()) throw ParameterError("frame needs 1 <= m <= n");
  if (orthonormality_error() > 1e-12) throw ParameterError("frame columns are not orthonormal");
}

double Frame::orthonormality_error() const {
  const Eigen::MatrixXd gram = basis_.transpose() * basis_;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

std::string Frame::digest() const {
  std::string text;
  for (Eigen::Index j = 0; j < basis_.cols(); ++j) {
    for (Eigen::Index i = 0; i < basis_.rows(); ++i) text += format_double(basis_(i, j)) + ' ';
  }
  return fnv1a_hex(text);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

Frame sample_grassmann(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (!(m >= 1 && m <= n)) throw ParameterError("Grassmannian sampling needs 1 <= m <= n");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(m);
  for (;;) {
    Eigen::MatrixXd g(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = gauss(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    if (r.diagonal().cwiseAbs().minCoeff() < 1e-10 * g.norm()) continue;
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    return Frame(std::move(q));
  }
}

Frame axis_frame(std::size_t n, std::vector<std::size_t> axes) {
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(axes.size()));
  for (std::size_t j = 0; j < axes.size(); ++j) {
    if (axes[j] >= n) throw ParameterError("axis index outside the ambient dimension");
    basis(static_cast<Eigen::Index>(axes[j]), static_cast<Eigen::Index>(j)) = 1.0;
  }
  return Frame(std::move(basis));
}

std::vector<double> project_coordinates(const PointMeasure& mu, const Frame& frame) {
  if (mu.ambient_dim() != frame.n()) {
    throw ParameterError("measure dimension " + std::to_string(mu.ambient_dim()) + " does not match frame dimension " +
                         std::to_string(frame.n()));
  }
  const std::size_t n = frame.n();
  const std::size_t m = frame.m();
  std::vector<double> out(mu.size() * m);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto x = mu.atom(i);
    for (std::size_t j = 0; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        dot += x[k] * frame.basis()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
      }
      out[i * m + j] = dot;
    }
  }
  return out;
}

ProjectedMeasure normalize_rows(std::size_t dim, const std::vector<double>& rows, std::vector<double> weights) {
  const std::size_t count = weights.size();
  if (dim == 0 || rows.size() != count * dim || count == 0) throw ParameterError("rows do not match dimension");
  AffineMap map;
  map.offset.assign(dim, INFINITY);
  std::vector<double> top(dim, -INFINITY);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      map.offset[k] = std::min(map.offset[k], rows[i * dim + k]);
      top[k] = std::max(top[k], rows[i * dim + k]);
    }
  }
  map.scale = 0.0;
  for (std::size_t k = 0; k < dim; ++k) map.scale = std::max(map.scale, top[k] - map.offset[k]);
  if (map.scale == 0.0) map.scale = 1.0;
  std::vector<double> coords(rows.size());
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      coords[i * dim + k] = std::clamp((rows[i * dim + k] - map.offset[k]) / map.scale, 0.0, 1.0);
    }
  }
  return ProjectedMeasure{normalize(dim, std::move(coords), std::move(weights)), std::move(map)};
}

ProjectedMeasure project_measure(const PointMeasure& mu, const Frame& frame) {
  const auto rows = project_coordinates(mu, frame);
  return normalize_rows(frame.m(), rows, std::vector<double>(mu.weights().begin(), mu.weights().end()));
}

double median(std::vector<double> values) {
  if (values.empty()) throw ParameterError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t h = values.size() / 2;
  return values.size() % 2 == 1 ? values[h] : 0.5 * (values[h - 1] + values[h]);
}

ProjectionReport projection_experiment(const PointMeasure& mu, const ProjectionConfig& cfg) {
  const std::size_t n = mu.ambient_dim();
  if (!(cfg.m >= 1 && cfg.m <= n)) throw ParameterError("projection needs 1 <= m <= n");
  if (cfg.frames < 5) throw ParameterError("projection experiment needs at least 5 frames");

  ProjectionReport report;
  report.n = n;
  report.m = cfg.m;
  report.rows.resize(cfg.frames);
  EstimatorConfig frame_cfg = cfg.projected_cfg;
  frame_cfg.exec = Exec::serial();
  parallel_for(cfg.frames, cfg.measure_cfg.exec, [&](std::size_t i) {
    FrameRow& row = report.rows[i];
    row.seed = derive_seed(cfg.seed, i);
    const Frame frame = sample_grassmann(n, cfg.m, row.seed);
    row.frame_digest = frame.digest();
    const auto projected = project_measure(mu, frame);
    row.dim_p = projected.measure.size() == 1 ? 0.0 : dim_P_ball(projected.measure, frame_cfg).value;
  });
  std::vector<double> dims;
  for (const auto& row : report.rows) dims.push_back(row.dim_p);
  report.median = median(dims);
  const auto [lo, hi] = std::minmax_element(dims.begin(), dims.end());
  report.spread = *hi - *lo;

  const bool single = mu.size() == 1;
  auto zero = [&](std::string method) {
    DimensionEstimate e;
    e.method = std::move(method);
    return e;
  };
  report.packing_profile = single ? zero("packing_profile")
                                  : packing_profile(mu, static_cast<double>(cfg.m), cfg.measure_cfg);
  report.dim_p = single ? zero("dim_P_ball") : dim_P_ball(mu, cfg.measure_cfg);
  report.dim_h = single ? zero("dim_H_ball") : dim_H_ball(mu, cfg.measure_cfg);
  if (!cfg.assouad_pairs.empty()) report.assouad = assouad_dim(mu, cfg.assouad_pairs);
  if (cfg.critical) {
    if (single) {
      CriticalPoint cp;
      cp.value = zero("critical_point");
      report.critical = cp;
    } else {
      report.critical = critical_point(mu, cfg.thetas, cfg.measure_cfg);
    }
  }
  const double m = static_cast<double>(cfg.m);
  report.fm_bound = falconer_mattila_bound(std::min(report.dim_p.value, static_cast<double>(n)),
                                           std::min(report.dim_h.value, report.dim_p.value), static_cast<int>(n),
                                           static_cast<int>(cfg.m));

  const double profile = report.packing_profile.value;
  report.verdicts.push_back(verdict("projection-upper", "max over frames of dim_P mu_V <= dim_P^m mu", *hi, profile,
                                    kTwoTau, *hi <= profile + kTwoTau));
  report.verdicts.push_back(verdict("projection-typical", "median dim_P mu_V = dim_P^m mu", report.median, profile, kTwoTau,
                                    std::abs(report.median - profile) <= kTwoTau));
  report.verdicts.push_back(verdict("projection-lower", "median dim_P mu_V >= Falconer-Mattila bound", report.median,
                                    report.fm_bound, kTwoTau, report.median >= report.fm_bound - kTwoTau));
  if (report.critical) {
    const double d = report.critical->value.value;
    const bool predicted_full = m <= d + kTwoTau;
    const bool observed_full = report.median >= m - kTwoTau;
    report.verdicts.push_back(verdict("full-projection", "dim_P mu_V = m iff m <= D(mu)", report.median, d, kTwoTau,
                                      predicted_full == observed_full));
  }
  if (report.assouad) {
    const double a = report.assouad->value;
    const double lower = report.dim_p.value - std::max(0.0, a - m);
    report.verdicts.push_back(verdict("profile-sandwich", "dim_P^m mu >= dim_P mu - max(0, dim_A - m)", profile, lower,
                                      kTwoTau, profile >= lower - kTwoTau));
    if (a <= m) {
      report.verdicts.push_back(verdict("projection-small-assouad", "median dim_P mu_V = dim_P mu when dim_A <= m", report.median,
                                        report.dim_p.value, kTwoTau,
                                        std::abs(report.median - report.dim_p.value) <= kTwoTau));
    }
  }
  return report;
}

}  // namespace packdim
