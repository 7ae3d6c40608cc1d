#include "concpd/metrics.hpp"

#include "concpd/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

namespace concpd {
namespace {

void check_pairs(std::span<const DenseTensor> a, std::span<const DenseTensor> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("metric inputs hold " + std::to_string(a.size()) +
                                " and " + std::to_string(b.size()) + " tensors");
  }
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (a[s].dims() != b[s].dims()) {
      throw std::invalid_argument("metric inputs differ in shape at block " +
                                  std::to_string(s + 1));
    }
  }
}

std::vector<double> block_ratios(std::span<const DenseTensor> originals,
                                 std::span<const DenseTensor> recovered) {
  check_pairs(originals, recovered);
  std::vector<double> out;
  for (std::size_t s = 0; s < originals.size(); ++s) {
    const double norm = originals[s].frobenius_norm();
    const double diff = (originals[s].as_vector() - recovered[s].as_vector()).norm();
    out.push_back(norm > 0.0 ? diff / norm : 0.0);
  }
  return out;
}

std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

// Zero columns stay zero so the rank test still catches them.
Matrix unit_columns(const Matrix& m) {
  Matrix out = m;
  for (Index c = 0; c < out.cols(); ++c) {
    const double norm = out.col(c).norm();
    if (norm > 0.0) out.col(c) /= norm;
  }
  return out;
}

}  // namespace

double MetricReport::pi_mean() const {
  if (pi_per_mode.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(pi_per_mode.begin(), pi_per_mode.end(), 0.0) /
         static_cast<double>(pi_per_mode.size());
}

std::string MetricReport::to_key_values() const {
  std::ostringstream os;
  os << "relerr: " << fmt(relerr) << '\n'
     << "tenfit: " << fmt(tenfit) << '\n'
     << "objfun: " << fmt(objfun) << '\n';
  for (std::size_t n = 0; n < pi_per_mode.size(); ++n) {
    os << "pi_mode_" << n + 1 << ": " << fmt(pi_per_mode[n]) << '\n';
  }
  if (!pi_per_mode.empty()) os << "pi_mean: " << fmt(pi_mean()) << '\n';
  os << "elapsed_s: " << fmt(elapsed_s) << '\n';
  if (psnr) os << "psnr: " << fmt(*psnr) << '\n';
  if (mcc) os << "mcc: " << fmt(*mcc) << '\n';
  return os.str();
}

std::string MetricReport::csv_header() {
  return "relerr,tenfit,objfun,pi_mean,pi_modes,elapsed_s,psnr,mcc";
}

std::string MetricReport::to_csv_row() const {
  std::ostringstream os;
  os << fmt(relerr) << ',' << fmt(tenfit) << ',' << fmt(objfun) << ','
     << (pi_per_mode.empty() ? std::string() : fmt(pi_mean())) << ',';
  for (std::size_t n = 0; n < pi_per_mode.size(); ++n) {
    if (n) os << ';';
    os << fmt(pi_per_mode[n]);
  }
  os << ',' << fmt(elapsed_s) << ',' << (psnr ? fmt(*psnr) : "") << ','
     << (mcc ? fmt(*mcc) : "");
  return os.str();
}

double rel_err(std::span<const DenseTensor> originals,
               std::span<const DenseTensor> recovered) {
  const auto ratios = block_ratios(originals, recovered);
  return std::accumulate(ratios.begin(), ratios.end(), 0.0) /
         static_cast<double>(ratios.size());
}

double ten_fit(std::span<const DenseTensor> originals,
               std::span<const DenseTensor> recovered) {
  const auto ratios = block_ratios(originals, recovered);
  double total = 0.0;
  for (double r : ratios) total += 1.0 - r;
  return total / static_cast<double>(ratios.size());
}

double performance_index(const Matrix& estimated, const Matrix& truth) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols()) {
    throw std::invalid_argument("performance_index: shape mismatch");
  }
  const Index r = truth.cols();
  if (r < 2) throw std::domain_error("performance index is undefined for R = 1");
  const Matrix est = unit_columns(estimated);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(est);
  if (cod.rank() < r) {
    throw std::domain_error("performance index: estimated factor has rank " +
                            std::to_string(cod.rank()) + " < " + std::to_string(r));
  }
  const Matrix g = (cod.pseudoInverse() * unit_columns(truth)).cwiseAbs();
  const double worst = static_cast<double>(r - 1);

  double total = 0.0;
  for (Index i = 0; i < r; ++i) {
    const double row_max = g.row(i).maxCoeff();
    total += row_max > 0.0 ? g.row(i).sum() / row_max - 1.0 : worst;
    const double col_max = g.col(i).maxCoeff();
    total += col_max > 0.0 ? g.col(i).sum() / col_max - 1.0 : worst;
  }
  return total / (2.0 * static_cast<double>(r) * static_cast<double>(r - 1));
}

std::vector<double> performance_index_per_mode(const CoupledFactorSet& estimated,
                                               const CoupledFactorSet& truth) {
  if (estimated.num_blocks() != truth.num_blocks() ||
      estimated.order() != truth.order()) {
    throw std::invalid_argument("performance_index_per_mode: set shape mismatch");
  }
  std::vector<double> out(truth.order(), 0.0);
  for (std::size_t n = 0; n < truth.order(); ++n) {
    for (std::size_t s = 0; s < truth.num_blocks(); ++s) {
      double pi = 1.0;
      try {
        pi = performance_index(estimated.factor(s, n), truth.factor(s, n));
      } catch (const std::domain_error&) {
        if (truth.rank(s) < 2) throw;
      }
      out[n] += pi;
    }
    out[n] /= static_cast<double>(truth.num_blocks());
  }
  return out;
}

double psnr(std::span<const DenseTensor> original,
            std::span<const DenseTensor> recovered, double peak) {
  check_pairs(original, recovered);
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be > 0");
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < original.size(); ++s) {
    sq += (original[s].as_vector() - recovered[s].as_vector()).squaredNorm();
    count += original[s].size();
  }
  const double mse = sq / static_cast<double>(count);
  if (mse == 0.0) return kPsnrCap;
  return std::min(10.0 * std::log10(peak * peak / mse), kPsnrCap);
}

double pearson(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double na = da.norm();
  const double nb = db.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(da.dot(db) / (na * nb), -1.0, 1.0);
}

double mcc(const std::array<Vector, 4>& templates,
           const std::array<Matrix, 4>& candidates) {
  const Index r = candidates[0].cols();
  for (std::size_t d = 0; d < 4; ++d) {
    if (candidates[d].cols() != r) {
      throw std::invalid_argument("mcc: candidate matrices differ in column count");
    }
    if (candidates[d].rows() != templates[d].size()) {
      throw std::invalid_argument("mcc: template " + std::to_string(d + 1) +
                                  " length does not match its candidates");
    }
  }
  if (r == 0) throw std::invalid_argument("mcc: no candidate components");
  double best = -std::numeric_limits<double>::infinity();
  for (Index c = 0; c < r; ++c) {
    double prod = 1.0;
    for (std::size_t d = 0; d < 4; ++d) prod *= pearson(templates[d], candidates[d].col(c));
    best = std::max(best, prod);
  }
  return best;
}

DenseTensor add_noise(const DenseTensor& t, const NoiseSpec& spec,
                      std::uint64_t seed) {
  DenseTensor out = t;
  Rng rng(derive_seed(seed, 0x4015E));
  auto values = out.values();
  if (spec.kind == NoiseKind::Gaussian) {
    if (std::isnan(spec.snr_db) || spec.snr_db == -std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("gaussian noise needs a finite SNR");
    }
    if (std::isinf(spec.snr_db)) return out;
    const double signal = t.as_vector().squaredNorm() / static_cast<double>(t.size());
    const double sigma = std::sqrt(signal / std::pow(10.0, spec.snr_db / 10.0));
    for (double& v : values) {
      v += sigma * rng.normal();
      if (spec.clip) v = std::max(v, 0.0);
    }
    return out;
  }

  if (!(spec.density >= 0.0 && spec.density <= 1.0)) {
    throw std::invalid_argument("salt & pepper density must lie in [0, 1]");
  }
  const double peak = spec.peak.value_or(t.as_vector().maxCoeff());
  const auto count = static_cast<std::size_t>(
      std::llround(spec.density * static_cast<double>(values.size())));
  // Partial Fisher-Yates picks `count` distinct entries.
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform() *
                                                static_cast<double>(idx.size() - i));
    std::swap(idx[i], idx[std::min(j, idx.size() - 1)]);
    values[idx[i]] = rng.uniform() < 0.5 ? 0.0 : peak;
  }
  return out;
}

std::size_t estimate_rank_evr(const Matrix& m, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("explained-variance threshold must lie in (0, 1]");
  }
  if (m.size() == 0 || m.isZero(0.0)) return 0;
  const Matrix gram = m.rows() <= m.cols() ? Matrix(m * m.transpose())
                                           : Matrix(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  Vector values = eig.eigenvalues().cwiseMax(0.0).reverse();
  const double total = values.sum();
  const double target = threshold * total * (1.0 - 1e-12);
  double acc = 0.0;
  for (Index r = 0; r < values.size(); ++r) {
    acc += values(r);
    if (acc >= target) return static_cast<std::size_t>(r + 1);
  }
  return static_cast<std::size_t>(values.size());
}

std::size_t estimate_coupled_count(const Matrix& a, const Matrix& b, double rho) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("estimate_coupled_count: row count mismatch");
  }
  auto has_variance = [](const Matrix& m, Index c) {
    return (m.col(c).array() - m.col(c).mean()).matrix().norm() > 0.0;
  };
  std::vector<std::tuple<double, Index, Index>> pairs;
  for (Index i = 0; i < a.cols(); ++i) {
    if (!has_variance(a, i)) continue;
    for (Index j = 0; j < b.cols(); ++j) {
      if (!has_variance(b, j)) continue;
      const double c = std::abs(pearson(a.col(i), b.col(j)));
      if (c >= rho) pairs.emplace_back(c, i, j);
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) {
    return std::get<0>(x) > std::get<0>(y);
  });
  std::vector<bool> used_a(static_cast<std::size_t>(a.cols()), false);
  std::vector<bool> used_b(static_cast<std::size_t>(b.cols()), false);
  std::size_t matched = 0;
  for (const auto& [c, i, j] : pairs) {
    if (used_a[static_cast<std::size_t>(i)] || used_b[static_cast<std::size_t>(j)]) continue;
    used_a[static_cast<std::size_t>(i)] = used_b[static_cast<std::size_t>(j)] = true;
    ++matched;
  }
  return matched;
}

}  // namespace concpd
