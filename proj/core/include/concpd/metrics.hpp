#pragma once

// Evaluation quantities (relative error, fit, performance index, PSNR, MCC),
// noise injection and model-order helpers.

#include "concpd/kruskal.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace concpd {

struct MetricReport {
  double relerr = 0.0;
  double tenfit = 0.0;
  double objfun = 0.0;
  std::vector<double> pi_per_mode;
  double elapsed_s = 0.0;
  std::optional<double> psnr;
  std::optional<double> mcc;

  [[nodiscard]] double pi_mean() const;

  /// `key: value` lines, shortest round-trip numbers.
  [[nodiscard]] std::string to_key_values() const;
  [[nodiscard]] static std::string csv_header();
  [[nodiscard]] std::string to_csv_row() const;
};

/// (1/S) sum_s ||M_s - X_s|| / ||M_s||; a zero-norm original contributes 0.
[[nodiscard]] double rel_err(std::span<const DenseTensor> originals,
                             std::span<const DenseTensor> recovered);

/// (1/S) sum_s (1 - ||M_s - X_s|| / ||M_s||)
[[nodiscard]] double ten_fit(std::span<const DenseTensor> originals,
                             std::span<const DenseTensor> recovered);

/// Amari-type index of G = pinv(estimated) * truth, both with unit-norm
/// columns, with the -1 terms so a scaled permutation scores exactly 0;
/// values lie in [0, 1].  Throws
/// std::domain_error for R = 1 or a rank-deficient estimate.
[[nodiscard]] double performance_index(const Matrix& estimated, const Matrix& truth);

/// performance_index per mode, averaged over blocks.  A rank-deficient
/// estimate (e.g. a component driven to zero) scores the worst value, 1.
[[nodiscard]] std::vector<double> performance_index_per_mode(
    const CoupledFactorSet& estimated, const CoupledFactorSet& truth);

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(peak^2 / MSE) over all entries; MSE = 0 gives kPsnrCap.
[[nodiscard]] double psnr(std::span<const DenseTensor> original,
                          std::span<const DenseTensor> recovered,
                          double peak = 255.0);

/// Pearson correlation; 0 when either side has zero variance.
[[nodiscard]] double pearson(const Vector& a, const Vector& b);

/// max_r prod_d corr(templates[d], candidates[d].col(r)).
[[nodiscard]] double mcc(const std::array<Vector, 4>& templates,
                         const std::array<Matrix, 4>& candidates);

enum class NoiseKind { Gaussian, SaltPepper };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  double snr_db = 20.0;
  double density = 0.0;  // salt & pepper fraction
  /// Salt value; when unset the tensor's maximum is used.
  std::optional<double> peak;
  /// Clip gaussian-noised entries at zero.
  bool clip = true;
};

[[nodiscard]] DenseTensor add_noise(const DenseTensor& t, const NoiseSpec& spec,
                                    std::uint64_t seed);

/// Smallest r whose top-r squared singular values hold `threshold` of the
/// total; 0 for the zero matrix.
[[nodiscard]] std::size_t estimate_rank_evr(const Matrix& m, double threshold = 0.99);

/// Size of a greedy one-to-one matching of columns of a and b (highest
/// |correlation| first) whose absolute Pearson correlation is >= rho.
[[nodiscard]] std::size_t estimate_coupled_count(const Matrix& a, const Matrix& b,
                                                 double rho = 0.8);

}  // namespace concpd
