#include "concpd/synthgen.hpp"

#include "concpd/metrics.hpp"
#include "concpd/random.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace concpd {
namespace {

constexpr std::uint64_t kTruthStream = 0x5EED;
constexpr std::uint64_t kNoiseStream = 0x2000;

}  // namespace

long round_half_away(double x) { return std::lround(x); }

std::vector<std::size_t> SynthSpec::resolved_dims() const {
  if (dims) return *dims;
  return {8 * size_factor, 9 * size_factor, 10 * size_factor};
}

Index SynthSpec::resolved_rank() const {
  if (rank) return *rank;
  const auto d = resolved_dims();
  return round_half_away(static_cast<double>(d.at(1)) / 2.0);
}

std::vector<std::size_t> SynthSpec::resolved_coupled() const {
  if (coupled) return *coupled;
  const auto d = resolved_dims();
  const auto l = static_cast<std::size_t>(
      round_half_away(static_cast<double>(d.at(1)) / 4.0));
  return std::vector<std::size_t>(d.size(), l);
}

void SynthSpec::validate() const {
  if (blocks == 0) throw std::invalid_argument("synth: need at least one block");
  if (!dims && size_factor < 1) throw std::invalid_argument("synth: n must be >= 1");
  const auto d = resolved_dims();
  if (d.size() < 2) throw std::invalid_argument("synth: order must be >= 2");
  for (std::size_t i : d) {
    if (i == 0) throw std::invalid_argument("synth: zero dimension");
  }
  const Index r = resolved_rank();
  if (r < 1) throw std::invalid_argument("synth: rank must be >= 1");
  const auto l = resolved_coupled();
  if (l.size() != d.size()) {
    throw std::invalid_argument("synth: " + std::to_string(l.size()) +
                                " coupled counts for order " + std::to_string(d.size()));
  }
  for (std::size_t n = 0; n < l.size(); ++n) {
    if (static_cast<Index>(l[n]) > r) {
      throw std::invalid_argument("synth: mode " + std::to_string(n + 1) + " couples " +
                                  std::to_string(l[n]) + " columns but R = " +
                                  std::to_string(r));
    }
  }
  if (std::isnan(snr_db)) throw std::invalid_argument("synth: SNR is NaN");
}

SynthProblem generate(const SynthSpec& spec) {
  spec.validate();
  const auto dims = spec.resolved_dims();
  const Index r = spec.resolved_rank();
  const auto coupled = spec.resolved_coupled();
  const std::size_t order = dims.size();

  Rng rng(derive_seed(spec.seed, kTruthStream));
  std::vector<Matrix> common(order);
  for (std::size_t n = 0; n < order; ++n) {
    common[n] = rng.uniform_matrix(static_cast<Index>(dims[n]),
                                   static_cast<Index>(coupled[n]));
  }
  std::vector<std::vector<Matrix>> individual(spec.blocks, std::vector<Matrix>(order));
  std::vector<Vector> weights(spec.blocks);
  for (std::size_t s = 0; s < spec.blocks; ++s) {
    for (std::size_t n = 0; n < order; ++n) {
      individual[s][n] = rng.uniform_matrix(static_cast<Index>(dims[n]),
                                            r - static_cast<Index>(coupled[n]));
    }
    weights[s] = rng.uniform_vector(r, 0.5, 1.5);
  }
  CoupledFactorSet truth(std::move(common), std::move(individual), std::move(weights));

  CoupledProblem problem;
  problem.ranks.assign(spec.blocks, r);
  problem.coupled = coupled;
  NoiseSpec noise;
  noise.snr_db = spec.snr_db;
  for (std::size_t s = 0; s < spec.blocks; ++s) {
    DenseTensor clean = reconstruct(truth.block(s));
    problem.tensors.push_back(
        std::isinf(spec.snr_db) && spec.snr_db > 0
            ? std::move(clean)
            : add_noise(clean, noise, derive_seed(spec.seed, kNoiseStream + s)));
  }
  problem.validate();
  return {std::move(problem), std::move(truth)};
}

}  // namespace concpd
