#pragma once

// Plain-text persistence.
//
//   .dtt       "dims: I1 ... IN" then one value per line in vec order
//   .kt        order / rank / dims / lambda lines, then "factor n" blocks of
//              I_n rows with R values each
//   manifest   "key: value" lines; file lists are relative to the manifest

#include "concpd/solver.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace concpd {

namespace fs = std::filesystem;

/// IO or parse failure; the message carries the offending path.
class IoError : public std::runtime_error {
 public:
  IoError(const fs::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

/// Shortest round-trip decimal form.
[[nodiscard]] std::string format_double(double v);
[[nodiscard]] double parse_double(const std::string& s);

void write_tensor(const DenseTensor& t, const fs::path& path);
[[nodiscard]] DenseTensor read_tensor(const fs::path& path);

void write_kruskal(const KruskalTensor& k, const fs::path& path);
[[nodiscard]] KruskalTensor read_kruskal(const fs::path& path);

using KeyValues = std::map<std::string, std::string>;

/// Lines "key<sep>value"; blank lines and lines starting with '#' are skipped.
[[nodiscard]] KeyValues parse_key_values(const std::string& text, char sep,
                                         const fs::path& origin = {});
[[nodiscard]] KeyValues read_key_values(const fs::path& path, char sep = ':');
void write_key_values(const KeyValues& kv, const fs::path& path, char sep = ':');

[[nodiscard]] std::string read_text(const fs::path& path);
void write_text(const std::string& text, const fs::path& path);

struct ProblemFiles {
  fs::path manifest;
  std::vector<fs::path> tensors;
  std::optional<fs::path> truth;  // coupled-set manifest
};

/// Writes tensor_<s>.dtt and problem.manifest into `dir`.  `truth_manifest`
/// is recorded relative to `dir`.
ProblemFiles write_problem(const CoupledProblem& problem, const fs::path& dir,
                           const std::optional<fs::path>& truth_manifest = {});
/// Mode, compression and core flags are left at their defaults.
[[nodiscard]] CoupledProblem read_problem(const fs::path& manifest,
                                          ProblemFiles* files = nullptr);

/// Writes <stem>_<s>.kt and <stem>.manifest into `dir`; returns the manifest.
fs::path write_coupled_set(const CoupledFactorSet& f, const fs::path& dir,
                           const std::string& stem);
[[nodiscard]] CoupledFactorSet read_coupled_set(const fs::path& manifest);

}  // namespace concpd
