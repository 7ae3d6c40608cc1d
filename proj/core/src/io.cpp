#include "concpd/io.hpp"

#include <charconv>
#include <limits>
#include <type_traits>
#include <fstream>
#include <sstream>

namespace concpd {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

template <typename T>
T parse_integer(const std::string& s, const fs::path& origin) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(origin, "expected an integer, got '" + s + "'");
  }
  return v;
}

template <typename T>
std::vector<T> parse_integers(const std::string& s, const fs::path& origin) {
  std::vector<T> out;
  for (const auto& tok : split_ws(s)) out.push_back(parse_integer<T>(tok, origin));
  return out;
}

double parse_double_at(const std::string& s, const fs::path& origin) {
  try {
    return parse_double(s);
  } catch (const std::invalid_argument& e) {
    throw IoError(origin, e.what());
  }
}

const std::string& require(const KeyValues& kv, const std::string& key,
                           const fs::path& origin) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw IoError(origin, "missing key '" + key + "'");
  return it->second;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    if constexpr (std::is_same_v<T, std::string>) {
      out += v[i];
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

/// Reads non-empty lines as a token stream.
class Lines {
 public:
  Lines(const fs::path& path) : path_(path), is_(read_text(path)) {}

  std::string next(const char* expected) {
    for (std::string line; std::getline(is_, line);) {
      ++line_no_;
      line = trim(line);
      if (!line.empty()) return line;
    }
    throw IoError(path_, std::string("unexpected end of file, expected ") + expected);
  }

  std::string keyed(const std::string& key) {
    const std::string line = next(key.c_str());
    const std::string prefix = key + ":";
    if (line.rfind(prefix, 0) != 0) {
      throw IoError(path_, "line " + std::to_string(line_no_) + ": expected '" +
                               prefix + "'");
    }
    return trim(line.substr(prefix.size()));
  }

  void expect_end() {
    for (std::string line; std::getline(is_, line);) {
      ++line_no_;
      if (!trim(line).empty()) {
        throw IoError(path_, "line " + std::to_string(line_no_) + ": trailing data");
      }
    }
  }

  [[nodiscard]] const fs::path& path() const { return path_; }
  [[nodiscard]] int line_no() const { return line_no_; }

 private:
  fs::path path_;
  std::istringstream is_;
  int line_no_ = 0;
};

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return {buf, ptr};
}

double parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t == "inf" || t == "+inf" || t == "Inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf" || t == "-Inf") return -std::numeric_limits<double>::infinity();
  const char* first = t.data();
  if (!t.empty() && t.front() == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw std::invalid_argument("expected a number, got '" + s + "'");
  }
  return v;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& text, const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path(), "cannot create directory: " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

void write_tensor(const DenseTensor& t, const fs::path& path) {
  std::string text = "dims: " + join(t.dims()) + "\n";
  for (double v : t.values()) {
    text += format_double(v);
    text += '\n';
  }
  write_text(text, path);
}

DenseTensor read_tensor(const fs::path& path) {
  Lines lines(path);
  const auto dims = parse_integers<std::size_t>(lines.keyed("dims"), path);
  if (dims.empty()) throw IoError(path, "empty dims line");
  std::size_t count = 1;
  for (std::size_t d : dims) count *= d;
  std::vector<double> values;
  values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    values.push_back(parse_double_at(lines.next("a tensor value"), path));
  }
  lines.expect_end();
  try {
    return DenseTensor(dims, std::move(values));
  } catch (const std::invalid_argument& e) {
    throw IoError(path, e.what());
  }
}

void write_kruskal(const KruskalTensor& k, const fs::path& path) {
  k.validate();
  std::ostringstream os;
  os << "order: " << k.order() << '\n'
     << "rank: " << k.rank() << '\n'
     << "dims: " << join(k.dims()) << '\n'
     << "lambda:";
  for (Index r = 0; r < k.rank(); ++r) os << ' ' << format_double(k.weights(r));
  os << '\n';
  for (std::size_t n = 0; n < k.order(); ++n) {
    os << "factor " << n + 1 << '\n';
    const Matrix& u = k.factors[n];
    for (Index i = 0; i < u.rows(); ++i) {
      for (Index r = 0; r < u.cols(); ++r) {
        if (r) os << ' ';
        os << format_double(u(i, r));
      }
      os << '\n';
    }
  }
  write_text(os.str(), path);
}

KruskalTensor read_kruskal(const fs::path& path) {
  Lines lines(path);
  const auto order = parse_integer<std::size_t>(lines.keyed("order"), path);
  const auto rank = parse_integer<Index>(lines.keyed("rank"), path);
  const auto dims = parse_integers<std::size_t>(lines.keyed("dims"), path);
  if (order == 0 || dims.size() != order || rank < 0) {
    throw IoError(path, "inconsistent order/rank/dims header");
  }
  const auto lambda_tokens = split_ws(lines.keyed("lambda"));
  if (static_cast<Index>(lambda_tokens.size()) != rank) {
    throw IoError(path, "lambda has " + std::to_string(lambda_tokens.size()) +
                            " entries, rank is " + std::to_string(rank));
  }
  KruskalTensor k;
  k.weights.resize(rank);
  for (Index r = 0; r < rank; ++r) {
    k.weights(r) = parse_double_at(lambda_tokens[static_cast<std::size_t>(r)], path);
  }
  for (std::size_t n = 0; n < order; ++n) {
    const std::string header = lines.next("a factor header");
    if (header != "factor " + std::to_string(n + 1)) {
      throw IoError(path, "line " + std::to_string(lines.line_no()) + ": expected 'factor " +
                              std::to_string(n + 1) + "'");
    }
    Matrix u(static_cast<Index>(dims[n]), rank);
    for (Index i = 0; i < u.rows(); ++i) {
      const auto toks = split_ws(lines.next("a factor row"));
      if (static_cast<Index>(toks.size()) != rank) {
        throw IoError(path, "line " + std::to_string(lines.line_no()) + ": expected " +
                                std::to_string(rank) + " values");
      }
      for (Index r = 0; r < rank; ++r) {
        u(i, r) = parse_double_at(toks[static_cast<std::size_t>(r)], path);
      }
    }
    k.factors.push_back(std::move(u));
  }
  lines.expect_end();
  return k;
}

KeyValues parse_key_values(const std::string& text, char sep, const fs::path& origin) {
  KeyValues kv;
  std::istringstream is(text);
  int line_no = 0;
  for (std::string line; std::getline(is, line);) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto pos = line.find(sep);
    if (pos == std::string::npos) {
      throw IoError(origin, "line " + std::to_string(line_no) + ": expected 'key" +
                                std::string(1, sep) + " value'");
    }
    kv[trim(line.substr(0, pos))] = trim(line.substr(pos + 1));
  }
  return kv;
}

KeyValues read_key_values(const fs::path& path, char sep) {
  return parse_key_values(read_text(path), sep, path);
}

void write_key_values(const KeyValues& kv, const fs::path& path, char sep) {
  std::string text;
  for (const auto& [k, v] : kv) text += k + sep + ' ' + v + '\n';
  write_text(text, path);
}

ProblemFiles write_problem(const CoupledProblem& problem, const fs::path& dir,
                           const std::optional<fs::path>& truth_manifest) {
  problem.validate();
  ProblemFiles files;
  files.manifest = dir / "problem.manifest";
  std::vector<std::string> names;
  for (std::size_t s = 0; s < problem.num_blocks(); ++s) {
    const std::string name = "tensor_" + std::to_string(s + 1) + ".dtt";
    write_tensor(problem.tensors[s], dir / name);
    files.tensors.push_back(dir / name);
    names.push_back(name);
  }
  KeyValues kv{{"format", "concpd-problem 1"},
               {"blocks", std::to_string(problem.num_blocks())},
               {"ranks", join(problem.ranks)},
               {"coupled", join(problem.coupled)},
               {"tensors", join(names)}};
  if (truth_manifest) {
    kv["truth"] = truth_manifest->lexically_relative(dir).string();
    files.truth = *truth_manifest;
  }
  write_key_values(kv, files.manifest);
  return files;
}

CoupledProblem read_problem(const fs::path& manifest, ProblemFiles* files) {
  const KeyValues kv = read_key_values(manifest);
  if (require(kv, "format", manifest) != "concpd-problem 1") {
    throw IoError(manifest, "not a problem manifest");
  }
  const fs::path dir = manifest.parent_path();
  const auto blocks = parse_integer<std::size_t>(require(kv, "blocks", manifest), manifest);
  CoupledProblem p;
  p.ranks = parse_integers<Index>(require(kv, "ranks", manifest), manifest);
  p.coupled = parse_integers<std::size_t>(require(kv, "coupled", manifest), manifest);
  const auto names = split_ws(require(kv, "tensors", manifest));
  if (names.size() != blocks || p.ranks.size() != blocks) {
    throw IoError(manifest, "block count does not match the tensor/rank lists");
  }
  ProblemFiles local;
  local.manifest = manifest;
  for (const auto& name : names) {
    local.tensors.push_back(dir / name);
    p.tensors.push_back(read_tensor(dir / name));
  }
  if (const auto it = kv.find("truth"); it != kv.end()) local.truth = dir / it->second;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(manifest, e.what());
  }
  if (files) *files = std::move(local);
  return p;
}

fs::path write_coupled_set(const CoupledFactorSet& f, const fs::path& dir,
                           const std::string& stem) {
  std::vector<std::string> names;
  for (std::size_t s = 0; s < f.num_blocks(); ++s) {
    const std::string name = stem + "_" + std::to_string(s + 1) + ".kt";
    write_kruskal(f.block(s), dir / name);
    names.push_back(name);
  }
  const fs::path manifest = dir / (stem + ".manifest");
  write_key_values({{"format", "concpd-coupled 1"},
                    {"blocks", std::to_string(f.num_blocks())},
                    {"coupled", join(f.coupled_counts())},
                    {"models", join(names)}},
                   manifest);
  return manifest;
}

CoupledFactorSet read_coupled_set(const fs::path& manifest) {
  const KeyValues kv = read_key_values(manifest);
  if (require(kv, "format", manifest) != "concpd-coupled 1") {
    throw IoError(manifest, "not a coupled-set manifest");
  }
  const fs::path dir = manifest.parent_path();
  const auto coupled = parse_integers<std::size_t>(require(kv, "coupled", manifest), manifest);
  std::vector<KruskalTensor> blocks;
  for (const auto& name : split_ws(require(kv, "models", manifest))) {
    blocks.push_back(read_kruskal(dir / name));
  }
  if (blocks.size() != parse_integer<std::size_t>(require(kv, "blocks", manifest), manifest)) {
    throw IoError(manifest, "block count does not match the model list");
  }
  try {
    return CoupledFactorSet::from_blocks(blocks, coupled);
  } catch (const std::invalid_argument& e) {
    throw IoError(manifest, e.what());
  }
}

}  // namespace concpd
