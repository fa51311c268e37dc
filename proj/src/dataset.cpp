#include "dae/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "dae/error.hpp"
#include "dae/format.hpp"
#include "dae/model.hpp"
#include "dae/rng.hpp"

namespace dae {

std::vector<double> Dataset::labels() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

Tensor Dataset::features(std::span<const std::size_t> indices) const {
  const std::size_t rows = indices.empty() ? records.size() : indices.size();
  Tensor x(Shape{rows, feature_dim});
  auto dst = x.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const FeatureRecord& r = records[indices.empty() ? i : indices[i]];
    std::copy(r.features.begin(), r.features.end(), dst.begin() + static_cast<std::ptrdiff_t>(i * feature_dim));
  }
  return x;
}

void Dataset::validate() const {
  if (feature_dim == 0) throw DataError("dataset feature dimension must be positive");
  const bool judged = has_judges();
  for (const auto& r : records) {
    const std::string where = "record '" + r.id + "': ";
    if (r.features.size() != feature_dim)
      throw DataError(where + "has " + std::to_string(r.features.size()) + " features, expected " +
                      std::to_string(feature_dim));
    for (double f : r.features)
      if (!std::isfinite(f)) throw DataError(where + "non-finite feature value");
    if (!std::isfinite(r.label)) throw DataError(where + "non-finite label");
    if (r.judges.has_value() != judged) throw DataError(where + "judge columns present on some records only");
    if (r.judges) {
      if (!r.dd) throw DataError(where + "judge scores without a difficulty degree");
      for (double j : *r.judges)
        if (!std::isfinite(j)) throw DataError(where + "non-finite judge score");
    }
    if (r.dd && !(std::isfinite(*r.dd) && *r.dd > 0.0)) throw DataError(where + "difficulty degree must be positive");
  }
}

std::string to_string(MeanFn fn) {
  switch (fn) {
    case MeanFn::Sine: return "sine";
    case MeanFn::Quadratic: return "quadratic";
    case MeanFn::Linear: return "linear";
  }
  return "unknown";
}

std::string to_string(NoiseFn fn) {
  switch (fn) {
    case NoiseFn::Affine: return "affine";
    case NoiseFn::VShape: return "vshape";
    case NoiseFn::Constant: return "constant";
  }
  return "unknown";
}

MeanFn parse_mean_fn(std::string_view name) {
  if (name == "sine") return MeanFn::Sine;
  if (name == "quadratic") return MeanFn::Quadratic;
  if (name == "linear") return MeanFn::Linear;
  throw ConfigError("unknown mean function '" + std::string(name) + "'");
}

NoiseFn parse_noise_fn(std::string_view name) {
  if (name == "affine") return NoiseFn::Affine;
  if (name == "vshape") return NoiseFn::VShape;
  if (name == "constant") return NoiseFn::Constant;
  throw ConfigError("unknown noise function '" + std::string(name) + "'");
}

void SyntheticSpec::validate() const {
  if (n == 0) throw ConfigError("synthetic dataset needs n >= 1");
  if (feature_dim == 0) throw ConfigError("synthetic dataset needs a positive feature dimension");
  if (!std::isfinite(mean_scale) || !std::isfinite(mean_offset)) throw ConfigError("mean parameters must be finite");
  // sigma is affine or V-shaped in t on [0, 1], so its extremes sit at the ends or the center.
  for (double t : {0.0, 0.5, 1.0})
    if (!(sigma(t) >= 0.0)) throw ConfigError("noise function must be non-negative on [0, 1]");
}

double SyntheticSpec::mean(double t) const {
  double base = 0.0;
  switch (mean_fn) {
    case MeanFn::Sine: base = std::sin(2.0 * std::numbers::pi * t); break;
    case MeanFn::Quadratic: base = (2.0 * t - 1.0) * (2.0 * t - 1.0); break;
    case MeanFn::Linear: base = t; break;
  }
  return mean_offset + mean_scale * base;
}

double SyntheticSpec::sigma(double t) const {
  switch (noise_fn) {
    case NoiseFn::Affine: return noise_a + noise_b * t;
    case NoiseFn::VShape: return noise_a + noise_b * std::abs(2.0 * t - 1.0);
    case NoiseFn::Constant: return noise_a;
  }
  return noise_a;
}

std::vector<double> embed_latent(double t, std::size_t dim) {
  std::vector<double> f;
  f.reserve(dim);
  if (dim > 0) f.push_back(t);
  if (dim > 1) f.push_back(t * t);
  for (std::size_t k = 1; f.size() < dim; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) * t;
    f.push_back(std::sin(angle));
    if (f.size() < dim) f.push_back(std::cos(angle));
  }
  return f;
}

SyntheticData synth_heteroscedastic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData out;
  out.data.feature_dim = spec.feature_dim;
  out.data.records.reserve(spec.n);
  Rng rng(spec.seed);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double t = rng.uniform();
    const double eps = rng.normal();
    const double sigma = spec.sigma(t);
    FeatureRecord r;
    r.id = std::to_string(i);
    r.features = embed_latent(t, spec.feature_dim);
    r.label = spec.mean(t) + sigma * eps;
    out.data.records.push_back(std::move(r));
    out.latent.push_back(t);
    out.sigma.push_back(sigma);
  }
  return out;
}

void JudgeSpec::validate() const {
  if (!(noise_std >= 0.0)) throw ConfigError("judge noise std must be non-negative");
  if (!(dd_lo > 0.0) || !(dd_hi >= dd_lo)) throw ConfigError("difficulty range must satisfy 0 < lo <= hi");
}

Dataset synth_judges(const Dataset& data, const JudgeSpec& spec) {
  spec.validate();
  Dataset out = data;
  Rng rng(spec.seed);
  for (FeatureRecord& r : out.records) {
    const double base = r.label / 3.0;
    std::array<double, kJudgeCount> judges;
    for (double& j : judges) j = base + spec.noise_std * rng.normal();
    const double dd = rng.uniform(spec.dd_lo, spec.dd_hi);
    r.judges = judges;
    r.dd = dd;
    r.label = aggregate_judges(judges, dd);
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie strictly between 0 and 1");
  const std::size_t n = data.size();
  const auto n_first = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_first == 0 || n_first >= n)
    throw DataError("split of " + std::to_string(n) + " records at " + format_double(fraction) + " leaves a side empty");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  std::vector<std::size_t> first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_first));
  std::vector<std::size_t> second(order.begin() + static_cast<std::ptrdiff_t>(n_first), order.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  auto gather = [&](const std::vector<std::size_t>& idx) {
    Dataset d;
    d.feature_dim = data.feature_dim;
    d.records.reserve(idx.size());
    for (std::size_t i : idx) d.records.push_back(data.records[i]);
    return d;
  };
  return {gather(first), gather(second)};
}

// ---------------------------------------------------------------------------- CSV

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& data) {
  data.validate();
  const bool judged = data.has_judges();
  out << "id,label";
  if (judged) out << ",dd,j0,j1,j2,j3,j4,j5,j6";
  for (std::size_t f = 0; f < data.feature_dim; ++f) out << ",f" << f;
  out << '\n';
  for (const auto& r : data.records) {
    out << r.id << ',' << format_double(r.label);
    if (judged) {
      out << ',' << format_double(*r.dd);
      for (double j : *r.judges) out << ',' << format_double(j);
    }
    for (double f : r.features) out << ',' << format_double(f);
    out << '\n';
  }
}

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: missing header line");
  std::vector<std::string> header;
  for (std::string_view field : split_fields(strip_cr(line))) header.emplace_back(field);
  if (header.size() < 3 || header[0] != "id" || header[1] != "label")
    throw DataError("csv line 1: header must start with id,label and list at least one feature");
  std::size_t col = 2;
  bool judged = false;
  if (header[col] == "dd") {
    judged = true;
    ++col;
    for (std::size_t j = 0; j < kJudgeCount; ++j, ++col)
      if (col >= header.size() || header[col] != "j" + std::to_string(j))
        throw DataError("csv line 1: judge columns must be dd,j0..j6");
  } else if (header[col].size() > 1 && header[col][0] == 'j') {
    throw DataError("csv line 1: judge columns require a preceding dd column");
  }
  const std::size_t first_feature = col;
  for (std::size_t f = 0; col < header.size(); ++col, ++f)
    if (header[col] != "f" + std::to_string(f))
      throw DataError("csv line 1: expected column f" + std::to_string(f) + ", found '" + header[col] + "'");
  Dataset data;
  data.feature_dim = header.size() - first_feature;
  if (data.feature_dim == 0) throw DataError("csv line 1: no feature columns");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = strip_cr(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    const std::string where = "csv line " + std::to_string(line_no) + ": ";
    if (fields.size() != header.size())
      throw DataError(where + "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    auto number = [&](std::size_t i) {
      const auto v = parse_double(fields[i]);
      if (!v) throw DataError(where + "column '" + header[i] + "' is not a number: '" + std::string(fields[i]) + "'");
      if (!std::isfinite(*v)) throw DataError(where + "column '" + header[i] + "' is not finite");
      return *v;
    };
    FeatureRecord r;
    r.id = std::string(fields[0]);
    if (r.id.empty()) throw DataError(where + "empty id");
    r.label = number(1);
    if (judged) {
      if (fields[2].empty()) throw DataError(where + "judge scores present but dd missing for record '" + r.id + "'");
      r.dd = number(2);
      if (!(*r.dd > 0.0)) throw DataError(where + "dd must be positive");
      std::array<double, kJudgeCount> judges;
      for (std::size_t j = 0; j < kJudgeCount; ++j) judges[j] = number(3 + j);
      r.judges = judges;
    }
    r.features.reserve(data.feature_dim);
    for (std::size_t i = first_feature; i < fields.size(); ++i) r.features.push_back(number(i));
    data.records.push_back(std::move(r));
  }
  return data;
}

// ---------------------------------------------------------------------------- binary

namespace {

constexpr char kMagic[4] = {'D', 'A', 'E', 'F'};

template <typename T>
void put(std::ostream& out, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
  } else {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

template <typename T>
T get(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
    throw DataError(std::string("binary dataset truncated while reading ") + what);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

void write_binary(std::ostream& out, const Dataset& data) {
  data.validate();
  const bool judged = data.has_judges();
  out.write(kMagic, 4);
  put<std::uint32_t>(out, judged ? 2 : 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.feature_dim));
  put<std::uint64_t>(out, data.records.size());
  for (const auto& r : data.records) {
    put(out, r.label);
    if (judged) {
      put(out, *r.dd);
      for (double j : *r.judges) put(out, j);
    }
    for (double f : r.features) put(out, f);
  }
}

Dataset read_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw DataError("binary dataset: bad magic bytes");
  const auto version = get<std::uint32_t>(in, "version");
  if (version != 1 && version != 2) throw DataError("binary dataset: unsupported version " + std::to_string(version));
  const bool judged = version == 2;
  Dataset data;
  data.feature_dim = get<std::uint32_t>(in, "feature dimension");
  if (data.feature_dim == 0) throw DataError("binary dataset: zero feature dimension");
  const auto n = get<std::uint64_t>(in, "record count");
  for (std::uint64_t i = 0; i < n; ++i) {
    FeatureRecord r;
    r.id = std::to_string(i);
    r.label = get<double>(in, "label");
    if (judged) {
      r.dd = get<double>(in, "dd");
      std::array<double, kJudgeCount> judges;
      for (double& j : judges) j = get<double>(in, "judge score");
      r.judges = judges;
    }
    r.features.resize(data.feature_dim);
    for (double& f : r.features) f = get<double>(in, "feature");
    data.records.push_back(std::move(r));
  }
  data.validate();
  return data;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  Dataset data = read_csv(in);
  data.validate();
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
  if (path.extension() == ".daef") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset " + path.string());
    return read_binary(in);
  }
  return load_csv(path);
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  const bool binary = path.extension() == ".daef";
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write dataset " + path.string());
  if (binary)
    write_binary(out, data);
  else
    write_csv(out, data);
  if (!out) throw DataError("failed writing dataset " + path.string());
}

void write_sigma_csv(std::ostream& out, const SyntheticData& synth) {
  out << "id,t,sigma\n";
  for (std::size_t i = 0; i < synth.data.records.size(); ++i)
    out << synth.data.records[i].id << ',' << format_double(synth.latent[i]) << ',' << format_double(synth.sigma[i]) << '\n';
}

}  // namespace dae
