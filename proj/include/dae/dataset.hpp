#pragma once

// Feature records, synthetic heteroscedastic data and on-disk formats.
//
// CSV: header `id,label[,dd,j0,...,j6],f0,...,f{F-1}`, one record per line, values
// written in shortest round-trip form.
//
// Binary (.daef), little endian:
//   "DAEF"  u32 version  u32 F  u64 n
//   then n records of f64: label, [dd, j0..j6,] f0..f{F-1}
// Version 1 has no judge columns, version 2 has them. Record ids are not stored;
// loading assigns the decimal row index, which is also how synthetic ids are made.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dae/tensor.hpp"

namespace dae {

struct FeatureRecord {
  std::string id;
  std::vector<double> features;
  double label = 0.0;
  std::optional<std::array<double, 7>> judges;
  std::optional<double> dd;

  bool operator==(const FeatureRecord&) const = default;
};

struct Dataset {
  std::size_t feature_dim = 0;
  std::vector<FeatureRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  bool has_judges() const { return !records.empty() && records.front().judges.has_value(); }
  std::vector<double> labels() const;
  // Rows `indices` as a [batch x F] matrix; all rows when indices is empty.
  Tensor features(std::span<const std::size_t> indices = {}) const;
  // Throws DataError naming the first offending record.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

enum class MeanFn { Sine, Quadratic, Linear };
enum class NoiseFn { Affine, VShape, Constant };

std::string to_string(MeanFn fn);
std::string to_string(NoiseFn fn);
MeanFn parse_mean_fn(std::string_view name);
NoiseFn parse_noise_fn(std::string_view name);

// label = mean_offset + mean_scale * m(t) + sigma(t) * eps, t ~ U(0, 1), eps ~ N(0, 1)
//   m(t):      sine sin(2 pi t) | quadratic (2t - 1)^2 | linear t
//   sigma(t):  affine a + b t   | vshape a + b |2t - 1| | constant a
struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t feature_dim = 8;
  MeanFn mean_fn = MeanFn::Sine;
  double mean_scale = 1.0;
  double mean_offset = 0.0;
  NoiseFn noise_fn = NoiseFn::Affine;
  double noise_a = 0.05;
  double noise_b = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
  double mean(double t) const;
  double sigma(double t) const;
};

// Fixed embedding of the latent t: [t, t^2, sin(2 pi t), cos(2 pi t), sin(4 pi t), cos(4 pi t), ...]
// truncated to `dim` entries.
std::vector<double> embed_latent(double t, std::size_t dim);

struct SyntheticData {
  Dataset data;
  std::vector<double> latent;  // t per record
  std::vector<double> sigma;   // true noise scale per record
};

SyntheticData synth_heteroscedastic(const SyntheticSpec& spec);

struct JudgeSpec {
  double noise_std = 0.3;
  double dd_lo = 1.5;
  double dd_hi = 3.5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Treats each label as a raw (trimmed-sum) score: judges = label / 3 + N(0, noise_std^2),
// dd ~ U(dd_lo, dd_hi), and the label becomes aggregate_judges(judges, dd).
Dataset synth_judges(const Dataset& data, const JudgeSpec& spec);

// Deterministic shuffled split; each side keeps the original record order.
std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed);

void write_csv(std::ostream& out, const Dataset& data);
Dataset read_csv(std::istream& in);
void write_binary(std::ostream& out, const Dataset& data);
Dataset read_binary(std::istream& in);

// Format chosen by extension: `.daef` is binary, anything else CSV.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_csv(const std::filesystem::path& path);

// `id,t,sigma` table of the generating noise.
void write_sigma_csv(std::ostream& out, const SyntheticData& synth);

}  // namespace dae
