#pragma once

#include "massloc/image.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace massloc {

/// Generator settings for the two-class synthetic benchmark. Images are
/// width x height = 128 x 256 by default (M = 256 rows, N = 128 columns).
struct SynthConfig {
  Index width = 128;
  Index height = 256;
  int n_normal = 100;
  int n_abnormal = 100;
  std::array<double, 2> mass_radius_range{8.0, 20.0};
  std::array<double, 2> mass_contrast_range{0.25, 0.5};
  double background_noise_sigma = 0.05;
  double background_level = 0.05;
  /// Peak magnitude of each smooth background gradient.
  double background_amplitude = 0.03;
  std::array<double, 2> background_sigma_range{40.0, 80.0};
  /// Percentage of each class assigned to the training split (floored).
  int train_percent = 70;
  std::uint64_t rng_seed = 2019;

  void validate() const;
};

/// One broad Gaussian bump of the background field.
struct BackgroundGradient {
  double centre_col = 0;
  double centre_row = 0;
  double sigma = 0;
  double amplitude = 0;
};

struct BackgroundParams {
  double level = 0;
  std::array<BackgroundGradient, 3> gradients{};
};

/// Additive blob: contrast * exp(-d^2 / (2 s^2)) with s chosen so the
/// profile falls to half its peak at d = radius; truncated at d = 2 radius.
struct MassParams {
  int centre_col = 0;
  int centre_row = 0;
  double radius = 0;
  double contrast = 0;
};

struct NormalSample {
  Image<double> image;
  BackgroundParams background;
};

struct AbnormalSample {
  Image<double> image;
  BinaryMask mask;
  BackgroundParams background;
  MassParams mass;
};

/// Mass-free image: smooth zero-mean gradients around a fixed level plus
/// white noise, clipped to [0, 1]. Deterministic in (cfg.rng_seed, index).
NormalSample gen_normal(const SynthConfig& cfg, std::uint64_t index);

/// gen_normal(cfg, index) plus one mass. The ground-truth mask holds the
/// pixels where the mass contribution exceeds half its peak.
AbnormalSample gen_abnormal(const SynthConfig& cfg, std::uint64_t index);

/// Mass contribution at distance `d` from the centre.
double mass_profile(const MassParams& mass, double d);

enum class Split { train, test };

struct ManifestEntry {
  std::string id;
  std::string image;               // relative to the manifest directory
  int label = 0;                   // 0 normal, 1 abnormal
  std::optional<std::string> mask;  // abnormal only
  Split split = Split::train;
  nlohmann::json params;
};

struct DatasetManifest {
  Index width = 0;
  Index height = 0;
  nlohmann::json generator;  // config echo
  std::vector<ManifestEntry> entries;
  /// Directory the relative paths resolve against. Not serialized.
  std::string base_dir;

  std::string resolve(const std::string& relative) const;
  std::vector<const ManifestEntry*> select(Split split) const;
};

/// Stratified split: for each class, entry positions are shuffled with a
/// seeded generator and the first floor(n * percent / 100) go to training.
std::vector<Split> stratified_split(std::span<const int> labels, int train_percent,
                                    std::uint64_t seed);

/// Writes images/, masks/ and manifest.json under `out_dir` and returns the
/// manifest. Image generation is spread over `jobs` threads.
DatasetManifest build_dataset(const SynthConfig& cfg, const std::string& out_dir, int jobs = 1);

nlohmann::json to_json(const SynthConfig& cfg);
nlohmann::json to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j, const std::string& base_dir);
DatasetManifest load_manifest(const std::string& path);
std::string manifest_text(const DatasetManifest& manifest);

}  // namespace massloc
