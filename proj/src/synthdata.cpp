#include "massloc/synthdata.hpp"

#include "massloc/parallel.hpp"
#include "massloc/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <stdexcept>

namespace massloc {
namespace fs = std::filesystem;
namespace {

constexpr std::uint64_t kBackgroundStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kMassStream = 3;
constexpr std::uint64_t kSplitStream = 0x5b1177;

void check_range(const std::array<double, 2>& r, const char* name) {
  if (!(r[0] <= r[1])) throw std::invalid_argument(std::string(name) + ": min exceeds max");
}

// Sigma such that the Gaussian falls to half its peak at `radius`.
double mass_sigma(double radius) { return radius / std::sqrt(2.0 * std::numbers::ln2); }

int truncation_extent(double radius) { return static_cast<int>(std::ceil(2.0 * radius)); }

BackgroundParams draw_background(const SynthConfig& cfg, Rng& rng) {
  BackgroundParams bg;
  bg.level = cfg.background_level;
  for (auto& g : bg.gradients) {
    g.centre_col = rng.uniform(0.0, double(cfg.width - 1));
    g.centre_row = rng.uniform(0.0, double(cfg.height - 1));
    g.sigma = rng.uniform(cfg.background_sigma_range[0], cfg.background_sigma_range[1]);
    g.amplitude = rng.uniform(-cfg.background_amplitude, cfg.background_amplitude);
  }
  return bg;
}

// Unclipped background field (level + zero-mean gradients + noise).
Image<double>::Pixels background_field(const SynthConfig& cfg, std::uint64_t index,
                                       BackgroundParams& params) {
  const std::uint64_t base = derive_seed(cfg.rng_seed, index);
  Rng bg_rng(derive_seed(base, kBackgroundStream));
  params = draw_background(cfg, bg_rng);

  Image<double>::Pixels field = Image<double>::Pixels::Constant(cfg.height, cfg.width, params.level);
  Image<double>::Pixels bump(cfg.height, cfg.width);
  for (const auto& g : params.gradients) {
    const double inv = 1.0 / (2.0 * g.sigma * g.sigma);
    for (Index r = 0; r < cfg.height; ++r)
      for (Index c = 0; c < cfg.width; ++c) {
        const double dc = double(c) - g.centre_col;
        const double dr = double(r) - g.centre_row;
        bump(r, c) = std::exp(-(dc * dc + dr * dr) * inv);
      }
    field.array() += g.amplitude * (bump.array() - bump.mean());
  }

  if (cfg.background_noise_sigma > 0) {
    Rng noise(derive_seed(base, kNoiseStream));
    for (Index i = 0; i < field.size(); ++i)
      field.data()[i] += cfg.background_noise_sigma * noise.normal();
  }
  return field;
}

Image<double> clipped(Image<double>::Pixels field) {
  field = field.cwiseMax(0.0).cwiseMin(1.0);
  return Image<double>(std::move(field));
}

nlohmann::json background_json(const BackgroundParams& bg) {
  nlohmann::json grads = nlohmann::json::array();
  for (const auto& g : bg.gradients)
    grads.push_back({{"centre_col", g.centre_col},
                     {"centre_row", g.centre_row},
                     {"sigma", g.sigma},
                     {"amplitude", g.amplitude}});
  return {{"level", bg.level}, {"gradients", grads}};
}

const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw std::runtime_error("manifest: unknown split '" + s + "'");
}

std::string numbered(const char* prefix, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d", prefix, i);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("synth: image dimensions must be >= 1");
  if (n_normal < 1 || n_abnormal < 1)
    throw std::invalid_argument("synth: n_normal and n_abnormal must be >= 1");
  check_range(mass_radius_range, "synth.mass_radius_range");
  check_range(mass_contrast_range, "synth.mass_contrast_range");
  check_range(background_sigma_range, "synth.background_sigma_range");
  if (!(mass_radius_range[0] > 0.0))
    throw std::invalid_argument("synth: mass radius must be positive");
  const double limit = double(std::min(width, height)) / 2.0;
  if (!(mass_radius_range[1] < limit))
    throw std::invalid_argument("synth: mass radius must be below min(width, height) / 2");
  // The truncated blob has to fit inside the image.
  if (2 * truncation_extent(mass_radius_range[1]) + 1 > std::min(width, height))
    throw std::invalid_argument("synth: largest mass does not fit inside the image");
  if (!(mass_contrast_range[0] > 0.0 && mass_contrast_range[1] <= 1.0))
    throw std::invalid_argument("synth: mass contrast must lie in (0, 1]");
  if (!(background_noise_sigma >= 0.0)) throw std::invalid_argument("synth: noise sigma must be >= 0");
  if (!(background_level >= 0.0 && background_level <= 1.0))
    throw std::invalid_argument("synth: background level must lie in [0, 1]");
  if (!(background_amplitude >= 0.0))
    throw std::invalid_argument("synth: background amplitude must be >= 0");
  if (!(background_sigma_range[0] > 0.0))
    throw std::invalid_argument("synth: background sigma must be positive");
  if (train_percent < 0 || train_percent > 100)
    throw std::invalid_argument("synth: train_percent must lie in [0, 100]");
}

double mass_profile(const MassParams& mass, double d) {
  if (d > 2.0 * mass.radius) return 0.0;
  const double s = mass_sigma(mass.radius);
  return mass.contrast * std::exp(-d * d / (2.0 * s * s));
}

NormalSample gen_normal(const SynthConfig& cfg, std::uint64_t index) {
  cfg.validate();
  NormalSample out;
  out.image = clipped(background_field(cfg, index, out.background));
  return out;
}

AbnormalSample gen_abnormal(const SynthConfig& cfg, std::uint64_t index) {
  cfg.validate();
  AbnormalSample out;
  auto field = background_field(cfg, index, out.background);

  Rng rng(derive_seed(derive_seed(cfg.rng_seed, index), kMassStream));
  MassParams& m = out.mass;
  m.radius = rng.uniform(cfg.mass_radius_range[0], cfg.mass_radius_range[1]);
  m.contrast = rng.uniform(cfg.mass_contrast_range[0], cfg.mass_contrast_range[1]);
  const int extent = truncation_extent(m.radius);
  m.centre_col = static_cast<int>(rng.uniform_int(extent, cfg.width - 1 - extent));
  m.centre_row = static_cast<int>(rng.uniform_int(extent, cfg.height - 1 - extent));

  out.mask = BinaryMask(cfg.width, cfg.height);
  const double half_peak = 0.5 * m.contrast;
  for (int r = m.centre_row - extent; r <= m.centre_row + extent; ++r)
    for (int c = m.centre_col - extent; c <= m.centre_col + extent; ++c) {
      const double d = std::hypot(double(c - m.centre_col), double(r - m.centre_row));
      const double v = mass_profile(m, d);
      field(r, c) += v;
      if (v > half_peak) out.mask.set({c, r});
    }
  out.image = clipped(std::move(field));
  return out;
}

nlohmann::json to_json(const SynthConfig& cfg) {
  return {{"width", cfg.width},
          {"height", cfg.height},
          {"n_normal", cfg.n_normal},
          {"n_abnormal", cfg.n_abnormal},
          {"mass_radius_range", cfg.mass_radius_range},
          {"mass_contrast_range", cfg.mass_contrast_range},
          {"background_noise_sigma", cfg.background_noise_sigma},
          {"background_level", cfg.background_level},
          {"background_amplitude", cfg.background_amplitude},
          {"background_sigma_range", cfg.background_sigma_range},
          {"train_percent", cfg.train_percent},
          {"rng_seed", cfg.rng_seed}};
}

std::vector<Split> stratified_split(std::span<const int> labels, int train_percent,
                                    std::uint64_t seed) {
  std::vector<Split> out(labels.size(), Split::test);
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  for (int cls = 0; cls <= max_label; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    Rng rng(derive_seed(seed, kSplitStream + std::uint64_t(cls)));
    rng.shuffle(std::span<std::size_t>(members));
    const std::size_t n_train = members.size() * std::size_t(train_percent) / 100;
    for (std::size_t k = 0; k < n_train; ++k) out[members[k]] = Split::train;
  }
  return out;
}

std::string DatasetManifest::resolve(const std::string& relative) const {
  return (fs::path(base_dir) / relative).string();
}

std::vector<const ManifestEntry*> DatasetManifest::select(Split split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == split) out.push_back(&e);
  return out;
}

DatasetManifest build_dataset(const SynthConfig& cfg, const std::string& out_dir, int jobs) {
  cfg.validate();
  const fs::path root(out_dir);
  std::error_code ec;
  for (const char* sub : {"images", "masks"}) {
    fs::create_directories(root / sub, ec);
    if (ec) throw std::runtime_error("cannot create " + (root / sub).string() + ": " + ec.message());
  }

  DatasetManifest manifest;
  manifest.width = cfg.width;
  manifest.height = cfg.height;
  manifest.generator = to_json(cfg);
  manifest.base_dir = root.string();

  const std::size_t total = std::size_t(cfg.n_normal) + std::size_t(cfg.n_abnormal);
  manifest.entries.resize(total);
  parallel_for(total, jobs, [&](std::size_t i) {
    ManifestEntry& e = manifest.entries[i];
    const auto index = static_cast<std::uint64_t>(i);
    if (i < std::size_t(cfg.n_normal)) {
      const int k = static_cast<int>(i);
      auto sample = gen_normal(cfg, index);
      e.id = numbered("normal", k);
      e.label = 0;
      e.image = "images/" + e.id + ".pgm";
      e.params = {{"index", index}, {"background", background_json(sample.background)}};
      save_pgm(manifest.resolve(e.image), sample.image);
    } else {
      const int k = static_cast<int>(i - std::size_t(cfg.n_normal));
      auto sample = gen_abnormal(cfg, index);
      e.id = numbered("abnormal", k);
      e.label = 1;
      e.image = "images/" + e.id + ".pgm";
      e.mask = "masks/" + e.id + ".pgm";
      const auto& m = sample.mass;
      e.params = {{"index", index},
                  {"background", background_json(sample.background)},
                  {"mass",
                   {{"centre_col", m.centre_col},
                    {"centre_row", m.centre_row},
                    {"radius", m.radius},
                    {"contrast", m.contrast}}}};
      save_pgm(manifest.resolve(e.image), sample.image);
      save_mask(manifest.resolve(*e.mask), sample.mask);
    }
  });

  std::vector<int> labels;
  for (const auto& e : manifest.entries) labels.push_back(e.label);
  const auto splits = stratified_split(labels, cfg.train_percent, cfg.rng_seed);
  for (std::size_t i = 0; i < total; ++i) manifest.entries[i].split = splits[i];

  write_text((root / "manifest.json").string(), manifest_text(manifest));
  return manifest;
}

nlohmann::json to_json(const DatasetManifest& manifest) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"id", e.id},
                       {"image", e.image},
                       {"label", e.label},
                       {"mask", e.mask ? nlohmann::json(*e.mask) : nlohmann::json(nullptr)},
                       {"split", split_name(e.split)},
                       {"params", e.params}});
  }
  return {{"format", "massloc-manifest"},
          {"version", 1},
          {"width", manifest.width},
          {"height", manifest.height},
          {"generator", manifest.generator},
          {"entries", entries}};
}

std::string manifest_text(const DatasetManifest& manifest) { return to_json(manifest).dump(2) + "\n"; }

DatasetManifest manifest_from_json(const nlohmann::json& j, const std::string& base_dir) {
  try {
    if (j.at("format").get<std::string>() != "massloc-manifest" || j.at("version").get<int>() != 1)
      throw std::runtime_error("unsupported manifest format or version");
    DatasetManifest m;
    m.base_dir = base_dir;
    m.width = j.at("width").get<Index>();
    m.height = j.at("height").get<Index>();
    m.generator = j.value("generator", nlohmann::json::object());
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.id = je.at("id").get<std::string>();
      e.image = je.at("image").get<std::string>();
      e.label = je.at("label").get<int>();
      if (!je.at("mask").is_null()) e.mask = je.at("mask").get<std::string>();
      e.split = parse_split(je.at("split").get<std::string>());
      e.params = je.value("params", nlohmann::json::object());
      if (e.label == 1 && !e.mask) throw std::runtime_error("abnormal entry " + e.id + " has no mask");
      if (e.label == 0 && e.mask) throw std::runtime_error("normal entry " + e.id + " has a mask");
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("manifest: ") + e.what());
  }
}

DatasetManifest load_manifest(const std::string& path) {
  const auto bytes = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  try {
    return manifest_from_json(j, fs::path(path).parent_path().string());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace massloc
