#include "massloc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace massloc {
namespace {

using nlohmann::json;

/// Reads optional keys from one JSON object and rejects any it did not read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be a JSON object");
  }

  template <typename T>
  void read(const char* key, T& field) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      field = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + " has the wrong type");
    }
  }

  Section child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    static const json empty = json::object();
    return Section(it == j_.end() ? empty : *it, path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key)) throw ConfigError("unknown config key " + path_ + "." + key);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_stage(Section s, TrainConfig& t) {
  s.read("learning_rate", t.learning_rate);
  s.read("epochs", t.epochs);
  s.read("batch_size", t.batch_size);
  s.read("weight_init_scale", t.weight_init_scale);
  s.read("rng_seed", t.rng_seed);
  s.read("l2_penalty", t.l2_penalty);
  s.read("encoder_lr_scale", t.encoder_lr_scale);
  s.finish();
}

template <typename Fn>
void checked(Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  checked([&] {
    synth.validate();
    dims().validate();
    train.stages.validate();
    eval.validate();
    // A 70/30 split of a tiny dataset can leave a class without training data.
    if (synth.n_normal * synth.train_percent / 100 < 1 ||
        synth.n_abnormal * synth.train_percent / 100 < 1)
      throw std::invalid_argument("synth: every class needs at least one training image");
    OcclusionGrid::fit(synth.width, synth.height, eval.occlusion);
  });
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  Section root(j, "config");

  Section synth = root.child("synth");
  synth.read("width", cfg.synth.width);
  synth.read("height", cfg.synth.height);
  synth.read("n_normal", cfg.synth.n_normal);
  synth.read("n_abnormal", cfg.synth.n_abnormal);
  synth.read("mass_radius_range", cfg.synth.mass_radius_range);
  synth.read("mass_contrast_range", cfg.synth.mass_contrast_range);
  synth.read("background_noise_sigma", cfg.synth.background_noise_sigma);
  synth.read("background_level", cfg.synth.background_level);
  synth.read("background_amplitude", cfg.synth.background_amplitude);
  synth.read("background_sigma_range", cfg.synth.background_sigma_range);
  synth.read("train_percent", cfg.synth.train_percent);
  synth.read("rng_seed", cfg.synth.rng_seed);
  synth.finish();

  Section train = root.child("train");
  train.read("hidden1", cfg.train.hidden1);
  train.read("hidden2", cfg.train.hidden2);
  train.read("classes", cfg.train.classes);
  read_stage(train.child("layer1"), cfg.train.stages.layer1);
  read_stage(train.child("layer2"), cfg.train.stages.layer2);
  read_stage(train.child("head"), cfg.train.stages.head);
  train.finish();

  Section cluster = root.child("cluster");
  cluster.read("link_radius", cfg.eval.cluster.link_radius);
  cluster.read("min_cluster_size", cfg.eval.cluster.min_cluster_size);
  cluster.finish();

  Section grow = root.child("regiongrow");
  grow.read("intensity_tolerance", cfg.eval.regiongrow.intensity_tolerance);
  grow.read("connectivity", cfg.eval.regiongrow.connectivity);
  grow.read("max_region_fraction", cfg.eval.regiongrow.max_region_fraction);
  grow.finish();

  Section occ = root.child("occlusion");
  occ.read("patch_size", cfg.eval.occlusion.patch_size);
  occ.read("stride", cfg.eval.occlusion.stride);
  occ.read("fill_value", cfg.eval.occlusion.fill_value);
  occ.finish();

  Section eval = root.child("eval");
  eval.read("salient_pixels", cfg.eval.salient_pixels);
  eval.read("iou_threshold", cfg.eval.iou_threshold);
  eval.finish();

  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

json to_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate},     {"epochs", t.epochs},
          {"batch_size", t.batch_size},           {"weight_init_scale", t.weight_init_scale},
          {"rng_seed", t.rng_seed},               {"l2_penalty", t.l2_penalty},
          {"encoder_lr_scale", t.encoder_lr_scale}};
}

json to_json(const RunConfig& cfg) {
  return {{"synth", to_json(cfg.synth)},
          {"train",
           {{"hidden1", cfg.train.hidden1},
            {"hidden2", cfg.train.hidden2},
            {"classes", cfg.train.classes},
            {"layer1", to_json(cfg.train.stages.layer1)},
            {"layer2", to_json(cfg.train.stages.layer2)},
            {"head", to_json(cfg.train.stages.head)}}},
          {"cluster",
           {{"link_radius", cfg.eval.cluster.link_radius},
            {"min_cluster_size", cfg.eval.cluster.min_cluster_size}}},
          {"regiongrow",
           {{"intensity_tolerance", cfg.eval.regiongrow.intensity_tolerance},
            {"connectivity", cfg.eval.regiongrow.connectivity},
            {"max_region_fraction", cfg.eval.regiongrow.max_region_fraction}}},
          {"occlusion",
           {{"patch_size", cfg.eval.occlusion.patch_size},
            {"stride", cfg.eval.occlusion.stride},
            {"fill_value", cfg.eval.occlusion.fill_value}}},
          {"eval",
           {{"salient_pixels", cfg.eval.salient_pixels},
            {"iou_threshold", cfg.eval.iou_threshold}}}};
}

}  // namespace massloc
