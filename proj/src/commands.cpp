#include "massloc/commands.hpp"

#include "massloc/config.hpp"
#include "massloc/evalharness.hpp"
#include "massloc/parallel.hpp"

#include <filesystem>
#include <iostream>

namespace massloc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

RunConfig config_or_default(const std::optional<std::string>& path) {
  if (path) return load_config(*path);
  RunConfig cfg;
  cfg.validate();
  return cfg;
}

void check_manifest_dims(const DatasetManifest& m, const RunConfig& cfg) {
  if (m.width != cfg.synth.width || m.height != cfg.synth.height)
    throw ConfigError("manifest images are " + std::to_string(m.width) + "x" +
                      std::to_string(m.height) + " but the config expects " +
                      std::to_string(cfg.synth.width) + "x" + std::to_string(cfg.synth.height));
}

void check_model_dims(const NetworkParams<double>& params, const RunConfig& cfg) {
  if (params.dims().input != cfg.synth.width * cfg.synth.height)
    throw std::runtime_error("model expects " + std::to_string(params.dims().input) +
                             " input pixels but the config describes " +
                             std::to_string(cfg.synth.width) + "x" +
                             std::to_string(cfg.synth.height) + " images");
}

/// At most `limit` evenly spaced points of a loss curve, always keeping the last.
json thinned_curve(const std::vector<double>& loss, std::size_t limit = 1000) {
  const std::size_t every = std::max<std::size_t>(1, (loss.size() + limit - 1) / limit);
  json values = json::array();
  for (std::size_t i = 0; i < loss.size(); i += every) values.push_back(loss[i]);
  if ((loss.size() - 1) % every != 0) values.push_back(loss.back());
  return {{"epochs", loss.size()}, {"every", every}, {"values", std::move(values)}};
}

Method parse_method(const std::string& name) {
  try {
    return method_from_string(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = config_or_default(opt.config);
    build_dataset(cfg.synth, opt.out_dir, opt.jobs);
    out << (fs::path(opt.out_dir) / "manifest.json").string() << '\n';
    return kExitOk;
  });
}

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = config_or_default(opt.config);
    const DatasetManifest manifest = load_manifest(opt.manifest);
    check_manifest_dims(manifest, cfg);
    const NetworkDims dims = cfg.dims();

    const auto train = manifest.select(Split::train);
    if (train.empty()) throw std::runtime_error(opt.manifest + ": no training entries");
    Matrix<double> images(dims.input, Index(train.size()));
    std::vector<int> labels(train.size());
    parallel_for(train.size(), opt.jobs, [&](std::size_t i) {
      const auto path = manifest.resolve(train[i]->image);
      const auto img = load_pgm(path);
      if (img.width() != manifest.width || img.height() != manifest.height)
        throw std::runtime_error(path + ": image size differs from the manifest");
      images.col(Index(i)) = flatten(img);
      labels[i] = train[i]->label;
    });

    const auto result = train_stacked(images, labels, dims, cfg.train.stages);
    save_model(opt.model_out, result.params);

    int correct = 0;
    for (std::size_t i = 0; i < train.size(); ++i)
      correct += forward(images.col(Index(i)), result.params).predicted_class == labels[i];
    json ids_train = json::array(), ids_test = json::array();
    for (const auto& e : manifest.entries) (e.split == Split::train ? ids_train : ids_test).push_back(e.id);

    const json report{
        {"format", "massloc-training-report"},
        {"version", 1},
        {"dims", {{"J", dims.input}, {"R", dims.hidden1}, {"Q", dims.hidden2}, {"C", dims.classes}}},
        {"config", to_json(cfg)["train"]},
        {"generator", manifest.generator},
        {"split", {{"train", std::move(ids_train)}, {"test", std::move(ids_test)}}},
        {"training_accuracy", double(correct) / double(train.size())},
        {"loss",
         {{"layer1", thinned_curve(result.layer1_loss)},
          {"layer2", thinned_curve(result.layer2_loss)},
          {"head", thinned_curve(result.head_loss)}}}};
    write_text(opt.model_out + ".json", report.dump(2) + "\n");
    out << json{{"model", opt.model_out},
                {"report", opt.model_out + ".json"},
                {"training_accuracy", report["training_accuracy"]},
                {"final_loss",
                 {{"layer1", result.layer1_loss.back()},
                  {"layer2", result.layer2_loss.back()},
                  {"head", result.head_loss.back()}}}}
               .dump(2)
        << '\n';
    return kExitOk;
  });
}

int cmd_localise(const LocaliseOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = config_or_default(opt.config);
    const Method method = parse_method(opt.method);
    if (opt.force_class && (*opt.force_class < 0 || *opt.force_class >= cfg.train.classes))
      throw ConfigError("--force-class must lie in [0, " + std::to_string(cfg.train.classes) + ")");
    const auto params = load_model(opt.model);
    check_model_dims(params, cfg);

    auto img = load_pgm(opt.image);
    if (img.width() != cfg.synth.width || img.height() != cfg.synth.height) {
      if (!opt.resize)
        throw std::runtime_error(opt.image + " is " + std::to_string(img.width()) + "x" +
                                 std::to_string(img.height()) + ", the network expects " +
                                 std::to_string(cfg.synth.width) + "x" +
                                 std::to_string(cfg.synth.height) + " (use --resize)");
      img = resize_bilinear(img, cfg.synth.width, cfg.synth.height);
    }

    std::optional<Index> force;
    if (opt.force_class) force = *opt.force_class;
    const auto loc = localise(img, params, method, cfg.eval, force);
    json j = to_json(loc);
    j["image"] = opt.image;

    if (opt.overlay_dir) {
      fs::create_directories(*opt.overlay_dir);
      const auto stem = fs::path(*opt.overlay_dir) / fs::path(opt.image).stem();
      json files = json::array();
      auto emit = [&](const std::string& suffix, const Image<double>& overlay) {
        const auto path = stem.string() + suffix;
        save_pgm(path, overlay);
        files.push_back(path);
      };
      if (loc.backtrack) {
        std::vector<PixelCoord> pixels;
        for (const auto& s : loc.backtrack->salient_pixels) pixels.push_back(s.coord);
        emit("_salient.pgm", overlay_pixels(img, pixels));
      }
      if (loc.occlusion) emit("_heatmap.pgm", heatmap_image(loc.occlusion->heatmap));
      emit("_seed.pgm", overlay_seed(img, loc.seed));
      emit("_bbox.pgm", overlay_bbox(img, loc.roi.bbox));
      emit("_roi.pgm", mask_to_image(loc.roi.mask));
      j["overlays"] = std::move(files);
    }
    out << j.dump(2) << '\n';
    return kExitOk;
  });
}

int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = config_or_default(opt.config);
    if (opt.methods.empty()) throw ConfigError("no evaluation methods given");
    std::vector<Method> methods;
    for (const auto& name : opt.methods) methods.push_back(parse_method(name));
    const auto params = load_model(opt.model);
    check_model_dims(params, cfg);
    const DatasetManifest manifest = load_manifest(opt.manifest);
    check_manifest_dims(manifest, cfg);

    fs::create_directories(opt.out_dir);
    const fs::path dir(opt.out_dir);
    std::vector<EvalReport> reports;
    int failed = 0;
    for (Method m : methods) {
      auto report = evaluate(manifest, params, m, cfg.eval, opt.jobs);
      const auto name = to_string(m);
      write_text((dir / ("report_" + name + ".json")).string(), to_json(report).dump(2) + "\n");
      write_text((dir / ("records_" + name + ".csv")).string(), records_csv(report));
      for (const auto& r : report.records)
        if (r.error) err << "failed: " << *r.error << '\n';
      failed += report.n_failed;
      reports.push_back(std::move(report));
    }
    const auto table = render_table(reports);
    write_text((dir / "table.md").string(), table.markdown);
    write_text((dir / "table.csv").string(), table.csv);
    out << table.markdown;
    return failed == 0 ? kExitOk : kExitRuntime;
  });
}

}  // namespace massloc
