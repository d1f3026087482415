#pragma once

#include "massloc/backtrack.hpp"
#include "massloc/occlusion.hpp"
#include "massloc/seedcluster.hpp"
#include "massloc/segmentation.hpp"
#include "massloc/synthdata.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace massloc {

enum class Method { backtrack, occlusion };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

/// Everything the localisation tail needs besides the network.
struct LocaliseConfig {
  int salient_pixels = 20;
  ClusterConfig cluster;
  RegionGrowConfig regiongrow;
  OcclusionConfig occlusion;
  /// Secondary hit metric: IoU of ROI and truth boxes at or above this.
  double iou_threshold = 0.25;

  void validate() const;
};

/// Full inference chain for one image.
struct Localisation {
  Method method = Method::backtrack;
  Index predicted_class = 0;
  double probability = 0.0;
  Index class_used = 0;
  SeedPoint seed;
  RoiResult roi;
  std::optional<BacktrackResult<double>> backtrack;  // backtrack only
  std::vector<Cluster> clusters;                     // backtrack only
  std::optional<OcclusionMap<double>> occlusion;     // occlusion only
};

/// classify -> backtrack -> cluster -> seed -> region grow, or
/// classify -> occlusion map -> seed -> region grow.
Localisation localise(const Image<double>& img, const NetworkParams<double>& params, Method method,
                      const LocaliseConfig& cfg, std::optional<Index> force_class = std::nullopt);

nlohmann::json to_json(const Localisation& loc);

/// True iff the seed pixel is set in the ground-truth mask.
bool is_hit(SeedPoint seed, const BinaryMask& truth);

struct ImageRecord {
  std::string id;
  int label = 0;
  Index predicted_class = 0;
  double probability = 0.0;
  bool localised = false;  // abnormal images only
  SeedPoint seed;
  BoundingBox bbox;
  bool truncated = false;
  bool hit = false;
  double iou = 0.0;
  std::optional<std::string> error;
};

struct EvalReport {
  Method method = Method::backtrack;
  std::vector<ImageRecord> records;  // test entries in manifest order
  int n_correct = 0;
  int n_wrong = 0;
  int n_iou_hit = 0;
  int n_classified = 0;
  int n_class_correct = 0;
  int n_failed = 0;
  nlohmann::json config;

  /// n_correct / (n_correct + n_wrong); empty when nothing was localised.
  std::optional<double> hit_rate() const;
  std::optional<double> accuracy() const;
  std::optional<double> iou_hit_rate() const;
};

/// Classifies every test image and localises every abnormal test image,
/// always backtracking (or occluding) with the abnormal class so images the
/// classifier misses still count in the denominator. Per-image failures are
/// recorded, not thrown. Images are processed over `jobs` threads; the report
/// does not depend on the thread count.
EvalReport evaluate(const DatasetManifest& manifest, const NetworkParams<double>& params,
                    Method method, const LocaliseConfig& cfg, int jobs = 1);

nlohmann::json to_json(const EvalReport& report);
std::string records_csv(const EvalReport& report);

struct RenderedTable {
  std::string markdown;
  std::string csv;
};

/// One row per report, ordered by hit rate descending; undefined rates last.
RenderedTable render_table(const std::vector<EvalReport>& reports);

// Monochrome overlays: marks are drawn at full intensity.
Image<double> overlay_pixels(const Image<double>& img, const std::vector<PixelCoord>& pixels);
Image<double> overlay_seed(const Image<double>& img, SeedPoint seed, int arm = 3);
Image<double> overlay_bbox(const Image<double>& img, const BoundingBox& box);

}  // namespace massloc
