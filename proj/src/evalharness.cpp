#include "massloc/evalharness.hpp"

#include "massloc/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace massloc {
namespace {

using nlohmann::json;

json coord_json(PixelCoord p) { return json::array({p.col, p.row}); }

json bbox_json(const BoundingBox& b) {
  return json::array({b.min_col, b.min_row, b.max_col, b.max_row});
}

std::string fixed(std::optional<double> v, const char* missing) {
  if (!v) return missing;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

std::optional<double> ratio(int num, int den) {
  if (den == 0) return std::nullopt;
  return double(num) / double(den);
}

json optional_json(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

Image<double> with_pixels(const Image<double>& img, auto&& paint) {
  auto px = img.pixels();
  auto put = [&](int col, int row) {
    if (col >= 0 && row >= 0 && col < img.width() && row < img.height()) px(row, col) = 1.0;
  };
  paint(put);
  return Image<double>(std::move(px));
}

}  // namespace

std::string to_string(Method m) { return m == Method::backtrack ? "backtrack" : "occlusion"; }

Method method_from_string(const std::string& name) {
  if (name == "backtrack") return Method::backtrack;
  if (name == "occlusion") return Method::occlusion;
  throw std::invalid_argument("unknown method '" + name + "' (expected backtrack or occlusion)");
}

void LocaliseConfig::validate() const {
  if (salient_pixels < 1) throw std::invalid_argument("eval.salient_pixels must be >= 1");
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0))
    throw std::invalid_argument("eval.iou_threshold must lie in [0, 1]");
  cluster.validate();
  regiongrow.validate();
  occlusion.validate();
}

Localisation localise(const Image<double>& img, const NetworkParams<double>& params, Method method,
                      const LocaliseConfig& cfg, std::optional<Index> force_class) {
  cfg.validate();
  Localisation out;
  out.method = method;
  if (method == Method::backtrack) {
    auto bt = run_backtrack(img, params, cfg.salient_pixels, force_class);
    std::vector<PixelCoord> coords;
    coords.reserve(bt.salient_pixels.size());
    for (const auto& s : bt.salient_pixels) coords.push_back(s.coord);
    out.clusters = cluster_coords(coords, cfg.cluster, img);
    out.seed = select_seed(out.clusters, img);
    out.predicted_class = bt.predicted_class;
    out.probability = bt.probability;
    out.class_used = bt.class_used;
    out.backtrack = std::move(bt);
  } else {
    auto occ = occlusion_map(img, params, cfg.occlusion, force_class);
    out.seed = occlusion_seed(occ.heatmap, occ.grid);
    out.predicted_class = occ.predicted_class;
    out.probability = occ.probability;
    out.class_used = occ.target_class;
    out.occlusion = std::move(occ);
  }
  out.roi = region_grow(img, out.seed, cfg.regiongrow);
  return out;
}

json to_json(const Localisation& loc) {
  json j{{"method", to_string(loc.method)},
         {"class", loc.predicted_class},
         {"P", loc.probability},
         {"class_used", loc.class_used},
         {"seed", coord_json(loc.seed)},
         {"bbox", bbox_json(loc.roi.bbox)},
         {"roi_pixels", loc.roi.mask.count()},
         {"truncated", loc.roi.truncated}};
  if (loc.backtrack) {
    j["q_star"] = loc.backtrack->q_star;
    j["r_star"] = loc.backtrack->r_star;
    json pixels = json::array();
    for (const auto& s : loc.backtrack->salient_pixels)
      pixels.push_back({{"coord", coord_json(s.coord)}, {"score", s.score}});
    j["salient_pixels"] = std::move(pixels);
    json clusters = json::array();
    for (const auto& c : loc.clusters)
      clusters.push_back({{"size", c.members.size()},
                          {"centre", coord_json(c.centre)},
                          {"centre_intensity", c.centre_intensity}});
    j["clusters"] = std::move(clusters);
  }
  if (loc.occlusion) {
    j["grid"] = {loc.occlusion->grid.cols, loc.occlusion->grid.rows};
    j["forward_passes"] = loc.occlusion->forward_passes;
  }
  return j;
}

bool is_hit(SeedPoint seed, const BinaryMask& truth) {
  if (seed.col < 0 || seed.row < 0 || seed.col >= truth.width() || seed.row >= truth.height())
    throw std::invalid_argument("is_hit: seed outside the mask");
  return truth.at(seed);
}

std::optional<double> EvalReport::hit_rate() const { return ratio(n_correct, n_correct + n_wrong); }
std::optional<double> EvalReport::accuracy() const { return ratio(n_class_correct, n_classified); }
std::optional<double> EvalReport::iou_hit_rate() const {
  return ratio(n_iou_hit, n_correct + n_wrong);
}

EvalReport evaluate(const DatasetManifest& manifest, const NetworkParams<double>& params,
                    Method method, const LocaliseConfig& cfg, int jobs) {
  cfg.validate();
  const auto test = manifest.select(Split::test);
  EvalReport report;
  report.method = method;
  report.records.resize(test.size());

  parallel_for(test.size(), jobs, [&](std::size_t i) {
    const ManifestEntry& e = *test[i];
    ImageRecord& rec = report.records[i];
    rec.id = e.id;
    rec.label = e.label;
    try {
      const auto img = load_pgm(manifest.resolve(e.image));
      if (e.label == kAbnormalClass) {
        if (!e.mask) throw std::runtime_error("abnormal entry has no mask");
        const auto truth = load_mask(manifest.resolve(*e.mask));
        if (!truth.matches(img)) throw std::runtime_error("mask and image sizes differ");
        const auto loc = localise(img, params, method, cfg, Index(kAbnormalClass));
        rec.predicted_class = loc.predicted_class;
        rec.probability = loc.probability;
        rec.localised = true;
        rec.seed = loc.seed;
        rec.bbox = loc.roi.bbox;
        rec.truncated = loc.roi.truncated;
        rec.hit = is_hit(loc.seed, truth);
        rec.iou = bbox_iou(loc.roi.bbox, bbox_of(truth));
      } else {
        const auto c = classify(img, params);
        rec.predicted_class = c.label;
        rec.probability = c.probability;
      }
    } catch (const std::exception& ex) {
      rec.error = e.image + ": " + ex.what();
    }
  });

  for (const auto& rec : report.records) {
    if (rec.error) {
      ++report.n_failed;
      continue;
    }
    ++report.n_classified;
    if (rec.predicted_class == rec.label) ++report.n_class_correct;
    if (rec.localised) {
      ++(rec.hit ? report.n_correct : report.n_wrong);
      if (rec.iou >= cfg.iou_threshold) ++report.n_iou_hit;
    }
  }
  report.config = {{"method", to_string(method)},
                   {"salient_pixels", cfg.salient_pixels},
                   {"iou_threshold", cfg.iou_threshold},
                   {"cluster",
                    {{"link_radius", cfg.cluster.link_radius},
                     {"min_cluster_size", cfg.cluster.min_cluster_size}}},
                   {"regiongrow",
                    {{"intensity_tolerance", cfg.regiongrow.intensity_tolerance},
                     {"connectivity", cfg.regiongrow.connectivity},
                     {"max_region_fraction", cfg.regiongrow.max_region_fraction}}},
                   {"occlusion",
                    {{"patch_size", cfg.occlusion.patch_size},
                     {"stride", cfg.occlusion.stride},
                     {"fill_value", cfg.occlusion.fill_value}}}};
  return report;
}

json to_json(const EvalReport& report) {
  json records = json::array();
  for (const auto& r : report.records) {
    json j{{"id", r.id},
           {"label", r.label},
           {"predicted_class", r.predicted_class},
           {"P", r.probability},
           {"misclassified", !r.error && r.predicted_class != r.label}};
    if (r.localised) {
      j["seed"] = coord_json(r.seed);
      j["bbox"] = bbox_json(r.bbox);
      j["truncated"] = r.truncated;
      j["hit"] = r.hit;
      j["iou"] = r.iou;
    }
    if (r.error) j["error"] = *r.error;
    records.push_back(std::move(j));
  }
  return {{"method", to_string(report.method)},
          {"n_correct", report.n_correct},
          {"n_wrong", report.n_wrong},
          {"hit_rate", optional_json(report.hit_rate())},
          {"n_iou_hit", report.n_iou_hit},
          {"iou_hit_rate", optional_json(report.iou_hit_rate())},
          {"n_classified", report.n_classified},
          {"n_class_correct", report.n_class_correct},
          {"accuracy", optional_json(report.accuracy())},
          {"n_failed", report.n_failed},
          {"config", report.config},
          {"records", std::move(records)}};
}

std::string records_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "id,label,predicted_class,probability,seed_col,seed_row,min_col,min_row,max_col,max_row,"
        "hit,iou,error\n";
  for (const auto& r : report.records) {
    os << r.id << ',' << r.label << ',' << r.predicted_class << ',' << fixed(r.probability, "")
       << ',';
    if (r.localised)
      os << r.seed.col << ',' << r.seed.row << ',' << r.bbox.min_col << ',' << r.bbox.min_row << ','
         << r.bbox.max_col << ',' << r.bbox.max_row << ',' << (r.hit ? 1 : 0) << ','
         << fixed(r.iou, "");
    else
      os << ",,,,,,,";
    os << ',' << (r.error ? "\"" + *r.error + "\"" : "") << '\n';
  }
  return os.str();
}

RenderedTable render_table(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("render_table: no reports");
  std::vector<const EvalReport*> rows;
  for (const auto& r : reports) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const EvalReport* a, const EvalReport* b) {
    const auto ha = a->hit_rate(), hb = b->hit_rate();
    if (ha && hb) return *ha > *hb;
    return ha.has_value() && !hb.has_value();
  });

  RenderedTable t;
  std::ostringstream md, csv;
  md << "| Method | #Correctly Located | #Wrongly Located | Hit rate | IoU hits | Accuracy |\n"
     << "|---|---|---|---|---|---|\n";
  csv << "method,n_correct,n_wrong,hit_rate,n_iou_hit,accuracy\n";
  for (const auto* r : rows) {
    const auto name = to_string(r->method);
    md << "| " << name << " | " << r->n_correct << " | " << r->n_wrong << " | "
       << fixed(r->hit_rate(), "n/a") << " | " << r->n_iou_hit << " | "
       << fixed(r->accuracy(), "n/a") << " |\n";
    csv << name << ',' << r->n_correct << ',' << r->n_wrong << ',' << fixed(r->hit_rate(), "")
        << ',' << r->n_iou_hit << ',' << fixed(r->accuracy(), "") << '\n';
  }
  t.markdown = md.str();
  t.csv = csv.str();
  return t;
}

Image<double> overlay_pixels(const Image<double>& img, const std::vector<PixelCoord>& pixels) {
  return with_pixels(img, [&](auto put) {
    for (const auto& p : pixels) put(p.col, p.row);
  });
}

Image<double> overlay_seed(const Image<double>& img, SeedPoint seed, int arm) {
  return with_pixels(img, [&](auto put) {
    for (int d = -arm; d <= arm; ++d) {
      put(seed.col + d, seed.row);
      put(seed.col, seed.row + d);
    }
  });
}

Image<double> overlay_bbox(const Image<double>& img, const BoundingBox& box) {
  return with_pixels(img, [&](auto put) {
    for (int c = box.min_col; c <= box.max_col; ++c) {
      put(c, box.min_row);
      put(c, box.max_row);
    }
    for (int r = box.min_row; r <= box.max_row; ++r) {
      put(box.min_col, r);
      put(box.max_col, r);
    }
  });
}

}  // namespace massloc
