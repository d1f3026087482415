#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace massloc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

struct GenerateOptions {
  std::optional<std::string> config;
  std::string out_dir;
  int jobs = 0;  // 0: one per hardware thread
};

struct TrainOptions {
  std::optional<std::string> config;
  std::string manifest;
  std::string model_out;
  int jobs = 0;
};

struct LocaliseOptions {
  std::optional<std::string> config;
  std::string model;
  std::string image;
  std::string method = "backtrack";
  std::optional<int> force_class;
  std::optional<std::string> overlay_dir;
  bool resize = false;
};

struct EvaluateOptions {
  std::optional<std::string> config;
  std::string model;
  std::string manifest;
  std::vector<std::string> methods{"backtrack", "occlusion"};
  std::string out_dir;
  int jobs = 0;
};

// Each command prints its results to `out`, diagnostics to `err`, and returns
// kExitOk, kExitConfig (bad configuration or arguments) or kExitRuntime.
int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err);
int cmd_localise(const LocaliseOptions& opt, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace massloc
