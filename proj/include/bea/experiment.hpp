#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bea/dataset.hpp"
#include "bea/metrics.hpp"
#include "bea/model.hpp"
#include "bea/predict.hpp"
#include "bea/train.hpp"

namespace bea {

struct DataConfig {
  int n_train = 2000;
  int n_test = 400;
};

struct EvalConfig {
  double iou_thresh = 0.5;
  double conf_floor = 0.05;
  double nms_thresh = 0.5;
  std::vector<double> retention_fractions = default_retention_fractions();
  double ood_ratio = 2.0;  // in-dist : OOD image count ratio in the AUROC mix
};

struct ExperimentConfig {
  std::string config_id = "bea";
  std::string output_dir = "runs";
  ModelConfig model;
  TrainConfig train;
  SceneSpec scene;
  DataConfig data;
  EvalConfig eval;

  void validate() const;  // cross-field consistency checks
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// One row of the metrics report CSV.
struct MetricsRow {
  std::string config_id;
  std::uint64_t seed = 0;
  double map_raw = 0.0;
  double ap50_raw = 0.0;
  double ap50_upred = 0.0;
  double ue = 0.0;
  double delta_opt = 0.0;
  double retention_auc = 0.0;
  double auroc_near = 0.0;
  double auroc_far = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_line(const MetricsRow& row);

/// Every artifact path is a pure function of (output_dir, config_id, seed).
struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path config_json;
  std::filesystem::path checkpoint;
  std::filesystem::path history_csv;
  std::filesystem::path metrics_csv;
  std::filesystem::path detections_test;
  std::filesystem::path detections_near;
  std::filesystem::path detections_far;
  std::filesystem::path curves_dir;
  std::filesystem::path plots_dir;
};

RunPaths run_paths(const std::filesystem::path& output_dir, const std::string& config_id, std::uint64_t seed);

/// Detection dump record (JSON Lines, one object per image).
struct DumpedDetection {
  Detection detection;
  double u_pred = 1.0;
};

struct ImageRecord {
  std::string image_id;
  double u_ood = 0.0;
  std::vector<DumpedDetection> detections;
};

void dump_detections(const std::filesystem::path& path, const std::vector<ImageRecord>& records);

/// Throws std::runtime_error naming the 1-based line number on a malformed
/// line.
std::vector<ImageRecord> load_detections(const std::filesystem::path& path);

struct RunArtifacts {
  RunPaths paths;
  MetricsRow row;
  History history;
};

/// Full pipeline: generate data, train, dump detections for the test /
/// near-OOD / far-OOD splits, compute every metric, write one CSV row and
/// the per-run plots.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

/// Recomputes the metrics row of an existing run from its detection dumps
/// (datasets are regenerated from the stored config).
MetricsRow eval_run(const ExperimentConfig& cfg);

/// The 4-row tandem-switch grid (ta/tq off-off, on-off, off-on, on-on).
std::vector<ExperimentConfig> tandem_ablation_grid(const ExperimentConfig& base);

/// Merged comparison table plus overlaid retention / ROC / monitor plots.
/// Runs missing their metrics file are skipped with a warning.
void emit_report(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_dir);

}  // namespace bea
