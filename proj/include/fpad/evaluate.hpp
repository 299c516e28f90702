#ifndef FPAD_EVALUATE_HPP
#define FPAD_EVALUATE_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "fpad/models.hpp"
#include "fpad/preproc.hpp"
#include "fpad/synthdata.hpp"

namespace fpad {

struct ScoreRecord {
  std::string image_path;
  std::vector<double> patch_errors;
  double image_score = 0.0;  // arithmetic mean of patch_errors
  Label true_label = Label::bona_fide;
  Label decision = Label::bona_fide;
};

// One-class decision rule: threshold = mean + population std of the bona
// fide training reconstruction errors.
struct ThresholdModel {
  double mean = 0.0;
  double std_dev = 0.0;
  double threshold = 0.0;
};

struct Rates {
  double apcer = 0.0;
  double bpcer = 0.0;
  double acer = 0.0;
};

struct DetPoint {
  double threshold;
  double apcer;
  double bpcer;
};

struct EvalReport {
  std::vector<ScoreRecord> records;
  Rates rates;
  ThresholdModel model;
  std::vector<DetPoint> det_points;

  void write_metrics_json(const std::filesystem::path& path) const;
  void write_scores_csv(const std::filesystem::path& path) const;
  void write_det_csv(const std::filesystem::path& path) const;
};

// Patch-averaged reconstruction error of one image (inference mode).
ScoreRecord score_image(Network<float>& ae, const GrayImage& img, const std::string& path = "");

// Needs >= 2 scores; population (divisor n) standard deviation.
ThresholdModel calibrate_threshold(const std::vector<double>& train_scores);

// bona fide iff score < threshold; the boundary goes to PA.
inline Label decide(double score, const ThresholdModel& model) {
  return score < model.threshold ? Label::bona_fide : Label::pa;
}

// APCER = PA accepted as bona fide, BPCER = bona fide rejected,
// ACER = (APCER+BPCER)/2. MissingClass if a needed label is absent.
Rates compute_rates(const std::vector<ScoreRecord>& records);

// Threshold sweep over the distinct observed scores plus -inf/+inf
// sentinels, ordered by threshold.
std::vector<DetPoint> det_curve(const std::vector<ScoreRecord>& records);

// Scores of the bona fide *training* images through the deterministic
// evaluation pipeline (the calibration inputs; no PA score enters).
std::vector<double> training_scores(Network<float>& ae, const DatasetIndex& index);

// Full protocol: score the val split, decide, compute rates + DET points;
// writes metrics.json / scores.csv / det.csv when out_dir is given.
EvalReport evaluate_model(Network<float>& ae, const ThresholdModel& model,
                          const DatasetIndex& val_index,
                          const std::filesystem::path* out_dir = nullptr);

}  // namespace fpad

#endif  // FPAD_EVALUATE_HPP
