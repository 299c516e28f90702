#include "fpad/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "fpad/aetrain.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace fpad {

ScoreRecord score_image(Network<float>& ae, const GrayImage& img, const std::string& path) {
  PatchBatch patches = eval_patches(img);
  nn::Mat<float> x = patches;
  if (ae.unit_range()) x = (0.5f * (patches.array() + 1.0f)).matrix();
  nn::Mat<float> rec = ae.seq.forward(x, false);
  nn::Vec<float> err = reconstruction_error(x, rec);

  ScoreRecord record;
  record.image_path = path;
  record.patch_errors.assign(err.data(), err.data() + err.size());
  double sum = 0.0;
  for (double e : record.patch_errors) sum += e;
  record.image_score = sum / static_cast<double>(record.patch_errors.size());
  return record;
}

ThresholdModel calibrate_threshold(const std::vector<double>& train_scores) {
  if (train_scores.size() < 2)
    throw InsufficientData("threshold calibration needs at least 2 scores");
  double mean = 0.0;
  for (double s : train_scores) mean += s;
  mean /= static_cast<double>(train_scores.size());
  double var = 0.0;
  for (double s : train_scores) var += (s - mean) * (s - mean);
  var /= static_cast<double>(train_scores.size());  // population variance
  ThresholdModel model;
  model.mean = mean;
  model.std_dev = std::sqrt(var);
  model.threshold = model.mean + model.std_dev;
  return model;
}

Rates compute_rates(const std::vector<ScoreRecord>& records) {
  long pa_total = 0, pa_accepted = 0, bona_total = 0, bona_rejected = 0;
  for (const auto& r : records) {
    if (r.true_label == Label::pa) {
      ++pa_total;
      if (r.decision == Label::bona_fide) ++pa_accepted;
    } else {
      ++bona_total;
      if (r.decision == Label::pa) ++bona_rejected;
    }
  }
  if (pa_total == 0) throw MissingClass("no PA records; APCER undefined");
  if (bona_total == 0) throw MissingClass("no bona fide records; BPCER undefined");
  Rates rates;
  rates.apcer = static_cast<double>(pa_accepted) / static_cast<double>(pa_total);
  rates.bpcer = static_cast<double>(bona_rejected) / static_cast<double>(bona_total);
  rates.acer = (rates.apcer + rates.bpcer) / 2.0;
  return rates;
}

std::vector<DetPoint> det_curve(const std::vector<ScoreRecord>& records) {
  bool has_pa = false, has_bona = false;
  std::set<double> thresholds;
  for (const auto& r : records) {
    thresholds.insert(r.image_score);
    (r.true_label == Label::pa ? has_pa : has_bona) = true;
  }
  if (!has_pa || !has_bona) throw MissingClass("DET curve needs both labels");

  std::vector<double> sweep;
  sweep.push_back(-std::numeric_limits<double>::infinity());
  sweep.insert(sweep.end(), thresholds.begin(), thresholds.end());
  sweep.push_back(std::numeric_limits<double>::infinity());

  std::vector<DetPoint> points;
  for (double tau : sweep) {
    long pa_total = 0, pa_accepted = 0, bona_total = 0, bona_rejected = 0;
    for (const auto& r : records) {
      const bool accepted = r.image_score < tau;
      if (r.true_label == Label::pa) {
        ++pa_total;
        if (accepted) ++pa_accepted;
      } else {
        ++bona_total;
        if (!accepted) ++bona_rejected;
      }
    }
    points.push_back({tau, static_cast<double>(pa_accepted) / pa_total,
                      static_cast<double>(bona_rejected) / bona_total});
  }
  return points;
}

std::vector<double> training_scores(Network<float>& ae, const DatasetIndex& index) {
  std::vector<double> scores;
  for (const auto& path : index.paths(Label::bona_fide, Split::train))
    scores.push_back(score_image(ae, io::read_png_gray(path), path.string()).image_score);
  if (scores.empty()) throw InsufficientData("no bona fide training images to calibrate on");
  return scores;
}

EvalReport evaluate_model(Network<float>& ae, const ThresholdModel& model,
                          const DatasetIndex& val_index, const fs::path* out_dir) {
  EvalReport report;
  report.model = model;
  for (const auto& e : val_index.entries) {
    if (e.split != Split::val) continue;
    fs::path path = val_index.root / e.path;
    ScoreRecord rec = score_image(ae, io::read_png_gray(path), path.string());
    rec.true_label = e.label;
    rec.decision = decide(rec.image_score, model);
    report.records.push_back(std::move(rec));
  }
  if (report.records.empty()) throw EmptyValSet("val split is empty");
  report.rates = compute_rates(report.records);
  report.det_points = det_curve(report.records);

  if (out_dir) {
    fs::create_directories(*out_dir);
    report.write_metrics_json(*out_dir / "metrics.json");
    report.write_scores_csv(*out_dir / "scores.csv");
    report.write_det_csv(*out_dir / "det.csv");
  }
  return report;
}

void EvalReport::write_metrics_json(const fs::path& path) const {
  long pa = 0, bona = 0;
  for (const auto& r : records) (r.true_label == Label::pa ? pa : bona)++;
  json j{{"apcer", rates.apcer},
         {"bpcer", rates.bpcer},
         {"acer", rates.acer},
         {"threshold", model.threshold},
         {"calibration_mean", model.mean},
         {"calibration_std", model.std_dev},
         {"counts", {{"bona_fide", bona}, {"pa", pa}}}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics: " + path.string());
  out << j.dump(2) << "\n";
}

void EvalReport::write_scores_csv(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scores: " + path.string());
  out << "path,label,score,decision\n";
  for (const auto& r : records)
    out << r.image_path << "," << to_string(r.true_label) << "," << r.image_score << ","
        << to_string(r.decision) << "\n";
}

void EvalReport::write_det_csv(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write det curve: " + path.string());
  out << "threshold,apcer,bpcer\n";
  for (const auto& p : det_points) out << p.threshold << "," << p.apcer << "," << p.bpcer << "\n";
}

}  // namespace fpad
