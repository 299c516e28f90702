#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "fpad/aetrain.hpp"
#include "fpad/evaluate.hpp"
#include "util.hpp"

using namespace fpad;

namespace {

std::vector<ScoreRecord> make_records(const std::vector<double>& bona,
                                      const std::vector<double>& pa,
                                      const ThresholdModel* model = nullptr) {
  std::vector<ScoreRecord> recs;
  auto add = [&](double s, Label l) {
    ScoreRecord r;
    r.image_path = "img_" + std::to_string(recs.size());
    r.image_score = s;
    r.true_label = l;
    r.decision = model ? decide(s, *model) : l;
    recs.push_back(r);
  };
  for (double s : bona) add(s, Label::bona_fide);
  for (double s : pa) add(s, Label::pa);
  return recs;
}

// Brute-force confusion-matrix oracle for a fixed threshold.
Rates oracle_rates(const std::vector<ScoreRecord>& recs, double threshold) {
  int pa = 0, pa_acc = 0, bona = 0, bona_rej = 0;
  for (const auto& r : recs) {
    const bool accepted = r.image_score < threshold;
    if (r.true_label == Label::pa) {
      ++pa;
      if (accepted) ++pa_acc;
    } else {
      ++bona;
      if (!accepted) ++bona_rej;
    }
  }
  Rates out;
  out.apcer = static_cast<double>(pa_acc) / pa;
  out.bpcer = static_cast<double>(bona_rej) / bona;
  out.acer = (out.apcer + out.bpcer) / 2.0;
  return out;
}

}  // namespace

TEST_CASE("calibrate_threshold: closed-form oracles") {
  // equal scores: zero spread, threshold equals the mean
  auto m = calibrate_threshold({0.5, 0.5});
  CHECK(m.mean == 0.5);
  CHECK(m.std_dev == 0.0);
  CHECK(m.threshold == 0.5);

  // population (divisor n) standard deviation
  auto m2 = calibrate_threshold({0.1, 0.2, 0.3});
  CHECK(m2.mean == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(m2.std_dev == doctest::Approx(std::sqrt(0.02 / 3.0)).epsilon(1e-12));
  CHECK(m2.threshold == doctest::Approx(0.2 + std::sqrt(0.02 / 3.0)).epsilon(1e-12));

  // homogeneity: scaling all scores by 2 scales all three fields by 2
  auto m3 = calibrate_threshold({0.2, 0.4, 0.6});
  CHECK(m3.mean == doctest::Approx(2 * m2.mean).epsilon(1e-12));
  CHECK(m3.std_dev == doctest::Approx(2 * m2.std_dev).epsilon(1e-12));
  CHECK(m3.threshold == doctest::Approx(2 * m2.threshold).epsilon(1e-12));

  CHECK_THROWS_AS(calibrate_threshold({0.5}), InsufficientData);
  CHECK_THROWS_AS(calibrate_threshold({}), InsufficientData);
}

TEST_CASE("decide: strict inequality, boundary goes to PA") {
  ThresholdModel m;
  m.threshold = 0.3;
  CHECK(decide(0.2999, m) == Label::bona_fide);
  CHECK(decide(0.3, m) == Label::pa);
  CHECK(decide(0.3001, m) == Label::pa);
}

TEST_CASE("compute_rates: hand-checked values") {
  ThresholdModel m;
  m.threshold = 0.5;
  // 10 PA, exactly one accepted -> APCER 0.1; 4 bona, one rejected -> 0.25
  std::vector<double> pa(10, 0.9);
  pa[3] = 0.2;
  auto recs = make_records({0.1, 0.2, 0.3, 0.7}, pa, &m);
  Rates r = compute_rates(recs);
  CHECK(r.apcer == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.bpcer == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.acer == doctest::Approx(0.175).epsilon(1e-12));

  // a published-style pair averages as expected
  Rates fixed;
  fixed.apcer = 0.109;
  fixed.bpcer = 0.2266;
  CHECK((fixed.apcer + fixed.bpcer) / 2 == doctest::Approx(0.1678).epsilon(1e-10));

  CHECK_THROWS_AS(compute_rates(make_records({0.1}, {}, &m)), MissingClass);
  CHECK_THROWS_AS(compute_rates(make_records({}, {0.1}, &m)), MissingClass);
}

TEST_CASE("compute_rates agrees with the brute-force oracle on random sets") {
  RngStream rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int nb = 1 + static_cast<int>(rng.uniform_int(20));
    const int np = 1 + static_cast<int>(rng.uniform_int(20));
    std::vector<double> bona(nb), pa(np);
    for (auto& s : bona) s = rng.uniform();
    for (auto& s : pa) s = rng.uniform();
    ThresholdModel m;
    m.threshold = rng.uniform();
    auto recs = make_records(bona, pa, &m);
    Rates got = compute_rates(recs);
    Rates want = oracle_rates(recs, m.threshold);
    CHECK(got.apcer == want.apcer);
    CHECK(got.bpcer == want.bpcer);
    CHECK(got.acer == want.acer);
  }
}

TEST_CASE("det_curve: sweep structure and endpoint behavior") {
  auto recs = make_records({0.1, 0.2}, {0.3, 0.4});
  auto det = det_curve(recs);
  // 4 distinct scores + two sentinels
  REQUIRE(det.size() == 6);
  CHECK(det.front().threshold == -std::numeric_limits<double>::infinity());
  CHECK(det.back().threshold == std::numeric_limits<double>::infinity());
  // -inf: nothing accepted -> APCER 0, BPCER 1; +inf: all accepted
  CHECK(det.front().apcer == 0.0);
  CHECK(det.front().bpcer == 1.0);
  CHECK(det.back().apcer == 1.0);
  CHECK(det.back().bpcer == 0.0);

  // separable data: some interior threshold achieves (0, 0)
  bool perfect = false;
  for (const auto& p : det)
    if (p.apcer == 0.0 && p.bpcer == 0.0) perfect = true;
  CHECK(perfect);

  // thresholds strictly increasing, APCER nondecreasing, BPCER nonincreasing
  for (std::size_t i = 1; i < det.size(); ++i) {
    CHECK(det[i].threshold > det[i - 1].threshold);
    CHECK(det[i].apcer >= det[i - 1].apcer);
    CHECK(det[i].bpcer <= det[i - 1].bpcer);
  }

  // every point matches the brute-force confusion oracle
  for (const auto& p : det) {
    if (!std::isfinite(p.threshold)) continue;
    Rates want = oracle_rates(recs, p.threshold);
    CHECK(p.apcer == want.apcer);
    CHECK(p.bpcer == want.bpcer);
  }
}

TEST_CASE("det_curve: duplicate scores collapse to distinct thresholds") {
  auto recs = make_records({0.2, 0.2, 0.2}, {0.2, 0.7});
  auto det = det_curve(recs);
  std::set<double> thresholds;
  for (const auto& p : det) thresholds.insert(p.threshold);
  CHECK(thresholds.size() == det.size());
  REQUIRE(det.size() == 4);  // {0.2, 0.7} + sentinels
}

TEST_CASE("score_image: deterministic and equal to the mean patch error") {
  auto ae = build_autoencoder<float>(AeVariant::transfer, GanLossMode::wgan_gp, 8);
  init_weights(ae, 3);

  SynthParams p;
  p.height = 160;
  p.width = 160;
  p.seed = 21;
  GrayImage img = generate_bona_fide(p);

  ScoreRecord a = score_image(ae, img, "x.png");
  ScoreRecord b = score_image(ae, img, "x.png");
  CHECK(a.image_score == b.image_score);
  CHECK(a.patch_errors == b.patch_errors);
  CHECK(!a.patch_errors.empty());
  double mean = 0.0;
  for (double e : a.patch_errors) {
    CHECK(e >= 0.0);
    mean += e;
  }
  mean /= static_cast<double>(a.patch_errors.size());
  CHECK(a.image_score == doctest::Approx(mean).epsilon(1e-12));

  // cross-check one patch against the reconstruction_error primitive
  PatchBatch patches = eval_patches(img);
  nn::Mat<float> recon = ae.seq.forward(patches, false);
  auto errs = reconstruction_error<float>(patches, recon);
  REQUIRE(static_cast<std::size_t>(errs.size()) == a.patch_errors.size());
  for (Eigen::Index i = 0; i < errs.size(); ++i)
    CHECK(a.patch_errors[static_cast<std::size_t>(i)] ==
          doctest::Approx(static_cast<double>(errs[i])).epsilon(1e-5));
}

TEST_CASE("reconstruction_error: closed forms") {
  nn::Mat<float> x = nn::Mat<float>::Constant(16, 2, -1.0f);
  nn::Mat<float> same = x;
  CHECK(reconstruction_error<float>(x, same).isZero());

  nn::Mat<float> opp = nn::Mat<float>::Constant(16, 2, 1.0f);
  auto e = reconstruction_error<float>(x, opp);
  CHECK(e[0] == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(e[1] == doctest::Approx(4.0).epsilon(1e-6));

  nn::Mat<float> bad(8, 2);
  CHECK_THROWS_AS(reconstruction_error<float>(x, bad), ShapeMismatch);
}

TEST_CASE("training_scores and evaluate_model: end-to-end consistency") {
  test::TempDir dir("eval");
  DatasetIndex idx = test::tiny_corpus(dir.path / "d", 4, 2, 96, 17);

  auto ae = build_autoencoder<float>(AeVariant::transfer, GanLossMode::wgan_gp, 8);
  init_weights(ae, 5);

  auto scores = training_scores(ae, idx);
  REQUIRE(scores.size() == 4);  // bona fide train images only
  auto model = calibrate_threshold(scores);
  CHECK(model.threshold >= model.mean);

  std::filesystem::path out = dir.path / "out";
  EvalReport rep = evaluate_model(ae, model, idx, &out);
  CHECK(rep.records.size() == 4);  // val split: 2 bona + 2 pa
  for (const auto& r : rep.records) CHECK(r.decision == decide(r.image_score, model));
  Rates again = compute_rates(rep.records);
  CHECK(rep.rates.apcer == again.apcer);
  CHECK(rep.rates.bpcer == again.bpcer);

  // artifacts exist and metrics.json carries the calibration fields
  std::ifstream f(out / "metrics.json");
  REQUIRE(f.good());
  nlohmann::json j = nlohmann::json::parse(f);
  CHECK(j["threshold"].get<double>() == model.threshold);
  CHECK(j["calibration_mean"].get<double>() == model.mean);
  CHECK(j["calibration_std"].get<double>() == model.std_dev);
  CHECK(j["apcer"].get<double>() == rep.rates.apcer);
  CHECK(j["bpcer"].get<double>() == rep.rates.bpcer);
  CHECK(j["acer"].get<double>() == rep.rates.acer);
  CHECK(std::filesystem::exists(out / "scores.csv"));
  CHECK(std::filesystem::exists(out / "det.csv"));

  // record order does not affect the rates
  auto shuffled = rep.records;
  std::reverse(shuffled.begin(), shuffled.end());
  Rates rev = compute_rates(shuffled);
  CHECK(rev.apcer == rep.rates.apcer);
  CHECK(rev.bpcer == rep.rates.bpcer);

  // an empty validation bona class is rejected
  DatasetIndex broken = idx;
  std::erase_if(broken.entries, [](const DatasetEntry& e) {
    return e.split == Split::val && e.label == Label::bona_fide;
  });
  CHECK_THROWS_AS(evaluate_model(ae, model, broken, nullptr), DataError);
}
