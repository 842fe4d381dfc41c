#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "bbnet/dataset.hpp"
#include "bbnet/error.hpp"
#include "bbnet/experiment.hpp"
#include "doctest.h"

using namespace bbnet;

namespace {

SynthConfig tiny_synth(std::uint64_t seed) {
  SynthConfig c;
  c.subjects = 3;
  c.trials_per_subject = 4;
  c.channels = 6;
  c.samples = 256;
  c.seed = seed;
  return c;
}

std::vector<int> block_labels(std::size_t classes, std::size_t per_class) {
  std::vector<int> y;
  for (std::size_t c = 0; c < classes; ++c) y.insert(y.end(), per_class, int(c));
  return y;
}

}  // namespace

TEST_CASE("k-fold: 70/10/20 proportions, exact partition, determinism") {
  const auto y = block_labels(4, 100);
  const auto folds = stratified_kfold(y, 5, 42);
  REQUIRE(folds.size() == 5);
  std::vector<int> tested(y.size(), 0);
  for (const auto& f : folds) {
    CHECK(f.test.size() == 80);
    CHECK(f.validation.size() == 40);
    CHECK(f.train.size() == 280);
    std::set<std::size_t> all;
    for (auto* part : {&f.train, &f.validation, &f.test}) all.insert(part->begin(), part->end());
    CHECK(all.size() == y.size());
    for (std::size_t i : f.test) ++tested[i];
    // Every class appears in equal share in each part.
    for (int c = 0; c < 4; ++c) {
      CHECK(std::count_if(f.test.begin(), f.test.end(), [&](std::size_t i) { return y[i] == c; }) == 20);
      CHECK(std::count_if(f.validation.begin(), f.validation.end(), [&](std::size_t i) { return y[i] == c; }) == 10);
    }
  }
  CHECK(std::all_of(tested.begin(), tested.end(), [](int n) { return n == 1; }));

  const auto again = stratified_kfold(y, 5, 42);
  for (std::size_t f = 0; f < 5; ++f) {
    CHECK(again[f].train == folds[f].train);
    CHECK(again[f].test == folds[f].test);
  }
  CHECK(stratified_kfold(y, 5, 43)[0].test != folds[0].test);
}

TEST_CASE("k-fold: uneven classes give blocks differing by at most one") {
  const auto y = block_labels(2, 13);
  const auto folds = stratified_kfold(y, 5, 1);
  std::size_t lo = 100, hi = 0;
  for (const auto& f : folds) {
    for (int c = 0; c < 2; ++c) {
      const auto n = std::size_t(std::count_if(f.test.begin(), f.test.end(), [&](std::size_t i) { return y[i] == c; }));
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
  }
  CHECK(hi - lo <= 1);
  CHECK_THROWS_AS(stratified_kfold(block_labels(2, 3), 5, 1), ParameterError);
  CHECK_THROWS_AS(stratified_kfold(y, 1, 1), ParameterError);
}

TEST_CASE("crr and report statistics") {
  const std::vector<int> t{0, 1, 2, 3};
  CHECK(crr(std::vector<int>{0, 1, 2, 3}, t) == 1.0);
  CHECK(crr(std::vector<int>{3, 2, 1, 0}, t) == 0.0);
  CHECK(crr(std::vector<int>{0, 1, 0, 0}, t) == 0.5);
  CHECK_THROWS_AS(crr(std::vector<int>{}, std::vector<int>{}), ParameterError);

  ExperimentReport r;
  const std::size_t n[] = {10, 30, 20};
  const std::size_t k[] = {9, 15, 20};
  double weighted = 0, total = 0;
  for (std::size_t f = 0; f < 3; ++f) {
    FoldResult fr;
    fr.fold = f;
    fr.n_test = n[f];
    fr.n_correct = k[f];
    fr.crr = double(k[f]) / double(n[f]);
    r.folds.push_back(fr);
    weighted += fr.crr * double(n[f]);
    total += double(n[f]);
  }
  CHECK(std::abs(r.pooled_crr() - weighted / total) <= 1e-12);
  const double mean = (0.9 + 0.5 + 1.0) / 3;
  CHECK(std::abs(r.mean_crr() - mean) <= 1e-12);
  const double var = (std::pow(0.9 - mean, 2) + std::pow(0.5 - mean, 2) + std::pow(1.0 - mean, 2)) / 3;
  CHECK(std::abs(r.sd_crr() - std::sqrt(var)) <= 1e-12);
}

TEST_CASE("fine-tuning grid and spearman") {
  const auto g = finetune_grid();
  REQUIRE(g.size() == 11);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g[i] - 0.05 * double(i)) <= 1e-12);

  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(spearman(x, std::vector<double>{2, 4, 6, 8, 10}) == doctest::Approx(1.0));
  CHECK(spearman(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
  // Ties take average ranks: ranks (1.5, 1.5, 3) against (1, 2, 3).
  CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{1, 1, 2}) ==
        doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-12));
  CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{1}), ParameterError);
}

TEST_CASE("report and summary formatting") {
  ExperimentReport r;
  r.protocol = "intra-session";
  r.measure = Measure::PLV;
  FoldResult f;
  f.fold = 0;
  f.crr = 0.75;
  f.n_test = 4;
  f.n_correct = 3;
  r.folds.push_back(f);
  std::ostringstream rep, sum;
  write_report(rep, {r});
  write_summary(sum, {r});
  CHECK(rep.str().rfind("protocol\tmeasure\tfold\tcrr\n", 0) == 0);
  CHECK(rep.str().find("intra-session\tplv\t") != std::string::npos);
  CHECK(sum.str().rfind("protocol\tvariant\tmeasure\tfolds\tmean_crr\tsd_crr\n", 0) == 0);
}

TEST_CASE("dataset container round trip") {
  const Dataset d = generate_synthetic(tiny_synth(1));
  const auto bytes = encode_dataset(d);
  const Dataset back = decode_dataset(bytes);
  CHECK(back.layout.names == d.layout.names);
  CHECK(back.subject_count == d.subject_count);
  CHECK(back.sample_rate_hz == d.sample_rate_hz);
  REQUIRE(back.trials.size() == d.trials.size());
  for (std::size_t i = 0; i < d.trials.size(); ++i) {
    CHECK(back.trials[i].subject_id == d.trials[i].subject_id);
    CHECK(back.trials[i].data == d.trials[i].data);  // generator output is float-exact
  }
  CHECK(encode_dataset(back) == bytes);

  const auto path = std::filesystem::temp_directory_path() / "bbnet_test_ds.eegds";
  save_dataset(d, path);
  CHECK(encode_dataset(load_dataset(path)) == bytes);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_dataset(path), IoError);
}

TEST_CASE("dataset container rejects corruption") {
  const Dataset d = generate_synthetic(tiny_synth(2));
  const auto good = encode_dataset(d);

  auto bad = good;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_dataset(bad), FormatError);

  bad = good;
  bad[6] = char(99);  // version byte follows the six-byte magic
  CHECK_THROWS_AS(decode_dataset(bad), FormatError);

  bad = good;
  bad.resize(good.size() - 3);
  CHECK_THROWS_AS(decode_dataset(bad), FormatError);

  bad = good;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_dataset(bad), FormatError);

  bad = good;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bad.data() + bad.size() - sizeof(float), &nan, sizeof(float));
  CHECK_THROWS_AS(decode_dataset(bad), FormatError);

  try {
    bad = good;
    bad.resize(good.size() - 3);
    decode_dataset(bad);
  } catch (const FormatError& e) {
    CHECK(e.offset() > 0);
  }
}

TEST_CASE("generator: determinism, shape and subject identity") {
  const SynthConfig c = tiny_synth(7);
  const Dataset a = generate_synthetic(c);
  const Dataset b = generate_synthetic(c);
  REQUIRE(a.trials.size() == 12);
  for (std::size_t i = 0; i < a.trials.size(); ++i) CHECK(a.trials[i].data == b.trials[i].data);
  CHECK(a.trials[0].data.rows() == 6);
  CHECK(a.trials[0].data.cols() == 256);
  CHECK(a.layout.names == standard_montage(6).names);
  CHECK_NOTHROW(validate_dataset(a));

  SynthConfig other = c;
  other.seed = 8;
  CHECK(generate_synthetic(other).trials[0].data != a.trials[0].data);

  // Without noise the correlation structure separates subjects.
  SynthConfig clean = c;
  clean.snr_db = std::numeric_limits<double>::infinity();
  clean.samples = 1000;
  const Dataset z = generate_synthetic(clean);
  const auto by = z.by_subject();
  const Matrix c0 = pearson_matrix(z.trials[by[0][0]]).weights;
  const Matrix c1 = pearson_matrix(z.trials[by[1][0]]).weights;
  CHECK((c0 - c1).norm() > 0.5);

  SynthConfig broken = c;
  broken.subjects = 1;
  CHECK_THROWS_AS(generate_synthetic(broken), ParameterError);
  broken = c;
  broken.session_shift = -1;
  CHECK_THROWS_AS(generate_synthetic(broken), ParameterError);
}

TEST_CASE("session II with zero shift keeps the coupling structure") {
  SynthConfig c = tiny_synth(9);
  c.snr_db = std::numeric_limits<double>::infinity();
  c.samples = 1000;
  const Dataset s1 = generate_synthetic(c);
  c.session = Session::II;
  const Dataset s2 = generate_synthetic(c);
  CHECK(s2.session == Session::II);
  CHECK(s2.trials[0].data != s1.trials[0].data);
  const Matrix a = pearson_matrix(s1.trials[0]).weights;
  const Matrix b = pearson_matrix(s2.trials[0]).weights;
  const Matrix other = pearson_matrix(s1.trials[s1.by_subject()[1][0]]).weights;
  CHECK((a - b).norm() < (a - other).norm());
}

TEST_CASE("channel subsets and pooling") {
  const Dataset d = generate_synthetic(tiny_synth(3));
  const Dataset sub = restrict_channels(d, {4, 1});
  CHECK(sub.layout.names == std::vector<std::string>{d.layout.names[4], d.layout.names[1]});
  CHECK(sub.trials[2].data.row(0) == d.trials[2].data.row(4));
  CHECK_THROWS_AS(restrict_channels(d, {}), ParameterError);

  // Subsetting commutes with preprocessing.
  PreprocessConfig pc;
  pc.target_hz = 125;
  const Dataset a = preprocess_dataset(sub, pc);
  const Dataset b = restrict_channels(preprocess_dataset(d, pc), {4, 1});
  CHECK((a.trials[0].data - b.trials[0].data).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(a.sample_rate_hz == 125);

  SynthConfig other = tiny_synth(3);
  other.task = Task::MI;
  const Dataset pooled = pool_datasets({d, generate_synthetic(other)});
  CHECK(pooled.trials.size() == 2 * d.trials.size());
  CHECK(pooled.task == d.task);
  SynthConfig fewer = tiny_synth(3);
  fewer.subjects = 2;
  CHECK_THROWS_AS(pool_datasets({d, generate_synthetic(fewer)}), ParameterError);
}

TEST_CASE("electrode groups resolve on the 62-channel layout") {
  const auto groups = load_electrode_groups(std::filesystem::path(BBNET_DATA_DIR) / "electrode_groups.json");
  const ElectrodeLayout layout = standard_montage_62();
  CHECK(resolve_channels(layout, groups, "emotiv").size() == 14);
  CHECK(resolve_channels(layout, groups, "openbci").size() == 8);
  for (const auto& [name, members] : groups) CHECK(resolve_channels(layout, groups, name).size() == members.size());
  const auto picked = resolve_channels(layout, groups, "Cz,Fz");
  REQUIRE(picked.size() == 2);
  CHECK(layout.names[picked[0]] == "Cz");
  CHECK_THROWS_AS(resolve_channels(layout, groups, "nowhere"), ParameterError);
  CHECK_THROWS_AS(resolve_channels(layout, groups, "Cz,Cz"), ParameterError);
  CHECK_THROWS_AS(load_electrode_groups("/nonexistent/groups.json"), IoError);
}

TEST_CASE("cross-session protocol checks its inputs") {
  const Dataset s1 = generate_synthetic(tiny_synth(4));
  SynthConfig c = tiny_synth(4);
  c.subjects = 2;
  c.session = Session::II;
  ExperimentConfig ec;
  ec.repetitions = 1;
  CHECK_THROWS_AS(run_cross_session(s1, generate_synthetic(c), 0.0, Measure::COR, ec), ParameterError);
  c.subjects = 3;
  CHECK_THROWS_AS(run_cross_session(s1, generate_synthetic(c), 0.07, Measure::COR, ec), ParameterError);
}

TEST_CASE("intra-session protocol runs end to end on a small set") {
  SynthConfig c;
  c.subjects = 2;
  c.trials_per_subject = 10;
  c.channels = 4;
  c.samples = 400;
  c.seed = 11;
  const Dataset d = generate_synthetic(c);
  ExperimentConfig ec;
  ec.model.max_epochs = 2;
  ec.model.batch_size = 4;
  ec.model.gconv_dims = {8, 4};
  ec.model.dense_dims = {8, 8};
  std::size_t seen = 0;
  ec.on_model = [&](std::size_t, TrainedModel&) { ++seen; };
  const auto r = run_intra_session(d, Measure::COR, ec);
  CHECK(r.folds.size() == 5);
  CHECK(seen == 5);
  std::size_t tested = 0;
  for (const auto& f : r.folds) {
    tested += f.n_test;
    CHECK(f.crr >= 0.0);
    CHECK(f.crr <= 1.0);
  }
  CHECK(tested == d.trials.size());
  const auto again = run_intra_session(d, Measure::COR, ec);
  for (std::size_t i = 0; i < 5; ++i) CHECK(again.folds[i].crr == r.folds[i].crr);
}
