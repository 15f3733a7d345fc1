// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "ogc/config.hpp"
#include "ogc/loss_queue.hpp"
#include "ogc/metrics.hpp"
#include "ogc/trainer.hpp"

using namespace ogc;
using doctest::Approx;

namespace {

std::vector<std::uint8_t> be32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8),
          static_cast<std::uint8_t>(v)};
}

std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint32_t r, std::uint32_t c) {
  std::vector<std::uint8_t> b;
  for (auto v : {kIdxImageMagic, n, r, c}) {
    const auto w = be32(v);
    b.insert(b.end(), w.begin(), w.end());
  }
  for (std::uint32_t i = 0; i < n * r * c; ++i) b.push_back(static_cast<std::uint8_t>(i % 256));
  return b;
}

std::vector<std::uint8_t> idx_labels(std::uint32_t n) {
  std::vector<std::uint8_t> b;
  for (auto v : {kIdxLabelMagic, n}) {
    const auto w = be32(v);
    b.insert(b.end(), w.begin(), w.end());
  }
  for (std::uint32_t i = 0; i < n; ++i) b.push_back(static_cast<std::uint8_t>(i % 10));
  return b;
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n_train = 320;
  c.n_test = 400;
  c.batch_size = 32;
  c.epochs = 32;
  c.lr_milestones = {20};
  return c;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("loss queue is FIFO") {
  LossQueue q(3);
  CHECK_THROWS(LossQueue(0));
  q.push(1.0, true);
  q.push(2.0);
  CHECK(q.values() == std::vector<double>{1.0, 2.0});
  q.push(3.0, false);
  q.push(4.0, true);
  CHECK(q.full());
  CHECK(q.values() == std::vector<double>{2.0, 3.0, 4.0});
  CHECK(q.flags() == std::vector<std::int8_t>{-1, 0, 1});
}

TEST_CASE("update cadence") {
  auto c = small_config();
  c.epochs = 32;  // 10 steps per epoch, 320 steps
  const auto r = train(c);
  REQUIRE(r.total_steps == 320);
  REQUIRE(r.updates.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(r.updates[i].step == 32 * static_cast<long>(i + 1));
  CHECK(r.metrics.size() == 32);
}

TEST_CASE("fixed strategy keeps a constant threshold") {
  auto c = small_config();
  c.strategy = "fixed";
  c.fixed_tau = 3.0;
  const auto r = train(c);
  for (const auto& u : r.updates) CHECK(u.tau == 3.0);
  for (const auto& m : r.metrics) CHECK(m.tau == 3.0);
}

TEST_CASE("clean data: optimized clipping follows plain CE") {
  // Well separated classes, so clean losses form one mode.
  auto c = small_config();
  c.noise = "none";
  c.blob_spread = 0.15;
  c.epochs = 40;
  const auto ogc_run = train(c);
  c.strategy = "none";
  const auto ce_run = train(c);
  int unattainable = 0;
  for (const auto& u : ogc_run.updates) unattainable += u.status == SolveStatus::Unattainable;
  CHECK(unattainable == static_cast<int>(ogc_run.updates.size()));
  CHECK(std::abs(last_epochs_mean_accuracy(ogc_run.metrics) - last_epochs_mean_accuracy(ce_run.metrics)) <= 0.01);
}

TEST_CASE("proxy ratio tracks the flip-mask ratio") {
  // Default run: blobs with 40% symmetric noise, optimized clipping.
  const auto r = train(ExperimentConfig{});
  std::vector<double> proxy, truth;
  for (const auto& u : r.updates) {
    if (std::isfinite(u.ratio) && std::isfinite(u.true_ratio)) {
      proxy.push_back(u.ratio);
      truth.push_back(u.true_ratio);
    }
  }
  REQUIRE(proxy.size() >= 10);
  CHECK(spearman(proxy, truth) > 0.5);
}

TEST_CASE("sanity: separable blobs are learned") {
  ExperimentConfig c;
  c.noise = "none";
  c.blob_spread = 0.15;
  c.n_train = 400;
  c.n_test = 1000;
  c.epochs = 30;
  c.strategy = "none";
  const auto r = train(c);
  CHECK(r.metrics.back().test_acc >= 0.99);
}

TEST_CASE("evaluate") {
  BlobsOptions o;
  o.n = 300;
  o.num_classes = 3;
  const Dataset d = make_blobs(o, 1);
  const auto zero = MlpModel::zeros({2, 3});
  CHECK(evaluate(zero, d) == Approx(1.0 / 3).epsilon(0.02));
  Dataset empty;
  empty.dim = 2;
  empty.num_classes = 3;
  CHECK_THROWS(evaluate(zero, empty));
  // a linear model that reads the class off a one-hot feature
  Dataset onehot;
  onehot.dim = 3;
  onehot.num_classes = 3;
  for (int i = 0; i < 30; ++i) {
    for (int k = 0; k < 3; ++k) onehot.features.push_back(k == i % 3 ? 1.0 : 0.0);
    onehot.labels.push_back(i % 3);
  }
  auto id = MlpModel::zeros({3, 3});
  id.layers()[0].weight = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  CHECK(evaluate(id, onehot) == 1.0);
}

TEST_CASE("distribution export") {
  auto c = small_config();
  c.noise = "none";
  const auto data = prepare_data(c);
  const auto m = MlpModel::he_uniform(model_dims(c, data.train.data), 1);
  const auto path = std::filesystem::temp_directory_path() / "ogc_dist_test.csv";
  export_distribution(m, data.train, BaseLoss::ce(), path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "index,H,grad_norm,flipped");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.back() == '0');
  }
  CHECK(rows == 320);
  std::filesystem::remove(path);
}

TEST_CASE("datasets") {
  BlobsOptions o;
  o.n = 1000;
  const auto a = make_blobs(o, 7);
  const auto b = make_blobs(o, 7);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  const auto m = make_moons(200, 0.1, 3);
  CHECK(m.size() == 200);
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("IDX parsing") {
  const auto img = parse_idx_images(idx_images(10, 28, 28));
  CHECK(img.count == 10);
  CHECK(img.rows * img.cols == 784);
  CHECK(img.pixels.size() == 7840);
  CHECK(img.pixels[255] == Approx(1.0));
  auto broken = idx_images(2, 2, 2);
  broken[3] = 0x02;
  CHECK_THROWS_AS(parse_idx_images(broken), IdxParseError);
  auto truncated = idx_images(2, 2, 2);
  truncated.pop_back();
  CHECK_THROWS_AS(parse_idx_images(truncated), IdxParseError);
  CHECK(parse_idx_labels(idx_labels(12)).size() == 12);

  const auto dir = std::filesystem::temp_directory_path();
  write_bytes(dir / "ogc_img.idx", idx_images(10, 4, 4));
  write_bytes(dir / "ogc_lbl.idx", idx_labels(10));
  write_bytes(dir / "ogc_lbl_short.idx", idx_labels(9));
  const auto d = load_idx(dir / "ogc_img.idx", dir / "ogc_lbl.idx");
  CHECK(d.size() == 10);
  CHECK(d.dim == 16);
  CHECK(load_idx(dir / "ogc_img.idx", dir / "ogc_lbl.idx", 4).size() == 4);
  CHECK_THROWS(load_idx(dir / "ogc_img.idx", dir / "ogc_lbl_short.idx"));
  for (const char* f : {"ogc_img.idx", "ogc_lbl.idx", "ogc_lbl_short.idx"}) std::filesystem::remove(dir / f);
}

TEST_CASE("config parsing") {
  const auto c = parse_config("# comment\nstrategy = \"fixed\"\nfixed_tau = 3\nhidden = [16, 8]\nepochs = 5\n");
  CHECK(c.strategy == "fixed");
  CHECK(c.fixed_tau == 3.0);
  CHECK(c.hidden == std::vector<double>{16, 8});
  CHECK(c.epochs == 5);
  CHECK_THROWS_AS(parse_config("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epochs = 1\nepochs = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[table]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epochs = \"many\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("noise_rate = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("strategy = \"bogus\"\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/ogc.toml"), ConfigError);
  ExperimentConfig d;
  d.lr = 0.1 + 1e-17;
  d.epsilon0 = 1.0 / 3.0;
  const auto back = parse_config(to_config_text(d));
  CHECK(to_config_text(back) == to_config_text(d));
  CHECK(back.epsilon0 == d.epsilon0);
}

TEST_CASE("metrics csv") {
  auto c = small_config();
  c.epochs = 3;
  const auto r = train(c);
  const auto s = metrics_csv(r.metrics);
  CHECK(s.rfind(std::string(kMetricsHeader) + "\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}

TEST_CASE("sweep table schema") {
  auto c = small_config();
  c.n_train = 64;
  c.n_test = 64;
  c.epochs = 2;
  SweepOptions o;
  const auto rows = run_sweep(c, o);
  const auto csv = sweep_csv(rows, o.columns);
  CHECK(rows.size() == 4);
  CHECK(csv.rfind("method,sym_50,sym_80,asymmetric,dependent,real,average\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}
