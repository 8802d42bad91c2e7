#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "tap3/seq_monitor.hpp"

using namespace tap3;

namespace {

struct Brute {
  double mx = 0, my = 0, mz = 0, th = 0;
};

// Plain re-derivation: arithmetic mean, then the largest squared distance.
Brute brute(const std::vector<SeqVector>& s) {
  Brute b;
  for (const auto& v : s) {
    b.mx += v.sseq;
    b.my += v.oseq;
    b.mz += v.dseq_delta;
  }
  b.mx /= s.size();
  b.my /= s.size();
  b.mz /= s.size();
  for (const auto& v : s) {
    const double d = (v.sseq - b.mx) * (v.sseq - b.mx) + (v.oseq - b.my) * (v.oseq - b.my) +
                     (v.dseq_delta - b.mz) * (v.dseq_delta - b.mz);
    b.th = std::max(b.th, d);
  }
  return b;
}

std::vector<SeqVector> random_window(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0, 50);
  std::vector<SeqVector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({u(rng), u(rng), u(rng) / 10});
  return out;
}

}  // namespace

TEST_CASE("untrained windows refuse to classify") {
  TrainingWindow w;
  CHECK_FALSE(w.trained());
  CHECK_THROWS_AS(classify({1, 2, 3}, w), WindowNotTrained);
  CHECK_THROWS_AS(train_threshold(w), WindowNotTrained);
  CHECK_THROWS_AS(mean_vector({}), WindowNotTrained);
  const SeqVector s{1, 1, 1};
  CHECK_THROWS_AS(advance_window(w, std::span<const SeqVector>(&s, 1)), WindowNotTrained);
}

TEST_CASE("threshold, mean and verdicts agree with a brute-force oracle on 500 windows") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const auto samples = random_window(rng, 2 + rng() % 60);
    const TrainingWindow w(samples);
    const Brute b = brute(samples);
    CHECK(w.mean()[0] == doctest::Approx(b.mx));
    CHECK(w.mean()[1] == doctest::Approx(b.my));
    CHECK(w.mean()[2] == doctest::Approx(b.mz));
    CHECK(train_threshold(w) == doctest::Approx(b.th));

    // Every training sample is at most Th away, so none is flagged.
    for (const auto& s : samples) CHECK(classify(s, w).label == Label::Normal);

    for (const auto& probe : random_window(rng, 20)) {
      const double d = (probe.sseq - b.mx) * (probe.sseq - b.mx) +
                       (probe.oseq - b.my) * (probe.oseq - b.my) +
                       (probe.dseq_delta - b.mz) * (probe.dseq_delta - b.mz);
      const auto v = classify(probe, w);
      CHECK(v.distance == doctest::Approx(d));
      // Skip probes within rounding of the boundary.
      if (std::abs(d - b.th) > 1e-9 * (1 + b.th)) {
        CHECK((v.label == Label::Malicious) == (d > b.th));
      }
    }
  }
}

TEST_CASE("a sample exactly at the threshold is normal") {
  const TrainingWindow w({{0, 0, 0}, {2, 0, 0}});
  CHECK(w.threshold() == 1.0);
  CHECK(classify({2, 0, 0}, w).label == Label::Normal);
  CHECK(classify({1, 1, 0}, w).label == Label::Normal);
  CHECK(classify({1, 1, 0.001}, w).label == Label::Malicious);
}

TEST_CASE("advance_window slides FIFO only over clean batches") {
  std::mt19937_64 rng(4);
  auto samples = random_window(rng, 10);
  const TrainingWindow w(samples, 3);
  const Brute b = brute(samples);

  const std::vector<SeqVector> clean{{b.mx, b.my, b.mz}, {b.mx + 0.1, b.my, b.mz}};
  const auto next = advance_window(w, clean);
  CHECK(next.window_index() == 4);
  REQUIRE(next.samples().size() == 10);
  std::vector<SeqVector> expect(samples.begin() + 2, samples.end());
  expect.insert(expect.end(), clean.begin(), clean.end());
  CHECK(next.samples() == expect);
  CHECK(next.threshold() == doctest::Approx(brute(expect).th));

  const std::vector<SeqVector> dirty{{b.mx, b.my, b.mz}, {b.mx + 1e4, b.my, b.mz}};
  CHECK(advance_window(w, dirty) == w);
  CHECK(advance_window(w, {}) == w);
}

TEST_CASE("inflated destination sequence numbers stand out") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> jitter(0, 1);
  std::vector<SeqVector> train;
  for (int i = 0; i < 40; ++i) train.push_back({10 + jitter(rng), 10 + jitter(rng), 1 + jitter(rng) * 0.2});
  const TrainingWindow w(train);
  const double scale = std::sqrt(w.threshold());
  int flagged = 0;
  for (int i = 0; i < 200; ++i) {
    const SeqVector forged{10 + jitter(rng), 10 + jitter(rng), 1 + 3 * scale + std::abs(jitter(rng))};
    flagged += classify(forged, w).label == Label::Malicious;
  }
  CHECK(flagged >= 190);
}

TEST_CASE("verdict rows use a fixed column layout") {
  const TrainingWindow w({{0, 0, 0}, {2, 0, 0}});
  const SeqVector s{5, 0, 0};
  const auto row = verdict_csv_row(4, s, classify(s, w), w.threshold());
  CHECK(row == "4,5,0,0,16,1,Malicious");
}
