#include "tap3/seq_monitor.hpp"

#include <algorithm>
#include <cstdio>

namespace tap3 {

const char* to_string(Label label) {
  return label == Label::Malicious ? "Malicious" : "Normal";
}

Vec3 mean_vector(std::span<const SeqVector> samples) {
  if (samples.empty()) throw WindowNotTrained();
  Vec3 sum{};
  for (const auto& s : samples) {
    sum[0] += s.sseq;
    sum[1] += s.oseq;
    sum[2] += s.dseq_delta;
  }
  const double n = static_cast<double>(samples.size());
  return {sum[0] / n, sum[1] / n, sum[2] / n};
}

double distance(const SeqVector& sample, const Vec3& mean) {
  const double a = sample.sseq - mean[0];
  const double b = sample.oseq - mean[1];
  const double c = sample.dseq_delta - mean[2];
  return a * a + b * b + c * c;
}

TrainingWindow::TrainingWindow(std::vector<SeqVector> samples, std::uint64_t window_index)
    : samples_(std::move(samples)), window_index_(window_index) {
  if (!samples_.empty()) retrain();
}

void TrainingWindow::add(const SeqVector& sample) {
  samples_.push_back(sample);
  retrain();
}

void TrainingWindow::retrain() {
  mean_ = mean_vector(samples_);
  threshold_ = train_threshold(*this);
}

double train_threshold(const TrainingWindow& window) {
  const auto& samples = window.samples();
  if (samples.empty()) throw WindowNotTrained();
  const Vec3 mean = mean_vector(samples);
  double th = 0;
  for (const auto& s : samples) th = std::max(th, distance(s, mean));
  return th;
}

Verdict classify(const SeqVector& sample, const TrainingWindow& window) {
  if (!window.trained()) throw WindowNotTrained();
  const double d = distance(sample, window.mean());
  return Verdict{d > window.threshold() ? Label::Malicious : Label::Normal, d};
}

TrainingWindow advance_window(const TrainingWindow& window,
                              std::span<const SeqVector> new_samples) {
  if (!window.trained()) throw WindowNotTrained();
  if (new_samples.empty()) return window;
  for (const auto& s : new_samples) {
    if (classify(s, window).label == Label::Malicious) return window;
  }
  TrainingWindow next = window;
  const std::size_t keep_size = window.samples_.size();
  next.samples_.insert(next.samples_.end(), new_samples.begin(), new_samples.end());
  const std::size_t excess = next.samples_.size() - keep_size;
  next.samples_.erase(next.samples_.begin(),
                      next.samples_.begin() + static_cast<std::ptrdiff_t>(excess));
  next.window_index_ = window.window_index_ + 1;
  next.retrain();
  return next;
}

std::string verdict_csv_row(std::uint32_t node_id, const SeqVector& sample,
                            const Verdict& verdict, double threshold) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%u,%.17g,%.17g,%.17g,%.17g,%.17g,%s", node_id, sample.sseq,
                sample.oseq, sample.dseq_delta, verdict.distance, threshold,
                to_string(verdict.label));
  return buf;
}

}  // namespace tap3
