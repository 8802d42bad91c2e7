#pragma once

// Dynamic learning of normal sequence-number behaviour. A node collects the
// 3-component vectors y_i seen on the RREQ/RREP pairs it relays, learns their
// mean and the largest squared distance from that mean (the threshold Th),
// and classifies later samples against it.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tap3 {

struct SeqVector {
  double sseq = 0;
  double oseq = 0;
  double dseq_delta = 0;
  bool operator==(const SeqVector&) const = default;
};

using Vec3 = std::array<double, 3>;

class WindowNotTrained : public std::logic_error {
 public:
  WindowNotTrained() : std::logic_error("window not trained") {}
};

enum class Label { Normal, Malicious };
const char* to_string(Label label);

struct Verdict {
  Label label = Label::Normal;
  double distance = 0;
};

Vec3 mean_vector(std::span<const SeqVector> samples);

/// Squared Euclidean distance |y - mean|^2.
double distance(const SeqVector& sample, const Vec3& mean);

class TrainingWindow {
 public:
  TrainingWindow() = default;
  explicit TrainingWindow(std::vector<SeqVector> samples, std::uint64_t window_index = 0);

  const std::vector<SeqVector>& samples() const { return samples_; }
  const Vec3& mean() const { return mean_; }
  double threshold() const { return threshold_; }
  std::uint64_t window_index() const { return window_index_; }
  bool trained() const { return !samples_.empty(); }

  /// Appends a training sample; mean and threshold are recomputed.
  void add(const SeqVector& sample);
  void retrain();

  bool operator==(const TrainingWindow&) const = default;

 private:
  friend TrainingWindow advance_window(const TrainingWindow&, std::span<const SeqVector>);
  std::vector<SeqVector> samples_;
  Vec3 mean_{};
  double threshold_ = 0;
  std::uint64_t window_index_ = 0;
};

/// Th = max_i d(y_i). Callers vouch that the window was collected while no
/// malicious node was active.
double train_threshold(const TrainingWindow& window);

/// Malicious iff d(y) > Th; d(y) == Th is Normal.
Verdict classify(const SeqVector& sample, const TrainingWindow& window);

/// If every sample in the batch classifies Normal, the batch replaces the
/// oldest |batch| training samples (FIFO) and the window retrains. Otherwise
/// the window is returned unchanged.
TrainingWindow advance_window(const TrainingWindow& window,
                              std::span<const SeqVector> new_samples);

/// `node_id,sseq,oseq,dseq_delta,distance,threshold,label`
std::string verdict_csv_row(std::uint32_t node_id, const SeqVector& sample,
                            const Verdict& verdict, double threshold);

}  // namespace tap3
