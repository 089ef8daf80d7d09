#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace glarma {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the linear predictor W stops being finite.
class OverflowError : public Error {
 public:
  OverflowError(int condition, int replicate, int position)
      : Error("non-finite linear predictor W at (condition=" + std::to_string(condition) +
              ", replicate=" + std::to_string(replicate) + ", t=" + std::to_string(position) + ")"),
        condition_(condition),
        replicate_(replicate),
        position_(position) {}

  int condition() const noexcept { return condition_; }
  int replicate() const noexcept { return replicate_; }
  int position() const noexcept { return position_; }

 private:
  int condition_;
  int replicate_;
  int position_;
};

class InputError : public Error {
 public:
  using Error::Error;
};

/// Dense count panel Y(i, j, t): condition i, replicate j < n_i, series position t < T.
/// All indices are zero-based. Each (i, j) series is stored contiguously so the
/// recursions can walk it with a span.
class PanelData {
 public:
  PanelData() = default;

  PanelData(std::vector<int> replicates_per_condition, int length)
      : reps_(std::move(replicates_per_condition)), length_(length) {
    if (reps_.empty()) throw InputError("panel needs at least one condition");
    if (length_ < 1) throw InputError("panel series length must be positive");
    offsets_.resize(reps_.size() + 1, 0);
    for (std::size_t i = 0; i < reps_.size(); ++i) {
      if (reps_[i] < 1) throw InputError("condition " + std::to_string(i) + " has no replicates");
      offsets_[i + 1] = offsets_[i] + reps_[i];
    }
    counts_.assign(static_cast<std::size_t>(offsets_.back()) * length_, 0.0);
  }

  int conditions() const noexcept { return static_cast<int>(reps_.size()); }
  int replicates(int i) const { return reps_.at(i); }
  const std::vector<int>& replicate_counts() const noexcept { return reps_; }
  int length() const noexcept { return length_; }

  /// Number of (i, j) series.
  int series_count() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
  /// Flat series index of (i, j).
  int series_index(int i, int j) const noexcept { return offsets_[i] + j; }
  int condition_of(int series) const noexcept {
    int i = 0;
    while (offsets_[i + 1] <= series) ++i;
    return i;
  }

  double operator()(int i, int j, int t) const noexcept {
    return counts_[static_cast<std::size_t>(series_index(i, j)) * length_ + t];
  }

  void set(int i, int j, int t, std::int64_t count) {
    if (count < 0) {
      throw InputError("negative count at (condition=" + std::to_string(i) +
                       ", replicate=" + std::to_string(j) + ", t=" + std::to_string(t) + ")");
    }
    counts_[static_cast<std::size_t>(series_index(i, j)) * length_ + t] = static_cast<double>(count);
  }

  std::span<const double> series(int s) const noexcept {
    return {counts_.data() + static_cast<std::size_t>(s) * length_, static_cast<std::size_t>(length_)};
  }
  std::span<const double> series(int i, int j) const noexcept { return series(series_index(i, j)); }

  std::span<const double> raw() const noexcept { return counts_; }

  std::int64_t total_cells() const noexcept { return static_cast<std::int64_t>(counts_.size()); }

  bool operator==(const PanelData&) const = default;

 private:
  std::vector<int> reps_;
  std::vector<int> offsets_;
  int length_ = 0;
  std::vector<double> counts_;
};

/// Linear-predictor parameters: eta is conditions x length, gamma holds the q
/// moving-average feedback coefficients (q = 0 is the plain Poisson GLM).
struct GlarmaParams {
  Eigen::MatrixXd eta;
  Eigen::VectorXd gamma;

  int q() const noexcept { return static_cast<int>(gamma.size()); }

  void check_against(const PanelData& data) const {
    if (eta.rows() != data.conditions() || eta.cols() != data.length()) {
      throw Error("eta has shape " + std::to_string(eta.rows()) + "x" + std::to_string(eta.cols()) +
                  ", panel needs " + std::to_string(data.conditions()) + "x" +
                  std::to_string(data.length()));
    }
    if (!eta.allFinite() || !gamma.allFinite()) throw Error("parameters contain non-finite entries");
  }
};

/// Column order used for every eta-indexed vector: all positions of condition 0,
/// then condition 1, and so on. Keeps the eta-Hessian block diagonal.
inline int eta_index(int i, int t, int length) noexcept { return i * length + t; }

inline Eigen::VectorXd flatten_eta(const Eigen::MatrixXd& eta) {
  Eigen::VectorXd v(eta.size());
  for (Eigen::Index i = 0; i < eta.rows(); ++i) v.segment(i * eta.cols(), eta.cols()) = eta.row(i).transpose();
  return v;
}

inline Eigen::MatrixXd unflatten_eta(const Eigen::VectorXd& v, int conditions, int length) {
  Eigen::MatrixXd eta(conditions, length);
  for (int i = 0; i < conditions; ++i) eta.row(i) = v.segment(i * length, length).transpose();
  return eta;
}

}  // namespace glarma
