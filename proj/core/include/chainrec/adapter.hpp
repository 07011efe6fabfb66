#pragma once

// Trainable linear adapter over frozen embeddings, optimized with a
// diagonal BCE loss plus an in-batch contrastive regularizer:
//
//   L = 1/B * sum_i BCE(S_ii, y_i) + lambda/(B(B-1)) * sum_{i!=j} BCE(S_ij, 0)
//   S_ij = tau * <h(q_i), h(t_j)>,  h(x) = W x / |W x|
//
// where BCE(s, y) = -y log sigmoid(s) - (1-y) log(1 - sigmoid(s)) treats s as
// a logit.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace chainrec {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * cols_, cols_); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  double frobenius_norm() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct AdapterParams {
  Matrix weights;  // dim x dim
  double temperature = 20.0;
  double reg_weight = 1.0;

  std::size_t dim() const { return weights.rows(); }
  /// Throws DataError unless tau > 0, lambda >= 0, W square and finite.
  void validate() const;

  /// Checkpoint: u32 dim, f64 tau, f64 lambda, then dim*dim f64 row-major.
  /// Little-endian throughout.
  void save(const std::filesystem::path& path) const;
  static AdapterParams load(const std::filesystem::path& path);

  friend bool operator==(const AdapterParams&, const AdapterParams&) = default;
};

/// W * vec, L2-normalized. Throws DataError("degenerate projection") when
/// the projection vanishes.
std::vector<double> apply_adapter(const AdapterParams& params, std::span<const double> vec);

struct TrainBatch {
  Matrix queries;  // B x dim
  Matrix targets;  // B x dim, row i is the aligned candidate of query i
  std::vector<int> labels;

  std::size_t size() const { return queries.rows(); }
  void validate() const;
};

Matrix similarity_matrix(const AdapterParams& params, const TrainBatch& batch);

/// Numerically stable BCE with a logit: max(s,0) - s*y + log1p(exp(-|s|)).
double bce_with_logit(double logit, double label);

/// Loss over a similarity matrix. Throws DataError("regularizer undefined")
/// for B = 1 with lambda > 0.
double contrastive_loss(const Matrix& similarity, std::span<const int> labels, double reg_weight);

struct LossAndGradient {
  double loss = 0.0;
  Matrix gradient;  // dL/dW
};

/// Loss and its exact gradient with respect to every entry of W, including
/// the normalization Jacobian.
LossAndGradient loss_gradient(const AdapterParams& params, const TrainBatch& batch);

struct TrainHyper {
  double learning_rate = 0.05;
  int epochs = 50;
  std::uint64_t seed = 7;
  double reg_weight = 1.0;
  double temperature = 20.0;
  double init_noise = 1e-3;
};

struct TrainResult {
  AdapterParams params;
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;  // mean batch loss after each epoch
};

/// Plain mini-batch gradient descent from W = I + uniform noise in
/// [-init_noise, init_noise]. Batch order is reshuffled per epoch from the
/// seed; equal seeds give identical results. Throws DataError on a
/// non-finite loss.
TrainResult train_adapter(const std::vector<TrainBatch>& data, const TrainHyper& hyper);

double mean_loss(const AdapterParams& params, const std::vector<TrainBatch>& data);

/// Packs aligned (query, target) pairs into batches of at most
/// `batch_size`, never placing two pairs with the same query key or the same
/// target key in one batch so no off-diagonal pair is a hidden positive.
/// Only the in-batch off-diagonal pairs act as negatives.
std::vector<TrainBatch> make_train_batches(const std::vector<std::vector<double>>& queries,
                                           const std::vector<std::vector<double>>& targets,
                                           const std::vector<std::string>& query_keys,
                                           const std::vector<std::string>& target_keys,
                                           std::size_t batch_size, std::uint64_t seed);

void write_loss_trace(const TrainResult& result, std::ostream& out);

}  // namespace chainrec
