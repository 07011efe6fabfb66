#include "chainrec/adapter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "chainrec/error.hpp"
#include "json.hpp"

namespace chainrec {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double Matrix::frobenius_norm() const {
  double sq = 0.0;
  for (double v : data_) sq += v * v;
  return std::sqrt(sq);
}

void AdapterParams::validate() const {
  if (!(temperature > 0.0)) throw DataError("adapter temperature must be > 0");
  if (!(reg_weight >= 0.0)) throw DataError("adapter regularizer weight must be >= 0");
  if (weights.rows() != weights.cols()) throw DataError("adapter matrix must be square");
  for (double v : weights.data()) {
    if (!std::isfinite(v)) throw DataError("adapter matrix has non-finite entries");
  }
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError("adapter checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("adapter checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void AdapterParams::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  put_u32(out, static_cast<std::uint32_t>(dim()));
  put_u64(out, std::bit_cast<std::uint64_t>(temperature));
  put_u64(out, std::bit_cast<std::uint64_t>(reg_weight));
  for (double v : weights.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw DataError("failed writing " + path.string());
}

AdapterParams AdapterParams::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open adapter checkpoint " + path.string());
  AdapterParams p;
  const std::size_t dim = get_u32(in);
  p.temperature = std::bit_cast<double>(get_u64(in));
  p.reg_weight = std::bit_cast<double>(get_u64(in));
  p.weights = Matrix(dim, dim);
  for (auto& v : p.weights.data()) v = std::bit_cast<double>(get_u64(in));
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("adapter checkpoint: trailing bytes");
  p.validate();
  return p;
}

namespace {

/// Returns the projection W x and its norm.
std::vector<double> project(const Matrix& w, std::span<const double> x, double& norm) {
  std::vector<double> u(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) s += row[c] * x[c];
    u[r] = s;
  }
  double sq = 0.0;
  for (double v : u) sq += v * v;
  norm = std::sqrt(sq);
  return u;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::vector<double> apply_adapter(const AdapterParams& params, std::span<const double> vec) {
  if (vec.size() != params.weights.cols()) {
    throw DataError("apply_adapter: vector dim " + std::to_string(vec.size()) +
                    " != adapter dim " + std::to_string(params.weights.cols()));
  }
  double norm = 0.0;
  auto u = project(params.weights, vec, norm);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DataError("degenerate projection");
  for (auto& v : u) v /= norm;
  return u;
}

void TrainBatch::validate() const {
  if (queries.rows() != targets.rows() || queries.rows() != labels.size()) {
    throw DataError("train batch: queries, targets and labels differ in length");
  }
  if (queries.cols() != targets.cols()) throw DataError("train batch: query/target dim mismatch");
  if (queries.rows() == 0) throw DataError("train batch is empty");
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("train batch: labels must be 0 or 1");
  }
}

namespace {

Matrix adapt_rows(const AdapterParams& params, const Matrix& rows) {
  Matrix out(rows.rows(), params.dim());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto h = apply_adapter(params, rows.row(i));
    std::copy(h.begin(), h.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

Matrix similarity_matrix(const AdapterParams& params, const TrainBatch& batch) {
  batch.validate();
  if (batch.queries.cols() != params.dim()) throw DataError("similarity_matrix: dim mismatch");
  const Matrix hq = adapt_rows(params, batch.queries);
  const Matrix ht = adapt_rows(params, batch.targets);
  const std::size_t b = batch.size();
  Matrix s(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) s(i, j) = params.temperature * dot(hq.row(i), ht.row(j));
  }
  return s;
}

double bce_with_logit(double logit, double label) {
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

double contrastive_loss(const Matrix& similarity, std::span<const int> labels, double reg_weight) {
  const std::size_t b = similarity.rows();
  if (b == 0 || similarity.cols() != b || labels.size() != b) {
    throw DataError("loss: similarity must be B x B with B labels");
  }
  if (b == 1 && reg_weight > 0.0) throw DataError("regularizer undefined for a batch of one");
  double diag = 0.0;
  for (std::size_t i = 0; i < b; ++i) diag += bce_with_logit(similarity(i, i), labels[i]);
  double loss = diag / static_cast<double>(b);
  if (reg_weight > 0.0) {
    double off = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        if (i != j) off += bce_with_logit(similarity(i, j), 0.0);
      }
    }
    loss += reg_weight * off / static_cast<double>(b * (b - 1));
  }
  return loss;
}

LossAndGradient loss_gradient(const AdapterParams& params, const TrainBatch& batch) {
  batch.validate();
  const std::size_t b = batch.size();
  const std::size_t dim = params.dim();
  if (batch.queries.cols() != dim) throw DataError("loss_gradient: dim mismatch");
  if (b == 1 && params.reg_weight > 0.0) throw DataError("regularizer undefined for a batch of one");

  std::vector<std::vector<double>> hq(b), ht(b);
  std::vector<double> nq(b), nt(b);
  for (std::size_t i = 0; i < b; ++i) {
    hq[i] = project(params.weights, batch.queries.row(i), nq[i]);
    ht[i] = project(params.weights, batch.targets.row(i), nt[i]);
    if (!(nq[i] > 0.0) || !(nt[i] > 0.0)) throw DataError("degenerate projection");
    for (auto& v : hq[i]) v /= nq[i];
    for (auto& v : ht[i]) v /= nt[i];
  }

  Matrix s(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) s(i, j) = params.temperature * dot(hq[i], ht[j]);
  }

  LossAndGradient out;
  out.loss = contrastive_loss(s, batch.labels, params.reg_weight);

  // dL/dS
  Matrix g(b, b);
  const double off_scale =
      b > 1 ? params.reg_weight / static_cast<double>(b * (b - 1)) : 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      g(i, j) = i == j ? (sigmoid(s(i, i)) - batch.labels[i]) / static_cast<double>(b)
                       : off_scale * sigmoid(s(i, j));
    }
  }

  out.gradient = Matrix(dim, dim);
  std::vector<double> dh(dim);
  auto accumulate = [&](const std::vector<double>& h, double norm, std::span<const double> x) {
    // Project out the radial component: d(u/|u|)/du = (I - h h^T) / |u|.
    const double radial = dot(h, dh);
    for (std::size_t r = 0; r < dim; ++r) {
      const double du = (dh[r] - h[r] * radial) / norm;
      if (du == 0.0) continue;
      auto grow = out.gradient.row(r);
      for (std::size_t c = 0; c < dim; ++c) grow[c] += du * x[c];
    }
  };
  for (std::size_t i = 0; i < b; ++i) {
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t j = 0; j < b; ++j) {
      const double w = params.temperature * g(i, j);
      for (std::size_t d = 0; d < dim; ++d) dh[d] += w * ht[j][d];
    }
    accumulate(hq[i], nq[i], batch.queries.row(i));
  }
  for (std::size_t j = 0; j < b; ++j) {
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      const double w = params.temperature * g(i, j);
      for (std::size_t d = 0; d < dim; ++d) dh[d] += w * hq[i][d];
    }
    accumulate(ht[j], nt[j], batch.targets.row(j));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace

double mean_loss(const AdapterParams& params, const std::vector<TrainBatch>& data) {
  double sum = 0.0;
  for (const auto& batch : data) {
    sum += contrastive_loss(similarity_matrix(params, batch), batch.labels, params.reg_weight);
  }
  return sum / static_cast<double>(data.size());
}

TrainResult train_adapter(const std::vector<TrainBatch>& data, const TrainHyper& hyper) {
  if (data.empty()) throw DataError("train_adapter: no training batches");
  if (hyper.epochs < 0) throw UsageError("train_adapter: epochs must be >= 0");
  const std::size_t dim = data.front().queries.cols();

  std::mt19937_64 rng(hyper.seed);
  TrainResult result;
  result.params.temperature = hyper.temperature;
  result.params.reg_weight = hyper.reg_weight;
  result.params.weights = Matrix::identity(dim);
  for (auto& v : result.params.weights.data()) {
    v += (2.0 * unit_uniform(rng) - 1.0) * hyper.init_noise;
  }
  result.params.validate();

  result.initial_loss = mean_loss(result.params, data);
  if (!std::isfinite(result.initial_loss)) throw DataError("train_adapter: non-finite initial loss");

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle(order, rng);
    for (auto idx : order) {
      auto step = loss_gradient(result.params, data[idx]);
      if (!std::isfinite(step.loss)) {
        throw DataError("train_adapter: non-finite loss at epoch " + std::to_string(epoch + 1));
      }
      auto& w = result.params.weights.data();
      const auto& grad = step.gradient.data();
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= hyper.learning_rate * grad[k];
    }
    const double loss = mean_loss(result.params, data);
    if (!std::isfinite(loss)) {
      throw DataError("train_adapter: non-finite loss after epoch " + std::to_string(epoch + 1));
    }
    result.epoch_losses.push_back(loss);
  }
  return result;
}

std::vector<TrainBatch> make_train_batches(const std::vector<std::vector<double>>& queries,
                                           const std::vector<std::vector<double>>& targets,
                                           const std::vector<std::string>& query_keys,
                                           const std::vector<std::string>& target_keys,
                                           std::size_t batch_size, std::uint64_t seed) {
  const std::size_t n = queries.size();
  if (targets.size() != n || query_keys.size() != n || target_keys.size() != n) {
    throw DataError("make_train_batches: inputs differ in length");
  }
  if (batch_size < 2) throw UsageError("batch size must be >= 2");
  if (n == 0) return {};
  const std::size_t dim = queries.front().size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  shuffle(order, rng);

  struct Open {
    std::vector<std::size_t> members;
    std::set<std::string> qkeys, tkeys;
  };
  std::vector<Open> groups;
  for (auto idx : order) {
    if (queries[idx].size() != dim || targets[idx].size() != dim) {
      throw DataError("make_train_batches: vectors differ in dimension");
    }
    Open* slot = nullptr;
    for (auto& g : groups) {
      if (g.members.size() < batch_size && !g.qkeys.contains(query_keys[idx]) &&
          !g.tkeys.contains(target_keys[idx])) {
        slot = &g;
        break;
      }
    }
    if (slot == nullptr) slot = &groups.emplace_back();
    slot->members.push_back(idx);
    slot->qkeys.insert(query_keys[idx]);
    slot->tkeys.insert(target_keys[idx]);
  }

  std::vector<TrainBatch> batches;
  for (const auto& g : groups) {
    // A single pair has no in-batch negatives.
    if (g.members.size() < 2) continue;
    TrainBatch batch{Matrix(g.members.size(), dim), Matrix(g.members.size(), dim),
                     std::vector<int>(g.members.size(), 1)};
    for (std::size_t r = 0; r < g.members.size(); ++r) {
      std::copy(queries[g.members[r]].begin(), queries[g.members[r]].end(), batch.queries.row(r).begin());
      std::copy(targets[g.members[r]].begin(), targets[g.members[r]].end(), batch.targets.row(r).begin());
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

void write_loss_trace(const TrainResult& result, std::ostream& out) {
  out << nlohmann::json{{"epoch", 0}, {"loss", result.initial_loss}}.dump() << '\n';
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    out << nlohmann::json{{"epoch", e + 1}, {"loss", result.epoch_losses[e]}}.dump() << '\n';
  }
}

}  // namespace chainrec
