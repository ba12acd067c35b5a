#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stylekit/error.hpp"
#include "stylekit/jsonl.hpp"
#include "stylekit/random.hpp"

namespace stylekit {

struct TrainingMeta {
  std::uint64_t seed = 0;
  double margin = 0.1;
  double learning_rate = 1e-4;
  std::size_t batch_size = 512;
  std::size_t epochs_run = 0;

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

/// Affine style encoder f(x) = W x (+ b) over frozen base vectors.
struct EncoderModel {
  Eigen::MatrixXd weights;  // d_out x d_in
  std::optional<Eigen::VectorXd> bias;
  TrainingMeta meta;

  std::size_t d_in() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t d_out() const { return static_cast<std::size_t>(weights.rows()); }

  static EncoderModel identity(std::size_t dim, bool with_bias = false) {
    EncoderModel m;
    m.weights = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    if (with_bias) m.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    return m;
  }

  /// Gaussian init with the given standard deviation.
  static EncoderModel random(std::size_t d_out, std::size_t d_in, double stddev, Rng& rng, bool with_bias = false) {
    EncoderModel m;
    m.weights.resize(static_cast<Eigen::Index>(d_out), static_cast<Eigen::Index>(d_in));
    for (Eigen::Index r = 0; r < m.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < m.weights.cols(); ++c) m.weights(r, c) = stddev * rng.normal();
    if (with_bias) {
      m.bias = Eigen::VectorXd(static_cast<Eigen::Index>(d_out));
      for (Eigen::Index r = 0; r < m.bias->size(); ++r) (*m.bias)(r) = stddev * rng.normal();
    }
    return m;
  }

  bool is_finite() const { return weights.allFinite() && (!bias || bias->allFinite()); }
};

struct TrainConfig {
  double margin = 0.1;
  double learning_rate = 1e-4;
  std::size_t batch_size = 512;
  double val_fraction = 0.1;
  std::size_t patience_epochs = 1;
  std::size_t max_epochs = 50;
  std::uint64_t seed = 0;
  /// Heavy-ball coefficient; 0 gives plain gradient descent.
  double momentum = 0.0;

  void validate() const {
    if (!(margin > 0.0)) throw PreconditionError("margin must be > 0");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw PreconditionError("val_fraction must be in (0, 1)");
    if (batch_size < 1) throw PreconditionError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw PreconditionError("learning_rate must be > 0");
    if (max_epochs < 1) throw PreconditionError("max_epochs must be >= 1");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw PreconditionError("momentum must be in [0, 1)");
  }
};

struct VectorTriplet {
  std::vector<double> a, p, n;
};

namespace detail {

inline Eigen::Map<const Eigen::VectorXd> as_eigen(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

inline void check_triplet_dims(const VectorTriplet& t, std::size_t d_in) {
  if (t.a.size() != d_in || t.p.size() != d_in || t.n.size() != d_in)
    throw DimensionError("triplet vectors must have length " + std::to_string(d_in));
}

}  // namespace detail

inline std::vector<double> encode(const EncoderModel& model, std::span<const double> x) {
  if (x.size() != model.d_in())
    throw DimensionError("encode: input length " + std::to_string(x.size()) + ", model d_in " +
                         std::to_string(model.d_in()));
  Eigen::VectorXd y = model.weights * detail::as_eigen(x);
  if (model.bias) y += *model.bias;
  return {y.data(), y.data() + y.size()};
}

struct ModelGradient {
  Eigen::MatrixXd weights;
  std::optional<Eigen::VectorXd> bias;
};

struct LossResult {
  double loss = 0.0;
  ModelGradient grad;
  std::size_t active = 0;
};

/// Signed hinge argument d(a,p) - d(a,n) + margin with squared L2 distances.
inline double hinge_argument(const EncoderModel& model, const VectorTriplet& t, double margin) {
  const auto a = detail::as_eigen(t.a);
  const Eigen::VectorXd u = model.weights * (a - detail::as_eigen(t.p));
  const Eigen::VectorXd v = model.weights * (a - detail::as_eigen(t.n));
  return u.squaredNorm() - v.squaredNorm() + margin;
}

/// Summed triplet margin loss over the batch and its exact subgradient.
/// With f(x) = W x + b the bias cancels in every difference, so distances are
/// taken on W(a - p), W(a - n) and the bias gradient is identically zero.
/// Terms with a hinge argument <= 0 contribute nothing.
inline LossResult triplet_loss(const EncoderModel& model, std::span<const VectorTriplet> batch, double margin) {
  if (batch.empty()) throw PreconditionError("triplet_loss: empty batch");
  const std::size_t d_in = model.d_in();
  LossResult r;
  r.grad.weights = Eigen::MatrixXd::Zero(model.weights.rows(), model.weights.cols());
  if (model.bias) r.grad.bias = Eigen::VectorXd::Zero(model.bias->size());
  Eigen::VectorXd d1(static_cast<Eigen::Index>(d_in)), d2(static_cast<Eigen::Index>(d_in));
  for (const auto& t : batch) {
    detail::check_triplet_dims(t, d_in);
    const auto a = detail::as_eigen(t.a);
    d1 = a - detail::as_eigen(t.p);
    d2 = a - detail::as_eigen(t.n);
    const Eigen::VectorXd u = model.weights * d1;
    const Eigen::VectorXd v = model.weights * d2;
    const double h = u.squaredNorm() - v.squaredNorm() + margin;
    if (!std::isfinite(h)) throw NumericError("triplet_loss: non-finite intermediate");
    if (h <= 0.0) continue;
    r.loss += h;
    ++r.active;
    r.grad.weights.noalias() += 2.0 * u * d1.transpose();
    r.grad.weights.noalias() -= 2.0 * v * d2.transpose();
  }
  return r;
}

/// Loss value only; used by finite differences and validation.
inline double triplet_loss_value(const EncoderModel& model, std::span<const VectorTriplet> batch, double margin) {
  double total = 0.0;
  for (const auto& t : batch) {
    detail::check_triplet_dims(t, model.d_in());
    total += std::max(0.0, hinge_argument(model, t, margin));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Gradient verification

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked_triplets = 0;
  std::size_t skipped_boundary = 0;
};

/// Compares the analytic gradient with central differences entry by entry.
/// Triplets within 10*epsilon of the hinge kink are reported and skipped.
inline GradCheckResult grad_check(const EncoderModel& model, std::span<const VectorTriplet> batch, double margin,
                                  double epsilon) {
  if (!(epsilon > 0.0)) throw PreconditionError("grad_check: epsilon must be > 0");
  GradCheckResult out;
  std::vector<VectorTriplet> kept;
  for (const auto& t : batch) {
    if (std::abs(hinge_argument(model, t, margin)) <= 10.0 * epsilon) {
      ++out.skipped_boundary;
      continue;
    }
    kept.push_back(t);
  }
  out.checked_triplets = kept.size();
  if (kept.empty()) return out;

  const auto analytic = triplet_loss(model, kept, margin);
  EncoderModel probe = model;
  auto rel = [](double g, double fd) {
    const double denom = std::max(std::abs(g), std::abs(fd));
    return denom == 0.0 ? 0.0 : std::abs(g - fd) / denom;
  };
  auto central = [&](double& param) {
    const double saved = param;
    param = saved + epsilon;
    const double plus = triplet_loss_value(probe, kept, margin);
    param = saved - epsilon;
    const double minus = triplet_loss_value(probe, kept, margin);
    param = saved;
    return (plus - minus) / (2.0 * epsilon);
  };
  for (Eigen::Index r = 0; r < probe.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < probe.weights.cols(); ++c)
      out.max_relative_error =
          std::max(out.max_relative_error, rel(analytic.grad.weights(r, c), central(probe.weights(r, c))));
  if (probe.bias)
    for (Eigen::Index r = 0; r < probe.bias->size(); ++r)
      out.max_relative_error = std::max(out.max_relative_error, rel((*analytic.grad.bias)(r), central((*probe.bias)(r))));
  return out;
}

// ---------------------------------------------------------------------------
// Training loop

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per-triplet loss over the epoch's batches
  double val_loss = 0.0;    // mean per-triplet loss on the validation split after the epoch

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  EncoderModel model;  // best-validation snapshot
  std::vector<EpochRecord> history;
  double initial_val_loss = 0.0;
  std::size_t best_epoch = 0;  // 0 means the initial model was never improved on
};

inline double mean_loss(const EncoderModel& model, std::span<const VectorTriplet> data, double margin) {
  return data.empty() ? 0.0 : triplet_loss_value(model, data, margin) / static_cast<double>(data.size());
}

/// Mini-batch gradient descent on the summed triplet loss with early stopping
/// on mean validation loss.
inline TrainResult train(const std::vector<VectorTriplet>& triplets, const TrainConfig& config,
                         const EncoderModel& init) {
  config.validate();
  if (triplets.size() < 2) throw PreconditionError("train: need at least 2 triplets");
  if (!init.is_finite()) throw NumericError("train: initial model has non-finite parameters");
  for (const auto& t : triplets) detail::check_triplet_dims(t, init.d_in());

  std::vector<std::size_t> order(triplets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng::derive(config.seed, "train/split").shuffle(order);
  auto n_val = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(triplets.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, triplets.size() - 1);

  std::vector<VectorTriplet> val, tr;
  for (std::size_t k = 0; k < order.size(); ++k) (k < n_val ? val : tr).push_back(triplets[order[k]]);

  TrainResult result;
  EncoderModel model = init;
  model.meta = {config.seed, config.margin, config.learning_rate, config.batch_size, 0};
  result.initial_val_loss = mean_loss(model, val, config.margin);
  result.model = model;
  double best_val = result.initial_val_loss;
  std::size_t stale = 0;

  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(model.weights.rows(), model.weights.cols());
  std::vector<std::size_t> idx(tr.size());
  std::vector<VectorTriplet> batch;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng::derive(config.seed, "train/epoch/" + std::to_string(epoch)).shuffle(idx);

    double train_total = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += config.batch_size) {
      const std::size_t end = std::min(idx.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(tr[idx[k]]);
      LossResult lr;
      try {
        lr = triplet_loss(model, batch, config.margin);
      } catch (const NumericError&) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch));
      }
      train_total += lr.loss;
      velocity = config.momentum * velocity + lr.grad.weights;
      model.weights -= config.learning_rate * velocity;
      if (!model.is_finite()) throw NumericError("training diverged at epoch " + std::to_string(epoch));
    }
    EpochRecord rec{epoch, train_total / static_cast<double>(tr.size()), mean_loss(model, val, config.margin)};
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss))
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    result.history.push_back(rec);
    model.meta.epochs_run = epoch;

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      result.model = model;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience_epochs) {
      break;
    }
  }
  result.model.meta.epochs_run = result.history.size();
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: one JSON header line, one line per weight row, optional bias line.

inline constexpr int kModelFormatVersion = 1;

inline std::string model_to_jsonl(const EncoderModel& m) {
  json header{{"format", "stylekit-encoder"},
              {"version", kModelFormatVersion},
              {"d_in", m.d_in()},
              {"d_out", m.d_out()},
              {"has_bias", m.bias.has_value()},
              {"meta",
               {{"seed", m.meta.seed},
                {"margin", m.meta.margin},
                {"learning_rate", m.meta.learning_rate},
                {"batch_size", m.meta.batch_size},
                {"epochs_run", m.meta.epochs_run}}}};
  std::string out = canonical(header) + "\n";
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.weights.cols(); ++c) row.push_back(m.weights(r, c));
    out += canonical(json{{"row", r}, {"w", row}}) + "\n";
  }
  if (m.bias) {
    std::vector<double> b(m.bias->data(), m.bias->data() + m.bias->size());
    out += canonical(json{{"bias", b}}) + "\n";
  }
  return out;
}

inline EncoderModel load_model(const std::filesystem::path& path) {
  EncoderModel m;
  std::size_t d_in = 0, d_out = 0, rows_seen = 0;
  bool has_bias = false, have_header = false;
  for_each_jsonl(path, [&](const json& j, std::size_t) {
    if (!have_header) {
      if (field::string(j, "format") != "stylekit-encoder") throw ParseError("not a stylekit encoder file");
      const int version = field::require(j, "version").get<int>();
      if (version != kModelFormatVersion) throw ParseError("unsupported model version " + std::to_string(version));
      d_in = field::require(j, "d_in").get<std::size_t>();
      d_out = field::require(j, "d_out").get<std::size_t>();
      has_bias = field::boolean(j, "has_bias");
      if (d_in == 0 || d_out == 0) throw ParseError("model dimensions must be positive");
      const auto& meta = field::require(j, "meta");
      m.meta = {meta.at("seed").get<std::uint64_t>(), meta.at("margin").get<double>(),
                meta.at("learning_rate").get<double>(), meta.at("batch_size").get<std::size_t>(),
                meta.at("epochs_run").get<std::size_t>()};
      m.weights.resize(static_cast<Eigen::Index>(d_out), static_cast<Eigen::Index>(d_in));
      have_header = true;
      return;
    }
    if (j.contains("bias")) {
      const auto b = j.at("bias").get<std::vector<double>>();
      if (!has_bias || b.size() != d_out) throw ParseError("unexpected bias line");
      m.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
      return;
    }
    const auto r = field::require(j, "row").get<std::size_t>();
    const auto w = field::require(j, "w").get<std::vector<double>>();
    if (r != rows_seen || r >= d_out || w.size() != d_in) throw ParseError("malformed weight row");
    for (std::size_t c = 0; c < d_in; ++c)
      m.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w[c];
    ++rows_seen;
  });
  if (!have_header) throw ParseError("empty model file");
  if (rows_seen != d_out) throw ParseError("model file has " + std::to_string(rows_seen) + " rows, expected " +
                                           std::to_string(d_out));
  if (has_bias && !m.bias) throw ParseError("model file is missing its bias line");
  if (!m.is_finite()) throw ValidationError("model has non-finite weights");
  return m;
}

inline std::string history_to_jsonl(const std::vector<EpochRecord>& history) {
  return to_jsonl(history, [](const EpochRecord& e) {
    return json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}};
  });
}

}  // namespace stylekit
