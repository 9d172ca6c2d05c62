#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xrt/core.hpp"
#include "xrt/loss.hpp"
#include "xrt/rng.hpp"
#include "xrt/types.hpp"

namespace xrt {

enum class EncoderKind { MeanPool, BiRecurrent };

std::string_view to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view text);

struct ClassifierConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 0;
  std::size_t hidden_dim = 300;
  EncoderKind encoder = EncoderKind::MeanPool;
  std::size_t num_classes = 0;
  double temperature = 1.0;
  double dropout_rate = 0.5;

  std::size_t feature_dim() const noexcept {
    return encoder == EncoderKind::MeanPool ? embed_dim : 2 * hidden_dim;
  }
  /// Throws InvalidConfig.
  void validate() const;

  bool operator==(const ClassifierConfig&) const = default;
};

/// Parameters of the classifier. Recurrent tensors are empty for the
/// mean-pool encoder. The same type holds gradients and Adam moments.
template <typename Scalar>
struct ClassifierParams {
  Matrix<Scalar> embeddings;     // vocab x embed
  Matrix<Scalar> fwd_input;      // hidden x embed
  Matrix<Scalar> fwd_recurrent;  // hidden x hidden
  Vector<Scalar> fwd_bias;       // hidden
  Matrix<Scalar> bwd_input;
  Matrix<Scalar> bwd_recurrent;
  Vector<Scalar> bwd_bias;
  Matrix<Scalar> weights;  // feature x classes
  Vector<Scalar> bias;     // classes

  static ClassifierParams zeros(const ClassifierConfig& config) {
    const auto e = static_cast<Eigen::Index>(config.embed_dim);
    const auto h = config.encoder == EncoderKind::BiRecurrent ? static_cast<Eigen::Index>(config.hidden_dim) : 0;
    const auto c = static_cast<Eigen::Index>(config.num_classes);
    ClassifierParams p;
    p.embeddings = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(config.vocab_size), e);
    p.fwd_input = Matrix<Scalar>::Zero(h, h > 0 ? e : 0);
    p.fwd_recurrent = Matrix<Scalar>::Zero(h, h);
    p.fwd_bias = Vector<Scalar>::Zero(h);
    p.bwd_input = p.fwd_input;
    p.bwd_recurrent = p.fwd_recurrent;
    p.bwd_bias = p.fwd_bias;
    p.weights = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(config.feature_dim()), c);
    p.bias = Vector<Scalar>::Zero(c);
    return p;
  }

  template <typename To>
  ClassifierParams<To> cast() const {
    ClassifierParams<To> out;
    zip_tensors([](std::string_view, auto& dst, const auto& src) { dst = src.template cast<To>(); }, out, *this);
    return out;
  }

  bool operator==(const ClassifierParams& o) const {
    bool same = true;
    zip_tensors(
        [&](std::string_view, const auto& a, const auto& b) {
          same = same && a.rows() == b.rows() && a.cols() == b.cols() && a == b;
        },
        *this, o);
    return same;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    zip_tensors([&](std::string_view, const auto& t) { n += static_cast<std::size_t>(t.size()); }, *this);
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    zip_tensors([&](std::string_view, const auto& t) { ok = ok && t.allFinite(); }, *this);
    return ok;
  }
};

template <typename Scalar>
using GradientSet = ClassifierParams<Scalar>;

/// Calls f(name, tensor_of_p0, tensor_of_p1, ...) for every parameter
/// tensor, in the fixed order used for initialization and serialization.
template <typename F, typename... Ps>
void zip_tensors(F&& f, Ps&&... ps) {
  f("embeddings", ps.embeddings...);
  f("fwd_input", ps.fwd_input...);
  f("fwd_recurrent", ps.fwd_recurrent...);
  f("fwd_bias", ps.fwd_bias...);
  f("bwd_input", ps.bwd_input...);
  f("bwd_recurrent", ps.bwd_recurrent...);
  f("bwd_bias", ps.bwd_bias...);
  f("weights", ps.weights...);
  f("bias", ps.bias...);
}

template <typename A, typename B>
bool same_shape(const ClassifierParams<A>& a, const ClassifierParams<B>& b) {
  bool same = true;
  zip_tensors([&](std::string_view, const auto& x, const auto& y) {
    same = same && x.rows() == y.rows() && x.cols() == y.cols();
  }, a, b);
  return same;
}

/// Shape check of params against a config. Throws ShapeMismatch.
template <typename Scalar>
void check_shapes(const ClassifierParams<Scalar>& params, const ClassifierConfig& config) {
  if (!same_shape(params, ClassifierParams<Scalar>::zeros(config)))
    throw Error(ErrorCode::ShapeMismatch, "parameters do not match the classifier configuration");
}

/// Glorot-uniform weights (r = sqrt(6 / (fan_in + fan_out)) per tensor),
/// zero biases. Draw order follows zip_tensors and column-major storage.
template <typename Scalar = double>
ClassifierParams<Scalar> init_params(const ClassifierConfig& config, Rng& rng) {
  config.validate();
  auto p = ClassifierParams<Scalar>::zeros(config);
  zip_tensors([&](std::string_view name, auto& t) {
    if (name.ends_with("bias") || t.size() == 0) return;  // bias vectors stay zero
    const double r = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(rng.uniform(-r, r));
  }, p);
  return p;
}

/// Encoder output plus the intermediate states backprop needs.
template <typename Scalar>
struct EncoderTrace {
  Vector<Scalar> z;
  Matrix<Scalar> fwd_states;  // hidden x n, state after reading position t
  Matrix<Scalar> bwd_states;  // hidden x n, backward state after reading t
};

inline void check_tokens(std::span<const TokenId> tokens, std::size_t vocab_size) {
  if (tokens.empty()) throw Error(ErrorCode::EmptySequence, "cannot encode an empty sequence");
  for (TokenId t : tokens)
    if (t >= vocab_size)
      throw Error(ErrorCode::IndexOutOfVocab, "token index " + std::to_string(t) + " >= vocab size " +
                                                   std::to_string(vocab_size));
}

template <typename Scalar>
EncoderTrace<Scalar> encode_traced(std::span<const TokenId> tokens, const ClassifierParams<Scalar>& params,
                                   const ClassifierConfig& config) {
  check_tokens(tokens, static_cast<std::size_t>(params.embeddings.rows()));
  EncoderTrace<Scalar> trace;
  const auto n = static_cast<Eigen::Index>(tokens.size());
  auto embedding = [&](Eigen::Index t) { return params.embeddings.row(static_cast<Eigen::Index>(tokens[t])).transpose(); };

  if (config.encoder == EncoderKind::MeanPool) {
    trace.z = Vector<Scalar>::Zero(params.embeddings.cols());
    for (Eigen::Index t = 0; t < n; ++t) trace.z += embedding(t);
    trace.z /= static_cast<Scalar>(n);
    return trace;
  }

  const Eigen::Index h = params.fwd_recurrent.rows();
  trace.fwd_states.resize(h, n);
  trace.bwd_states.resize(h, n);
  Vector<Scalar> state = Vector<Scalar>::Zero(h);
  for (Eigen::Index t = 0; t < n; ++t) {
    state = (params.fwd_input * embedding(t) + params.fwd_recurrent * state + params.fwd_bias).array().tanh().matrix();
    trace.fwd_states.col(t) = state;
  }
  state.setZero();
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    state = (params.bwd_input * embedding(t) + params.bwd_recurrent * state + params.bwd_bias).array().tanh().matrix();
    trace.bwd_states.col(t) = state;
  }
  trace.z.resize(2 * h);
  trace.z << trace.fwd_states.col(n - 1), trace.bwd_states.col(0);
  return trace;
}

/// Mean of embedding rows, or [last forward state; last backward state].
template <typename Scalar>
Vector<Scalar> encode(std::span<const TokenId> tokens, const ClassifierParams<Scalar>& params,
                      const ClassifierConfig& config) {
  return encode_traced(tokens, params, config).z;
}

/// Max-shifted softmax.
template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> p = (logits.array() - logits.maxCoeff()).exp().matrix();
  return p / p.sum();
}

template <typename Scalar, typename Derived>
Vector<Scalar> logits_of(const Eigen::MatrixBase<Derived>& z, const ClassifierParams<Scalar>& params) {
  return params.weights.transpose() * z + params.bias;
}

/// softmax((W^T z + b) / T). Equal to the renormalized softmax^(1/T).
template <typename Scalar, typename Derived>
Vector<Scalar> classify(const Eigen::MatrixBase<Derived>& z, const ClassifierParams<Scalar>& params,
                        double temperature) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidConfig, "temperature must be positive");
  if (temperature == 1.0) return softmax(logits_of(z, params));
  return softmax(logits_of(z, params) / static_cast<Scalar>(temperature));
}

/// Inference-mode posterior (no dropout).
template <typename Scalar>
Vector<Scalar> predict_proba(std::span<const TokenId> tokens, const ClassifierParams<Scalar>& params,
                             const ClassifierConfig& config) {
  return classify(encode(tokens, params, config), params, config.temperature);
}

template <typename Scalar>
LabelIndex predict(std::span<const TokenId> tokens, const ClassifierParams<Scalar>& params,
                   const ClassifierConfig& config) {
  Eigen::Index best = 0;
  predict_proba(tokens, params, config).maxCoeff(&best);
  return static_cast<LabelIndex>(best);
}

/// Inverted-dropout mask: 0 with probability `rate`, else 1 / (1 - rate).
/// Draws nothing when rate is zero.
template <typename Scalar = double>
Vector<Scalar> dropout_mask(Eigen::Index dim, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::InvalidConfig, "dropout rate must be in [0, 1)");
  Vector<Scalar> mask = Vector<Scalar>::Ones(dim);
  if (rate == 0.0) return mask;
  const Scalar keep = Scalar(1) / Scalar(1.0 - rate);
  for (Eigen::Index i = 0; i < dim; ++i) mask[i] = rng.uniform() < rate ? Scalar(0) : keep;
  return mask;
}

template <typename Derived>
Vector<typename Derived::Scalar> apply_dropout(const Eigen::MatrixBase<Derived>& z, double rate, Rng& rng) {
  return z.cwiseProduct(dropout_mask<typename Derived::Scalar>(z.size(), rate, rng));
}

/// Forward pass of one batch member in training mode.
template <typename Scalar>
struct MemberForward {
  EncoderTrace<Scalar> encoder;
  Vector<Scalar> mask;  // empty when dropout is off
  Vector<Scalar> features;
  Vector<Scalar> prob;
};

template <typename Scalar>
MemberForward<Scalar> forward_member(std::span<const TokenId> tokens, const ClassifierParams<Scalar>& params,
                                     const ClassifierConfig& config, Rng* dropout_rng) {
  MemberForward<Scalar> f;
  f.encoder = encode_traced(tokens, params, config);
  if (dropout_rng != nullptr && config.dropout_rate > 0.0) {
    f.mask = dropout_mask<Scalar>(f.encoder.z.size(), config.dropout_rate, *dropout_rng);
    f.features = f.encoder.z.cwiseProduct(f.mask);
  } else {
    f.features = f.encoder.z;
  }
  f.prob = classify(f.features, params, config.temperature);
  return f;
}

/// Accumulates d(loss)/d(params) for one member given d(loss)/d(logits).
template <typename Scalar>
void backprop_member(std::span<const TokenId> tokens, const MemberForward<Scalar>& f,
                     const Vector<Scalar>& dlogits, const ClassifierParams<Scalar>& params,
                     const ClassifierConfig& config, GradientSet<Scalar>& grads) {
  grads.weights.noalias() += f.features * dlogits.transpose();
  grads.bias += dlogits;
  Vector<Scalar> dz = params.weights * dlogits;
  if (f.mask.size() > 0) dz = dz.cwiseProduct(f.mask);

  const auto n = static_cast<Eigen::Index>(tokens.size());
  auto token = [&](Eigen::Index t) { return static_cast<Eigen::Index>(tokens[t]); };

  if (config.encoder == EncoderKind::MeanPool) {
    const RowVector<Scalar> share = dz.transpose() / static_cast<Scalar>(n);
    for (Eigen::Index t = 0; t < n; ++t) grads.embeddings.row(token(t)) += share;
    return;
  }

  const Eigen::Index h = params.fwd_recurrent.rows();
  const auto& fs = f.encoder.fwd_states;
  const auto& bs = f.encoder.bwd_states;

  Vector<Scalar> dstate = dz.head(h);
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const Vector<Scalar> da = dstate.cwiseProduct((Scalar(1) - fs.col(t).array().square()).matrix());
    grads.fwd_bias += da;
    grads.fwd_input.noalias() += da * params.embeddings.row(token(t));
    if (t > 0) grads.fwd_recurrent.noalias() += da * fs.col(t - 1).transpose();
    grads.embeddings.row(token(t)).noalias() += (params.fwd_input.transpose() * da).transpose();
    dstate = params.fwd_recurrent.transpose() * da;
  }

  dstate = dz.tail(h);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Vector<Scalar> da = dstate.cwiseProduct((Scalar(1) - bs.col(t).array().square()).matrix());
    grads.bwd_bias += da;
    grads.bwd_input.noalias() += da * params.embeddings.row(token(t));
    if (t + 1 < n) grads.bwd_recurrent.noalias() += da * bs.col(t + 1).transpose();
    grads.embeddings.row(token(t)).noalias() += (params.bwd_input.transpose() * da).transpose();
    dstate = params.bwd_recurrent.transpose() * da;
  }
}

enum class Objective { XR, CrossEntropy };

/// XR supervision: one expected label distribution for the whole batch.
struct ProportionTarget {
  Eigen::VectorXd proportion;
};

/// Cross-entropy supervision: one gold label per batch member.
struct GoldTarget {
  std::span<const LabelIndex> labels;
};

using Supervision = std::variant<ProportionTarget, GoldTarget>;

template <typename Scalar>
struct GradientResult {
  Scalar loss;
  GradientSet<Scalar> grads;
};

/// Exact gradient of the batched XR loss of `batch` against `proportion`.
/// One dropout mask per member is drawn when `dropout_rng` is non-null.
///
/// With q = sum of member posteriors, the logit gradient of member i is
///   (p_i * s_i - w_i) / T,   w_i(c) = p_i(c) * target(c) / q(c),
///   s_i = sum_c w_i(c),
/// where classes whose normalized aggregate falls below the log floor
/// contribute no gradient. The normalization term of p-hat drops out
/// because each p_i sums to one.
template <typename Scalar>
GradientResult<Scalar> xr_gradients(std::span<const TokenSequence> batch, const Eigen::VectorXd& proportion,
                                    const ClassifierParams<Scalar>& params, const ClassifierConfig& config,
                                    Rng* dropout_rng) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "xr_gradients: empty batch");
  if (static_cast<std::size_t>(proportion.size()) != config.num_classes)
    throw Error(ErrorCode::DimensionMismatch, "proportion does not match the number of classes");
  const auto classes = static_cast<Eigen::Index>(config.num_classes);

  std::vector<MemberForward<Scalar>> members;
  members.reserve(batch.size());
  Matrix<Scalar> rows(static_cast<Eigen::Index>(batch.size()), classes);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    members.push_back(forward_member(std::span<const TokenId>(batch[i]), params, config, dropout_rng));
    rows.row(static_cast<Eigen::Index>(i)) = members.back().prob.transpose();
  }
  const Vector<Scalar> target = proportion.cast<Scalar>();
  const auto posterior = aggregate_posterior(rows);

  GradientResult<Scalar> result{xr_loss(target, posterior.normalized), GradientSet<Scalar>::zeros(config)};
  const Scalar inv_t = Scalar(1.0 / config.temperature);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vector<Scalar>& p = members[i].prob;
    Vector<Scalar> w = Vector<Scalar>::Zero(classes);
    for (Eigen::Index c = 0; c < classes; ++c)
      if (target[c] != Scalar(0) && posterior.normalized[c] >= Scalar(kProbabilityFloor))
        w[c] = (p[c] * target[c]) / posterior.aggregate[c];
    const Scalar s = w.sum();
    const Vector<Scalar> dlogits = config.temperature == 1.0 ? Vector<Scalar>(p * s - w) : Vector<Scalar>((p * s - w) * inv_t);
    backprop_member(std::span<const TokenId>(batch[i]), members[i], dlogits, params, config, result.grads);
  }
  return result;
}

/// Exact gradient of the summed cross-entropy of `batch` against `gold`.
template <typename Scalar>
GradientResult<Scalar> cross_entropy_gradients(std::span<const TokenSequence> batch, std::span<const LabelIndex> gold,
                                               const ClassifierParams<Scalar>& params, const ClassifierConfig& config,
                                               Rng* dropout_rng) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "cross_entropy_gradients: empty batch");
  if (batch.size() != gold.size()) throw Error(ErrorCode::LengthMismatch, "batch and gold labels differ in length");
  const auto classes = static_cast<Eigen::Index>(config.num_classes);

  std::vector<MemberForward<Scalar>> members;
  members.reserve(batch.size());
  Matrix<Scalar> rows(static_cast<Eigen::Index>(batch.size()), classes);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    members.push_back(forward_member(std::span<const TokenId>(batch[i]), params, config, dropout_rng));
    rows.row(static_cast<Eigen::Index>(i)) = members.back().prob.transpose();
  }

  GradientResult<Scalar> result{cross_entropy_loss(gold, rows), GradientSet<Scalar>::zeros(config)};
  const Scalar inv_t = Scalar(1.0 / config.temperature);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vector<Scalar>& p = members[i].prob;
    const auto g = static_cast<Eigen::Index>(gold[i]);
    Vector<Scalar> dlogits = Vector<Scalar>::Zero(classes);
    if (p[g] >= Scalar(kProbabilityFloor)) {
      Vector<Scalar> onehot = Vector<Scalar>::Zero(classes);
      onehot[g] = Scalar(1);
      dlogits = config.temperature == 1.0 ? Vector<Scalar>(p - onehot) : Vector<Scalar>((p - onehot) * inv_t);
    }
    backprop_member(std::span<const TokenId>(batch[i]), members[i], dlogits, params, config, result.grads);
  }
  return result;
}

template <typename Scalar>
GradientResult<Scalar> parameter_gradients(std::span<const TokenSequence> batch, const Supervision& supervision,
                                           const ClassifierParams<Scalar>& params, const ClassifierConfig& config,
                                           Rng* dropout_rng) {
  if (const auto* p = std::get_if<ProportionTarget>(&supervision))
    return xr_gradients(batch, p->proportion, params, config, dropout_rng);
  return cross_entropy_gradients(batch, std::get<GoldTarget>(supervision).labels, params, config, dropout_rng);
}

/// Loss only, in inference mode; the finite-difference oracle's forward.
template <typename Scalar>
Scalar batch_loss(std::span<const TokenSequence> batch, const Supervision& supervision,
                  const ClassifierParams<Scalar>& params, const ClassifierConfig& config) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "batch_loss: empty batch");
  Matrix<Scalar> rows(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(config.num_classes));
  for (std::size_t i = 0; i < batch.size(); ++i)
    rows.row(static_cast<Eigen::Index>(i)) = predict_proba(std::span<const TokenId>(batch[i]), params, config).transpose();
  if (const auto* p = std::get_if<ProportionTarget>(&supervision))
    return batched_xr_loss(p->proportion.cast<Scalar>(), rows);
  return cross_entropy_loss(std::get<GoldTarget>(supervision).labels, rows);
}

/// Overwrites embedding rows of in-vocabulary tokens from a text file of
/// "token v1 ... vd" lines. Returns the number of rows overwritten.
/// Throws DimensionMismatch when d differs from the embedding width and
/// MalformedLine (value = line number) for unparsable or ragged lines.
std::size_t load_embeddings(const std::string& path, const Vocabulary& vocab, Eigen::MatrixXd& embeddings);

}  // namespace xrt
