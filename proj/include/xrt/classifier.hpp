#pragma once

#include <span>
#include <string>
#include <vector>

#include "xrt/core.hpp"
#include "xrt/model.hpp"

namespace xrt {

/// A trained classifier with everything needed to apply it to raw tokens.
struct Classifier {
  ClassifierConfig config;
  ClassifierParams<double> params;
  Vocabulary vocab;
  LabelSpace labels;

  LabelIndex predict(std::span<const std::string> tokens) const {
    const auto ids = vocab.encode(tokens);
    return xrt::predict(std::span<const TokenId>(ids), params, config);
  }
  Eigen::VectorXd predict_proba(std::span<const std::string> tokens) const {
    const auto ids = vocab.encode(tokens);
    return xrt::predict_proba(std::span<const TokenId>(ids), params, config);
  }
};

/// Binary checkpoint; layout documented in docs/formats.md.
void save_checkpoint(const std::string& path, const Classifier& classifier);
Classifier load_checkpoint(const std::string& path);

std::string encode_checkpoint(const Classifier& classifier);
Classifier decode_checkpoint(std::string_view bytes);

}  // namespace xrt
