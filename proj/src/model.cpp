#include <fstream>
#include <sstream>

#include "xrt/model.hpp"

namespace xrt {

std::string_view to_string(EncoderKind kind) {
  return kind == EncoderKind::MeanPool ? "mean-pool" : "birecurrent";
}

EncoderKind parse_encoder_kind(std::string_view text) {
  if (text == "mean-pool" || text == "meanpool") return EncoderKind::MeanPool;
  if (text == "birecurrent" || text == "birnn") return EncoderKind::BiRecurrent;
  throw Error(ErrorCode::InvalidConfig, "unknown encoder kind '" + std::string(text) + "'");
}

void ClassifierConfig::validate() const {
  if (vocab_size < 1 || embed_dim < 1 || num_classes < 2)
    throw Error(ErrorCode::InvalidConfig, "vocab_size and embed_dim must be >= 1, num_classes >= 2");
  if (encoder == EncoderKind::BiRecurrent && hidden_dim < 1)
    throw Error(ErrorCode::InvalidConfig, "hidden_dim must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw Error(ErrorCode::InvalidConfig, "temperature must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw Error(ErrorCode::InvalidConfig, "dropout rate must be in [0, 1)");
}

std::size_t load_embeddings(const std::string& path, const Vocabulary& vocab, Eigen::MatrixXd& embeddings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open embedding file '" + path + "'");

  std::size_t hits = 0;
  std::optional<std::size_t> width;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    std::istringstream fields(line);
    std::string token;
    fields >> token;
    values.clear();
    std::string field;
    while (fields >> field) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": bad value '" + field + "'",
                    static_cast<double>(line_no));
      }
    }
    if (values.empty())
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": no vector values",
                  static_cast<double>(line_no));
    if (!width) {
      width = values.size();
      if (*width != static_cast<std::size_t>(embeddings.cols()))
        throw Error(ErrorCode::DimensionMismatch, "file vectors have dimension " + std::to_string(*width) +
                                                      ", model expects " + std::to_string(embeddings.cols()));
    } else if (values.size() != *width) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": expected " +
                                               std::to_string(*width) + " values",
                  static_cast<double>(line_no));
    }

    if (!vocab.contains(token)) continue;
    const TokenId id = vocab.lookup(token);
    if (id >= static_cast<std::size_t>(embeddings.rows())) continue;
    embeddings.row(static_cast<Eigen::Index>(id)) =
        Eigen::Map<const Eigen::RowVectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    ++hits;
  }
  return hits;
}

}  // namespace xrt
