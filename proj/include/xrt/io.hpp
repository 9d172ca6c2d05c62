#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xrt/core.hpp"

namespace xrt {

inline constexpr int kFormatVersion = 1;

/// Writes via a sibling temp file and rename.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

struct Dataset {
  LabelSpace source_labels;
  LabelSpace target_labels;
  std::vector<Example> examples;
};

/// Streaming reader for line-delimited dataset files. The first record
/// declares the label spaces; each further line is one example. Trees come
/// from a tree file named by the header ("tree_file", relative to the
/// dataset) or passed explicitly. Record i takes tree line i unless it
/// names another line with "tree_line" (null for no tree).
class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path, const std::string& tree_path = {});

  const LabelSpace& source_labels() const noexcept { return source_; }
  const LabelSpace& target_labels() const noexcept { return target_; }

  /// Next validated example, or nullopt at end of file. Throws
  /// MalformedRecord, DuplicateId, BadSpan.
  std::optional<Example> next();

 private:
  std::ifstream in_;
  std::string path_;
  LabelSpace source_;
  LabelSpace target_;
  std::vector<std::string> trees_;
  std::size_t line_no_ = 0;
  std::size_t record_ = 0;
  std::unordered_map<std::string, bool> ids_;
};

Dataset read_dataset(const std::string& path, const std::string& tree_path = {});

/// Writes the dataset and, when any example has a tree, a tree file next
/// to it (`<path>.trees`), referenced from the header.
void write_dataset(const std::string& path, const Dataset& dataset);

/// Proportion table as a JSON mapping document.
std::string table_to_json(const ProportionTable& table);
ProportionTable table_from_json(std::string_view text);
void write_table(const std::string& path, const ProportionTable& table);
ProportionTable read_table(const std::string& path);

/// Constraint sets, one JSON record per set after a header record.
void write_sets(const std::string& path, const std::vector<ConstraintSet>& sets, const LabelSpace& source,
                const LabelSpace& target);
struct SetsFile {
  LabelSpace source_labels;
  LabelSpace target_labels;
  std::vector<ConstraintSet> sets;
};
SetsFile read_sets(const std::string& path);

/// Plain key=value lines; '#' starts a comment.
std::map<std::string, std::string> parse_key_values(std::string_view text);
std::map<std::string, std::string> read_config_file(const std::string& path);

}  // namespace xrt
