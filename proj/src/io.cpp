#include "xrt/io.hpp"

#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "xrt/tree.hpp"

namespace xrt {

using nlohmann::json;
namespace fs = std::filesystem;

void write_file_atomic(const std::string& path, std::string_view contents) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + temp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::Io, "write to '" + temp.string() + "' failed");
  }
  fs::rename(temp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void check_version(const json& header, std::string_view kind, const std::string& where) {
  if (!header.is_object() || !header.contains("format_version") || !header.contains("kind"))
    throw Error(ErrorCode::MissingHeader, where + ": first record is not a header");
  if (header.at("kind") != kind)
    throw Error(ErrorCode::MissingHeader, where + ": expected a '" + std::string(kind) + "' file");
  if (header.at("format_version") != kFormatVersion)
    throw Error(ErrorCode::UnsupportedVersion, where + ": unsupported format version");
}

std::optional<LabelIndex> optional_label(const json& record, const char* key, const LabelSpace& space) {
  if (!record.contains(key) || record.at(key).is_null()) return std::nullopt;
  return space.index_of(record.at(key).get<std::string>());
}

}  // namespace

DatasetReader::DatasetReader(const std::string& path, const std::string& tree_path) : in_(path), path_(path) {
  if (!in_) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
    line.clear();
  }
  if (line.empty()) throw Error(ErrorCode::MissingHeader, path + ": empty file");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception&) {
    throw Error(ErrorCode::MissingHeader, path + ": header is not JSON");
  }
  check_version(header, "dataset", path);
  try {
    source_ = LabelSpace(header.at("source_labels").get<std::vector<std::string>>());
    target_ = LabelSpace(header.at("target_labels").get<std::vector<std::string>>());
  } catch (const json::exception&) {
    throw Error(ErrorCode::MissingHeader, path + ": header lacks label spaces");
  }
  std::string trees = tree_path;
  if (trees.empty() && header.contains("tree_file"))
    trees = (fs::path(path).parent_path() / header.at("tree_file").get<std::string>()).string();
  if (!trees.empty()) trees_ = read_lines(trees);
}

std::optional<Example> DatasetReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path_ + ":" + std::to_string(line_no_);
    Example e;
    try {
      const json r = json::parse(line);
      e.id = r.at("id").get<std::string>();
      e.tokens = r.at("tokens").get<std::vector<std::string>>();
      e.source_label = optional_label(r, "source_label", source_);
      e.target_label = optional_label(r, "target_label", target_);
      if (r.contains("aspects")) {
        for (const auto& a : r.at("aspects")) {
          AspectAnnotation ann;
          if (a.contains("span")) {
            const auto s = a.at("span").get<std::vector<long long>>();
            if (s.size() != 2 || s[0] < 0 || s[1] < 0)
              throw Error(ErrorCode::BadSpan, "record '" + e.id + "' has a malformed span");
            ann.pivot = {static_cast<std::size_t>(s[0]), static_cast<std::size_t>(s[1])};
          } else {
            const auto phrase = a.at("phrase").get<std::vector<std::string>>();
            ann.pivot = locate_pivot(e.tokens, phrase);
          }
          ann.label = optional_label(a, "label", target_);
          e.aspects.push_back(ann);
        }
      }
      std::optional<std::size_t> ref;
      if (r.contains("tree_line")) {
        if (!r.at("tree_line").is_null()) ref = r.at("tree_line").get<std::size_t>();
      } else if (!trees_.empty()) {
        ref = record_;
      }
      if (ref) {
        if (*ref >= trees_.size())
          throw Error(ErrorCode::MalformedRecord, where + ": tree line " + std::to_string(*ref) + " does not exist");
        const std::string& tree_text = trees_[*ref];
        e.tree = std::make_shared<const ParseTree>(parse_bracketed(tree_text));
        if (e.tree->leaf_count() != e.tokens.size())
          throw Error(ErrorCode::MalformedRecord, where + ": tree does not cover the record's tokens");
      }
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::MalformedRecord, where + ": " + ex.what());
    } catch (const Error& ex) {
      if (ex.code() == ErrorCode::BadSpan || ex.code() == ErrorCode::MalformedRecord) throw;
      throw Error(ErrorCode::MalformedRecord, where + ": " + ex.what());
    }
    if (e.tokens.empty()) throw Error(ErrorCode::MalformedRecord, where + ": record has no tokens");
    for (const auto& a : e.aspects)
      if (a.pivot.start >= a.pivot.end || a.pivot.end > e.tokens.size())
        throw Error(ErrorCode::BadSpan, "record '" + e.id + "' has an aspect span outside its tokens");
    if (!ids_.emplace(e.id, true).second) throw Error(ErrorCode::DuplicateId, "duplicate id '" + e.id + "'");
    ++record_;
    return e;
  }
  return std::nullopt;
}

Dataset read_dataset(const std::string& path, const std::string& tree_path) {
  DatasetReader reader(path, tree_path);
  Dataset d;
  d.source_labels = reader.source_labels();
  d.target_labels = reader.target_labels();
  while (auto e = reader.next()) d.examples.push_back(std::move(*e));
  return d;
}

void write_dataset(const std::string& path, const Dataset& dataset) {
  bool has_trees = false;
  for (const auto& e : dataset.examples) has_trees = has_trees || e.tree != nullptr;
  const std::string tree_file = fs::path(path).filename().string() + ".trees";

  json header = {{"format_version", kFormatVersion},
                 {"kind", "dataset"},
                 {"source_labels", dataset.source_labels.names()},
                 {"target_labels", dataset.target_labels.names()}};
  if (has_trees) header["tree_file"] = tree_file;

  std::string out = header.dump() + "\n";
  std::string trees;
  std::size_t tree_line = 0;
  for (const auto& e : dataset.examples) {
    json r = {{"id", e.id}, {"tokens", e.tokens}};
    if (e.source_label) r["source_label"] = dataset.source_labels.name(*e.source_label);
    if (e.target_label) r["target_label"] = dataset.target_labels.name(*e.target_label);
    if (!e.aspects.empty()) {
      json aspects = json::array();
      for (const auto& a : e.aspects) {
        std::vector<std::string> phrase(e.tokens.begin() + static_cast<std::ptrdiff_t>(a.pivot.start),
                                        e.tokens.begin() + static_cast<std::ptrdiff_t>(a.pivot.end));
        json j = {{"span", {a.pivot.start, a.pivot.end}}, {"phrase", phrase}};
        if (a.label) j["label"] = dataset.target_labels.name(*a.label);
        aspects.push_back(std::move(j));
      }
      r["aspects"] = std::move(aspects);
    }
    if (e.tree) {
      r["tree_line"] = tree_line++;
      trees += e.tree->to_string() + "\n";
    } else if (has_trees) {
      r["tree_line"] = nullptr;
    }
    out += r.dump() + "\n";
  }
  if (has_trees) write_file_atomic((fs::path(path).parent_path() / tree_file).string(), trees);
  write_file_atomic(path, out);
}

std::string table_to_json(const ProportionTable& table) {
  table.validate();
  json rows = json::object(), counts = json::object();
  for (std::size_t j = 0; j < table.source_labels.size(); ++j) {
    json row = json::object(), count = json::object();
    for (std::size_t i = 0; i < table.target_labels.size(); ++i) {
      row[table.target_labels.name(i)] = table.rows(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      if (table.counts)
        count[table.target_labels.name(i)] = (*table.counts)(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
    }
    rows[table.source_labels.name(j)] = std::move(row);
    if (table.counts) counts[table.source_labels.name(j)] = std::move(count);
  }
  json doc = {{"format_version", kFormatVersion},
              {"kind", "proportion_table"},
              {"source_labels", table.source_labels.names()},
              {"target_labels", table.target_labels.names()},
              {"rows", rows}};
  if (table.counts) doc["counts"] = counts;
  json fallback = json::array();
  for (std::size_t j = 0; j < table.uniform_fallback.size(); ++j)
    if (table.uniform_fallback[j]) fallback.push_back(table.source_labels.name(j));
  doc["uniform_fallback"] = fallback;
  return doc.dump(2) + "\n";
}

ProportionTable table_from_json(std::string_view text) {
  ProportionTable t;
  try {
    const json doc = json::parse(text);
    check_version(doc, "proportion_table", "proportion table");
    t.source_labels = LabelSpace(doc.at("source_labels").get<std::vector<std::string>>());
    t.target_labels = LabelSpace(doc.at("target_labels").get<std::vector<std::string>>());
    const auto ns = static_cast<Eigen::Index>(t.source_labels.size());
    const auto nt = static_cast<Eigen::Index>(t.target_labels.size());
    t.rows.resize(ns, nt);
    for (Eigen::Index j = 0; j < ns; ++j) {
      const auto& src = t.source_labels.name(static_cast<std::size_t>(j));
      if (!doc.at("rows").contains(src))
        throw Error(ErrorCode::MissingTableRow, "table has no row for '" + src + "'");
      for (Eigen::Index i = 0; i < nt; ++i)
        t.rows(j, i) = doc.at("rows").at(src).value(t.target_labels.name(static_cast<std::size_t>(i)), 0.0);
    }
    if (doc.contains("counts")) {
      Eigen::MatrixXd c = Eigen::MatrixXd::Zero(ns, nt);
      for (Eigen::Index j = 0; j < ns; ++j) {
        const auto& src = t.source_labels.name(static_cast<std::size_t>(j));
        if (!doc.at("counts").contains(src)) continue;
        for (Eigen::Index i = 0; i < nt; ++i)
          c(j, i) = doc.at("counts").at(src).value(t.target_labels.name(static_cast<std::size_t>(i)), 0.0);
      }
      t.counts = std::move(c);
    }
    t.uniform_fallback.assign(t.source_labels.size(), false);
    if (doc.contains("uniform_fallback"))
      for (const auto& name : doc.at("uniform_fallback"))
        t.uniform_fallback[t.source_labels.index_of(name.get<std::string>())] = true;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::MalformedRecord, std::string("proportion table: ") + ex.what());
  }
  t.validate();
  return t;
}

void write_table(const std::string& path, const ProportionTable& table) {
  write_file_atomic(path, table_to_json(table));
}

ProportionTable read_table(const std::string& path) { return table_from_json(read_file(path)); }

void write_sets(const std::string& path, const std::vector<ConstraintSet>& sets, const LabelSpace& source,
                const LabelSpace& target) {
  json header = {{"format_version", kFormatVersion},
                 {"kind", "constraint_sets"},
                 {"source_labels", source.names()},
                 {"target_labels", target.names()}};
  std::string out = header.dump() + "\n";
  for (const auto& s : sets) {
    json members = json::array();
    for (const auto& m : s.members)
      members.push_back({{"parent_id", m.parent_id}, {"span", {m.span.start, m.span.end}}, {"tokens", m.tokens}});
    std::vector<double> proportion(s.proportion.mass().data(), s.proportion.mass().data() + s.proportion.size());
    json r = {{"source_label", source.name(s.source_label)}, {"proportion", proportion}, {"members", members}};
    out += r.dump() + "\n";
  }
  write_file_atomic(path, out);
}

SetsFile read_sets(const std::string& path) {
  const auto lines = read_lines(path);
  std::size_t i = 0;
  while (i < lines.size() && lines[i].find_first_not_of(" \t") == std::string::npos) ++i;
  if (i == lines.size()) throw Error(ErrorCode::MissingHeader, path + ": empty file");
  SetsFile f;
  try {
    const json header = json::parse(lines[i]);
    check_version(header, "constraint_sets", path);
    f.source_labels = LabelSpace(header.at("source_labels").get<std::vector<std::string>>());
    f.target_labels = LabelSpace(header.at("target_labels").get<std::vector<std::string>>());
  } catch (const json::exception&) {
    throw Error(ErrorCode::MissingHeader, path + ": header is not a constraint-set header");
  }
  for (++i; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    try {
      const json r = json::parse(lines[i]);
      ConstraintSet s;
      s.source_label = f.source_labels.index_of(r.at("source_label").get<std::string>());
      const auto p = r.at("proportion").get<std::vector<double>>();
      s.proportion = validate_distribution(p);
      for (const auto& m : r.at("members")) {
        Fragment frag;
        frag.parent_id = m.at("parent_id").get<std::string>();
        const auto span = m.at("span").get<std::vector<std::size_t>>();
        if (span.size() != 2) throw Error(ErrorCode::BadSpan, "member span must have two entries");
        frag.span = {span[0], span[1]};
        frag.tokens = m.at("tokens").get<std::vector<std::string>>();
        s.members.push_back(std::move(frag));
      }
      s.validate(f.target_labels.size());
      f.sets.push_back(std::move(s));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::MalformedRecord, path + ":" + std::to_string(i + 1) + ": " + ex.what());
    }
  }
  return f;
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::MalformedLine, "config line " + std::to_string(line_no) + " is not key=value",
                  static_cast<double>(line_no));
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  return parse_key_values(read_file(path));
}

}  // namespace xrt
