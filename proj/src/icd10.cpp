#include "taxonap/icd10.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "taxonap/errors.hpp"
#include "text_util.hpp"

namespace taxonap {

namespace {

constexpr std::size_t kCodeBegin = 6;
constexpr std::size_t kCodeWidth = 7;
constexpr std::size_t kFlagPos = 14;
constexpr std::size_t kShortBegin = 16;
constexpr std::size_t kShortWidth = 60;
constexpr std::size_t kLongBegin = 77;

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool all_alnum(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c); });
}

std::string_view column(std::string_view line, std::size_t begin, std::size_t width) {
  if (begin >= line.size()) return {};
  return line.substr(begin, width);
}

}  // namespace

std::vector<OrderFileRow> parse_order_file(std::string_view text) {
  std::vector<OrderFileRow> rows;
  std::size_t line_no = 0;
  for (std::string_view line : detail::split_lines(text)) {
    ++line_no;
    line = detail::rstrip(line);
    if (line.empty()) continue;
    if (line.size() <= kFlagPos) throw MalformedLine(line_no, "line too short for an order record");
    if (!all_digits(line.substr(0, 5)) || line[5] != ' ') {
      throw MalformedLine(line_no, "order number column is not numeric");
    }
    OrderFileRow row;
    row.line_no = line_no;
    row.code = std::string(detail::trim(line.substr(kCodeBegin, kCodeWidth)));
    if (!all_alnum(row.code)) throw MalformedLine(line_no, "invalid code column");
    const char flag = line[kFlagPos];
    if (flag != '0' && flag != '1') throw MalformedLine(line_no, "billable flag must be 0 or 1");
    row.billable = flag == '1';
    row.short_description = std::string(detail::trim(column(line, kShortBegin, kShortWidth)));
    row.long_description = std::string(detail::trim(column(line, kLongBegin, std::string_view::npos)));
    if (row.long_description.empty()) row.long_description = row.short_description;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyInput("order file contains no records");
  return rows;
}

Taxonomy parse_icd10cm(std::string_view order_file, const Icd10CmOptions& options) {
  const auto rows = parse_order_file(order_file);

  std::map<std::string, std::pair<std::string, std::string>> placement;  // category -> (block, chapter)
  if (!options.blocks_tsv.empty()) {
    std::size_t line_no = 0;
    for (std::string_view line : detail::split_lines(options.blocks_tsv)) {
      ++line_no;
      line = detail::rstrip(line);
      if (line.empty() || line.front() == '#') continue;
      const auto cols = detail::split(line, '\t');
      if (cols.size() < 3) throw MalformedLine(line_no, "expected category<TAB>block<TAB>chapter");
      placement[std::string(detail::trim(cols[0]))] = {std::string(detail::trim(cols[1])),
                                                       std::string(detail::trim(cols[2]))};
    }
  }

  std::unordered_set<std::string> codes;
  for (const auto& row : rows) {
    if (!codes.insert(row.code).second) {
      throw MalformedLine(row.line_no, "duplicate code '" + row.code + "'");
    }
  }

  TaxonomyBuilder builder(options.id, options.taxonomy);
  builder.add_node(kVirtualRoot, "ICD-10-CM");
  for (const auto& row : rows) {
    builder.add_node(row.code, row.long_description);
    std::string parent;
    for (std::size_t len = row.code.size() - 1; len >= 3 && parent.empty(); --len) {
      if (codes.contains(row.code.substr(0, len))) parent = row.code.substr(0, len);
    }
    if (!parent.empty()) {
      builder.add_edge(row.code, parent);
      continue;
    }
    if (row.code.size() != 3) {
      builder.warn("code " + row.code + " has no ancestor code; attached to the root");
      builder.add_edge(row.code, kVirtualRoot);
      continue;
    }
    if (placement.empty()) {
      builder.add_edge(row.code, kVirtualRoot);
      continue;
    }
    auto it = placement.find(row.code);
    if (it == placement.end()) {
      builder.warn("category " + row.code + " has no chapter/block entry; attached to the root");
      builder.add_edge(row.code, kVirtualRoot);
      continue;
    }
    const auto& [raw_block, chapter] = it->second;
    // Single-category blocks reuse the category code as their id.
    const std::string block = raw_block == row.code ? raw_block + "-" + raw_block : raw_block;
    if (!builder.has_node(block)) {
      if (!builder.has_node(chapter)) builder.add_edge(chapter, kVirtualRoot);
      builder.add_edge(block, chapter);
    }
    builder.add_edge(row.code, block);
  }
  return std::move(builder).build();
}

Taxonomy parse_icd10pcs(std::string_view order_file, const TaxonomyOptions& options,
                        std::string id) {
  const auto rows = parse_order_file(order_file);
  std::map<std::string, std::string> header_descriptions;
  TaxonomyBuilder builder(std::move(id), options);
  builder.add_node(kVirtualRoot, "ICD-10-PCS");
  std::size_t n_codes = 0;
  for (const auto& row : rows) {
    if (row.code.size() != 7) {
      if (row.billable || row.code.size() > 7) throw CodeLengthNot7(row.line_no, row.code);
      header_descriptions.emplace(row.code, row.long_description);
      continue;
    }
    if (builder.has_node(row.code)) {
      throw MalformedLine(row.line_no, "duplicate code '" + row.code + "'");
    }
    builder.add_node(row.code, row.long_description);
    ++n_codes;
    // Walk up the prefix chain until it joins an existing branch.
    std::string child = row.code;
    for (std::size_t len = 6; len >= 1; --len) {
      const std::string prefix = row.code.substr(0, len);
      const bool known = builder.has_node(prefix);
      builder.add_edge(child, prefix);
      if (known) break;
      if (len == 1) builder.add_edge(prefix, kVirtualRoot);
      child = prefix;
    }
  }
  if (n_codes == 0) throw EmptyInput("procedure order file contains no 7-character codes");
  for (const auto& [code, description] : header_descriptions) {
    if (builder.has_node(code)) builder.add_node(code, description);
  }
  return std::move(builder).build();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string guess_taxonomy_format(const std::filesystem::path& path, std::string_view fallback) {
  if (path.extension() == ".tsv") return "tsv";
  return std::string(fallback);
}

Taxonomy load_taxonomy(std::string id, std::string_view format, const std::filesystem::path& path,
                       const std::filesystem::path& blocks_path) {
  const std::string text = read_text_file(path);
  if (format == "tsv") return parse_generic_taxonomy_tsv(std::move(id), text);
  if (format == "icd10cm") {
    Icd10CmOptions options;
    options.id = std::move(id);
    if (!blocks_path.empty()) options.blocks_tsv = read_text_file(blocks_path);
    return parse_icd10cm(text, options);
  }
  if (format == "icd10pcs") return parse_icd10pcs(text, {}, std::move(id));
  throw InvalidArgument("unknown taxonomy format '" + std::string(format) + "'");
}

}  // namespace taxonap
