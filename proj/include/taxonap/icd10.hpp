#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "taxonap/taxonomy.hpp"

namespace taxonap {

inline constexpr std::string_view kIcd10CmId = "icd10cm";
inline constexpr std::string_view kIcd10PcsId = "icd10pcs";

struct Icd10CmOptions {
  std::string id = std::string(kIcd10CmId);
  TaxonomyOptions taxonomy;
  // When non-empty, chapter and block levels are inserted between the root
  // and the 3-character categories. Format: `category<TAB>block<TAB>chapter`
  // per line, '#' comments allowed (see tools/icd10cm_blocks.py).
  std::string blocks_tsv;
};

// One row of a CMS fixed-width order file.
struct OrderFileRow {
  std::size_t line_no = 0;
  std::string code;
  bool billable = false;
  std::string short_description;
  std::string long_description;
};

// Splits a CMS order file into rows. Columns: order number (5), code (7,
// space padded), billable flag (1), short description (60), long
// description; single spaces between them. Throws EmptyInput, MalformedLine.
std::vector<OrderFileRow> parse_order_file(std::string_view text);

// Root -> 3-character categories -> every longer code under its longest
// strictly shorter prefix that is itself a code.
Taxonomy parse_icd10cm(std::string_view order_file, const Icd10CmOptions& options = {});

// Root -> 1-character section -> 2 -> ... -> 7-character codes. Header rows
// (non-billable, shorter than 7) only contribute descriptions.
// Throws CodeLengthNot7 for billable rows whose code is not 7 characters.
Taxonomy parse_icd10pcs(std::string_view order_file, const TaxonomyOptions& options = {},
                        std::string id = std::string(kIcd10PcsId));

std::string read_text_file(const std::filesystem::path& path);

// Loads a taxonomy by format name: "icd10cm", "icd10pcs" or "tsv".
Taxonomy load_taxonomy(std::string id, std::string_view format, const std::filesystem::path& path,
                       const std::filesystem::path& blocks_path = {});

// Format guess from a file name: *.tsv -> "tsv", otherwise `fallback`.
std::string guess_taxonomy_format(const std::filesystem::path& path, std::string_view fallback);

}  // namespace taxonap
