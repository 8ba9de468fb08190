// Copyright 2026 The tiab-screen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tiab/record.hpp"
#include "tiab/store.hpp"

namespace tiab::ingest {

enum class Format { ris, nbib, pubmed_xml, csv };

std::string_view to_string(Format f) noexcept;
std::optional<Format> parse_format(std::string_view s) noexcept;
/// Guess from a file name extension (.ris, .nbib/.txt, .xml, .csv).
std::optional<Format> format_from_extension(std::string_view filename) noexcept;

/// Parses one file into drafts in file order. Unknown tags are ignored.
/// Throws Error(encoding | empty_input | schema | parse).
std::vector<RecordDraft> parse_records(std::string_view bytes, Format format);

std::vector<RecordDraft> parse_ris(std::string_view content);
std::vector<RecordDraft> parse_nbib(std::string_view content);
std::vector<RecordDraft> parse_pubmed_xml(std::string_view content);
std::vector<RecordDraft> parse_csv(std::string_view content);

/// Lowercase (after NFKC), drop every [...] segment, turn every
/// non-alphanumeric character into a space, collapse and trim whitespace.
std::string normalize_title(std::string_view title);

/// "pmid:<pmid>", else "doi:<lowercased doi>", else "title:<normalized>".
/// Throws Error(validation) when all three are absent or empty.
std::string make_dedup_key(const std::optional<std::string>& pmid, const std::optional<std::string>& doi,
                           std::string_view title);

struct DuplicateEntry {
  std::size_t draft_index = 0;
  std::string existing_ref_id;  // empty when the first occurrence was in the same batch
  std::string dedup_key;
};

struct ImportReport {
  std::size_t imported_count = 0;
  std::size_t duplicate_count = 0;
  std::size_t rejected_count = 0;
  std::vector<DuplicateEntry> duplicates;
  std::vector<std::string> imported_ref_ids;
  std::vector<std::string> rejections;  // "<index>: <reason>"
};

/// Deduplicates against the project and within the batch (first occurrence
/// wins), then appends survivors in one atomic write.
ImportReport import_batch(const std::vector<RecordDraft>& drafts, Project& project, std::string_view importer,
                          std::string_view source_file);

enum class ExportFormat { csv, ris };
std::optional<ExportFormat> parse_export_format(std::string_view s) noexcept;

/// Scope is "all" or a status name. CSV: 19 reference columns plus
/// final_decision. RIS: one block per record ending with "ER  -".
std::string export_records(const Project& project, ExportFormat format, std::string_view scope);
std::string export_records(const Snapshot& snapshot, ExportFormat format, std::string_view scope);

/// Draft view of a stored record (authors split back into names).
RecordDraft draft_from_record(const Record& r);

}  // namespace tiab::ingest
