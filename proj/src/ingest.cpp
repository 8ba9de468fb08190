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

#include "tiab/ingest.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "tiab/csv.hpp"
#include "tiab/error.hpp"
#include "tiab/text.hpp"
#include "tiab/xml.hpp"

namespace tiab::ingest {

std::string_view to_string(Format f) noexcept {
  switch (f) {
    case Format::ris: return "ris";
    case Format::nbib: return "nbib";
    case Format::pubmed_xml: return "pubmed_xml";
    case Format::csv: return "csv";
  }
  return "ris";
}

std::optional<Format> parse_format(std::string_view s) noexcept {
  if (s == "ris") return Format::ris;
  if (s == "nbib" || s == "medline") return Format::nbib;
  if (s == "pubmed_xml" || s == "xml") return Format::pubmed_xml;
  if (s == "csv") return Format::csv;
  return std::nullopt;
}

std::optional<Format> format_from_extension(std::string_view filename) noexcept {
  const auto dot = filename.rfind('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const std::string ext = text::ascii_lower(filename.substr(dot + 1));
  if (ext == "ris") return Format::ris;
  if (ext == "nbib" || ext == "txt" || ext == "medline") return Format::nbib;
  if (ext == "xml") return Format::pubmed_xml;
  if (ext == "csv") return Format::csv;
  return std::nullopt;
}

namespace {

std::string clean(std::string_view s) { return text::collapse_whitespace(s); }

void set_first(std::string& field, std::string_view value) {
  if (field.empty()) field = clean(value);
}

void set_first(std::optional<std::string>& field, std::string_view value) {
  auto v = clean(value);
  if (!field && !v.empty()) field = std::move(v);
}

void set_year(std::optional<int>& year, std::string_view value) {
  if (year) return;
  if (int y = text::first_year(value); y >= 0) year = y;
}

std::string join_pages(const std::string& sp, const std::string& ep) {
  if (!sp.empty() && !ep.empty()) return sp + "-" + ep;
  return sp.empty() ? ep : sp;
}

std::vector<std::string_view> lines_of(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '\n') {
      auto line = s.substr(start, i - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      out.push_back(line);
      start = i + 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// RIS

bool is_ris_tag_line(std::string_view line) {
  if (line.size() < 5) return false;
  const auto up = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'); };
  return line[0] >= 'A' && line[0] <= 'Z' && up(line[1]) && line[2] == ' ' && line[3] == ' ' && line[4] == '-' &&
         (line.size() == 5 || line[5] == ' ');
}

struct RisFields {
  std::vector<std::pair<std::string, std::string>> tags;
};

RecordDraft ris_to_draft(const RisFields& rec) {
  RecordDraft d;
  std::string sp, ep, jo, t2, jf;
  for (const auto& [tag, value] : rec.tags) {
    if (tag == "TI" || tag == "T1") set_first(d.title, value);
    else if (tag == "AB" || tag == "N2") set_first(d.abstract, value);
    else if (tag == "PY" || tag == "Y1") set_year(d.year, value);
    else if (tag == "AU") {
      auto a = clean(value);
      if (!a.empty()) d.authors.push_back(std::move(a));
    } else if (tag == "JO") set_first(jo, value);
    else if (tag == "T2") set_first(t2, value);
    else if (tag == "JF") set_first(jf, value);
    else if (tag == "VL") set_first(d.volume, value);
    else if (tag == "IS") set_first(d.issue, value);
    else if (tag == "SP") set_first(sp, value);
    else if (tag == "EP") set_first(ep, value);
    else if (tag == "SN") set_first(d.issn, value);
    else if (tag == "DO") set_first(d.doi, value);
    else if (tag == "UR") set_first(d.url, value);
  }
  d.journal = !jo.empty() ? jo : (!t2.empty() ? t2 : jf);
  d.pages = join_pages(sp, ep);
  d.source = "ris";
  return d;
}

// ---------------------------------------------------------------------------
// NBIB / MEDLINE

bool is_nbib_tag_line(std::string_view line) {
  if (line.size() < 5 || line[4] != '-') return false;
  if (line[0] < 'A' || line[0] > 'Z') return false;
  for (std::size_t i = 1; i < 4; ++i) {
    const char c = line[i];
    if (!((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == ' ')) return false;
  }
  return line.size() == 5 || line[5] == ' ';
}

std::optional<std::string> doi_from_id(std::string_view value) {
  const auto v = text::trim(value);
  const std::string_view suffix = "[doi]";
  if (v.size() <= suffix.size() || v.substr(v.size() - suffix.size()) != suffix) return std::nullopt;
  auto doi = text::trim(v.substr(0, v.size() - suffix.size()));
  if (doi.empty()) return std::nullopt;
  return std::string(doi);
}

RecordDraft nbib_to_draft(const std::vector<std::pair<std::string, std::string>>& tags) {
  RecordDraft d;
  std::vector<std::string> fau, au;
  std::optional<std::string> aid_doi, lid_doi;
  for (const auto& [tag, value] : tags) {
    if (tag == "PMID") set_first(d.pmid, value);
    else if (tag == "TI") set_first(d.title, value);
    else if (tag == "AB") set_first(d.abstract, value);
    else if (tag == "DP") set_year(d.year, value);
    else if (tag == "FAU") fau.push_back(clean(value));
    else if (tag == "AU") au.push_back(clean(value));
    else if (tag == "JT") set_first(d.journal, value);
    else if (tag == "VI") set_first(d.volume, value);
    else if (tag == "IP") set_first(d.issue, value);
    else if (tag == "PG") set_first(d.pages, value);
    else if (tag == "IS") {
      // "IS  - 1234-5678 (Electronic)": keep the identifier only.
      auto v = text::trim(value);
      set_first(d.issn, v.substr(0, std::min(v.find(' '), v.size())));
    } else if (tag == "AID") {
      if (!aid_doi) aid_doi = doi_from_id(value);
    } else if (tag == "LID") {
      if (!lid_doi) lid_doi = doi_from_id(value);
    }
  }
  d.authors = !fau.empty() ? fau : au;
  std::erase_if(d.authors, [](const std::string& a) { return a.empty(); });
  d.doi = aid_doi ? aid_doi : lid_doi;
  if (d.doi) d.doi = clean(*d.doi);
  d.source = "nbib";
  return d;
}

// ---------------------------------------------------------------------------
// PubMed XML

std::string element_text(const xml::Node* n) { return n ? clean(n->inner_text()) : std::string(); }

RecordDraft pubmed_article_to_draft(const xml::Node& art) {
  RecordDraft d;
  const xml::Node* citation = art.child("MedlineCitation");
  const xml::Node* article = citation ? citation->child("Article") : nullptr;
  if (article) {
    d.title = element_text(article->child("ArticleTitle"));
    if (const xml::Node* abs = article->child("Abstract")) {
      std::vector<std::string> parts;
      for (const xml::Node* t : abs->children_named("AbstractText")) {
        std::string body = element_text(t);
        if (const std::string* label = t->attribute("Label"); label && !label->empty()) {
          body = clean(*label) + ": " + body;
        }
        if (!body.empty()) parts.push_back(std::move(body));
      }
      d.abstract = text::join(parts, " ");
    }
    if (const xml::Node* journal = article->child("Journal")) {
      d.journal = element_text(journal->child("Title"));
      d.issn = element_text(journal->child("ISSN"));
      if (const xml::Node* issue = journal->child("JournalIssue")) {
        d.volume = element_text(issue->child("Volume"));
        d.issue = element_text(issue->child("Issue"));
        if (const xml::Node* date = issue->child("PubDate")) {
          if (const xml::Node* y = date->child("Year")) set_year(d.year, y->inner_text());
          if (const xml::Node* md = date->child("MedlineDate")) set_year(d.year, md->inner_text());
        }
      }
    }
    if (!d.year) {
      if (const xml::Node* y = article->path({"ArticleDate", "Year"})) set_year(d.year, y->inner_text());
    }
    d.pages = element_text(article->path({"Pagination", "MedlinePgn"}));
    if (const xml::Node* list = article->child("AuthorList")) {
      for (const xml::Node* a : list->children_named("Author")) {
        std::string name;
        if (const xml::Node* coll = a->child("CollectiveName")) {
          name = element_text(coll);
        } else {
          name = element_text(a->child("LastName"));
          std::string given = element_text(a->child("ForeName"));
          if (given.empty()) given = element_text(a->child("Initials"));
          if (!given.empty()) name += (name.empty() ? "" : ", ") + given;
        }
        if (!name.empty()) d.authors.push_back(std::move(name));
      }
    }
    for (const xml::Node* loc : article->children_named("ELocationID")) {
      const std::string* type = loc->attribute("EIdType");
      if (type && *type == "doi" && !d.doi) set_first(d.doi, loc->inner_text());
    }
  }
  // Only the article's own ids; ReferenceList entries carry ArticleIdList too.
  std::optional<std::string> doi_from_ids;
  if (const xml::Node* ids = art.path({"PubmedData", "ArticleIdList"})) {
    for (const xml::Node* id : ids->children_named("ArticleId")) {
      const std::string* type = id->attribute("IdType");
      if (!type) continue;
      if (*type == "doi") set_first(doi_from_ids, id->inner_text());
      if (*type == "pubmed") set_first(d.pmid, id->inner_text());
    }
  }
  if (doi_from_ids) d.doi = doi_from_ids;
  if (!d.pmid && citation) set_first(d.pmid, element_text(citation->child("PMID")));
  d.source = "pubmed_xml";
  return d;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvColumns {
  std::map<std::string, std::size_t> index;  // canonical name -> column
};

CsvColumns map_csv_header(const csv::Row& header) {
  static const std::map<std::string, std::string> aliases = {{"ti", "title"}, {"ab", "abstract"}};
  CsvColumns cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = text::ascii_lower(text::trim(header[i]));
    if (auto it = aliases.find(name); it != aliases.end()) name = it->second;
    const bool known = std::find(kReferenceColumns.begin(), kReferenceColumns.end(), name) != kReferenceColumns.end();
    if (known && !cols.index.contains(name)) cols.index[name] = i;
  }
  return cols;
}

}  // namespace

std::vector<RecordDraft> parse_ris(std::string_view content) {
  std::vector<RecordDraft> out;
  RisFields cur;
  bool open = false;
  for (auto line : lines_of(content)) {
    if (is_ris_tag_line(line)) {
      const std::string tag(line.substr(0, 2));
      const auto value = line.size() > 6 ? line.substr(6) : std::string_view{};
      if (tag == "ER") {
        if (open) out.push_back(ris_to_draft(cur));
        cur = {};
        open = false;
        continue;
      }
      cur.tags.emplace_back(tag, std::string(value));
      open = true;
    } else if (open && !text::trim(line).empty() && !cur.tags.empty()) {
      cur.tags.back().second += " ";
      cur.tags.back().second += text::trim(line);
    }
  }
  // Tolerate a final record missing its terminator.
  if (open) out.push_back(ris_to_draft(cur));
  return out;
}

std::vector<RecordDraft> parse_nbib(std::string_view content) {
  std::vector<RecordDraft> out;
  std::vector<std::pair<std::string, std::string>> tags;
  const auto flush = [&] {
    if (!tags.empty()) out.push_back(nbib_to_draft(tags));
    tags.clear();
  };
  for (auto line : lines_of(content)) {
    if (text::trim(line).empty()) {
      flush();
      continue;
    }
    if (is_nbib_tag_line(line)) {
      std::string tag(text::trim(line.substr(0, 4)));
      if (tag == "PMID") flush();
      tags.emplace_back(std::move(tag), std::string(line.size() > 6 ? line.substr(6) : std::string_view{}));
    } else if (!tags.empty()) {
      tags.back().second += " ";
      tags.back().second += text::trim(line);
    }
  }
  flush();
  return out;
}

std::vector<RecordDraft> parse_pubmed_xml(std::string_view content) {
  auto doc = xml::parse(content);
  std::vector<const xml::Node*> articles;
  doc->collect("PubmedArticle", articles);
  std::vector<RecordDraft> out;
  out.reserve(articles.size());
  for (const xml::Node* a : articles) out.push_back(pubmed_article_to_draft(*a));
  return out;
}

std::vector<RecordDraft> parse_csv(std::string_view content) {
  auto rows = csv::parse(content);
  if (rows.empty()) return {};
  const CsvColumns cols = map_csv_header(rows.front());
  if (!cols.index.contains("title")) throw Error(ErrorCode::schema, "CSV input has no title column");
  const auto get = [&](const csv::Row& row, const char* name) -> std::string_view {
    auto it = cols.index.find(name);
    if (it == cols.index.end() || it->second >= row.size()) return {};
    return row[it->second];
  };
  std::vector<RecordDraft> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    RecordDraft d;
    d.title = clean(get(row, "title"));
    d.abstract = clean(get(row, "abstract"));
    set_year(d.year, get(row, "year"));
    d.authors = split_authors(get(row, "authors"));
    for (auto& a : d.authors) a = clean(a);
    d.journal = clean(get(row, "journal"));
    d.volume = clean(get(row, "volume"));
    d.issue = clean(get(row, "issue"));
    d.pages = clean(get(row, "pages"));
    d.issn = clean(get(row, "issn"));
    set_first(d.doi, get(row, "doi"));
    set_first(d.pmid, get(row, "pmid"));
    d.url = clean(get(row, "url"));
    d.source = clean(get(row, "source"));
    if (d.source.empty()) d.source = "csv";
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<RecordDraft> parse_records(std::string_view bytes, Format format) {
  const std::string_view content = text::decode_utf8(bytes);
  std::vector<RecordDraft> drafts;
  switch (format) {
    case Format::ris: drafts = parse_ris(content); break;
    case Format::nbib: drafts = parse_nbib(content); break;
    case Format::pubmed_xml: drafts = parse_pubmed_xml(content); break;
    case Format::csv: drafts = parse_csv(content); break;
  }
  if (drafts.empty()) {
    throw Error(ErrorCode::empty_input, "no records found in " + std::string(to_string(format)) + " input");
  }
  return drafts;
}

// ---------------------------------------------------------------------------

std::string normalize_title(std::string_view title) {
  const std::u32string folded = text::to_u32(text::lower(text::nfkc(title)));
  // Drop maximal [...] segments. An unmatched '[' is ordinary punctuation.
  std::u32string kept;
  kept.reserve(folded.size());
  for (std::size_t i = 0; i < folded.size(); ++i) {
    if (folded[i] == U'[') {
      int depth = 0;
      std::size_t j = i;
      for (; j < folded.size(); ++j) {
        if (folded[j] == U'[') ++depth;
        if (folded[j] == U']' && --depth == 0) break;
      }
      if (j < folded.size()) {
        kept.push_back(U' ');
        i = j;
        continue;
      }
    }
    kept.push_back(folded[i]);
  }
  std::string out;
  bool pending_space = false;
  for (char32_t cp : kept) {
    if (!text::is_alnum(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    text::append_utf8(out, cp);
  }
  return out;
}

std::string make_dedup_key(const std::optional<std::string>& pmid, const std::optional<std::string>& doi,
                           std::string_view title) {
  if (pmid) {
    auto p = text::trim(*pmid);
    if (!p.empty()) return "pmid:" + std::string(p);
  }
  if (doi) {
    auto d = text::trim(*doi);
    if (!d.empty()) return "doi:" + text::lower(d);
  }
  std::string norm = normalize_title(title);
  if (norm.empty()) throw Error(ErrorCode::validation, "cannot derive a dedup key: no pmid, doi or title");
  return "title:" + norm;
}

ImportReport import_batch(const std::vector<RecordDraft>& drafts, Project& project, std::string_view importer,
                          std::string_view source_file) {
  if (text::trim(importer).empty()) throw Error(ErrorCode::validation, "importer identity is empty");
  const Snapshot snap = project.snapshot();
  std::unordered_map<std::string, std::string> existing;
  for (const auto& r : snap.records) existing.emplace(r.dedup_key, r.ref_id);

  ImportReport report;
  std::unordered_set<std::string> batch_first;
  std::vector<Record> records;
  const std::string now = format_timestamp(project.clock().now());

  for (std::size_t i = 0; i < drafts.size(); ++i) {
    const RecordDraft& d = drafts[i];
    const auto title = text::trim(d.title);
    if (title.empty()) {
      ++report.rejected_count;
      report.rejections.push_back(std::to_string(i) + ": empty title");
      continue;
    }
    if (d.pmid && !text::trim(*d.pmid).empty() && !text::all_digits(text::trim(*d.pmid))) {
      ++report.rejected_count;
      report.rejections.push_back(std::to_string(i) + ": pmid '" + *d.pmid + "' is not numeric");
      continue;
    }
    std::string key;
    try {
      key = make_dedup_key(d.pmid, d.doi, title);
    } catch (const Error& e) {
      ++report.rejected_count;
      report.rejections.push_back(std::to_string(i) + ": " + e.what());
      continue;
    }
    if (auto it = existing.find(key); it != existing.end()) {
      ++report.duplicate_count;
      report.duplicates.push_back({i, it->second, key});
      continue;
    }
    if (batch_first.count(key)) {
      ++report.duplicate_count;
      report.duplicates.push_back({i, "", key});
      continue;
    }
    Record r;
    r.title = std::string(title);
    r.abstract = std::string(text::trim(d.abstract));
    r.year = d.year;
    r.authors = serialize_authors(d.authors);
    r.journal = d.journal;
    r.volume = d.volume;
    r.issue = d.issue;
    r.pages = d.pages;
    r.issn = d.issn;
    r.doi = d.doi ? std::string(text::trim(*d.doi)) : std::string();
    r.pmid = d.pmid ? std::string(text::trim(*d.pmid)) : std::string();
    r.url = d.url;
    r.source = d.source;
    r.imported_at = now;
    r.imported_by = std::string(importer);
    r.dedup_key = key;
    r.source_file = std::string(source_file);
    batch_first.insert(key);
    records.push_back(std::move(r));
  }

  report.imported_ref_ids = project.append_records(std::move(records));
  report.imported_count = report.imported_ref_ids.size();
  return report;
}

std::optional<ExportFormat> parse_export_format(std::string_view s) noexcept {
  if (s == "csv") return ExportFormat::csv;
  if (s == "ris") return ExportFormat::ris;
  return std::nullopt;
}

RecordDraft draft_from_record(const Record& r) {
  RecordDraft d;
  d.title = r.title;
  d.abstract = r.abstract;
  d.year = r.year;
  d.authors = split_authors(r.authors);
  d.journal = r.journal;
  d.volume = r.volume;
  d.issue = r.issue;
  d.pages = r.pages;
  d.issn = r.issn;
  if (!r.doi.empty()) d.doi = r.doi;
  if (!r.pmid.empty()) d.pmid = r.pmid;
  d.url = r.url;
  d.source = r.source;
  return d;
}

namespace {

void ris_line(std::string& out, std::string_view tag, std::string_view value) {
  if (value.empty()) return;
  out.append(tag);
  out.append("  - ");
  out.append(value);
  out.push_back('\n');
}

}  // namespace

std::string export_records(const Snapshot& snap, ExportFormat format, std::string_view scope) {
  std::optional<Status> wanted;
  if (scope != "all") {
    wanted = parse_status(scope);
    if (!wanted) throw Error(ErrorCode::validation, "unknown export scope '" + std::string(scope) + "'");
  }
  const auto statuses = snap.effective_statuses(snap.all_reviewers());
  std::string out;
  if (format == ExportFormat::csv) {
    csv::Row header(kReferenceColumns.begin(), kReferenceColumns.end());
    header.emplace_back("final_decision");
    out += csv::format_row(header);
  }
  for (const auto& r : snap.records) {
    const Status st = statuses.at(r.ref_id);
    if (wanted && st != *wanted) continue;
    if (format == ExportFormat::csv) {
      auto row = record_to_row(r);
      row.emplace_back(to_string(st));
      out += csv::format_row(row);
      continue;
    }
    ris_line(out, "TY", "JOUR");
    ris_line(out, "TI", r.title);
    for (const auto& a : split_authors(r.authors)) ris_line(out, "AU", a);
    if (r.year) ris_line(out, "PY", std::to_string(*r.year));
    ris_line(out, "JO", r.journal);
    ris_line(out, "VL", r.volume);
    ris_line(out, "IS", r.issue);
    if (!r.pages.empty()) {
      const auto dash = r.pages.find('-');
      if (dash == std::string::npos || dash == 0 || dash + 1 == r.pages.size()) {
        ris_line(out, "SP", r.pages);
      } else {
        ris_line(out, "SP", r.pages.substr(0, dash));
        ris_line(out, "EP", r.pages.substr(dash + 1));
      }
    }
    ris_line(out, "SN", r.issn);
    ris_line(out, "DO", r.doi);
    ris_line(out, "UR", r.url);
    ris_line(out, "AB", r.abstract);
    out += "ER  - \n\n";
  }
  return out;
}

std::string export_records(const Project& project, ExportFormat format, std::string_view scope) {
  return export_records(project.snapshot(), format, scope);
}

}  // namespace tiab::ingest
