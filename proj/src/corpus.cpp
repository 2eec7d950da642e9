#include "dpl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dpl/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dpl {

void validate_spans(const ByteSpanList& spans, const std::string& what) {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].start >= spans[i].end)
      throw ValidationError(what + ": span start must precede end (" +
                            std::to_string(spans[i].start) + ".." +
                            std::to_string(spans[i].end) + ")");
    if (i > 0 && spans[i - 1].end > spans[i].start)
      throw ValidationError(what + ": spans must be ascending and non-overlapping");
  }
}

ByteSpan hull(const ByteSpanList& spans) {
  if (spans.empty()) throw ValidationError("hull of empty span list");
  return {spans.front().start, spans.back().end};
}

std::string spans_to_string(const ByteSpanList& spans) {
  std::string out;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(spans[i].start) + ".." + std::to_string(spans[i].end);
  }
  return out;
}

ByteSpanList spans_from_string(const std::string& text) {
  ByteSpanList spans;
  if (text.empty()) return spans;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t semi = text.find(';', start);
    std::string part = text.substr(start, semi == std::string::npos ? semi : semi - start);
    std::size_t dots = part.find("..");
    if (dots == std::string::npos)
      throw ValidationError("malformed span '" + part + "' (expected start..end)");
    try {
      std::uint32_t lo = static_cast<std::uint32_t>(std::stoul(part.substr(0, dots)));
      std::uint32_t hi = static_cast<std::uint32_t>(std::stoul(part.substr(dots + 2)));
      spans.push_back({lo, hi});
    } catch (const std::logic_error&) {
      throw ValidationError("malformed span '" + part + "'");
    }
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return spans;
}

std::string_view to_string(RelType type) {
  switch (type) {
    case RelType::Explicit: return "Explicit";
    case RelType::Implicit: return "Implicit";
    case RelType::AltLex: return "AltLex";
    case RelType::AltLexC: return "AltLexC";
    case RelType::EntRel: return "EntRel";
    case RelType::Hypophora: return "Hypophora";
    case RelType::NoRel: return "NoRel";
  }
  return "?";
}

RelType rel_type_from(std::string_view name) {
  if (name == "Explicit") return RelType::Explicit;
  if (name == "Implicit") return RelType::Implicit;
  if (name == "AltLex") return RelType::AltLex;
  if (name == "AltLexC") return RelType::AltLexC;
  if (name == "EntRel" || name == "Entity") return RelType::EntRel;
  if (name == "Hypophora") return RelType::Hypophora;
  if (name == "NoRel") return RelType::NoRel;
  throw ValidationError("unknown relation type: '" + std::string(name) + "'");
}

std::string_view to_string(Location location) {
  return location == Location::IntraSentential ? "intra" : "inter";
}

int section_of(std::string_view doc_id) {
  std::size_t underscore = doc_id.rfind('_');
  if (underscore == std::string_view::npos || doc_id.size() - underscore - 1 != 4)
    throw ValidationError("doc id '" + std::string(doc_id) +
                          "' lacks a 4-digit file number");
  std::string_view digits = doc_id.substr(underscore + 1);
  for (char c : digits)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ValidationError("doc id '" + std::string(doc_id) +
                            "' lacks a 4-digit file number");
  int section = (digits[0] - '0') * 10 + (digits[1] - '0');
  if (section > 24)
    throw ValidationError("doc id '" + std::string(doc_id) + "' names section " +
                          std::to_string(section) + " outside 0-24");
  return section;
}

void validate_record(const RelationRecord& rel) {
  if (rel.section < 0 || rel.section > 24)
    throw ValidationError(rel.doc_id + ": section " + std::to_string(rel.section) +
                          " outside 0-24");
  validate_spans(rel.arg1, rel.doc_id + " arg1");
  validate_spans(rel.arg2, rel.doc_id + " arg2");
  if (rel.arg1.empty() || rel.arg2.empty())
    throw ValidationError(rel.doc_id + ": arg1 and arg2 must be non-empty");
  if (rel.conn_span) validate_spans(*rel.conn_span, rel.doc_id + " conn");
  bool sense_bearing = rel.rel_type == RelType::Explicit || rel.rel_type == RelType::Implicit ||
                       rel.rel_type == RelType::AltLex || rel.rel_type == RelType::AltLexC;
  if (sense_bearing && rel.senses.empty())
    throw ValidationError(rel.doc_id + ": " + std::string(to_string(rel.rel_type)) +
                          " relation carries no sense");
  if (!sense_bearing && !rel.senses.empty())
    throw ValidationError(rel.doc_id + ": " + std::string(to_string(rel.rel_type)) +
                          " relation must not carry senses");
  if (rel.senses.size() > 2)
    throw ValidationError(rel.doc_id + ": at most 2 senses per relation");
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t at = line.find(sep, start);
    if (at == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, at - start));
    start = at + 1;
  }
  return fields;
}

constexpr int kPipeFields = 9;
// doc_id|rel_type|conn_span|conn|sense1|sense2|arg1|arg2|link

RelationRecord record_from_pipe(const std::string& line) {
  std::vector<std::string> f = split_fields(line, '|');
  if (static_cast<int>(f.size()) != kPipeFields)
    throw ValidationError("expected " + std::to_string(kPipeFields) + " fields, got " +
                          std::to_string(f.size()));
  RelationRecord rel;
  rel.doc_id = f[0];
  rel.section = section_of(rel.doc_id);
  rel.rel_type = rel_type_from(f[1]);
  if (!f[2].empty()) rel.conn_span = spans_from_string(f[2]);
  if (!f[3].empty()) rel.conn = f[3];
  if (!f[4].empty()) rel.senses.push_back(SenseLabel::parse(f[4]));
  if (!f[5].empty()) rel.senses.push_back(SenseLabel::parse(f[5]));
  rel.arg1 = spans_from_string(f[6]);
  rel.arg2 = spans_from_string(f[7]);
  if (!f[8].empty()) {
    try {
      rel.link = std::stoi(f[8]);
    } catch (const std::logic_error&) {
      throw ValidationError("malformed link index '" + f[8] + "'");
    }
  }
  return rel;
}

std::string record_to_pipe(const RelationRecord& rel) {
  std::string out = rel.doc_id;
  out += '|';
  out += to_string(rel.rel_type);
  out += '|';
  if (rel.conn_span) out += spans_to_string(*rel.conn_span);
  out += '|';
  if (rel.conn) out += *rel.conn;
  out += '|';
  if (!rel.senses.empty()) out += rel.senses[0].str();
  out += '|';
  if (rel.senses.size() > 1) out += rel.senses[1].str();
  out += '|';
  out += spans_to_string(rel.arg1);
  out += '|';
  out += spans_to_string(rel.arg2);
  out += '|';
  if (rel.link) out += std::to_string(*rel.link);
  return out;
}

json spans_to_json(const ByteSpanList& spans) {
  json j = json::array();
  for (const ByteSpan& s : spans) j.push_back({s.start, s.end});
  return j;
}

ByteSpanList spans_from_json(const json& j) {
  ByteSpanList spans;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2)
      throw ValidationError("span must be a [start, end] pair");
    spans.push_back({pair[0].get<std::uint32_t>(), pair[1].get<std::uint32_t>()});
  }
  return spans;
}

RelationRecord record_from_json(const std::string& line) {
  json j = json::parse(line);
  RelationRecord rel;
  rel.doc_id = j.at("doc_id").get<std::string>();
  rel.section = section_of(rel.doc_id);
  rel.rel_type = rel_type_from(j.at("rel_type").get<std::string>());
  if (j.contains("conn") && !j["conn"].is_null()) rel.conn = j["conn"].get<std::string>();
  if (j.contains("senses"))
    for (const auto& s : j["senses"])
      rel.senses.push_back(SenseLabel::parse(s.get<std::string>()));
  rel.arg1 = spans_from_json(j.at("arg1"));
  rel.arg2 = spans_from_json(j.at("arg2"));
  if (j.contains("conn_span") && !j["conn_span"].is_null())
    rel.conn_span = spans_from_json(j["conn_span"]);
  if (j.contains("link") && !j["link"].is_null()) rel.link = j["link"].get<int>();
  return rel;
}

std::string record_to_json(const RelationRecord& rel) {
  json j;
  j["doc_id"] = rel.doc_id;
  j["rel_type"] = std::string(to_string(rel.rel_type));
  if (rel.conn) j["conn"] = *rel.conn;
  json senses = json::array();
  for (const SenseLabel& s : rel.senses) senses.push_back(s.str());
  j["senses"] = senses;
  j["arg1"] = spans_to_json(rel.arg1);
  j["arg2"] = spans_to_json(rel.arg2);
  if (rel.conn_span) j["conn_span"] = spans_to_json(*rel.conn_span);
  if (rel.link) j["link"] = *rel.link;
  return j.dump();
}

}  // namespace

std::vector<RelationRecord> parse_relations(std::istream& in, RelationFormat format) {
  std::vector<RelationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      RelationRecord rel = format == RelationFormat::PipeDelimited
                               ? record_from_pipe(line)
                               : record_from_json(line);
      validate_record(rel);
      records.push_back(std::move(rel));
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<RelationRecord> parse_relations(const std::string& text, RelationFormat format) {
  std::istringstream in(text);
  return parse_relations(in, format);
}

void serialize_relations(const std::vector<RelationRecord>& records, std::ostream& out,
                         RelationFormat format) {
  for (const RelationRecord& rel : records) {
    out << (format == RelationFormat::PipeDelimited ? record_to_pipe(rel)
                                                    : record_to_json(rel))
        << '\n';
  }
}

std::string serialize_relations(const std::vector<RelationRecord>& records,
                                RelationFormat format) {
  std::ostringstream out;
  serialize_relations(records, out, format);
  return out.str();
}

namespace {

ByteSpanList relation_spans(const RelationRecord& rel) {
  ByteSpanList all = rel.arg1;
  all.insert(all.end(), rel.arg2.begin(), rel.arg2.end());
  if (rel.conn_span) all.insert(all.end(), rel.conn_span->begin(), rel.conn_span->end());
  return all;
}

}  // namespace

Location locate(const RelationRecord& rel, const std::vector<ByteSpan>& sentence_spans) {
  ByteSpanList spans = relation_spans(rel);
  for (const ByteSpan& span : spans) {
    bool covered = std::any_of(sentence_spans.begin(), sentence_spans.end(),
                               [&](const ByteSpan& s) { return s.overlaps(span); });
    if (!covered)
      throw AlignmentError(rel.doc_id + ": relation span " + std::to_string(span.start) +
                           ".." + std::to_string(span.end) +
                           " not covered by any sentence span");
  }
  for (const ByteSpan& sentence : sentence_spans) {
    bool all_inside = std::all_of(spans.begin(), spans.end(), [&](const ByteSpan& span) {
      return sentence.contains(span);
    });
    if (all_inside) return Location::IntraSentential;
  }
  return Location::InterSentential;
}

bool is_linked(const RelationRecord& rel, const std::vector<RelationRecord>& doc_relations) {
  if (!rel.link) return false;
  int shared = 0;
  for (const RelationRecord& other : doc_relations)
    if (other.link && *other.link == *rel.link) ++shared;
  return shared >= 2;
}

bool linked_with(const RelationRecord& rel, const std::vector<RelationRecord>& doc_relations,
                 RelType partner_type) {
  if (!rel.link) return false;
  for (const RelationRecord& other : doc_relations) {
    if (&other == &rel) continue;
    if (other.link && *other.link == *rel.link && other.rel_type == partner_type &&
        !(other == rel))
      return true;
  }
  return false;
}

std::vector<std::string> link_warnings(const std::vector<RelationRecord>& doc_relations) {
  std::map<int, int> counts;
  for (const RelationRecord& rel : doc_relations)
    if (rel.link) ++counts[*rel.link];
  std::vector<std::string> warnings;
  for (const auto& [link, count] : counts)
    if (count < 2)
      warnings.push_back("link index " + std::to_string(link) +
                         " is not shared by any other relation");
  return warnings;
}

std::vector<ByteSpan> Document::sentence_spans() const {
  std::vector<ByteSpan> spans;
  spans.reserve(sentences.size());
  for (const ParsedSentence& s : sentences) spans.push_back(s.span);
  return spans;
}

std::size_t Corpus::relation_count() const {
  std::size_t n = 0;
  for (const Document& doc : docs) n += doc.relations.size();
  return n;
}

const Document* Corpus::find(std::string_view doc_id) const {
  for (const Document& doc : docs)
    if (doc.doc_id == doc_id) return &doc;
  return nullptr;
}

const RelationRecord& deref(const Corpus& corpus, RelRef ref) {
  return corpus.docs.at(ref.doc).relations.at(ref.rel);
}

std::vector<RelRef> all_relations(const Corpus& corpus) {
  std::vector<RelRef> refs;
  for (int d = 0; d < static_cast<int>(corpus.docs.size()); ++d)
    for (int r = 0; r < static_cast<int>(corpus.docs[d].relations.size()); ++r)
      refs.push_back({d, r});
  return refs;
}

Split standard_split(const Corpus& corpus, int dev_section) {
  Split split;
  for (RelRef ref : all_relations(corpus)) {
    int section = corpus.docs[ref.doc].section;
    if (section >= 2 && section <= 21)
      split.train.push_back(ref);
    else if (section == dev_section)
      split.dev.push_back(ref);
    else if (section == 23)
      split.test.push_back(ref);
  }
  return split;
}

CvFolds cv_folds(const Corpus& corpus, int k, std::vector<int> sections) {
  if (k < 2) throw ValidationError("cv_folds requires k >= 2");
  if (sections.empty()) {
    std::set<int> present;
    for (const Document& doc : corpus.docs) present.insert(doc.section);
    sections.assign(present.begin(), present.end());
  } else {
    std::sort(sections.begin(), sections.end());
    sections.erase(std::unique(sections.begin(), sections.end()), sections.end());
  }
  int n = static_cast<int>(sections.size());
  if (k > n)
    throw ValidationError("cv_folds: k=" + std::to_string(k) + " exceeds " +
                          std::to_string(n) + " sections");

  // Contiguous groups, the first (n mod k) one section larger.
  std::vector<std::vector<int>> groups(k);
  int base = n / k, extra = n % k, at = 0;
  for (int g = 0; g < k; ++g) {
    int take = base + (g < extra ? 1 : 0);
    for (int i = 0; i < take; ++i) groups[g].push_back(sections[at++]);
  }

  CvFolds result;
  double inter_sum = 0, intra_sum = 0;
  for (int f = 0; f < k; ++f) {
    Fold fold;
    fold.test_sections = groups[f];
    fold.dev_sections = groups[(f + 1) % k];
    std::set<int> test_set(fold.test_sections.begin(), fold.test_sections.end());
    std::set<int> dev_set(fold.dev_sections.begin(), fold.dev_sections.end());
    for (int section : sections)
      if (!test_set.count(section) && !dev_set.count(section))
        fold.train_sections.push_back(section);
    std::set<int> train_set(fold.train_sections.begin(), fold.train_sections.end());

    long inter = 0, intra = 0;
    for (int d = 0; d < static_cast<int>(corpus.docs.size()); ++d) {
      const Document& doc = corpus.docs[d];
      std::vector<ByteSpan> spans = doc.sentence_spans();
      for (int r = 0; r < static_cast<int>(doc.relations.size()); ++r) {
        RelRef ref{d, r};
        if (test_set.count(doc.section)) {
          fold.test.push_back(ref);
        } else if (dev_set.count(doc.section)) {
          fold.dev.push_back(ref);
        } else if (train_set.count(doc.section)) {
          fold.train.push_back(ref);
          if (doc.relations[r].rel_type == RelType::Implicit && !spans.empty()) {
            if (locate(doc.relations[r], spans) == Location::IntraSentential)
              ++intra;
            else
              ++inter;
          }
        }
      }
    }
    inter_sum += static_cast<double>(inter);
    intra_sum += static_cast<double>(intra);
    result.folds.push_back(std::move(fold));
  }
  result.avg_train_inter = inter_sum / k;
  result.avg_train_intra = intra_sum / k;
  return result;
}

namespace {

std::vector<std::string> whitespace_tokens(const std::string& text, const ByteSpanList& spans) {
  std::vector<std::string> tokens;
  for (const ByteSpan& span : spans) {
    if (span.end > text.size()) throw AlignmentError("argument span beyond document end");
    std::istringstream in(text.substr(span.start, span.length()));
    std::string token;
    while (in >> token) tokens.push_back(token);
  }
  return tokens;
}

std::vector<std::string> leaf_tokens(const Document& doc, const ByteSpanList& spans) {
  std::vector<std::string> tokens;
  for (const ParsedSentence& sentence : doc.sentences) {
    for (const LeafToken& leaf : sentence.leaves) {
      if (leaf.trace || leaf.span.empty()) continue;
      bool inside = std::any_of(spans.begin(), spans.end(),
                                [&](const ByteSpan& s) { return s.overlaps(leaf.span); });
      if (inside) tokens.push_back(leaf.token);
    }
  }
  return tokens;
}

}  // namespace

InstanceBuild make_instances(const Corpus& corpus, const std::vector<RelRef>& records,
                             const InstanceOptions& options) {
  InstanceBuild build;
  const auto& inventory = sense_inventory(options.sense_level);
  (void)inventory;
  for (RelRef ref : records) {
    const Document& doc = corpus.docs.at(ref.doc);
    const RelationRecord& rel = doc.relations.at(ref.rel);
    bool wanted = rel.rel_type == RelType::Implicit ||
                  (options.include_altlex && rel.rel_type == RelType::AltLex);
    if (!wanted) continue;

    Instance proto;
    proto.rel = ref;
    proto.linked = is_linked(rel, doc.relations);
    try {
      if (!doc.sentences.empty()) {
        proto.location = locate(rel, doc.sentence_spans());
        proto.arg1_tokens = leaf_tokens(doc, rel.arg1);
        proto.arg2_tokens = leaf_tokens(doc, rel.arg2);
      } else {
        proto.location = Location::InterSentential;
        proto.arg1_tokens = whitespace_tokens(doc.text, rel.arg1);
        proto.arg2_tokens = whitespace_tokens(doc.text, rel.arg2);
      }
    } catch (const AlignmentError& e) {
      build.warnings.push_back(std::string("skipped relation: ") + e.what());
      continue;
    }
    if (proto.arg1_tokens.empty() || proto.arg2_tokens.empty()) {
      build.warnings.push_back("skipped relation in " + doc.doc_id +
                               ": empty argument after tokenization");
      continue;
    }

    // Distinct projected gold senses, first-listed order.
    std::vector<int> gold;
    for (const SenseLabel& sense : rel.senses) {
      int idx = sense_index(sense.level_str(options.sense_level), options.sense_level);
      if (idx < 0) {
        build.warnings.push_back("sense '" + sense.str() + "' outside the level-" +
                                 std::to_string(options.sense_level) + " head in " +
                                 doc.doc_id);
        continue;
      }
      if (std::find(gold.begin(), gold.end(), idx) == gold.end()) gold.push_back(idx);
    }
    if (gold.empty()) {
      build.warnings.push_back("skipped relation in " + doc.doc_id +
                               ": no sense projects onto the classification head");
      continue;
    }
    proto.gold = gold;

    if (options.eval_mode || options.policy == MultiSensePolicy::FirstSenseOnly) {
      proto.sense = gold.front();
      build.instances.push_back(proto);
    } else {
      for (int idx : gold) {
        Instance inst = proto;
        inst.sense = idx;
        build.instances.push_back(std::move(inst));
      }
    }
  }
  return build;
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "raw");
  fs::create_directories(fs::path(dir) / "trees");
  std::ofstream jsonl(fs::path(dir) / "relations.jsonl");
  std::ofstream pipe(fs::path(dir) / "relations.pipe");
  if (!jsonl || !pipe) throw IoError("cannot write relation files under " + dir);
  for (const Document& doc : corpus.docs) {
    std::ofstream raw(fs::path(dir) / "raw" / (doc.doc_id + ".txt"), std::ios::binary);
    raw << doc.text;
    std::ofstream mrg(fs::path(dir) / "trees" / (doc.doc_id + ".mrg"));
    for (const ParsedSentence& sentence : doc.sentences)
      mrg << tree_to_string(sentence.tree) << '\n';
    serialize_relations(doc.relations, jsonl, RelationFormat::JsonLines);
    serialize_relations(doc.relations, pipe, RelationFormat::PipeDelimited);
  }
}

Corpus load_corpus(const std::string& relations_path, const std::string& trees_dir,
                   const std::string& raw_dir) {
  std::ifstream in(relations_path);
  if (!in) throw IoError("cannot open relations file: " + relations_path);
  RelationFormat format = relations_path.ends_with(".pipe")
                              ? RelationFormat::PipeDelimited
                              : RelationFormat::JsonLines;
  std::vector<RelationRecord> records = parse_relations(in, format);

  Corpus corpus;
  std::map<std::string, int> doc_index;
  for (RelationRecord& rel : records) {
    auto [it, inserted] = doc_index.try_emplace(rel.doc_id, corpus.docs.size());
    if (inserted) {
      Document doc;
      doc.doc_id = rel.doc_id;
      doc.section = rel.section;
      corpus.docs.push_back(std::move(doc));
    }
    corpus.docs[it->second].relations.push_back(std::move(rel));
  }

  for (Document& doc : corpus.docs) {
    if (!raw_dir.empty()) {
      fs::path raw = fs::path(raw_dir) / (doc.doc_id + ".txt");
      std::ifstream raw_in(raw, std::ios::binary);
      if (!raw_in) throw IoError("missing raw text: " + raw.string());
      std::ostringstream buffer;
      buffer << raw_in.rdbuf();
      doc.text = buffer.str();
    }
    if (!trees_dir.empty()) {
      fs::path mrg = fs::path(trees_dir) / (doc.doc_id + ".mrg");
      std::ifstream mrg_in(mrg);
      if (!mrg_in) throw IoError("missing trees: " + mrg.string());
      std::ostringstream buffer;
      buffer << mrg_in.rdbuf();
      doc.sentences = align(parse_trees(buffer.str()), doc.text);
    }
  }
  return corpus;
}

}  // namespace dpl
