#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpl/byte_span.hpp"
#include "dpl/senses.hpp"
#include "dpl/treebank.hpp"

namespace dpl {

enum class RelType { Explicit, Implicit, AltLex, AltLexC, EntRel, Hypophora, NoRel };

std::string_view to_string(RelType type);
RelType rel_type_from(std::string_view name);  // accepts "Entity" for EntRel

// One stand-off discourse relation, spans into the raw document bytes.
struct RelationRecord {
  std::string doc_id;
  int section = -1;                       // 0-24, derived from doc_id
  RelType rel_type = RelType::Implicit;
  std::optional<std::string> conn;        // surface or inserted connective
  std::vector<SenseLabel> senses;         // 1-2 for sense-bearing types
  ByteSpanList arg1;
  ByteSpanList arg2;
  std::optional<ByteSpanList> conn_span;
  std::optional<int> link;                // shared by co-occurring relations

  bool operator==(const RelationRecord&) const = default;
};

// "wsj_0351" -> 3. Throws ValidationError on ids without a 4-digit
// suffix or with a section outside 0-24.
int section_of(std::string_view doc_id);

enum class RelationFormat { PipeDelimited, JsonLines };

// Reads records in the declared format, validating every record's
// invariants. Throws ParseError (with 1-based line number) or
// ValidationError naming the offending value.
std::vector<RelationRecord> parse_relations(std::istream& in, RelationFormat format);
std::vector<RelationRecord> parse_relations(const std::string& text, RelationFormat format);
void serialize_relations(const std::vector<RelationRecord>& records,
                         std::ostream& out, RelationFormat format);
std::string serialize_relations(const std::vector<RelationRecord>& records,
                                RelationFormat format);

// Per-record invariants (span validity, sense arity per type, ...).
void validate_record(const RelationRecord& rel);

enum class Location { InterSentential, IntraSentential };

std::string_view to_string(Location location);

// IntraSentential iff the union of arg1, arg2 and conn_span lies within
// one sentence span. Throws AlignmentError when any relation interval
// overlaps no sentence at all.
Location locate(const RelationRecord& rel, const std::vector<ByteSpan>& sentence_spans);

// True iff rel.link is present and shared by at least one other
// relation of the same document.
bool is_linked(const RelationRecord& rel, const std::vector<RelationRecord>& doc_relations);

// As is_linked, but the sharing partner must have the given type.
bool linked_with(const RelationRecord& rel, const std::vector<RelationRecord>& doc_relations,
                 RelType partner_type);

// One warning per link value that is not shared by >= 2 relations.
std::vector<std::string> link_warnings(const std::vector<RelationRecord>& doc_relations);

struct Document {
  std::string doc_id;
  int section = -1;
  std::string text;
  std::vector<RelationRecord> relations;
  std::vector<ParsedSentence> sentences;

  std::vector<ByteSpan> sentence_spans() const;
};

struct Corpus {
  std::vector<Document> docs;

  std::size_t relation_count() const;
  const Document* find(std::string_view doc_id) const;
};

// Index of one relation inside a corpus.
struct RelRef {
  int doc = 0;
  int rel = 0;
  bool operator==(const RelRef&) const = default;
};

const RelationRecord& deref(const Corpus& corpus, RelRef ref);

std::vector<RelRef> all_relations(const Corpus& corpus);

struct Split {
  std::vector<RelRef> train, dev, test;
};

// Train = sections 2-21, dev = `dev_section`, test = 23. Records from
// other sections land in no bucket.
Split standard_split(const Corpus& corpus, int dev_section = 22);

struct Fold {
  std::vector<int> test_sections, dev_sections, train_sections;
  std::vector<RelRef> train, dev, test;
};

struct CvFolds {
  std::vector<Fold> folds;
  // Average inter/intra implicit counts over the fold training sets.
  double avg_train_inter = 0;
  double avg_train_intra = 0;
};

// Partitions sections (those present, or the explicit list) into k
// contiguous groups; fold i tests group i and uses group (i+1) mod k as
// dev. Throws ValidationError if k exceeds the section count.
CvFolds cv_folds(const Corpus& corpus, int k, std::vector<int> sections = {});

enum class MultiSensePolicy { OnePerSense, FirstSenseOnly };

struct InstanceOptions {
  MultiSensePolicy policy = MultiSensePolicy::OnePerSense;
  bool eval_mode = false;      // one instance per relation, full gold set
  int sense_level = 2;
  bool include_altlex = false;
};

// One classifier input: tokenized argument pair plus metadata.
struct Instance {
  std::vector<std::string> arg1_tokens;
  std::vector<std::string> arg2_tokens;
  int sense = 0;              // index into sense_inventory(level)
  std::vector<int> gold;      // distinct gold sense indices
  Location location = Location::InterSentential;
  bool linked = false;
  RelRef rel;
};

struct InstanceBuild {
  std::vector<Instance> instances;
  std::vector<std::string> warnings;  // skipped relations etc.
};

// Builds instances for the referenced implicit (optionally AltLex)
// relations. Tokens are treebank leaves intersecting the argument
// spans; whitespace tokenization is the fallback for documents without
// trees. Relations that fail alignment are skipped with a warning.
InstanceBuild make_instances(const Corpus& corpus, const std::vector<RelRef>& records,
                             const InstanceOptions& options);

// Deterministic synthetic corpus exercising every relation type,
// inter/intra locations, linked pairs and discontinuous spans. `size`
// is the number of relation records to emit.
Corpus generate_synthetic_corpus(std::uint64_t seed, int size);

// Directory layout: raw/<doc>.txt, trees/<doc>.mrg, relations.jsonl
// and relations.pipe.
void write_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& relations_path, const std::string& trees_dir,
                   const std::string& raw_dir);

}  // namespace dpl
