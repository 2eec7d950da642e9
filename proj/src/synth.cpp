#include <array>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "dpl/corpus.hpp"
#include "dpl/errors.hpp"
#include "dpl/treebank.hpp"

// Deterministic synthetic corpus. Sentence trees are built first, the
// raw text is detokenized from their leaves, and relation byte spans
// are recovered through the regular align() path so that every span
// invariant holds by construction.

namespace dpl {

namespace {

const std::vector<std::string> kBackground = {
    "market",  "prices",   "investors", "trading",  "bonds",   "stocks",
    "report",  "quarter",  "profit",    "analysts", "shares",  "index",
    "futures", "earnings", "dollar",    "rates",    "growth",  "volume",
    "board",   "deal",     "outlook",   "figures",  "traders", "margin",
};

struct SensePool {
  const char* name;
  std::vector<std::string> words;
  const char* sense;  // full dotted label
};

const std::vector<SensePool> kPools = {
    {"A",
     {"rainfall", "drought", "harvest", "irrigation", "soil", "crop", "famine", "yield",
      "monsoon", "fertile", "orchard", "grain"},
     "Contingency.Cause.Result"},
    {"B",
     {"sonata", "violin", "tempo", "melody", "chord", "orchestra", "rehearsal", "cadence",
      "maestro", "concerto", "aria", "quartet"},
     "Expansion.Level-of-detail.Arg2-as-detail"},
    {"C",
     {"glacier", "summit", "ridge", "avalanche", "crevasse", "basecamp", "ascent", "sherpa",
      "altitude", "descent", "icefall", "moraine"},
     "Temporal.Asynchronous.Precedence"},
    {"D",
     {"verdict", "jury", "appeal", "testimony", "plaintiff", "statute", "acquittal", "docket",
      "subpoena", "affidavit", "counsel", "tribunal"},
     "Comparison.Concession.Arg2-as-denier"},
    {"E",
     {"reactor", "turbine", "coolant", "fission", "isotope", "shielding", "meltdown", "uranium",
      "graphite", "neutron", "containment", "fuelrod"},
     "Contingency.Purpose.Arg2-as-goal"},
    {"F",
     {"coral", "lagoon", "plankton", "reef", "tide", "kelp", "estuary", "mangrove", "salinity",
      "current", "atoll", "seagrass"},
     "Expansion.Instantiation.Arg2-as-instance"},
};

// Shared pool: the sense is determined by the relation's location.
const SensePool kSharedPool = {
    "G",
    {"ledger", "audit", "invoice", "payroll", "balance", "deficit", "surplus", "voucher",
     "receipt", "liability", "asset", "budget"},
    nullptr};
const char* kSharedIntraSense = "Contingency.Cause.Reason";
const char* kSharedInterSense = "Expansion.Conjunction";

// Linked twins get their own pool so their sense stays learnable.
const SensePool kLinkedPool = {
    "H",
    {"orbit", "thruster", "payload", "satellite", "booster", "telemetry", "gantry", "apogee",
     "capsule", "module", "launchpad", "probe"},
    "Expansion.Substitution.Arg2-as-subst"};

const SensePool kAltLexPool = {
    "X",
    {"vaccine", "antibody", "dosage", "trial", "placebo", "serum", "pathogen", "immunity",
     "syringe", "antigen", "booster-shot", "titer"},
    "Contingency.Cause.Result"};

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  int below(int n) { return static_cast<int>(gen() % static_cast<std::uint64_t>(n)); }
  const std::string& pick(const std::vector<std::string>& pool) {
    return pool[below(static_cast<int>(pool.size()))];
  }
};

TreeNode preterm(const std::string& tag, const std::string& word) {
  return TreeNode::internal(tag, {TreeNode::leaf(word)});
}

int count_leaves(const TreeNode& node) {
  if (node.is_leaf()) return 1;
  int n = 0;
  for (const TreeNode& child : node.children) n += count_leaves(child);
  return n;
}

// (NP (DT the) (NN w1) [(NN w2) ...])
TreeNode make_np(Rng& rng, const std::vector<std::string>& pool, int words) {
  std::vector<TreeNode> kids;
  kids.push_back(preterm("DT", "the"));
  for (int i = 0; i < words; ++i) kids.push_back(preterm("NN", rng.pick(pool)));
  return TreeNode::internal("NP", std::move(kids));
}

// (VP (VBZ v) (NP ...))
TreeNode make_vp(Rng& rng, const std::vector<std::string>& pool, int words) {
  std::vector<TreeNode> kids;
  kids.push_back(preterm("VBZ", rng.pick(pool)));
  kids.push_back(make_np(rng, pool, words));
  return TreeNode::internal("VP", std::move(kids));
}

// (S (NP-SBJ ...) (VP ...)); 3-6 pool tokens.
TreeNode make_clause(Rng& rng, const std::vector<std::string>& pool) {
  std::vector<TreeNode> kids;
  TreeNode np = make_np(rng, pool, 1 + rng.below(2));
  np.label = "NP-SBJ";
  kids.push_back(std::move(np));
  kids.push_back(make_vp(rng, pool, 1 + rng.below(2)));
  return TreeNode::internal("S", std::move(kids));
}

TreeNode top(std::vector<TreeNode> children) {
  return TreeNode::internal(kTopLabel, {TreeNode::internal("S", std::move(children))});
}

// Leaf range [first, last] inside one sentence.
struct LeafRange {
  int sentence = 0;
  int first = 0;
  int last = 0;
};

struct PendingRelation {
  RelType type = RelType::Implicit;
  std::optional<std::string> conn;
  std::vector<std::string> senses;
  std::vector<LeafRange> arg1, arg2, conn_parts;
  std::optional<int> link;
};

struct DocBuilder {
  std::vector<TreeNode> trees;
  std::vector<PendingRelation> pending;
  int link_counter = 0;

  int add_tree(TreeNode tree) {
    trees.push_back(std::move(tree));
    return static_cast<int>(trees.size()) - 1;
  }
};

// Whole sentence minus the final punctuation leaf.
LeafRange body_range(const DocBuilder& doc, int sentence) {
  int n = count_leaves(doc.trees[sentence]);
  return {sentence, 0, n - 2};
}

void add_filler(DocBuilder& doc, Rng& rng) {
  int variant = rng.below(4);
  std::vector<TreeNode> kids;
  if (variant == 0) {
    // Includes a trace subject.
    kids.push_back(TreeNode::internal("NP-SBJ", {preterm("-NONE-", "*")}));
    kids.push_back(make_vp(rng, kBackground, 1 + rng.below(2)));
  } else if (variant == 1) {
    // Parenthetical with PTB bracket escapes.
    TreeNode np = make_np(rng, kBackground, 1);
    np.label = "NP-SBJ";
    TreeNode prn = TreeNode::internal(
        "PRN", {preterm("-LRB-", "-LRB-"), make_np(rng, kBackground, 1),
                preterm("-RRB-", "-RRB-")});
    kids.push_back(std::move(np));
    kids.push_back(std::move(prn));
    kids.push_back(make_vp(rng, kBackground, 1));
  } else {
    TreeNode np = make_np(rng, kBackground, 1 + rng.below(2));
    np.label = "NP-SBJ";
    kids.push_back(std::move(np));
    kids.push_back(make_vp(rng, kBackground, 1 + rng.below(2)));
  }
  kids.push_back(preterm(".", "."));
  doc.add_tree(top(std::move(kids)));
}

// (S (S c1) (: ;) (S c2) (. .)) -- the stand-alone intra implicit shape.
void add_intra_implicit(DocBuilder& doc, Rng& rng, const SensePool& pool,
                        const std::vector<std::string>& senses) {
  TreeNode c1 = make_clause(rng, pool.words);
  TreeNode c2 = make_clause(rng, pool.words);
  int n1 = count_leaves(c1), n2 = count_leaves(c2);
  int s = doc.add_tree(
      top({std::move(c1), preterm(":", ";"), std::move(c2), preterm(".", ".")}));
  PendingRelation rel;
  rel.type = RelType::Implicit;
  rel.conn = "specifically";
  rel.senses = senses;
  rel.arg1 = {{s, 0, n1 - 1}};
  rel.arg2 = {{s, n1 + 1, n1 + n2}};
  doc.pending.push_back(std::move(rel));
}

// Discontinuous arg2: a parenthetical splits the second clause.
void add_discontinuous_implicit(DocBuilder& doc, Rng& rng, const SensePool& pool,
                                const std::vector<std::string>& senses) {
  TreeNode c1 = make_clause(rng, pool.words);
  TreeNode np = make_np(rng, pool.words, 1);
  np.label = "NP-SBJ";
  TreeNode prn = TreeNode::internal("PRN", {preterm("-LRB-", "-LRB-"),
                                            preterm("NN", "aside"),
                                            preterm("-RRB-", "-RRB-")});
  TreeNode vp = make_vp(rng, pool.words, 1 + rng.below(2));
  int n1 = count_leaves(c1);
  int n_np = count_leaves(np), n_prn = 3, n_vp = count_leaves(vp);
  TreeNode c2 = TreeNode::internal("S", {std::move(np), std::move(prn), std::move(vp)});
  int s = doc.add_tree(
      top({std::move(c1), preterm(":", ";"), std::move(c2), preterm(".", ".")}));
  int base = n1 + 1;
  PendingRelation rel;
  rel.type = RelType::Implicit;
  rel.conn = "specifically";
  rel.senses = senses;
  rel.arg1 = {{s, 0, n1 - 1}};
  rel.arg2 = {{s, base, base + n_np - 1},
              {s, base + n_np + n_prn, base + n_np + n_prn + n_vp - 1}};
  doc.pending.push_back(std::move(rel));
}

// (S (S c1) (, ,) (CC conn) (S c2) (. .))
void add_intra_explicit(DocBuilder& doc, Rng& rng, const std::string& conn,
                        const std::string& sense) {
  TreeNode c1 = make_clause(rng, kBackground);
  TreeNode c2 = make_clause(rng, kBackground);
  int n1 = count_leaves(c1), n2 = count_leaves(c2);
  int s = doc.add_tree(top({std::move(c1), preterm(",", ","), preterm("CC", conn),
                            std::move(c2), preterm(".", ".")}));
  PendingRelation rel;
  rel.type = RelType::Explicit;
  rel.conn = conn;
  rel.senses = {sense};
  rel.arg1 = {{s, 0, n1 - 1}};
  rel.conn_parts = {{s, n1 + 1, n1 + 1}};
  rel.arg2 = {{s, n1 + 2, n1 + 1 + n2}};
  doc.pending.push_back(std::move(rel));
}

// Coordinated VPs sharing arguments between an explicit relation and a
// linked implicit twin.
void add_linked_pair(DocBuilder& doc, Rng& rng) {
  TreeNode np = make_np(rng, kLinkedPool.words, 1);
  np.label = "NP-SBJ";
  TreeNode v1 = make_vp(rng, kLinkedPool.words, 1 + rng.below(2));
  TreeNode v2 = make_vp(rng, kLinkedPool.words, 1 + rng.below(2));
  int n_np = count_leaves(np), n1 = count_leaves(v1), n2 = count_leaves(v2);
  TreeNode vp =
      TreeNode::internal("VP", {std::move(v1), preterm("CC", "and"), std::move(v2)});
  int s = doc.add_tree(top({std::move(np), std::move(vp), preterm(".", ".")}));

  int link = ++doc.link_counter;
  PendingRelation expl;
  expl.type = RelType::Explicit;
  expl.conn = "and";
  expl.senses = {"Expansion.Conjunction"};
  expl.arg1 = {{s, n_np, n_np + n1 - 1}};
  expl.conn_parts = {{s, n_np + n1, n_np + n1}};
  expl.arg2 = {{s, n_np + n1 + 1, n_np + n1 + n2}};
  expl.link = link;

  PendingRelation twin;
  twin.type = RelType::Implicit;
  twin.conn = "instead";
  twin.senses = {kLinkedPool.sense};
  twin.arg1 = expl.arg1;
  twin.arg2 = expl.arg2;
  twin.link = link;

  doc.pending.push_back(std::move(expl));
  doc.pending.push_back(std::move(twin));
}

// (S (S c1) (, ,) (S (VP (VBG resulting) (PP (IN in) (NP ...)))) (. .))
void add_altlex(DocBuilder& doc, Rng& rng) {
  TreeNode c1 = make_clause(rng, kAltLexPool.words);
  TreeNode np = make_np(rng, kAltLexPool.words, 1 + rng.below(2));
  int n1 = count_leaves(c1), n_np = count_leaves(np);
  TreeNode pp = TreeNode::internal("PP", {preterm("IN", "in"), std::move(np)});
  TreeNode c2 = TreeNode::internal(
      "S", {TreeNode::internal("VP", {preterm("VBG", "resulting"), std::move(pp)})});
  int s = doc.add_tree(
      top({std::move(c1), preterm(",", ","), std::move(c2), preterm(".", ".")}));
  int base = n1 + 1;
  PendingRelation rel;
  rel.type = RelType::AltLex;
  rel.senses = {kAltLexPool.sense};
  rel.arg1 = {{s, 0, n1 - 1}};
  rel.conn_parts = {{s, base, base + 1}};        // "resulting in"
  rel.arg2 = {{s, base + 2, base + 1 + n_np}};   // the NP
  doc.pending.push_back(std::move(rel));
}

// (S (S c1) (, ,) (S (ADVP (RB thereby)) (VP ...)) (. .))
void add_altlexc(DocBuilder& doc, Rng& rng, const SensePool& pool) {
  TreeNode c1 = make_clause(rng, pool.words);
  TreeNode vp = make_vp(rng, pool.words, 1);
  int n1 = count_leaves(c1), n_vp = count_leaves(vp);
  TreeNode c2 = TreeNode::internal(
      "S", {TreeNode::internal("ADVP", {preterm("RB", "thereby")}), std::move(vp)});
  int s = doc.add_tree(
      top({std::move(c1), preterm(",", ","), std::move(c2), preterm(".", ".")}));
  int base = n1 + 1;
  PendingRelation rel;
  rel.type = RelType::AltLexC;
  rel.senses = {"Contingency.Cause.Result"};
  rel.arg1 = {{s, 0, n1 - 1}};
  rel.conn_parts = {{s, base, base}};
  rel.arg2 = {{s, base + 1, base + n_vp}};
  doc.pending.push_back(std::move(rel));
}

// Adds a sentence pair; the relation holds between the two bodies.
void add_pair_relation(DocBuilder& doc, Rng& rng, RelType type,
                       const std::vector<std::string>& pool,
                       const std::vector<std::string>& senses,
                       const std::optional<std::string>& conn) {
  std::vector<TreeNode> first_kids;
  TreeNode np1 = make_np(rng, pool, 1 + rng.below(2));
  np1.label = "NP-SBJ";
  first_kids.push_back(std::move(np1));
  first_kids.push_back(make_vp(rng, pool, 1 + rng.below(2)));
  bool question = type == RelType::Hypophora;
  first_kids.push_back(preterm(".", question ? "?" : "."));
  TreeNode first = question ? TreeNode::internal(kTopLabel,
                                                 {TreeNode::internal("SQ", std::move(first_kids))})
                            : top(std::move(first_kids));
  int s1 = doc.add_tree(std::move(first));

  int s2;
  PendingRelation rel;
  rel.type = type;
  rel.senses = senses;
  rel.conn = conn;
  if (type == RelType::Explicit) {
    // Sentence-initial adverbial connective.
    TreeNode c2 = make_clause(rng, pool);
    int n2 = count_leaves(c2);
    s2 = doc.add_tree(top({TreeNode::internal("ADVP", {preterm("RB", "however")}),
                           preterm(",", ","), std::move(c2), preterm(".", ".")}));
    rel.conn_parts = {{s2, 0, 0}};
    rel.arg2 = {{s2, 2, 1 + n2}};
  } else {
    std::vector<TreeNode> second_kids;
    TreeNode np2 = make_np(rng, pool, 1 + rng.below(2));
    np2.label = "NP-SBJ";
    second_kids.push_back(std::move(np2));
    second_kids.push_back(make_vp(rng, pool, 1 + rng.below(2)));
    second_kids.push_back(preterm(".", "."));
    s2 = doc.add_tree(top(std::move(second_kids)));
    rel.arg2 = {body_range(doc, s2)};
  }
  rel.arg1 = {body_range(doc, s1)};
  doc.pending.push_back(std::move(rel));
}

// Flatten relation leaf ranges into byte spans using aligned leaves.
ByteSpanList materialize(const std::vector<ParsedSentence>& sentences,
                         const std::vector<LeafRange>& parts) {
  ByteSpanList spans;
  for (const LeafRange& part : parts) {
    const std::vector<LeafToken>& leaves = sentences.at(part.sentence).leaves;
    ByteSpan span{leaves.at(part.first).span.start, leaves.at(part.last).span.end};
    spans.push_back(span);
  }
  return spans;
}

void collect_surface(const TreeNode& node, const std::string& parent,
                     std::vector<std::pair<std::string, bool>>& out) {
  if (node.is_leaf()) {
    out.emplace_back(node.token, parent == "-NONE-");
    return;
  }
  for (const TreeNode& child : node.children) collect_surface(child, node.label, out);
}

bool no_space_before(const std::string& token) {
  return token == "," || token == "." || token == ";" || token == "?" || token == ")";
}

std::string render_text(const std::vector<TreeNode>& trees) {
  std::string text;
  for (std::size_t s = 0; s < trees.size(); ++s) {
    std::vector<std::pair<std::string, bool>> leaves;
    collect_surface(trees[s], "", leaves);
    bool at_start = true;
    bool after_open = false;
    if (s) text += '\n';
    for (const auto& [token, trace] : leaves) {
      if (trace) continue;
      std::string surface = unescape_ptb(token);
      if (!at_start && !after_open && !no_space_before(surface)) text += ' ';
      text += surface;
      at_start = false;
      after_open = surface == "(";
    }
  }
  return text;
}

}  // namespace

Corpus generate_synthetic_corpus(std::uint64_t seed, int size) {
  if (size < 1) throw ValidationError("synthetic corpus size must be >= 1");
  Rng rng(seed);
  Corpus corpus;

  std::array<int, 25> per_section{};
  DocBuilder doc;
  int emitted = 0;
  int slot = 0;

  auto flush_doc = [&]() {
    if (doc.trees.empty()) return;
    Document out;
    int section = static_cast<int>(corpus.docs.size()) % 25;
    int serial = per_section[section]++;
    if (serial > 99) throw ValidationError("synthetic corpus too large");
    char id[32];
    std::snprintf(id, sizeof(id), "syn_%02d%02d", section % 100, serial % 100);
    out.doc_id = id;
    out.section = section;
    out.text = render_text(doc.trees);
    out.sentences = align(doc.trees, out.text);
    for (const PendingRelation& pending : doc.pending) {
      RelationRecord rel;
      rel.doc_id = out.doc_id;
      rel.section = section;
      rel.rel_type = pending.type;
      rel.conn = pending.conn;
      for (const std::string& sense : pending.senses)
        rel.senses.push_back(SenseLabel::parse(sense));
      rel.arg1 = materialize(out.sentences, pending.arg1);
      rel.arg2 = materialize(out.sentences, pending.arg2);
      if (!pending.conn_parts.empty())
        rel.conn_span = materialize(out.sentences, pending.conn_parts);
      rel.link = pending.link;
      validate_record(rel);
      out.relations.push_back(std::move(rel));
    }
    corpus.docs.push_back(std::move(out));
    doc = DocBuilder{};
  };

  auto senses_of = [](const SensePool& pool) {
    return std::vector<std::string>{pool.sense};
  };

  while (emitted < size) {
    if (doc.pending.size() >= 5) flush_doc();
    if (doc.trees.empty() || rng.below(5) == 0) add_filler(doc, rng);

    int remaining = size - emitted;
    int kind = slot % 21;
    int cycle = slot / 21;
    ++slot;
    switch (kind) {
      case 0:
        add_intra_implicit(doc, rng, kPools[0], senses_of(kPools[0]));
        break;
      case 1:
        add_pair_relation(doc, rng, RelType::Implicit, kPools[1].words,
                          senses_of(kPools[1]), "specifically");
        break;
      case 2:
        add_intra_explicit(doc, rng, "but", "Comparison.Concession.Arg2-as-denier");
        break;
      case 3:
        if (remaining >= 2) {
          add_linked_pair(doc, rng);
          ++emitted;  // the twin
        } else {
          add_intra_implicit(doc, rng, kPools[0], senses_of(kPools[0]));
        }
        break;
      case 4:
        // Multi-sense relation on a dedicated pool.
        add_discontinuous_implicit(
            doc, rng, kPools[3],
            {"Comparison.Concession.Arg2-as-denier", "Temporal.Synchronous"});
        break;
      case 5:
        add_altlex(doc, rng);
        break;
      case 6:
        add_pair_relation(doc, rng, RelType::EntRel, kBackground, {}, std::nullopt);
        break;
      case 7:
        add_pair_relation(doc, rng, RelType::Implicit, kPools[5].words,
                          senses_of(kPools[5]), "for example");
        break;
      case 8:
        if (cycle % 3 == 2)
          add_pair_relation(doc, rng, RelType::Implicit, kSharedPool.words,
                            {kSharedInterSense}, "and");
        else
          add_intra_implicit(doc, rng, kSharedPool, {kSharedIntraSense});
        break;
      case 9:
        add_pair_relation(doc, rng, RelType::Explicit, kBackground,
                          {"Comparison.Contrast"}, "however");
        break;
      case 10:
        add_pair_relation(doc, rng, RelType::NoRel, kBackground, {}, std::nullopt);
        break;
      case 11:
        add_intra_implicit(doc, rng, kPools[1], senses_of(kPools[1]));
        break;
      case 12:
        add_pair_relation(doc, rng, RelType::Implicit, kPools[0].words,
                          senses_of(kPools[0]), "as a result");
        break;
      case 13:
        add_pair_relation(doc, rng, RelType::Hypophora, kBackground, {}, std::nullopt);
        break;
      case 14:
        add_intra_implicit(doc, rng, kPools[2], senses_of(kPools[2]));
        break;
      case 15:
        add_altlexc(doc, rng, kPools[2]);
        break;
      case 16:
        add_pair_relation(doc, rng, RelType::Implicit, kPools[2].words,
                          senses_of(kPools[2]), "then");
        break;
      case 17:
        add_intra_implicit(doc, rng, kPools[4], senses_of(kPools[4]));
        break;
      case 18:
        add_intra_implicit(doc, rng, kPools[5], senses_of(kPools[5]));
        break;
      case 19:
        add_pair_relation(doc, rng, RelType::Implicit, kPools[2].words,
                          senses_of(kPools[2]), "afterwards");
        break;
      default:
        add_intra_implicit(doc, rng, kPools[0], senses_of(kPools[0]));
        break;
    }
    ++emitted;
  }
  flush_doc();
  return corpus;
}

}  // namespace dpl
