#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dpl/byte_span.hpp"

namespace dpl {

// A constituency tree node. Internal nodes carry a label and children;
// leaves carry only the surface token. The label-less outer bracket of
// PTB files is given the synthetic label "TOP" and printed without it.
struct TreeNode {
  std::string label;   // empty for leaves
  std::string token;   // empty for internal nodes
  std::vector<TreeNode> children;

  bool is_leaf() const { return children.empty() && label.empty(); }
  bool is_preterminal() const;  // all children are leaves

  static TreeNode leaf(std::string token);
  static TreeNode internal(std::string label, std::vector<TreeNode> children);

  bool operator==(const TreeNode&) const = default;
};

inline constexpr const char* kTopLabel = "TOP";

// Parses one bracketed tree. Throws ParseError with the byte offset of
// the problem. Trace leaves (under -NONE-) are kept.
TreeNode parse_sexpr(std::string_view text);

// Parses a whole .mrg-style buffer holding one or more trees.
std::vector<TreeNode> parse_trees(std::string_view text);

// Bracket/label/token stream such that parse_sexpr(join_tokens(...))
// reproduces the tree. With strip_traces, -NONE- subtrees (and any
// nodes emptied by their removal) are dropped.
std::vector<std::string> linearize(const TreeNode& tree, bool strip_traces = false);
std::string join_tokens(const std::vector<std::string>& tokens);
std::string tree_to_string(const TreeNode& tree);

struct LeafToken {
  std::string token;
  ByteSpan span;       // empty (start == end) for traces
  bool trace = false;
};

// A sentence tree aligned to document bytes; `span` is the projection
// of the top node (hull of the surface leaves).
struct ParsedSentence {
  TreeNode tree;
  ByteSpan span;
  std::vector<LeafToken> leaves;
};

// Aligns sentence trees (in document order) to the raw text, resolving
// PTB escapes (-LRB- etc.). Trace leaves consume zero bytes. Throws
// AlignmentError naming the sentence index and token on failure.
std::vector<ParsedSentence> align(const std::vector<TreeNode>& trees,
                                  std::string_view doc_text);

// Surface form of a PTB leaf token (-LRB- -> "(" and so on).
std::string unescape_ptb(const std::string& token);

struct ProductionRule {
  std::string parent;
  std::vector<std::string> children;

  std::string str() const;  // "S -> NP-SBJ VP ."
  auto operator<=>(const ProductionRule&) const = default;
};

enum class RuleMode { InternalOnly, IncludeLexical };

// One rule per internal node, as a multiset. InternalOnly drops
// preterminal (PoS -> word) expansions. The synthetic TOP wrapper is
// not counted as a constituent.
std::map<ProductionRule, int> extract_productions(const TreeNode& tree,
                                                  RuleMode mode = RuleMode::InternalOnly);

// Feature dictionary over production-rule strings, serialized as a
// plain JSON object {"rule": index}.
struct RuleDictionary {
  std::vector<std::string> rules;               // index order
  std::unordered_map<std::string, int> index;

  int size() const { return static_cast<int>(rules.size()); }
  std::string to_json() const;
  static RuleDictionary from_json(const std::string& text);
};

// The n most frequent rules over the training trees; ties broken by
// lexicographic rule string. When fewer than n distinct rules exist,
// returns them all and appends a note to `warnings` if given.
RuleDictionary top_rules(const std::vector<const TreeNode*>& trees, int n,
                         RuleMode mode = RuleMode::InternalOnly,
                         std::vector<std::string>* warnings = nullptr);

// Binary presence vector: component i is 1 iff dictionary rule i occurs
// anywhere in the given trees.
std::vector<std::uint8_t> featurize(const std::vector<const TreeNode*>& relation_trees,
                                    const RuleDictionary& dict);

}  // namespace dpl
