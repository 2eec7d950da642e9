#include "dpl/treebank.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dpl/errors.hpp"

namespace dpl {

bool TreeNode::is_preterminal() const {
  if (children.empty()) return false;
  return std::all_of(children.begin(), children.end(),
                     [](const TreeNode& c) { return c.is_leaf(); });
}

TreeNode TreeNode::leaf(std::string token) {
  TreeNode node;
  node.token = std::move(token);
  return node;
}

TreeNode TreeNode::internal(std::string label, std::vector<TreeNode> children) {
  TreeNode node;
  node.label = std::move(label);
  node.children = std::move(children);
  return node;
}

namespace {

struct SexprReader {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= text.size();
  }
  char peek() {
    skip_ws();
    if (pos >= text.size())
      throw ParseError("unexpected end of tree text at offset " + std::to_string(pos), pos);
    return text[pos];
  }
  std::string atom() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')')
      ++pos;
    if (pos == start)
      throw ParseError("expected token at offset " + std::to_string(pos), pos);
    return std::string(text.substr(start, pos - start));
  }

  TreeNode node() {
    skip_ws();
    std::size_t open = pos;
    if (peek() != '(')
      throw ParseError("expected '(' at offset " + std::to_string(pos), pos);
    ++pos;
    TreeNode result;
    if (peek() == '(') {
      result.label = kTopLabel;  // label-less PTB wrapper
    } else if (peek() == ')') {
      throw ParseError("empty constituent at offset " + std::to_string(open), open);
    } else {
      result.label = atom();
    }
    while (true) {
      char c = peek();
      if (c == ')') {
        ++pos;
        break;
      }
      if (c == '(') {
        result.children.push_back(node());
      } else {
        result.children.push_back(TreeNode::leaf(atom()));
      }
    }
    if (result.children.empty())
      throw ParseError("empty constituent at offset " + std::to_string(open), open);
    return result;
  }
};

}  // namespace

TreeNode parse_sexpr(std::string_view text) {
  SexprReader reader{text};
  if (reader.eof()) throw ParseError("empty tree text", 0);
  TreeNode result = reader.node();
  if (!reader.eof())
    throw ParseError("trailing text after tree at offset " + std::to_string(reader.pos),
                     reader.pos);
  return result;
}

std::vector<TreeNode> parse_trees(std::string_view text) {
  std::vector<TreeNode> trees;
  SexprReader reader{text};
  while (!reader.eof()) trees.push_back(reader.node());
  return trees;
}

namespace {

// Prunes -NONE- subtrees; returns false when the node vanishes.
bool strip_traces_copy(const TreeNode& node, TreeNode& out) {
  if (node.is_leaf()) {
    out = node;
    return true;
  }
  if (node.label == "-NONE-") return false;
  TreeNode copy;
  copy.label = node.label;
  for (const TreeNode& child : node.children) {
    TreeNode kept;
    if (strip_traces_copy(child, kept)) copy.children.push_back(std::move(kept));
  }
  if (copy.children.empty()) return false;
  out = std::move(copy);
  return true;
}

void linearize_into(const TreeNode& node, std::vector<std::string>& out) {
  if (node.is_leaf()) {
    out.push_back(node.token);
    return;
  }
  out.emplace_back("(");
  if (node.label != kTopLabel) out.push_back(node.label);
  for (const TreeNode& child : node.children) linearize_into(child, out);
  out.emplace_back(")");
}

}  // namespace

std::vector<std::string> linearize(const TreeNode& tree, bool strip_traces) {
  std::vector<std::string> out;
  if (strip_traces) {
    TreeNode pruned;
    if (!strip_traces_copy(tree, pruned)) return out;
    linearize_into(pruned, out);
  } else {
    linearize_into(tree, out);
  }
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string tree_to_string(const TreeNode& tree) { return join_tokens(linearize(tree)); }

std::string unescape_ptb(const std::string& token) {
  static const std::unordered_map<std::string, std::string> kEscapes = {
      {"-LRB-", "("}, {"-RRB-", ")"}, {"-LCB-", "{"},
      {"-RCB-", "}"}, {"-LSB-", "["}, {"-RSB-", "]"},
  };
  auto it = kEscapes.find(token);
  return it == kEscapes.end() ? token : it->second;
}

namespace {

void collect_leaves(const TreeNode& node, const std::string& parent_label,
                    std::vector<LeafToken>& out) {
  if (node.is_leaf()) {
    out.push_back({node.token, {}, parent_label == "-NONE-"});
    return;
  }
  for (const TreeNode& child : node.children) collect_leaves(child, node.label, out);
}

}  // namespace

std::vector<ParsedSentence> align(const std::vector<TreeNode>& trees,
                                  std::string_view doc_text) {
  std::vector<ParsedSentence> sentences;
  sentences.reserve(trees.size());
  std::size_t pos = 0;
  for (std::size_t s = 0; s < trees.size(); ++s) {
    ParsedSentence sentence;
    sentence.tree = trees[s];
    collect_leaves(sentence.tree, "", sentence.leaves);
    bool any_surface = false;
    for (LeafToken& leaf : sentence.leaves) {
      if (leaf.trace) {
        leaf.span = {static_cast<std::uint32_t>(pos), static_cast<std::uint32_t>(pos)};
        continue;
      }
      std::string surface = unescape_ptb(leaf.token);
      std::size_t p = pos;
      while (p < doc_text.size() && std::isspace(static_cast<unsigned char>(doc_text[p]))) ++p;
      if (p + surface.size() > doc_text.size() ||
          doc_text.substr(p, surface.size()) != surface) {
        throw AlignmentError("sentence " + std::to_string(s) + ": token '" + leaf.token +
                             "' not found at byte " + std::to_string(p));
      }
      leaf.span = {static_cast<std::uint32_t>(p),
                   static_cast<std::uint32_t>(p + surface.size())};
      pos = p + surface.size();
      if (!any_surface) {
        sentence.span.start = leaf.span.start;
        any_surface = true;
      }
      sentence.span.end = leaf.span.end;
    }
    if (!any_surface)
      sentence.span = {static_cast<std::uint32_t>(pos), static_cast<std::uint32_t>(pos)};
    sentences.push_back(std::move(sentence));
  }
  return sentences;
}

std::string ProductionRule::str() const {
  std::string out = parent + " ->";
  for (const std::string& child : children) {
    out += ' ';
    out += child;
  }
  return out;
}

namespace {

void collect_rules(const TreeNode& node, RuleMode mode,
                   std::map<ProductionRule, int>& out) {
  if (node.is_leaf()) return;
  bool all_leaves = node.is_preterminal();
  if ((mode == RuleMode::IncludeLexical || !all_leaves) && node.label != kTopLabel) {
    ProductionRule rule;
    rule.parent = node.label;
    for (const TreeNode& child : node.children)
      rule.children.push_back(child.is_leaf() ? child.token : child.label);
    ++out[rule];
  }
  for (const TreeNode& child : node.children) collect_rules(child, mode, out);
}

}  // namespace

std::map<ProductionRule, int> extract_productions(const TreeNode& tree, RuleMode mode) {
  std::map<ProductionRule, int> rules;
  collect_rules(tree, mode, rules);
  return rules;
}

std::string RuleDictionary::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (int i = 0; i < size(); ++i) j[rules[i]] = i;
  return j.dump(2);
}

RuleDictionary RuleDictionary::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RuleDictionary dict;
  dict.rules.resize(j.size());
  for (auto& [rule, idx] : j.items()) {
    int i = idx.get<int>();
    if (i < 0 || i >= static_cast<int>(dict.rules.size()))
      throw ValidationError("rule dictionary index out of range: " + std::to_string(i));
    dict.rules[i] = rule;
    dict.index[rule] = i;
  }
  return dict;
}

RuleDictionary top_rules(const std::vector<const TreeNode*>& trees, int n, RuleMode mode,
                         std::vector<std::string>* warnings) {
  if (n < 1) throw ValidationError("top_rules requires n >= 1");
  std::map<std::string, long> counts;
  for (const TreeNode* tree : trees)
    for (const auto& [rule, count] : extract_productions(*tree, mode))
      counts[rule.str()] += count;

  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  RuleDictionary dict;
  int keep = std::min<int>(n, static_cast<int>(ranked.size()));
  if (keep < n && warnings)
    warnings->push_back("top_rules: only " + std::to_string(keep) + " distinct rules for n=" +
                        std::to_string(n));
  dict.rules.reserve(keep);
  for (int i = 0; i < keep; ++i) {
    dict.index[ranked[i].first] = i;
    dict.rules.push_back(ranked[i].first);
  }
  return dict;
}

std::vector<std::uint8_t> featurize(const std::vector<const TreeNode*>& relation_trees,
                                    const RuleDictionary& dict) {
  std::vector<std::uint8_t> vec(dict.size(), 0);
  for (const TreeNode* tree : relation_trees) {
    // IncludeLexical so that a lexical dictionary also matches; absent
    // rules simply miss the lookup.
    for (const auto& [rule, count] : extract_productions(*tree, RuleMode::IncludeLexical)) {
      auto it = dict.index.find(rule.str());
      if (it != dict.index.end()) vec[it->second] = 1;
    }
  }
  return vec;
}

}  // namespace dpl
