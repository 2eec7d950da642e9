#include "dpl/senses.hpp"

#include <map>
#include <unordered_map>

#include "dpl/errors.hpp"

namespace dpl {

std::string_view to_string(Level1 level1) {
  switch (level1) {
    case Level1::Temporal: return "Temporal";
    case Level1::Contingency: return "Contingency";
    case Level1::Comparison: return "Comparison";
    case Level1::Expansion: return "Expansion";
  }
  return "?";
}

Level1 level1_from(std::string_view name) {
  if (name == "Temporal") return Level1::Temporal;
  if (name == "Contingency") return Level1::Contingency;
  if (name == "Comparison") return Level1::Comparison;
  if (name == "Expansion") return Level1::Expansion;
  throw ValidationError("unknown sense class: '" + std::string(name) + "'");
}

namespace {

// Level-2 labels in report row order.
const std::vector<std::string> kLevel2 = {
    "Comparison.Concession",
    "Comparison.Concession+SpeechAct",
    "Comparison.Contrast",
    "Comparison.Similarity",
    "Contingency.Cause",
    "Contingency.Cause+SpeechAct",
    "Contingency.Cause+Belief",
    "Contingency.Condition",
    "Contingency.Condition+SpeechAct",
    "Contingency.Purpose",
    "Expansion.Conjunction",
    "Expansion.Disjunction",
    "Expansion.Equivalence",
    "Expansion.Exception",
    "Expansion.Instantiation",
    "Expansion.Level-of-detail",
    "Expansion.Manner",
    "Expansion.Substitution",
    "Temporal.Asynchronous",
    "Temporal.Synchronous",
};

// Admissible level-3 directionality labels per level-2 type.
const std::map<std::string, std::vector<std::string>> kLevel3Table = {
    {"Comparison.Concession", {"Arg1-as-denier", "Arg2-as-denier"}},
    {"Comparison.Concession+SpeechAct", {"Arg2-as-denier+SpeechAct"}},
    {"Comparison.Contrast", {}},
    {"Comparison.Similarity", {}},
    {"Contingency.Cause", {"Reason", "Result", "NegResult"}},
    {"Contingency.Cause+SpeechAct", {"Reason+SpeechAct", "Result+SpeechAct"}},
    {"Contingency.Cause+Belief", {"Reason+Belief", "Result+Belief"}},
    {"Contingency.Condition", {"Arg1-as-cond", "Arg2-as-cond"}},
    {"Contingency.Condition+SpeechAct", {}},
    {"Contingency.Purpose", {"Arg1-as-goal", "Arg2-as-goal"}},
    {"Expansion.Conjunction", {}},
    {"Expansion.Disjunction", {}},
    {"Expansion.Equivalence", {}},
    {"Expansion.Exception", {"Arg1-as-excpt", "Arg2-as-excpt"}},
    {"Expansion.Instantiation", {"Arg1-as-instance", "Arg2-as-instance"}},
    {"Expansion.Level-of-detail", {"Arg1-as-detail", "Arg2-as-detail"}},
    {"Expansion.Manner", {"Arg1-as-manner", "Arg2-as-manner"}},
    {"Expansion.Substitution", {"Arg1-as-subst", "Arg2-as-subst"}},
    {"Temporal.Asynchronous", {"Precedence", "Succession"}},
    {"Temporal.Synchronous", {}},
};

// The 31-way level-3 classification head: the directionality labels
// attested for implicit relations. Cause.NegResult and
// Exception.Arg1-as-excpt stay out of the head (they remain valid at
// parse time).
const std::vector<std::string> kLevel3 = {
    "Comparison.Concession.Arg1-as-denier",
    "Comparison.Concession.Arg2-as-denier",
    "Comparison.Concession+SpeechAct.Arg2-as-denier+SpeechAct",
    "Comparison.Contrast",
    "Comparison.Similarity",
    "Contingency.Cause.Reason",
    "Contingency.Cause.Result",
    "Contingency.Cause+SpeechAct.Reason+SpeechAct",
    "Contingency.Cause+SpeechAct.Result+SpeechAct",
    "Contingency.Cause+Belief.Reason+Belief",
    "Contingency.Cause+Belief.Result+Belief",
    "Contingency.Condition.Arg1-as-cond",
    "Contingency.Condition.Arg2-as-cond",
    "Contingency.Condition+SpeechAct",
    "Contingency.Purpose.Arg1-as-goal",
    "Contingency.Purpose.Arg2-as-goal",
    "Expansion.Conjunction",
    "Expansion.Disjunction",
    "Expansion.Equivalence",
    "Expansion.Exception.Arg2-as-excpt",
    "Expansion.Instantiation.Arg1-as-instance",
    "Expansion.Instantiation.Arg2-as-instance",
    "Expansion.Level-of-detail.Arg1-as-detail",
    "Expansion.Level-of-detail.Arg2-as-detail",
    "Expansion.Manner.Arg1-as-manner",
    "Expansion.Manner.Arg2-as-manner",
    "Expansion.Substitution.Arg1-as-subst",
    "Expansion.Substitution.Arg2-as-subst",
    "Temporal.Asynchronous.Precedence",
    "Temporal.Asynchronous.Succession",
    "Temporal.Synchronous",
};

const std::unordered_map<std::string, int>& level_index_map(int level) {
  static const auto build = [](const std::vector<std::string>& labels) {
    std::unordered_map<std::string, int> m;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) m[labels[i]] = i;
    return m;
  };
  static const std::unordered_map<std::string, int> l2 = build(kLevel2);
  static const std::unordered_map<std::string, int> l3 = build(kLevel3);
  return level == 3 ? l3 : l2;
}

}  // namespace

const std::vector<std::string>& level2_inventory() { return kLevel2; }
const std::vector<std::string>& level3_inventory() { return kLevel3; }

const std::vector<std::string>& sense_inventory(int level) {
  if (level == 2) return kLevel2;
  if (level == 3) return kLevel3;
  throw ValidationError("sense level must be 2 or 3, got " + std::to_string(level));
}

int sense_index(const std::string& label, int level) {
  const auto& m = level_index_map(level == 3 ? 3 : 2);
  (void)sense_inventory(level);  // validates level
  auto it = m.find(label);
  return it == m.end() ? -1 : it->second;
}

bool known_level3(const std::string& level2_full, const std::string& level3) {
  auto it = kLevel3Table.find(level2_full);
  if (it == kLevel3Table.end()) return false;
  for (const std::string& candidate : it->second)
    if (candidate == level3) return true;
  return false;
}

SenseLabel SenseLabel::parse(std::string_view dotted) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    std::size_t dot = dotted.find('.', start);
    if (dot == std::string_view::npos) {
      parts.emplace_back(dotted.substr(start));
      break;
    }
    parts.emplace_back(dotted.substr(start, dot - start));
    start = dot + 1;
  }
  if (parts.size() < 2 || parts.size() > 3)
    throw ValidationError("sense label must have 2 or 3 parts: '" + std::string(dotted) + "'");

  SenseLabel label;
  label.level1 = level1_from(parts[0]);
  label.level2 = parts[1];
  std::string full2 = parts[0] + "." + parts[1];
  if (sense_index(full2, 2) < 0)
    throw ValidationError("unknown sense type: '" + std::string(dotted) + "'");
  if (parts.size() == 3) {
    if (!known_level3(full2, parts[2]))
      throw ValidationError("unknown level-3 sense: '" + std::string(dotted) + "'");
    label.level3 = parts[2];
  }
  return label;
}

std::string SenseLabel::str() const {
  std::string out = level2_str();
  if (level3) {
    out += '.';
    out += *level3;
  }
  return out;
}

std::string SenseLabel::level2_str() const {
  return std::string(to_string(level1)) + "." + level2;
}

std::string SenseLabel::level_str(int level) const {
  return level == 3 ? str() : level2_str();
}

}  // namespace dpl
