#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dpl {

// PDTB-3 sense hierarchy: class (level 1), type (level 2), and an
// optional level-3 label that only encodes directionality.
enum class Level1 { Temporal, Contingency, Comparison, Expansion };

std::string_view to_string(Level1 level1);
Level1 level1_from(std::string_view name);  // throws ValidationError

struct SenseLabel {
  Level1 level1 = Level1::Temporal;
  std::string level2;                 // e.g. "Cause", "Level-of-detail"
  std::optional<std::string> level3;  // e.g. "Arg2-as-detail"

  // Parses "Expansion.Level-of-detail.Arg2-as-detail" and validates all
  // parts against the closed inventories. Throws ValidationError.
  static SenseLabel parse(std::string_view dotted);

  std::string str() const;         // full dotted form
  std::string level2_str() const;  // "Expansion.Level-of-detail"
  // Label used for level-`level` classification (2 or 3). At level 3 a
  // sense without a directionality label keeps its level-2 form.
  std::string level_str(int level) const;

  bool operator==(const SenseLabel&) const = default;
};

// The 20 level-2 labels, in the row order used throughout the reports.
const std::vector<std::string>& level2_inventory();
// The 31 level-3 classification labels.
const std::vector<std::string>& level3_inventory();
// Inventory for the given classification level (2 or 3).
const std::vector<std::string>& sense_inventory(int level);

// Index of a label in the level inventory, or -1 if absent.
int sense_index(const std::string& label, int level);

// True when `level3` is an admissible directionality for the given
// full level-2 label ("Contingency.Cause" etc.).
bool known_level3(const std::string& level2_full, const std::string& level3);

}  // namespace dpl
