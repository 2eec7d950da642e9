#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace dpl {

// Half-open interval [start, end) of byte offsets into a raw document.
struct ByteSpan {
  std::uint32_t start = 0;
  std::uint32_t end = 0;

  auto operator<=>(const ByteSpan&) const = default;
  std::uint32_t length() const { return end - start; }
  bool empty() const { return end <= start; }
  bool contains(const ByteSpan& other) const {
    return start <= other.start && other.end <= end;
  }
  bool overlaps(const ByteSpan& other) const {
    return start < other.end && other.start < end;
  }
};

// Possibly discontinuous region: ascending, pairwise non-overlapping spans.
using ByteSpanList = std::vector<ByteSpan>;

// Throws ValidationError unless every span has start < end, the list is
// sorted ascending, and spans are pairwise non-overlapping.
void validate_spans(const ByteSpanList& spans, const std::string& what);

// Smallest span covering the whole list (list must be non-empty).
ByteSpan hull(const ByteSpanList& spans);

// "9..35;40..65" <-> span list. Empty string <-> empty list.
std::string spans_to_string(const ByteSpanList& spans);
ByteSpanList spans_from_string(const std::string& text);

}  // namespace dpl
