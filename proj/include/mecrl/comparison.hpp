#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mecrl/types.hpp"

namespace mecrl {

// Bitwise agreement vector of two key records: bit k set iff both values are
// observed and equal. A missing value on either side compares as
// disagreement.
PatternBits agreement(const KeyRecord& a, const KeyRecord& b);

// Removes records whose fully-observed key vector duplicates an earlier
// record's (first occurrence in input order is retained). Records with any
// missing field are never merged: two incomplete keys are not known equal.
std::vector<KeyRecord> dedup_keys(const std::vector<KeyRecord>& records);

struct PatternEntry {
  PatternBits bits = 0;
  // Pairs as (a index, b index) into the id tables, sorted by
  // (a id, b id) lexicographically ascending.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;

  std::uint64_t count() const { return pairs.size(); }
};

// The comparison space O = A x B aggregated by agreement pattern. Immutable
// once built; patterns are kept sorted by bit value ascending, so iteration
// order is canonical regardless of input order or worker count.
class PatternTable {
 public:
  PatternTable() = default;
  PatternTable(std::vector<std::string> a_ids, std::vector<std::string> b_ids,
               std::size_t field_count, std::vector<PatternEntry> patterns);

  std::size_t field_count() const { return field_count_; }
  std::size_t size_a() const { return a_ids_.size(); }
  std::size_t size_b() const { return b_ids_.size(); }
  std::uint64_t total_pairs() const {
    return static_cast<std::uint64_t>(size_a()) * size_b();
  }
  PatternBits all_agree_mask() const {
    return field_count_ == kMaxFields
               ? ~PatternBits{0}
               : ((PatternBits{1} << field_count_) - 1);
  }

  const std::vector<PatternEntry>& patterns() const { return patterns_; }
  const std::string& a_id(std::uint32_t index) const { return a_ids_[index]; }
  const std::string& b_id(std::uint32_t index) const { return b_ids_[index]; }
  // Lexicographic rank of a record's id within its side; the pair ordering
  // used everywhere is (rank_a, rank_b).
  std::uint32_t a_rank(std::uint32_t index) const { return a_ranks_[index]; }
  std::uint32_t b_rank(std::uint32_t index) const { return b_ranks_[index]; }

  // Index lookup by id; -1 when unknown.
  int find_a(const std::string& id) const;
  int find_b(const std::string& id) const;

  // n(gamma) for one pattern, 0 when the pattern does not occur.
  std::uint64_t pattern_count(PatternBits bits) const;
  // Marginal agreement count n(1;k) = sum over patterns with bit k set.
  std::uint64_t marginal_agree(std::size_t k) const;

  // Diagnostic export, two columns: pattern_bits (decimal), count. Sorted by
  // pattern bits ascending.
  void write_pattern_csv(std::ostream& out) const;

 private:
  void finalize();

  std::vector<std::string> a_ids_, b_ids_;
  std::vector<std::uint32_t> a_ranks_, b_ranks_;
  std::size_t field_count_ = 0;
  std::vector<PatternEntry> patterns_;
};

// Builds the comparison space by comparing every (a, b) pair. Work is split
// over `threads` workers (0 = hardware concurrency); the merged result is
// canonical, independent of thread count and of record order. Throws
// DataError if either side is empty ("empty comparison space").
PatternTable build_comparison_space(const std::vector<KeyRecord>& a,
                                    const std::vector<KeyRecord>& b,
                                    unsigned threads = 0);

// Builds a PatternTable from an explicit pairwise pattern matrix
// (gamma[i][j] = bits for a_ids[i] x b_ids[j]). Lets tests and diagnostics
// realize spaces that no concrete key assignment could produce after
// dedup_keys.
PatternTable pattern_table_from_gammas(
    const std::vector<std::string>& a_ids,
    const std::vector<std::string>& b_ids, std::size_t field_count,
    const std::vector<std::vector<PatternBits>>& gamma);

}  // namespace mecrl
