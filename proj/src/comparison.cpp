#include "mecrl/comparison.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <thread>

namespace mecrl {

PatternBits agreement(const KeyRecord& a, const KeyRecord& b) {
  PatternBits bits = 0;
  const std::size_t k = a.values.size();
  for (std::size_t i = 0; i < k; ++i) {
    if (a.values[i] != kMissing && a.values[i] == b.values[i]) {
      bits |= PatternBits{1} << i;
    }
  }
  return bits;
}

std::vector<KeyRecord> dedup_keys(const std::vector<KeyRecord>& records) {
  std::vector<KeyRecord> out;
  out.reserve(records.size());
  std::map<std::vector<Category>, bool> seen;
  for (const auto& rec : records) {
    const bool complete =
        std::none_of(rec.values.begin(), rec.values.end(),
                     [](Category v) { return v == kMissing; });
    if (complete && !seen.emplace(rec.values, true).second) continue;
    out.push_back(rec);
  }
  return out;
}

PatternTable::PatternTable(std::vector<std::string> a_ids,
                           std::vector<std::string> b_ids,
                           std::size_t field_count,
                           std::vector<PatternEntry> patterns)
    : a_ids_(std::move(a_ids)),
      b_ids_(std::move(b_ids)),
      field_count_(field_count),
      patterns_(std::move(patterns)) {
  finalize();
}

namespace {

// Lexicographic rank of each id within its side; duplicate ids (which the
// ingestion layer never produces) fall back to input order so the ranking
// stays a total order.
std::vector<std::uint32_t> id_ranks(const std::vector<std::string>& ids) {
  std::vector<std::uint32_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t x, std::uint32_t y) {
              return ids[x] != ids[y] ? ids[x] < ids[y] : x < y;
            });
  std::vector<std::uint32_t> ranks(ids.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) ranks[order[r]] = r;
  return ranks;
}

}  // namespace

void PatternTable::finalize() {
  a_ranks_ = id_ranks(a_ids_);
  b_ranks_ = id_ranks(b_ids_);
  std::sort(patterns_.begin(), patterns_.end(),
            [](const PatternEntry& x, const PatternEntry& y) {
              return x.bits < y.bits;
            });
  for (auto& entry : patterns_) {
    std::sort(entry.pairs.begin(), entry.pairs.end(),
              [&](const auto& x, const auto& y) {
                const auto kx = std::make_pair(a_ranks_[x.first],
                                               b_ranks_[x.second]);
                const auto ky = std::make_pair(a_ranks_[y.first],
                                               b_ranks_[y.second]);
                return kx < ky;
              });
  }
}

int PatternTable::find_a(const std::string& id) const {
  for (std::size_t i = 0; i < a_ids_.size(); ++i) {
    if (a_ids_[i] == id) return static_cast<int>(i);
  }
  return -1;
}

int PatternTable::find_b(const std::string& id) const {
  for (std::size_t i = 0; i < b_ids_.size(); ++i) {
    if (b_ids_[i] == id) return static_cast<int>(i);
  }
  return -1;
}

std::uint64_t PatternTable::pattern_count(PatternBits bits) const {
  auto it = std::lower_bound(
      patterns_.begin(), patterns_.end(), bits,
      [](const PatternEntry& e, PatternBits b) { return e.bits < b; });
  if (it == patterns_.end() || it->bits != bits) return 0;
  return it->count();
}

std::uint64_t PatternTable::marginal_agree(std::size_t k) const {
  std::uint64_t total = 0;
  for (const auto& entry : patterns_) {
    if (entry.bits & (PatternBits{1} << k)) total += entry.count();
  }
  return total;
}

void PatternTable::write_pattern_csv(std::ostream& out) const {
  out << "pattern_bits,count\n";
  for (const auto& entry : patterns_) {
    out << entry.bits << ',' << entry.count() << '\n';
  }
}

namespace {

using PairList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

std::vector<PatternEntry> entries_from_map(std::map<PatternBits, PairList> map) {
  std::vector<PatternEntry> entries;
  entries.reserve(map.size());
  for (auto& [bits, pairs] : map) {
    PatternEntry e;
    e.bits = bits;
    e.pairs = std::move(pairs);
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace

PatternTable build_comparison_space(const std::vector<KeyRecord>& a,
                                    const std::vector<KeyRecord>& b,
                                    unsigned threads) {
  if (a.empty() || b.empty()) {
    throw DataError("empty comparison space: both files need records");
  }
  const std::size_t k = a[0].values.size();
  if (k == 0 || k > kMaxFields) {
    throw UsageError("key length must be 1.." + std::to_string(kMaxFields));
  }
  for (const auto& rec : a) {
    if (rec.values.size() != k) {
      throw UsageError("record " + rec.id + " has " +
                       std::to_string(rec.values.size()) +
                       " key fields, expected " + std::to_string(k));
    }
  }
  for (const auto& rec : b) {
    if (rec.values.size() != k) {
      throw UsageError("record " + rec.id + " has " +
                       std::to_string(rec.values.size()) +
                       " key fields, expected " + std::to_string(k));
    }
  }

  unsigned workers = threads ? threads : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, a.size()));

  std::vector<std::map<PatternBits, PairList>> partial(workers);
  auto compare_rows = [&](unsigned w) {
    auto& local = partial[w];
    for (std::size_t i = w; i < a.size(); i += workers) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        local[agreement(a[i], b[j])].emplace_back(
            static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      }
    }
  };
  if (workers == 1) {
    compare_rows(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(compare_rows, w);
    for (auto& t : pool) t.join();
  }

  auto merged = std::move(partial[0]);
  for (unsigned w = 1; w < workers; ++w) {
    for (auto& [bits, pairs] : partial[w]) {
      auto& dst = merged[bits];
      dst.insert(dst.end(), pairs.begin(), pairs.end());
    }
  }

  std::vector<std::string> a_ids, b_ids;
  a_ids.reserve(a.size());
  b_ids.reserve(b.size());
  for (const auto& rec : a) a_ids.push_back(rec.id);
  for (const auto& rec : b) b_ids.push_back(rec.id);
  return PatternTable(std::move(a_ids), std::move(b_ids), k,
                      entries_from_map(std::move(merged)));
}

PatternTable pattern_table_from_gammas(
    const std::vector<std::string>& a_ids,
    const std::vector<std::string>& b_ids, std::size_t field_count,
    const std::vector<std::vector<PatternBits>>& gamma) {
  if (a_ids.empty() || b_ids.empty()) {
    throw DataError("empty comparison space: both files need records");
  }
  if (gamma.size() != a_ids.size()) {
    throw UsageError("gamma matrix has " + std::to_string(gamma.size()) +
                     " rows for " + std::to_string(a_ids.size()) + " records");
  }
  std::map<PatternBits, PairList> map;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (gamma[i].size() != b_ids.size()) {
      throw UsageError("gamma matrix row " + std::to_string(i) + " has " +
                       std::to_string(gamma[i].size()) + " columns for " +
                       std::to_string(b_ids.size()) + " records");
    }
    for (std::size_t j = 0; j < gamma[i].size(); ++j) {
      map[gamma[i][j]].emplace_back(static_cast<std::uint32_t>(i),
                                    static_cast<std::uint32_t>(j));
    }
  }
  return PatternTable(a_ids, b_ids, field_count, entries_from_map(std::move(map)));
}

}  // namespace mecrl
