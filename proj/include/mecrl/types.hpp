#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mecrl {

// Category value of one linkage key field. 0 is the missing-data sentinel;
// observed categories are 1..D_k.
using Category = std::uint16_t;
inline constexpr Category kMissing = 0;

// Agreement patterns are bit-packed, field k -> bit k. Limits K to 64, far
// above any realistic key schema.
using PatternBits = std::uint64_t;
inline constexpr std::size_t kMaxFields = 64;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed schema definitions, or schema/data column mismatches.
struct SchemaError : Error {
  using Error::Error;
};

// Unusable input data: missing files, malformed CSV, empty record files.
struct DataError : Error {
  using Error::Error;
};

// Bad arguments to a library call or the command line.
struct UsageError : Error {
  using Error::Error;
};

// One record reduced to its linkage key: an opaque id plus one category
// value per schema field (kMissing where the source was absent/unparseable).
struct KeyRecord {
  std::string id;
  std::vector<Category> values;
};

}  // namespace mecrl
