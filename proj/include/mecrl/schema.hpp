#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mecrl/csv.hpp"
#include "mecrl/types.hpp"

namespace mecrl {

// How a source column is reduced to a categorical key field.
enum class FieldEncoder {
  kIdentity,      // value is already categorical (text level or 1..D integer)
  kSoundex,       // one position (1..4) of the column's Soundex code
  kDobDay,        // day-of-month from a date column, D = 31
  kDobMonth,      // month from a date column, D = 12
  kDobYear,       // birth year from a date column, 1910..2012 -> 1..103
};

struct FieldSpec {
  std::string name;          // key field name (also the column name in
                             // pre-encoded files)
  std::string column;        // source column in the raw file
  FieldEncoder encoder = FieldEncoder::kIdentity;
  int soundex_position = 0;  // 1..4 when encoder == kSoundex
  std::uint32_t cardinality = 0;  // D_k >= 2
  // For kIdentity with a textual level set: level -> 1..D mapping. Empty
  // means the column carries integer categories 1..D directly.
  std::vector<std::string> levels;
};

struct KeySchema {
  std::vector<FieldSpec> fields;
  std::string id_column;  // empty -> synthesized row ids ("r<line>")

  std::size_t size() const { return fields.size(); }

  // Enforces 1 <= K <= 64, D_k >= 2, per-encoder fixed cardinalities, unique
  // field names. Throws SchemaError.
  void validate() const;
};

// Fixed cardinalities implied by the non-identity encoders.
std::uint32_t encoder_cardinality(FieldEncoder e, int soundex_position);

inline constexpr int kDobYearMin = 1910;
inline constexpr int kDobYearMax = 2012;

// JSON schema file, shape:
//   {"id_column": "RECID",
//    "fields": [{"name": "...", "column": "...", "encoder": "...",
//                "cardinality": D, "levels": [...]}, ...]}
// encoder strings: "identity-categorical", "soundex-split-position-N"
// (N in 1..4), "dob-day", "dob-month", "dob-year".
KeySchema load_schema(const std::string& path);
void save_schema(const KeySchema& schema, const std::string& path);

// Encodes one raw row (column -> text) into a KeyRecord. Absent or
// unparseable values become kMissing; a schema column missing from the row
// map entirely is a SchemaError. Appends a human-readable note per
// unparseable value to `warnings` when non-null.
KeyRecord encode_record(const std::map<std::string, std::string>& row,
                        const std::string& id, const KeySchema& schema,
                        std::vector<std::string>* warnings = nullptr);

// Reads a CSV file and encodes every row against the schema. The header must
// contain every referenced column (SchemaError otherwise); rows with
// unparseable values are retained with kMissing fields and reported in
// `warnings` with their line numbers. Throws DataError for unreadable or
// malformed files.
std::vector<KeyRecord> ingest_csv(const std::string& path,
                                  const KeySchema& schema,
                                  std::vector<std::string>* warnings = nullptr);

// Writes records in pre-encoded form: id column plus one integer column per
// field (empty cell = missing). load with encoded_schema().
void write_records_csv(const std::vector<KeyRecord>& records,
                       const KeySchema& schema, const std::string& path);

// Identity-encoded twin of `schema`: reads the files written by
// write_records_csv.
KeySchema encoded_schema(const KeySchema& schema);

}  // namespace mecrl
