#include "mecrl/schema.hpp"

#include <charconv>
#include <fstream>
#include <set>

#include "mecrl/soundex.hpp"
#include "schema_json.hpp"

namespace mecrl {

namespace {

using nlohmann::json;

// Strict non-negative integer parse; nullopt on anything else.
std::optional<long> parse_int(std::string_view text) {
  if (text.empty()) return std::nullopt;
  long value = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

struct DateParts {
  long year = 0, month = 0, day = 0;
};

std::optional<DateParts> parse_date(const std::string& text) {
  const auto d1 = text.find('-');
  if (d1 == std::string::npos) return std::nullopt;
  const auto d2 = text.find('-', d1 + 1);
  if (d2 == std::string::npos) return std::nullopt;
  const auto y = parse_int(std::string_view(text).substr(0, d1));
  const auto m = parse_int(std::string_view(text).substr(d1 + 1, d2 - d1 - 1));
  const auto d = parse_int(std::string_view(text).substr(d2 + 1));
  if (!y || !m || !d) return std::nullopt;
  return DateParts{*y, *m, *d};
}

std::string encoder_name(FieldEncoder e, int soundex_position) {
  switch (e) {
    case FieldEncoder::kIdentity:
      return "identity-categorical";
    case FieldEncoder::kSoundex:
      return "soundex-split-position-" + std::to_string(soundex_position);
    case FieldEncoder::kDobDay:
      return "dob-day";
    case FieldEncoder::kDobMonth:
      return "dob-month";
    case FieldEncoder::kDobYear:
      return "dob-year";
  }
  return "identity-categorical";
}

std::pair<FieldEncoder, int> encoder_from_name(const std::string& name,
                                               const std::string& origin) {
  if (name == "identity-categorical") return {FieldEncoder::kIdentity, 0};
  if (name == "dob-day") return {FieldEncoder::kDobDay, 0};
  if (name == "dob-month") return {FieldEncoder::kDobMonth, 0};
  if (name == "dob-year") return {FieldEncoder::kDobYear, 0};
  const std::string prefix = "soundex-split-position-";
  if (name.rfind(prefix, 0) == 0) {
    const auto pos = parse_int(std::string_view(name).substr(prefix.size()));
    if (pos && *pos >= 1 && *pos <= 4) {
      return {FieldEncoder::kSoundex, static_cast<int>(*pos)};
    }
  }
  throw SchemaError(origin + ": unknown encoder \"" + name + "\"");
}

Category encode_value(const std::string& raw, const FieldSpec& field,
                      std::string* note) {
  switch (field.encoder) {
    case FieldEncoder::kIdentity: {
      if (!field.levels.empty()) {
        for (std::size_t i = 0; i < field.levels.size(); ++i) {
          if (field.levels[i] == raw) return static_cast<Category>(i + 1);
        }
        *note = "unrecognized level \"" + raw + "\"";
        return kMissing;
      }
      const auto v = parse_int(raw);
      if (!v || *v < 1 || *v > static_cast<long>(field.cardinality)) {
        *note = "expected an integer in 1.." +
                std::to_string(field.cardinality) + ", got \"" + raw + "\"";
        return kMissing;
      }
      return static_cast<Category>(*v);
    }
    case FieldEncoder::kSoundex: {
      std::string code;
      try {
        code = soundex(raw);
      } catch (const UsageError&) {
        *note = "no alphabetic character in \"" + raw + "\"";
        return kMissing;
      }
      const char c = code[static_cast<std::size_t>(field.soundex_position - 1)];
      return field.soundex_position == 1
                 ? static_cast<Category>(c - 'A' + 1)
                 : static_cast<Category>(c - '0' + 1);
    }
    case FieldEncoder::kDobDay:
    case FieldEncoder::kDobMonth:
    case FieldEncoder::kDobYear: {
      const auto date = parse_date(raw);
      if (!date) {
        *note = "unparseable date \"" + raw + "\"";
        return kMissing;
      }
      if (field.encoder == FieldEncoder::kDobDay) {
        if (date->day < 1 || date->day > 31) {
          *note = "day out of range in \"" + raw + "\"";
          return kMissing;
        }
        return static_cast<Category>(date->day);
      }
      if (field.encoder == FieldEncoder::kDobMonth) {
        if (date->month < 1 || date->month > 12) {
          *note = "month out of range in \"" + raw + "\"";
          return kMissing;
        }
        return static_cast<Category>(date->month);
      }
      if (date->year < kDobYearMin || date->year > kDobYearMax) {
        *note = "year outside " + std::to_string(kDobYearMin) + ".." +
                std::to_string(kDobYearMax) + " in \"" + raw + "\"";
        return kMissing;
      }
      return static_cast<Category>(date->year - kDobYearMin + 1);
    }
  }
  return kMissing;
}

}  // namespace

std::uint32_t encoder_cardinality(FieldEncoder e, int soundex_position) {
  switch (e) {
    case FieldEncoder::kIdentity:
      return 0;  // schema-specified
    case FieldEncoder::kSoundex:
      return soundex_position == 1 ? 26u : 7u;
    case FieldEncoder::kDobDay:
      return 31u;
    case FieldEncoder::kDobMonth:
      return 12u;
    case FieldEncoder::kDobYear:
      return static_cast<std::uint32_t>(kDobYearMax - kDobYearMin + 1);
  }
  return 0;
}

void KeySchema::validate() const {
  if (fields.empty()) {
    throw SchemaError("schema has no key fields");
  }
  if (fields.size() > kMaxFields) {
    throw SchemaError("schema has " + std::to_string(fields.size()) +
                      " fields, the limit is " + std::to_string(kMaxFields));
  }
  std::set<std::string> names;
  for (const auto& f : fields) {
    if (f.name.empty()) throw SchemaError("schema field with empty name");
    if (!names.insert(f.name).second) {
      throw SchemaError("duplicate field name \"" + f.name + "\"");
    }
    if (f.encoder == FieldEncoder::kSoundex &&
        (f.soundex_position < 1 || f.soundex_position > 4)) {
      throw SchemaError(f.name + ": soundex position must be 1..4");
    }
    const std::uint32_t fixed = encoder_cardinality(f.encoder, f.soundex_position);
    if (fixed != 0 && f.cardinality != fixed) {
      throw SchemaError(f.name + ": encoder implies cardinality " +
                        std::to_string(fixed) + ", schema says " +
                        std::to_string(f.cardinality));
    }
    if (f.cardinality < 2) {
      throw SchemaError(f.name + ": cardinality must be at least 2");
    }
    if (!f.levels.empty()) {
      if (f.encoder != FieldEncoder::kIdentity) {
        throw SchemaError(f.name + ": levels are only valid for identity fields");
      }
      if (f.levels.size() != f.cardinality) {
        throw SchemaError(f.name + ": " + std::to_string(f.levels.size()) +
                          " levels for cardinality " +
                          std::to_string(f.cardinality));
      }
    }
  }
}

namespace detail {

json schema_to_json(const KeySchema& schema) {
  json fields = json::array();
  for (const auto& f : schema.fields) {
    json jf{{"name", f.name},
            {"column", f.column},
            {"encoder", encoder_name(f.encoder, f.soundex_position)},
            {"cardinality", f.cardinality}};
    if (!f.levels.empty()) jf["levels"] = f.levels;
    fields.push_back(std::move(jf));
  }
  return json{{"id_column", schema.id_column}, {"fields", std::move(fields)}};
}

KeySchema schema_from_json(const json& j, const std::string& origin) {
  KeySchema schema;
  if (!j.is_object() || !j.contains("fields") || !j["fields"].is_array()) {
    throw SchemaError(origin + ": expected an object with a \"fields\" array");
  }
  schema.id_column = j.value("id_column", std::string{});
  for (const auto& jf : j["fields"]) {
    FieldSpec f;
    if (!jf.contains("name") || !jf.contains("encoder")) {
      throw SchemaError(origin + ": each field needs \"name\" and \"encoder\"");
    }
    f.name = jf["name"].get<std::string>();
    f.column = jf.value("column", f.name);
    std::tie(f.encoder, f.soundex_position) =
        encoder_from_name(jf["encoder"].get<std::string>(), origin);
    const std::uint32_t fixed =
        encoder_cardinality(f.encoder, f.soundex_position);
    f.cardinality = jf.value("cardinality", fixed);
    if (jf.contains("levels")) {
      f.levels = jf["levels"].get<std::vector<std::string>>();
      if (f.cardinality == 0) {
        f.cardinality = static_cast<std::uint32_t>(f.levels.size());
      }
    }
    schema.fields.push_back(std::move(f));
  }
  schema.validate();
  return schema;
}

}  // namespace detail

KeySchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) {
    throw DataError(path + ": cannot open schema file");
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return detail::schema_from_json(j, path);
}

void save_schema(const KeySchema& schema, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) {
    throw DataError(path + ": cannot open for writing");
  }
  out << detail::schema_to_json(schema).dump(2) << '\n';
}

KeyRecord encode_record(const std::map<std::string, std::string>& row,
                        const std::string& id, const KeySchema& schema,
                        std::vector<std::string>* warnings) {
  KeyRecord rec;
  rec.id = id;
  rec.values.reserve(schema.size());
  for (const auto& field : schema.fields) {
    const auto it = row.find(field.column);
    if (it == row.end()) {
      throw SchemaError("column \"" + field.column +
                        "\" absent from record for field \"" + field.name +
                        "\"");
    }
    if (it->second.empty()) {
      rec.values.push_back(kMissing);  // plain missing data, no warning
      continue;
    }
    std::string note;
    const Category v = encode_value(it->second, field, &note);
    if (v == kMissing && warnings) {
      warnings->push_back(field.name + ": " + note);
    }
    rec.values.push_back(v);
  }
  return rec;
}

std::vector<KeyRecord> ingest_csv(const std::string& path,
                                  const KeySchema& schema,
                                  std::vector<std::string>* warnings) {
  schema.validate();
  CsvTable table = read_csv(path);

  int id_col = -1;
  if (!schema.id_column.empty()) {
    id_col = table.column(schema.id_column);
    if (id_col < 0) {
      throw SchemaError(path + ": id column \"" + schema.id_column +
                        "\" not in header");
    }
  }
  std::vector<int> cols;
  cols.reserve(schema.size());
  for (const auto& f : schema.fields) {
    const int c = table.column(f.column);
    if (c < 0) {
      throw SchemaError(path + ": column \"" + f.column +
                        "\" (field \"" + f.name + "\") not in header");
    }
    cols.push_back(c);
  }

  std::vector<KeyRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    KeyRecord rec;
    rec.id = id_col >= 0 ? row[static_cast<std::size_t>(id_col)]
                         : "r" + std::to_string(table.line_numbers[r]);
    rec.values.reserve(schema.size());
    for (std::size_t k = 0; k < schema.size(); ++k) {
      const std::string& raw = row[static_cast<std::size_t>(cols[k])];
      if (raw.empty()) {
        rec.values.push_back(kMissing);
        continue;
      }
      std::string note;
      const Category v = encode_value(raw, schema.fields[k], &note);
      if (v == kMissing && warnings) {
        warnings->push_back(path + " line " +
                            std::to_string(table.line_numbers[r]) + ": " +
                            schema.fields[k].name + ": " + note);
      }
      rec.values.push_back(v);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_records_csv(const std::vector<KeyRecord>& records,
                       const KeySchema& schema, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) {
    throw DataError(path + ": cannot open for writing");
  }
  std::vector<std::string> row;
  row.push_back(schema.id_column.empty() ? "id" : schema.id_column);
  for (const auto& f : schema.fields) row.push_back(f.name);
  write_csv_row(out, row);
  for (const auto& rec : records) {
    row.clear();
    row.push_back(rec.id);
    for (Category v : rec.values) {
      row.push_back(v == kMissing ? std::string{} : std::to_string(v));
    }
    write_csv_row(out, row);
  }
}

KeySchema encoded_schema(const KeySchema& schema) {
  KeySchema out;
  out.id_column = schema.id_column.empty() ? "id" : schema.id_column;
  for (const auto& f : schema.fields) {
    FieldSpec e;
    e.name = f.name;
    e.column = f.name;
    e.encoder = FieldEncoder::kIdentity;
    e.cardinality = f.cardinality;
    out.fields.push_back(std::move(e));
  }
  return out;
}

}  // namespace mecrl
