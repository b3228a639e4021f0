#include "mecrl/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "mecrl/csv.hpp"
#include "schema_json.hpp"

namespace mecrl {

namespace {

using nlohmann::json;

std::vector<std::vector<double>> cumulative_dists(const GeneratorSpec& spec) {
  std::vector<std::vector<double>> cum(spec.category_dists.size());
  for (std::size_t k = 0; k < cum.size(); ++k) {
    cum[k].resize(spec.category_dists[k].size());
    std::partial_sum(spec.category_dists[k].begin(),
                     spec.category_dists[k].end(), cum[k].begin());
  }
  return cum;
}

KeyRecord draw_record(std::size_t index, const GeneratorSpec& spec,
                      const std::vector<std::vector<double>>& cum,
                      std::uint64_t stream_tag) {
  SplitMix64 rng(derive_seed(spec.seed, stream_tag, index));
  KeyRecord rec;
  rec.id = "P" + std::to_string(index + 1);
  rec.values.resize(cum.size());
  for (std::size_t k = 0; k < cum.size(); ++k) {
    rec.values[k] = sample_categorical(cum[k], rng.next_unit());
  }
  return rec;
}

// First `take` entries of a Fisher-Yates shuffle of 0..size-1.
std::vector<std::size_t> sample_indices(std::size_t size, std::size_t take,
                                        SplitMix64 rng) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t j = 0; j < take; ++j) {
    const std::size_t t = j + static_cast<std::size_t>(rng.next_below(size - j));
    std::swap(idx[j], idx[t]);
  }
  idx.resize(take);
  return idx;
}

std::size_t field_index(const KeySchema& schema, const std::string& name) {
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (schema.fields[k].name == name) return k;
  }
  throw UsageError("informative filter references unknown field '" + name +
                   "'");
}

bool clause_holds(const FilterClause& clause, Category v) {
  if (v == kMissing) return false;
  switch (clause.op) {
    case FilterClause::Op::kEq:
      return v == clause.value;
    case FilterClause::Op::kNe:
      return v != clause.value;
    case FilterClause::Op::kLe:
      return v <= clause.value;
    case FilterClause::Op::kLt:
      return v < clause.value;
    case FilterClause::Op::kGe:
      return v >= clause.value;
    case FilterClause::Op::kGt:
      return v > clause.value;
    case FilterClause::Op::kOdd:
      return v % 2 == 1;
    case FilterClause::Op::kEven:
      return v % 2 == 0;
  }
  return false;
}

bool passes_filter(const GeneratorSpec& spec, const KeyRecord& rec) {
  for (const auto& clause : spec.informative_filter) {
    if (!clause_holds(clause, rec.values[field_index(spec.schema, clause.field)])) {
      return false;
    }
  }
  return true;
}

const char* op_name(FilterClause::Op op) {
  switch (op) {
    case FilterClause::Op::kEq:
      return "eq";
    case FilterClause::Op::kNe:
      return "ne";
    case FilterClause::Op::kLe:
      return "le";
    case FilterClause::Op::kLt:
      return "lt";
    case FilterClause::Op::kGe:
      return "ge";
    case FilterClause::Op::kGt:
      return "gt";
    case FilterClause::Op::kOdd:
      return "odd";
    case FilterClause::Op::kEven:
      return "even";
  }
  return "eq";
}

FilterClause::Op op_from_name(const std::string& name,
                              const std::string& origin) {
  if (name == "eq") return FilterClause::Op::kEq;
  if (name == "ne") return FilterClause::Op::kNe;
  if (name == "le") return FilterClause::Op::kLe;
  if (name == "lt") return FilterClause::Op::kLt;
  if (name == "ge") return FilterClause::Op::kGe;
  if (name == "gt") return FilterClause::Op::kGt;
  if (name == "odd") return FilterClause::Op::kOdd;
  if (name == "even") return FilterClause::Op::kEven;
  throw SchemaError(origin + ": unknown filter op '" + name + "'");
}

}  // namespace

void GeneratorSpec::validate() const {
  schema.validate();
  const std::size_t K = schema.size();
  if (category_dists.size() != K) {
    throw UsageError("generator spec has " +
                     std::to_string(category_dists.size()) +
                     " category distributions for " + std::to_string(K) +
                     " key fields");
  }
  if (alpha.size() != K) {
    throw UsageError("generator spec has " + std::to_string(alpha.size()) +
                     " alpha entries for " + std::to_string(K) +
                     " key fields");
  }
  for (std::size_t k = 0; k < K; ++k) {
    const auto& field = schema.fields[k];
    if (category_dists[k].size() != field.cardinality) {
      throw UsageError("field '" + field.name + "': distribution length " +
                       std::to_string(category_dists[k].size()) +
                       " does not match cardinality " +
                       std::to_string(field.cardinality));
    }
    double total = 0.0;
    for (double w : category_dists[k]) {
      if (!(w >= 0.0)) {
        throw UsageError("field '" + field.name +
                         "': negative category weight");
      }
      total += w;
    }
    if (!(total > 0.0)) {
      throw UsageError("field '" + field.name + "': zero total weight");
    }
    if (!(alpha[k] >= 0.0 && alpha[k] <= 1.0)) {
      throw UsageError("field '" + field.name + "': alpha outside [0, 1]");
    }
  }
  if (!(p_a > 0.0 && p_a <= 1.0)) {
    throw UsageError("overlap p_a must lie in (0, 1]");
  }
  if (scenario != 1 && scenario != 2) {
    throw UsageError("scenario must be 1 or 2");
  }
  if (n_a < 1 || n_b < 1) {
    throw UsageError("both file sizes must be at least 1");
  }
  for (const auto& clause : informative_filter) {
    field_index(schema, clause.field);  // throws on unknown names
  }
}

GeneratorSpec GeneratorSpec::normalized() const {
  GeneratorSpec out = *this;
  if (out.n_a > out.n_b) std::swap(out.n_a, out.n_b);
  for (auto& dist : out.category_dists) {
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    if (total > 0.0) {
      for (double& w : dist) w /= total;
    }
  }
  return out;
}

GeneratorSpec default_generator_spec() {
  GeneratorSpec spec;
  spec.schema.id_column = "id";

  auto add_field = [&](const std::string& name, std::uint32_t cardinality,
                       std::vector<double> weights) {
    FieldSpec f;
    f.name = name;
    f.column = name;
    f.encoder = FieldEncoder::kIdentity;
    f.cardinality = cardinality;
    spec.schema.fields.push_back(f);
    const double total =
        std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= total;
    spec.category_dists.push_back(std::move(weights));
  };

  // Initial-letter frequencies of English surnames, also reused for the
  // first phonetic letter of forenames.
  const std::vector<double> letter{
      0.042, 0.075, 0.068, 0.050, 0.028, 0.038, 0.052, 0.078, 0.012,
      0.030, 0.048, 0.055, 0.088, 0.026, 0.022, 0.050, 0.003, 0.052,
      0.092, 0.048, 0.006, 0.016, 0.052, 0.002, 0.010, 0.007};
  // Phonetic digit positions skew toward the zero pad and dentals.
  const std::vector<double> digit{0.35, 0.08, 0.14, 0.12, 0.10, 0.13, 0.08};

  for (const char* base : {"FORE", "SUR"}) {
    add_field(std::string(base) + "_P1", 26, letter);
    for (int pos = 2; pos <= 4; ++pos) {
      add_field(std::string(base) + "_P" + std::to_string(pos), 7, digit);
    }
  }
  add_field("SEX", 2, {0.5, 0.5});
  add_field("DOB_DAY", 31, std::vector<double>(31, 1.0 / 31.0));
  add_field("DOB_MON", 12, std::vector<double>(12, 1.0 / 12.0));
  // Triangular birth-year profile peaking mid-range (category 52 ~ 1961).
  std::vector<double> year(103);
  for (std::size_t d = 1; d <= 103; ++d) {
    year[d - 1] = 52.0 - std::fabs(static_cast<double>(d) - 52.0);
  }
  add_field("DOB_YEAR", 103, std::move(year));

  spec.alpha.assign(12, 0.1);
  spec.informative_filter = {
      {"SEX", FilterClause::Op::kEq, 2},       // female
      {"DOB_YEAR", FilterClause::Op::kLe, 61},  // born 1970 or earlier
      {"DOB_MON", FilterClause::Op::kOdd, 0},
  };
  return spec;
}

std::vector<KeyRecord> generate_population(std::size_t size,
                                           const GeneratorSpec& spec,
                                           std::uint64_t stream_tag) {
  const auto cum = cumulative_dists(spec);
  std::vector<KeyRecord> pop;
  pop.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    pop.push_back(draw_record(i, spec, cum, stream_tag));
  }
  return pop;
}

KeyRecord perturb_hit_miss(const KeyRecord& record, const GeneratorSpec& spec,
                           SplitMix64& rng) {
  KeyRecord out = record;
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    const double a = spec.alpha[k];
    if (a <= 0.0) continue;
    const double side_rate = 1.0 - std::sqrt(1.0 - a);
    if (rng.next_unit() >= side_rate) continue;
    std::vector<double> cum(spec.category_dists[k].size());
    std::partial_sum(spec.category_dists[k].begin(),
                     spec.category_dists[k].end(), cum.begin());
    out.values[k] = sample_categorical(cum, rng.next_unit());
  }
  return out;
}

LinkageFiles scenario_one(const GeneratorSpec& raw) {
  const GeneratorSpec spec = raw.normalized();
  spec.validate();
  const std::size_t N = static_cast<std::size_t>(
      std::llround(static_cast<double>(spec.n_b) / spec.p_a));
  const auto pop = generate_population(N, spec);

  const auto idx_a = sample_indices(
      N, spec.n_a, SplitMix64(derive_seed(spec.seed, kStreamSampleA, 0)));
  const auto idx_b = sample_indices(
      N, spec.n_b, SplitMix64(derive_seed(spec.seed, kStreamSampleB, 0)));

  std::unordered_map<std::size_t, std::size_t> b_slot;
  b_slot.reserve(idx_b.size());
  for (std::size_t j = 0; j < idx_b.size(); ++j) b_slot[idx_b[j]] = j;

  LinkageFiles files;
  files.file_a.reserve(spec.n_a);
  for (std::size_t j = 0; j < idx_a.size(); ++j) {
    SplitMix64 noise(derive_seed(spec.seed, kStreamPerturbA, idx_a[j]));
    KeyRecord rec = perturb_hit_miss(pop[idx_a[j]], spec, noise);
    rec.id = "A" + std::to_string(j + 1);
    files.file_a.push_back(std::move(rec));
    auto hit = b_slot.find(idx_a[j]);
    if (hit != b_slot.end()) {
      files.truth.emplace_back("A" + std::to_string(j + 1),
                               "B" + std::to_string(hit->second + 1));
    }
  }
  files.file_b.reserve(spec.n_b);
  for (std::size_t j = 0; j < idx_b.size(); ++j) {
    SplitMix64 noise(derive_seed(spec.seed, kStreamPerturbB, idx_b[j]));
    KeyRecord rec = perturb_hit_miss(pop[idx_b[j]], spec, noise);
    rec.id = "B" + std::to_string(j + 1);
    files.file_b.push_back(std::move(rec));
  }
  return files;
}

LinkageFiles scenario_two(const GeneratorSpec& raw) {
  const GeneratorSpec spec = raw.normalized();
  spec.validate();
  const std::size_t n_m = static_cast<std::size_t>(
      std::llround(static_cast<double>(spec.n_a) * spec.p_a));
  const std::size_t N = static_cast<std::size_t>(
      std::llround(static_cast<double>(spec.n_b) / spec.p_a));
  const auto cum = cumulative_dists(spec);
  auto pop = generate_population(N, spec);

  const auto idx_a = sample_indices(
      N, spec.n_a, SplitMix64(derive_seed(spec.seed, kStreamSampleA, 0)));
  // which of A's records also enter B
  const auto matched_pos = sample_indices(
      spec.n_a, n_m, SplitMix64(derive_seed(spec.seed, kStreamSampleB, 0)));

  std::unordered_set<std::size_t> in_a(idx_a.begin(), idx_a.end());

  // B-only entities: scan the population in index order for filter passers,
  // extending it on demand (record i always comes from stream i, so the
  // extension is just a longer prefix of the same population).
  const std::size_t want = spec.n_b - n_m;
  const std::size_t scan_cap = N + 200 * (static_cast<std::size_t>(spec.n_b) + 10);
  std::vector<std::size_t> b_only;
  b_only.reserve(want);
  for (std::size_t i = 0; b_only.size() < want; ++i) {
    if (i > scan_cap) {
      throw DataError(
          "informative filter rejected every candidate record; check the "
          "filter against the category distributions");
    }
    if (i >= pop.size()) {
      pop.push_back(draw_record(i, spec, cum, kStreamPopulation));
    }
    if (in_a.count(i)) continue;
    if (passes_filter(spec, pop[i])) b_only.push_back(i);
  }

  LinkageFiles files;
  files.file_a.reserve(spec.n_a);
  for (std::size_t j = 0; j < idx_a.size(); ++j) {
    SplitMix64 noise(derive_seed(spec.seed, kStreamPerturbA, idx_a[j]));
    KeyRecord rec = perturb_hit_miss(pop[idx_a[j]], spec, noise);
    rec.id = "A" + std::to_string(j + 1);
    files.file_a.push_back(std::move(rec));
  }
  files.file_b.reserve(spec.n_b);
  for (std::size_t j = 0; j < n_m; ++j) {
    const std::size_t pos = matched_pos[j];
    const std::size_t i = idx_a[pos];
    SplitMix64 noise(derive_seed(spec.seed, kStreamPerturbB, i));
    KeyRecord rec = perturb_hit_miss(pop[i], spec, noise);
    rec.id = "B" + std::to_string(j + 1);
    files.file_b.push_back(std::move(rec));
    files.truth.emplace_back("A" + std::to_string(pos + 1),
                             "B" + std::to_string(j + 1));
  }
  for (std::size_t j = 0; j < b_only.size(); ++j) {
    const std::size_t i = b_only[j];
    SplitMix64 noise(derive_seed(spec.seed, kStreamPerturbB, i));
    KeyRecord rec = perturb_hit_miss(pop[i], spec, noise);
    rec.id = "B" + std::to_string(n_m + j + 1);
    files.file_b.push_back(std::move(rec));
  }
  return files;
}

LinkageFiles generate_scenario(const GeneratorSpec& spec) {
  if (spec.scenario == 2) return scenario_two(spec);
  return scenario_one(spec);
}

GeneratorSpec load_generator_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) {
    throw DataError("cannot open generator spec '" + path + "'");
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  try {
    GeneratorSpec spec;
    spec.schema = detail::schema_from_json(j.at("schema"), path);
    spec.category_dists =
        j.at("category_dists").get<std::vector<std::vector<double>>>();
    spec.alpha = j.at("alpha").get<std::vector<double>>();
    spec.n_a = j.at("n_a").get<std::uint32_t>();
    spec.n_b = j.at("n_b").get<std::uint32_t>();
    spec.p_a = j.at("p_a").get<double>();
    spec.scenario = j.at("scenario").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& c : j.at("informative_filter")) {
      FilterClause clause;
      clause.field = c.at("field").get<std::string>();
      clause.op = op_from_name(c.at("op").get<std::string>(), path);
      clause.value = c.value("value", 0u);
      spec.informative_filter.push_back(std::move(clause));
    }
    return spec;
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void save_generator_spec(const GeneratorSpec& spec, const std::string& path) {
  json j;
  j["schema"] = detail::schema_to_json(spec.schema);
  j["category_dists"] = spec.category_dists;
  j["alpha"] = spec.alpha;
  j["n_a"] = spec.n_a;
  j["n_b"] = spec.n_b;
  j["p_a"] = spec.p_a;
  j["scenario"] = spec.scenario;
  j["seed"] = spec.seed;
  json filter = json::array();
  for (const auto& clause : spec.informative_filter) {
    json c;
    c["field"] = clause.field;
    c["op"] = op_name(clause.op);
    c["value"] = clause.value;
    filter.push_back(std::move(c));
  }
  j["informative_filter"] = std::move(filter);

  std::ofstream out(path);
  if (!out.good()) {
    throw DataError("cannot write generator spec '" + path + "'");
  }
  out << j.dump(2) << '\n';
}

void write_truth_csv(const TruthPairs& truth, const std::string& path) {
  std::ofstream out(path);
  if (!out.good()) {
    throw DataError("cannot write truth file '" + path + "'");
  }
  write_csv_row(out, {"a_id", "b_id"});
  for (const auto& [aid, bid] : truth) {
    write_csv_row(out, {aid, bid});
  }
}

TruthPairs read_truth_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() < 2 || table.header[0] != "a_id" ||
      table.header[1] != "b_id") {
    throw DataError(path + ": expected header a_id,b_id");
  }
  TruthPairs truth;
  truth.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    truth.emplace_back(row[0], row[1]);
  }
  return truth;
}

}  // namespace mecrl
