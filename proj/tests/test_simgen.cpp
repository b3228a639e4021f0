#include "mecrl/simgen.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace mecrl;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
  auto dir = fs::temp_directory_path() / "mecrl_simgen_tests";
  fs::create_directories(dir);
  return dir;
}

// Upper .99 chi-square quantile via the Wilson-Hilferty cube approximation;
// accurate to ~0.1 for the dfs used here.
double chi2_crit99(double df) {
  const double z = 2.3263478740408408;  // standard normal .99 quantile
  const double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
  return df * t * t * t;
}

}  // namespace

TEST_CASE("default generator spec shape") {
  GeneratorSpec spec = default_generator_spec();
  spec.validate();
  REQUIRE(spec.schema.size() == 12);
  const std::vector<std::uint32_t> want_card{26, 7, 7, 7, 26, 7, 7, 7,
                                             2,  31, 12, 103};
  for (std::size_t k = 0; k < 12; ++k) {
    CHECK(spec.schema.fields[k].cardinality == want_card[k]);
    REQUIRE(spec.category_dists[k].size() == want_card[k]);
    double total = 0;
    for (double w : spec.category_dists[k]) {
      CHECK(w >= 0.0);
      total += w;
    }
    CHECK(total == Catch::Approx(1.0).epsilon(1e-9));
    CHECK(spec.alpha[k] == Catch::Approx(0.1));
  }
  REQUIRE(spec.informative_filter.size() == 3);
  CHECK(spec.informative_filter[0].field == "SEX");
  CHECK(spec.informative_filter[1].field == "DOB_YEAR");
  CHECK(spec.informative_filter[1].value == 61);  // 1970
  CHECK(spec.informative_filter[2].op == FilterClause::Op::kOdd);
}

TEST_CASE("population generation is deterministic with prefix stability") {
  GeneratorSpec spec = default_generator_spec();
  spec.seed = 99;
  auto p10 = generate_population(10, spec);
  auto p20 = generate_population(20, spec);
  REQUIRE(p10.size() == 10);
  REQUIRE(p20.size() == 20);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(p10[i].id == p20[i].id);
    CHECK(p10[i].values == p20[i].values);
  }
  CHECK(p10[0].id == "P1");
  CHECK(p10[9].id == "P10");

  GeneratorSpec other = spec;
  other.seed = 100;
  auto q10 = generate_population(10, other);
  bool any_diff = false;
  for (std::size_t i = 0; i < 10; ++i) {
    if (q10[i].values != p10[i].values) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("generated category frequencies pass a chi-square check") {
  GeneratorSpec spec = default_generator_spec();
  spec.seed = 9001;
  const std::size_t n = 100000;
  auto pop = generate_population(n, spec);

  // SEX (df 1) and the first phonetic letter (df 25)
  for (std::size_t k : {std::size_t{8}, std::size_t{0}}) {
    const auto& dist = spec.category_dists[k];
    std::vector<double> counts(dist.size(), 0.0);
    for (const auto& rec : pop) counts[rec.values[k] - 1] += 1.0;
    double stat = 0.0;
    for (std::size_t d = 0; d < dist.size(); ++d) {
      const double expect = n * dist[d];
      stat += (counts[d] - expect) * (counts[d] - expect) / expect;
    }
    INFO("field " << spec.schema.fields[k].name << " stat " << stat);
    CHECK(stat < chi2_crit99(static_cast<double>(dist.size() - 1)));
  }
}

TEST_CASE("hit-miss perturbation") {
  GeneratorSpec spec = default_generator_spec();
  spec.seed = 5;

  SECTION("ids and record count are never touched") {
    auto pop = generate_population(50, spec);
    SplitMix64 rng(123);
    for (const auto& rec : pop) {
      auto noisy = perturb_hit_miss(rec, spec, rng);
      CHECK(noisy.id == rec.id);
      CHECK(noisy.values.size() == rec.values.size());
    }
  }

  SECTION("alpha = 0 is the identity") {
    GeneratorSpec clean = spec;
    clean.alpha.assign(12, 0.0);
    auto pop = generate_population(20, clean);
    SplitMix64 rng(321);
    for (const auto& rec : pop) {
      CHECK(perturb_hit_miss(rec, clean, rng).values == rec.values);
    }
  }

  SECTION("pairwise agreement matches 1 - alpha (1 - sum m^2)") {
    GeneratorSpec noisy = spec;
    noisy.alpha.assign(12, 0.3);
    const int n = 20000;
    auto pop = generate_population(n, noisy);
    const std::size_t k = 9;  // day of birth, near-uniform
    double sum_m2 = 0;
    for (double w : noisy.category_dists[k]) sum_m2 += w * w;
    const double expect = 1.0 - 0.3 * (1.0 - sum_m2);

    SplitMix64 ra(1001), rb(1002);
    int agree = 0;
    for (const auto& rec : pop) {
      auto left = perturb_hit_miss(rec, noisy, ra);
      auto right = perturb_hit_miss(rec, noisy, rb);
      if (left.values[k] == right.values[k]) agree++;
    }
    const double se = std::sqrt(expect * (1 - expect) / n);
    CHECK(std::fabs(agree / double(n) - expect) < 4 * se);
  }
}

TEST_CASE("scenario one: independent samples of a shared population") {
  GeneratorSpec spec = default_generator_spec();
  spec.n_a = 50;
  spec.n_b = 100;
  spec.p_a = 0.8;

  double total_matches = 0;
  const int reps = 30;
  for (int rep = 0; rep < reps; ++rep) {
    spec.seed = 1000 + rep;
    auto files = scenario_one(spec);
    REQUIRE(files.file_a.size() == 50);
    REQUIRE(files.file_b.size() == 100);
    total_matches += static_cast<double>(files.truth.size());

    std::set<std::string> a_ids, b_ids;
    for (const auto& r : files.file_a) a_ids.insert(r.id);
    for (const auto& r : files.file_b) b_ids.insert(r.id);
    CHECK(a_ids.size() == 50);
    CHECK(b_ids.size() == 100);
    for (const auto& [aid, bid] : files.truth) {
      CHECK(a_ids.count(aid) == 1);
      CHECK(b_ids.count(bid) == 1);
    }
  }
  // E(n_m) = n_a p_a = 40; the mean of 30 repetitions concentrates tightly
  CHECK(std::fabs(total_matches / reps - 40.0) < 2.0);

  SECTION("same seed reproduces the files byte for byte") {
    spec.seed = 2024;
    auto one = scenario_one(spec);
    auto two = scenario_one(spec);
    REQUIRE(one.file_a.size() == two.file_a.size());
    for (std::size_t i = 0; i < one.file_a.size(); ++i) {
      CHECK(one.file_a[i].id == two.file_a[i].id);
      CHECK(one.file_a[i].values == two.file_a[i].values);
    }
    CHECK(one.truth == two.truth);
  }
}

TEST_CASE("scenario two: fixed match count and informative remainder") {
  GeneratorSpec spec = default_generator_spec();
  spec.scenario = 2;
  spec.n_a = 40;
  spec.n_b = 80;
  spec.p_a = 0.5;
  spec.seed = 31337;
  spec.alpha.assign(12, 0.0);  // keep true keys visible for the filter check

  auto files = scenario_two(spec);
  REQUIRE(files.file_a.size() == 40);
  REQUIRE(files.file_b.size() == 80);
  CHECK(files.truth.size() == 20);  // round(40 * 0.5)

  std::set<std::string> matched_b;
  for (const auto& [aid, bid] : files.truth) matched_b.insert(bid);

  // with alpha = 0 the B records carry their true keys: every non-matched
  // B record must satisfy the informative filter
  const auto& schema = spec.schema;
  int checked = 0;
  for (const auto& rec : files.file_b) {
    if (matched_b.count(rec.id)) continue;
    checked++;
    for (const auto& clause : spec.informative_filter) {
      std::size_t k = 0;
      for (; k < schema.size(); ++k) {
        if (schema.fields[k].name == clause.field) break;
      }
      REQUIRE(k < schema.size());
      const Category v = rec.values[k];
      switch (clause.op) {
        case FilterClause::Op::kEq:
          CHECK(v == clause.value);
          break;
        case FilterClause::Op::kLe:
          CHECK(v <= clause.value);
          break;
        case FilterClause::Op::kOdd:
          CHECK(v % 2 == 1);
          break;
        default:
          FAIL("unexpected op in default filter");
      }
    }
  }
  CHECK(checked == 60);

  SECTION("unsatisfiable filters raise a generation error") {
    GeneratorSpec bad = spec;
    bad.informative_filter = {{
        "SEX", FilterClause::Op::kEq, 3  // cardinality 2: never true
    }};
    CHECK_THROWS_AS(scenario_two(bad), DataError);
  }
}

TEST_CASE("swap normalization keeps file A the smaller side") {
  GeneratorSpec spec = default_generator_spec();
  spec.n_a = 100;
  spec.n_b = 40;
  GeneratorSpec norm = spec.normalized();
  CHECK(norm.n_a == 40);
  CHECK(norm.n_b == 100);
}

TEST_CASE("generator spec json round trip") {
  const auto path = (test_dir() / "spec.json").string();
  GeneratorSpec spec = default_generator_spec();
  spec.n_a = 33;
  spec.seed = 777;
  spec.alpha[3] = 0.25;
  save_generator_spec(spec, path);
  GeneratorSpec loaded = load_generator_spec(path);
  CHECK(loaded.n_a == 33);
  CHECK(loaded.seed == 777);
  CHECK(loaded.alpha[3] == 0.25);
  REQUIRE(loaded.schema.size() == spec.schema.size());

  auto a = generate_population(8, spec);
  auto b = generate_population(8, loaded);
  for (std::size_t i = 0; i < 8; ++i) CHECK(a[i].values == b[i].values);
}

TEST_CASE("encoded record files round trip through ingest") {
  GeneratorSpec spec = default_generator_spec();
  spec.seed = 555;
  auto pop = generate_population(25, spec);
  pop[3].values[2] = kMissing;  // make sure blanks survive the trip

  const auto path = (test_dir() / "records.csv").string();
  write_records_csv(pop, spec.schema, path);
  auto back = ingest_csv(path, encoded_schema(spec.schema));
  REQUIRE(back.size() == 25);
  for (std::size_t i = 0; i < 25; ++i) {
    CHECK(back[i].id == pop[i].id);
    CHECK(back[i].values == pop[i].values);
  }
}

TEST_CASE("truth csv round trip") {
  const auto path = (test_dir() / "truth.csv").string();
  TruthPairs truth{{"A1", "B9"}, {"A2", "B4"}};
  write_truth_csv(truth, path);
  CHECK(read_truth_csv(path) == truth);
}

TEST_CASE("raw file ingestion encodes names, sex and dates") {
  const auto path = (test_dir() / "raw.csv").string();
  {
    std::ofstream out(path);
    out << "RECID,FORENAME,SURNAME,SEX,DOB\n"
           "1,Robert,Copas,M,1970-03-05\n"
           "2,,Hilton,F,1969-13-40\n"
           "3,Tymczak,A,X,bogus\n";
  }

  KeySchema schema;
  schema.id_column = "RECID";
  auto add_soundex = [&](const std::string& base, const std::string& col) {
    for (int pos = 1; pos <= 4; ++pos) {
      FieldSpec f;
      f.name = base + "_P" + std::to_string(pos);
      f.column = col;
      f.encoder = FieldEncoder::kSoundex;
      f.soundex_position = pos;
      f.cardinality = encoder_cardinality(FieldEncoder::kSoundex, pos);
      schema.fields.push_back(f);
    }
  };
  add_soundex("FORE", "FORENAME");
  add_soundex("SUR", "SURNAME");
  FieldSpec sex;
  sex.name = "SEX";
  sex.column = "SEX";
  sex.levels = {"M", "F"};
  sex.cardinality = 2;
  schema.fields.push_back(sex);
  for (auto [name, enc] :
       {std::pair{"DAY", FieldEncoder::kDobDay},
        std::pair{"MON", FieldEncoder::kDobMonth},
        std::pair{"YEAR", FieldEncoder::kDobYear}}) {
    FieldSpec f;
    f.name = name;
    f.column = "DOB";
    f.encoder = enc;
    f.cardinality = encoder_cardinality(enc, 0);
    schema.fields.push_back(f);
  }
  schema.validate();

  std::vector<std::string> warnings;
  auto recs = ingest_csv(path, schema, &warnings);
  REQUIRE(recs.size() == 3);

  // Robert -> R163: R=18, then digits shifted by one (digit d -> d+1)
  CHECK(recs[0].id == "1");
  CHECK(recs[0].values[0] == 18);
  CHECK(recs[0].values[1] == 2);
  CHECK(recs[0].values[2] == 7);
  CHECK(recs[0].values[3] == 4);
  // Copas -> C120
  CHECK(recs[0].values[4] == 3);
  CHECK(recs[0].values[5] == 2);
  CHECK(recs[0].values[6] == 3);
  CHECK(recs[0].values[7] == 1);
  CHECK(recs[0].values[8] == 1);   // M
  CHECK(recs[0].values[9] == 5);   // day 5
  CHECK(recs[0].values[10] == 3);  // March
  CHECK(recs[0].values[11] == 61); // 1970

  // row 2: empty forename -> 4 missing phonetic fields; month 13 / day 40
  // unparseable -> missing; year 1969 still usable
  CHECK(recs[1].values[0] == kMissing);
  CHECK(recs[1].values[3] == kMissing);
  CHECK(recs[1].values[4] != kMissing);  // Hilton encodes fine
  CHECK(recs[1].values[8] == 2);         // F
  CHECK(recs[1].values[9] == kMissing);
  CHECK(recs[1].values[10] == kMissing);
  CHECK(recs[1].values[11] == 60);  // 1969

  // row 3: unknown sex level and a hopeless date
  CHECK(recs[2].values[0] != kMissing);  // Tymczak encodes
  CHECK(recs[2].values[8] == kMissing);
  CHECK(recs[2].values[9] == kMissing);
  CHECK(recs[2].values[10] == kMissing);
  CHECK(recs[2].values[11] == kMissing);

  // warnings carry line numbers for the retained-but-degraded rows
  REQUIRE(!warnings.empty());
  bool line2 = false, line3 = false;
  for (const auto& w : warnings) {
    if (w.find("line 3") != std::string::npos) line2 = true;
    if (w.find("line 4") != std::string::npos) line3 = true;
  }
  CHECK(line2);
  CHECK(line3);

  SECTION("schema column absent from the header is an error") {
    KeySchema broken = schema;
    broken.fields[0].column = "GIVENNAME";
    CHECK_THROWS_AS(ingest_csv(path, broken), SchemaError);
  }
  SECTION("missing file is a data error") {
    CHECK_THROWS_AS(ingest_csv("/no/such/file.csv", schema), DataError);
  }
}
