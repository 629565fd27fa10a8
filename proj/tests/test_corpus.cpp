#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "smgcn/corpus.hpp"

using namespace smgcn;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

GeneratorConfig small_config() {
  GeneratorConfig cfg;
  cfg.num_categories = 20;
  cfg.vocab_size = 200;
  cfg.num_samples = 3000;
  cfg.validation_size = 100;
  cfg.test_size = 50;
  return cfg;
}

// Brute force: try every prefix length of every ordering consistent with the
// sort key and pick the shortest that reaches the cutoff.
std::vector<CategoryId> prefix_oracle(const std::map<CategoryId, double>& counts, double cutoff) {
  double total = 0.0;
  for (const auto& [c, n] : counts) total += n;
  std::vector<std::pair<CategoryId, double>> items(counts.begin(), counts.end());
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t j = i + 1; j < items.size(); ++j)
      if (items[j].second > items[i].second || (items[j].second == items[i].second && items[j].first < items[i].first))
        std::swap(items[i], items[j]);
  for (std::size_t len = 1; len <= items.size(); ++len) {
    double mass = 0.0;
    for (std::size_t k = 0; k < len; ++k) mass += items[k].second / total;
    if (mass >= cutoff - 1e-12 || len == items.size()) {
      std::vector<CategoryId> out;
      for (std::size_t k = 0; k < len; ++k) out.push_back(items[k].first);
      std::sort(out.begin(), out.end());
      return out;
    }
  }
  return {};
}

}  // namespace

TEST_CASE("tokenize maps characters, truncates and skips whitespace") {
  Vocabulary v;
  CHECK(v.size() == 1);
  CHECK(v.token(0) == "<unk>");
  const TokenId a = v.add("a");
  CHECK(tokenize("", 16, v).empty());
  CHECK(tokenize("aa", 16, v) == TokenSequence{a, a});
  CHECK(tokenize("a b", 16, v) == TokenSequence{a, Vocabulary::kUnknown});

  const std::string twenty = "abcdefghijklmnopqrst";
  Vocabulary full;
  full.add_text(twenty);
  const auto ids = tokenize(twenty, 16, full);
  REQUIRE(ids.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) CHECK(ids[i] == full.lookup(twenty.substr(i, 1)));
}

TEST_CASE("tokenize handles multi-byte characters and rejects malformed UTF-8") {
  Vocabulary v;
  v.add_text("手机壳");
  CHECK(v.size() == 4);
  CHECK(tokenize("手机 壳", 16, v) == TokenSequence{1, 2, 3});
  CHECK_THROWS_AS(tokenize("\xC3", 16, v), Error);
  CHECK_FALSE(utf8_characters("\xC0\xAF"));      // overlong
  CHECK_FALSE(utf8_characters("\xED\xA0\x80"));  // surrogate
}

TEST_CASE("vocabulary round trips through its token list") {
  Vocabulary v;
  v.add_text("xyzzy");
  const auto copy = Vocabulary::from_tokens(v.tokens());
  CHECK(copy.tokens() == v.tokens());
  for (TokenId id = 0; id < static_cast<TokenId>(v.size()); ++id) CHECK(copy.lookup(v.token(id)) == id);
  CHECK_THROWS_AS(Vocabulary::from_tokens({"x"}), Error);
}

TEST_CASE("CDF filter keeps the shortest reliable prefix") {
  ClickCounts counts;
  counts["q1"] = {{0, 60}, {1, 35}, {2, 5}};
  counts["q2"] = {{4, 10}};
  counts["q3"] = {{7, 5}, {3, 5}};
  counts["q4"] = {{1, 0}};
  const auto kept = filter_unreliable_labels(counts, 0.95);
  CHECK(kept.at("q1") == std::vector<CategoryId>{0, 1});
  CHECK(kept.at("q2") == std::vector<CategoryId>{4});
  CHECK(kept.at("q3") == std::vector<CategoryId>{3, 7});
  CHECK(kept.count("q4") == 0);
}

TEST_CASE("CDF filter agrees with a brute-force prefix scan") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> count(0, 6), label(0, 9);
  for (int trial = 0; trial < 300; ++trial) {
    ClickCounts counts;
    const int labels = 1 + trial % 5;
    for (int k = 0; k < labels; ++k) counts["q"][label(rng)] += count(rng) + 1;
    for (double cutoff : {0.5, 0.8, 0.95, 1.0}) {
      const auto kept = filter_unreliable_labels(counts, cutoff);
      const auto expect = prefix_oracle(counts["q"], cutoff);
      CHECK(kept.at("q") == expect);
      for (auto c : kept.at("q")) CHECK(counts["q"].count(c) == 1);
    }
  }
}

TEST_CASE("Zipf sampler frequencies follow the rank law") {
  const ZipfSampler zipf(100, 1.0);
  CHECK(zipf.probability(0) / zipf.probability(1) == doctest::Approx(2.0));
  std::mt19937_64 rng(5);
  std::vector<int> hits(100, 0);
  const int draws = 400000;
  for (int i = 0; i < draws; ++i) ++hits[zipf(rng)];
  // Independent reference: normalized r^-1 weights.
  double h = 0.0;
  for (int r = 1; r <= 100; ++r) h += 1.0 / r;
  CHECK(double(hits[0]) / draws == doctest::Approx(1.0 / h).epsilon(0.02));
  CHECK(double(hits[0]) / hits[1] == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("synthetic generation is deterministic and shaped by the config") {
  const auto cfg = small_config();
  const Dataset a = generate_synthetic(cfg, 7);
  const Dataset b = generate_synthetic(cfg, 7);
  std::ostringstream sa, sb;
  write_click_tsv(sa, a.train);
  write_click_tsv(sb, b.train);
  CHECK(sa.str() == sb.str());
  CHECK(a.vocabulary.tokens() == b.vocabulary.tokens());

  const Dataset c = generate_synthetic(cfg, 8);
  std::ostringstream sc;
  write_click_tsv(sc, c.train);
  CHECK(sc.str() != sa.str());

  CHECK(a.num_categories() == 20);
  const auto flags = a.head_flags();
  CHECK(std::count(flags.begin(), flags.end(), true) == 4);
  for (std::size_t i = 0; i < a.categories.size(); ++i) CHECK(a.categories[i].id == static_cast<CategoryId>(i));
  CHECK(a.train.size() > a.validation.size());
  CHECK(a.validation.size() > a.test.size());
  for (const auto& s : a.train) {
    CHECK_FALSE(s.clicked_labels.empty());
    CHECK(std::is_sorted(s.clicked_labels.begin(), s.clicked_labels.end()));
  }
}

TEST_CASE("default synthetic data has 20 head categories and a long-tail label histogram") {
  GeneratorConfig cfg;
  cfg.num_samples = 20000;
  const Dataset ds = generate_synthetic(cfg, 3);
  const auto flags = ds.head_flags();
  CHECK(std::count(flags.begin(), flags.end(), true) == 20);

  std::vector<double> freq(ds.num_categories(), 0.0);
  for (const auto& s : ds.train)
    for (auto c : s.clicked_labels) freq[static_cast<std::size_t>(c)] += 1.0;
  double head = 0.0, tail = 0.0;
  for (std::size_t c = 0; c < freq.size(); ++c) (flags[c] ? head : tail) += freq[c];
  CHECK(head > tail);

  // Sorted by popularity the histogram is nonincreasing by construction; the
  // check is that the unsorted head block dominates the tail block pointwise
  // on average, i.e. popularity rank follows the head flag.
  std::vector<double> sorted = freq;
  std::sort(sorted.rbegin(), sorted.rend());
  double head_rank_mass = 0.0;
  for (int k = 0; k < 20; ++k) head_rank_mass += sorted[static_cast<std::size_t>(k)];
  CHECK(head / head_rank_mass > 0.9);
}

TEST_CASE("generator rejects impossible configurations") {
  GeneratorConfig cfg;
  cfg.num_categories = 1;
  CHECK_THROWS_AS(generate_synthetic(cfg, 1), Error);
  cfg = GeneratorConfig{};
  cfg.vocab_size = 10;
  CHECK_THROWS_AS(generate_synthetic(cfg, 1), Error);
  cfg = GeneratorConfig{};
  cfg.zipf_exponent = 0.0;
  CHECK_THROWS_AS(generate_synthetic(cfg, 1), Error);
}

TEST_CASE("dataset files round trip byte for byte") {
  const auto dir = std::filesystem::temp_directory_path() / "smgcn_test_corpus";
  std::filesystem::remove_all(dir);
  const Dataset ds = generate_synthetic(small_config(), 9);
  save_dataset(dir, ds, R"({"seed":9})");
  const Dataset back = load_dataset(dir);
  CHECK(back.head_flags() == ds.head_flags());
  CHECK(back.train.size() == ds.train.size());

  const auto again = dir / "again";
  save_dataset(again, back, R"({"seed":9})");
  for (const char* f : {"categories.tsv", "train.tsv", "validation.tsv", "test.tsv", "manifest.json"})
    CHECK(slurp(dir / f) == slurp(again / f));
  CHECK(read_manifest(dir).find("\"seed\"") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("click TSV reader reports bad lines") {
  std::istringstream bad_id("abc\t1,x\n");
  CHECK_THROWS_AS(read_click_tsv(bad_id, "t"), Error);
  std::istringstream no_tab("abc\n");
  CHECK_THROWS_AS(read_click_tsv(no_tab, "t"), Error);
  std::istringstream ok("abc\t3,1\n");
  const auto samples = read_click_tsv(ok, "t");
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].clicked_labels == std::vector<CategoryId>{1, 3});
}
