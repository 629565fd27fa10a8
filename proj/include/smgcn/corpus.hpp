#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "smgcn/types.hpp"

namespace smgcn {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;
using CategoryId = std::int32_t;

/// Character alphabet. Id 0 is reserved for padding and unknown characters.
class Vocabulary {
 public:
  static constexpr TokenId kUnknown = 0;
  static constexpr std::string_view kUnknownToken = "<unk>";

  Vocabulary();

  TokenId add(std::string_view token);
  TokenId lookup(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// Adds every character of `text` in order of first appearance.
  void add_text(std::string_view text);

  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

 private:
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
};

/// Splits UTF-8 into code points, each returned as its own UTF-8 string.
/// Returns nullopt on malformed input.
std::optional<std::vector<std::string>> utf8_characters(std::string_view text);

/// Character-level tokenization; whitespace separates words and is not a token.
/// Throws data_error on malformed UTF-8.
TokenSequence tokenize(std::string_view text, std::size_t max_len, const Vocabulary& vocab);

struct CategoryRecord {
  CategoryId id = 0;
  std::string name;
  std::vector<std::string> product_words;
  bool head_flag = false;

  /// Name followed by product words, as one text.
  std::string text() const;
};

/// Token sequence of name + product words, truncated to `max_len`.
TokenSequence category_tokens(const CategoryRecord& category, std::size_t max_len,
                              const Vocabulary& vocab);

struct ClickSample {
  std::string raw_query;
  std::vector<CategoryId> clicked_labels;  // ascending, unique
};

enum class Split { train, validation, test };

const char* split_name(Split split);

struct Dataset {
  Vocabulary vocabulary;
  std::vector<CategoryRecord> categories;
  std::vector<ClickSample> train;
  std::vector<ClickSample> validation;
  std::vector<ClickSample> test;

  std::size_t num_categories() const { return categories.size(); }
  const std::vector<ClickSample>& samples(Split split) const;
  std::vector<ClickSample>& samples(Split split);
  std::vector<bool> head_flags() const;

  /// Throws data_error when an invariant is broken.
  void validate() const;
};

/// Rebuilds a vocabulary from category texts and training queries,
/// characters added in order of first appearance.
Vocabulary build_vocabulary(const std::vector<CategoryRecord>& categories,
                            const std::vector<ClickSample>& samples);

using ClickCounts = std::map<std::string, std::map<CategoryId, double>>;

/// Per query: keep the shortest prefix of labels, sorted by descending click
/// probability (ties by ascending id), whose cumulative probability reaches
/// `cdf_cutoff`. Queries without clicks are dropped. Labels are returned in
/// ascending id order.
std::map<std::string, std::vector<CategoryId>> filter_unreliable_labels(
    const ClickCounts& raw_click_counts, double cdf_cutoff);

struct GeneratorConfig {
  int num_categories = 100;
  double head_fraction = 0.2;
  int vocab_size = 800;
  int num_samples = 50000;
  double zipf_exponent = 1.0;
  double click_noise = 0.4;  // tail click credited to the group head; stray clicks at 5% of this
  int num_queries = 0;  // distinct query pool size; 0 selects num_samples / 10
  int validation_size = 3000;
  int test_size = 1500;
  double tail_weight = 0.05;       // query-pool weight of a tail intent relative to a head
  double multi_label_prob = 0.5;  // chance that a sibling pair is linked (both always relevant)
  double cdf_cutoff = 0.95;

  void validate() const;
};

/// Sampler over ranks 1..n with P(r) proportional to r^-s, by inverse CDF.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent);
  /// Zero-based rank.
  std::size_t operator()(std::mt19937_64& rng) const;
  double probability(std::size_t rank) const;
  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

Dataset generate_synthetic(const GeneratorConfig& config, std::uint64_t seed);

// TSV formats. Click log: `query \t id,id,...`. Categories: `id \t name \t words`.
std::vector<ClickSample> read_click_tsv(std::istream& in, const std::string& source);
void write_click_tsv(std::ostream& out, const std::vector<ClickSample>& samples);
std::vector<CategoryRecord> read_category_tsv(std::istream& in, const std::string& source);
void write_category_tsv(std::ostream& out, const std::vector<CategoryRecord>& categories);

/// Writes categories.tsv, train.tsv, validation.tsv, test.tsv and manifest.json.
/// `manifest_extra` is merged into the manifest (config echo, seed).
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset,
                  const std::string& manifest_json);
Dataset load_dataset(const std::filesystem::path& dir);

/// The manifest text stored alongside a dataset, or empty if absent.
std::string read_manifest(const std::filesystem::path& dir);

}  // namespace smgcn
