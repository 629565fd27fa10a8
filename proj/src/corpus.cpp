#include "smgcn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace smgcn {

namespace {

bool is_space(std::string_view ch) {
  return ch == " " || ch == "\t" || ch == "\n" || ch == "\r" || ch == "\v" || ch == "\f";
}

std::string encode_utf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

double uniform(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() { add(kUnknownToken); }

TokenId Vocabulary::add(std::string_view token) {
  auto it = token_to_id_.find(std::string(token));
  if (it != token_to_id_.end()) return it->second;
  const auto id = static_cast<TokenId>(id_to_token_.size());
  token_to_id_.emplace(std::string(token), id);
  id_to_token_.emplace_back(token);
  return id;
}

TokenId Vocabulary::lookup(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnknown : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
    throw ContractError("token id out of range");
  return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) != 0;
}

void Vocabulary::add_text(std::string_view text) {
  auto chars = utf8_characters(text);
  if (!chars) throw data_error("malformed UTF-8 in text: " + std::string(text));
  for (const auto& ch : *chars)
    if (!is_space(ch)) add(ch);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.empty() || tokens.front() != kUnknownToken)
    throw data_error("vocabulary must start with the reserved unknown token");
  Vocabulary v;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw data_error("duplicate vocabulary token: " + tokens[i]);
    v.add(tokens[i]);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Tokenization

std::optional<std::vector<std::string>> utf8_characters(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      len = 1;
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      len = 2;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      len = 3;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      len = 4;
      cp = lead & 0x07;
    } else {
      return std::nullopt;
    }
    if (i + len > text.size()) return std::nullopt;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) return std::nullopt;
      cp = (cp << 6) | (cont & 0x3F);
    }
    // Overlong encodings, surrogates and out-of-range values.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      return std::nullopt;
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

TokenSequence tokenize(std::string_view text, std::size_t max_len, const Vocabulary& vocab) {
  require(max_len >= 1, "tokenize: max_len must be >= 1");
  auto chars = utf8_characters(text);
  if (!chars) throw data_error("malformed UTF-8");
  TokenSequence ids;
  for (const auto& ch : *chars) {
    if (ids.size() == max_len) break;
    if (is_space(ch)) continue;
    ids.push_back(vocab.lookup(ch));
  }
  return ids;
}

std::string CategoryRecord::text() const {
  std::string out = name;
  for (const auto& w : product_words) {
    out += ' ';
    out += w;
  }
  return out;
}

TokenSequence category_tokens(const CategoryRecord& category, std::size_t max_len,
                              const Vocabulary& vocab) {
  return tokenize(category.text(), max_len, vocab);
}

// ---------------------------------------------------------------------------
// Dataset

const char* split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

const std::vector<ClickSample>& Dataset::samples(Split split) const {
  switch (split) {
    case Split::train: return train;
    case Split::validation: return validation;
    default: return test;
  }
}

std::vector<ClickSample>& Dataset::samples(Split split) {
  return const_cast<std::vector<ClickSample>&>(std::as_const(*this).samples(split));
}

std::vector<bool> Dataset::head_flags() const {
  std::vector<bool> flags(categories.size());
  for (const auto& c : categories) flags[static_cast<std::size_t>(c.id)] = c.head_flag;
  return flags;
}

void Dataset::validate() const {
  const auto n = categories.size();
  if (n == 0) throw data_error("dataset has no categories");
  for (std::size_t i = 0; i < n; ++i)
    if (categories[i].id != static_cast<CategoryId>(i))
      throw data_error("category ids must be dense and ordered; found id " +
                       std::to_string(categories[i].id) + " at position " + std::to_string(i));
  for (auto split : {Split::train, Split::validation, Split::test}) {
    for (const auto& s : samples(split)) {
      if (s.clicked_labels.empty())
        throw data_error(std::string(split_name(split)) + ": empty label set for query '" +
                         s.raw_query + "'");
      for (auto id : s.clicked_labels)
        if (id < 0 || static_cast<std::size_t>(id) >= n)
          throw data_error(std::string(split_name(split)) + ": unknown category id " +
                           std::to_string(id));
    }
  }
}

Vocabulary build_vocabulary(const std::vector<CategoryRecord>& categories,
                            const std::vector<ClickSample>& samples) {
  Vocabulary vocab;
  for (const auto& c : categories) vocab.add_text(c.text());
  for (const auto& s : samples) vocab.add_text(s.raw_query);
  return vocab;
}

// ---------------------------------------------------------------------------
// CDF filtering

std::map<std::string, std::vector<CategoryId>> filter_unreliable_labels(
    const ClickCounts& raw_click_counts, double cdf_cutoff) {
  require(cdf_cutoff > 0.0 && cdf_cutoff <= 1.0, "cdf_cutoff must lie in (0, 1]");
  std::map<std::string, std::vector<CategoryId>> out;
  for (const auto& [query, counts] : raw_click_counts) {
    double total = 0.0;
    std::vector<std::pair<CategoryId, double>> ranked;
    for (const auto& [cat, count] : counts) {
      require(count >= 0.0, "click counts must be nonnegative");
      total += count;
      if (count > 0.0) ranked.emplace_back(cat, count);
    }
    if (total <= 0.0) continue;
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<CategoryId> kept;
    double cumulative = 0.0;
    for (const auto& [cat, count] : ranked) {
      kept.push_back(cat);
      cumulative += count / total;
      // Tolerate rounding in sums such as 0.6 + 0.35.
      if (cumulative >= cdf_cutoff - 1e-12) break;
    }
    std::sort(kept.begin(), kept.end());
    out.emplace(query, std::move(kept));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator

void GeneratorConfig::validate() const {
  if (num_categories < 2) throw config_error("num_categories must be >= 2");
  if (vocab_size <= 0) throw config_error("vocab_size must be positive");
  if (!(head_fraction > 0.0 && head_fraction <= 1.0))
    throw config_error("head_fraction must lie in (0, 1]");
  if (num_samples <= 0) throw config_error("num_samples must be positive");
  if (!(zipf_exponent > 0.0)) throw config_error("zipf_exponent must be > 0");
  if (!(click_noise >= 0.0 && click_noise <= 1.0)) throw config_error("click_noise must lie in [0, 1]");
  if (num_queries < 0) throw config_error("num_queries must be >= 0");
  if (validation_size < 0 || test_size < 0) throw config_error("split sizes must be >= 0");
  if (!(tail_weight > 0.0 && tail_weight <= 1.0)) throw config_error("tail_weight must lie in (0, 1]");
  if (!(multi_label_prob >= 0.0 && multi_label_prob <= 1.0))
    throw config_error("multi_label_prob must lie in [0, 1]");
  if (!(cdf_cutoff > 0.0 && cdf_cutoff <= 1.0)) throw config_error("cdf_cutoff must lie in (0, 1]");
}

ZipfSampler::ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
  require(n >= 1 && exponent > 0.0, "ZipfSampler: need n >= 1 and exponent > 0");
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    total += std::pow(static_cast<double>(r + 1), -exponent);
    cdf_[r] = total;
  }
  for (auto& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

std::size_t ZipfSampler::operator()(std::mt19937_64& rng) const {
  const double u = uniform(rng);
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<std::size_t>(it - cdf_.begin());
}

double ZipfSampler::probability(std::size_t rank) const {
  return rank == 0 ? cdf_[0] : cdf_[rank] - cdf_[rank - 1];
}

namespace {

constexpr int kSpecificTokens = 4;  // characters owned by one category
constexpr int kGroupTokens = 4;     // characters shared by a category group
constexpr int kMinGenericTokens = 8;
constexpr char32_t kAlphabetBase = 0x4E00;

struct Layout {
  int num_groups = 0;
  std::vector<int> group_of;      // category -> group
  std::vector<CategoryId> head_of;  // group -> head category
  std::vector<std::vector<std::string>> specific;  // category -> chars
  std::vector<std::vector<std::string>> group;     // group -> chars
  std::vector<CategoryId> partner;  // category -> linked sibling, -1 if none
  std::vector<std::string> pair;    // category -> char shared with its partner
  std::vector<std::string> generic;
};

Layout make_layout(const GeneratorConfig& cfg, std::mt19937_64& rng) {
  Layout lay;
  const int n = cfg.num_categories;
  lay.num_groups = std::clamp(static_cast<int>(std::lround(n * cfg.head_fraction)), 1, n);
  const int needed = kSpecificTokens * n + kGroupTokens * lay.num_groups + (n + 1) / 2 + kMinGenericTokens;
  if (cfg.vocab_size < needed)
    throw config_error("vocab_size " + std::to_string(cfg.vocab_size) + " too small; need at least " +
                       std::to_string(needed) + " for " + std::to_string(n) + " categories");

  std::vector<std::string> alphabet;
  for (int i = 0; i < cfg.vocab_size; ++i) alphabet.push_back(encode_utf8(kAlphabetBase + static_cast<char32_t>(i)));
  std::shuffle(alphabet.begin(), alphabet.end(), rng);
  std::size_t next = 0;

  lay.group_of.resize(static_cast<std::size_t>(n));
  lay.head_of.resize(static_cast<std::size_t>(lay.num_groups));
  for (int c = 0; c < n; ++c) {
    // Heads take ids [0, G); tails are dealt round-robin over the groups.
    lay.group_of[static_cast<std::size_t>(c)] = c < lay.num_groups ? c : (c - lay.num_groups) % lay.num_groups;
    if (c < lay.num_groups) lay.head_of[static_cast<std::size_t>(c)] = c;
  }
  lay.specific.resize(static_cast<std::size_t>(n));
  for (auto& s : lay.specific)
    for (int k = 0; k < kSpecificTokens; ++k) s.push_back(alphabet[next++]);
  lay.group.resize(static_cast<std::size_t>(lay.num_groups));
  for (auto& g : lay.group)
    for (int k = 0; k < kGroupTokens; ++k) g.push_back(alphabet[next++]);

  // Consecutive members of a group (head first) form partner pairs.
  lay.partner.assign(static_cast<std::size_t>(n), -1);
  lay.pair.resize(static_cast<std::size_t>(n));
  for (int g = 0; g < lay.num_groups; ++g) {
    std::vector<CategoryId> members;
    for (CategoryId c = 0; c < n; ++c)
      if (lay.group_of[static_cast<std::size_t>(c)] == g) members.push_back(c);
    for (std::size_t k = 0; k < members.size(); k += 2) {
      const std::string& ch = alphabet[next++];
      lay.pair[static_cast<std::size_t>(members[k])] = ch;
      if (k + 1 < members.size()) lay.pair[static_cast<std::size_t>(members[k + 1])] = ch;
      if (k + 1 < members.size() && uniform(rng) < cfg.multi_label_prob) {
        lay.partner[static_cast<std::size_t>(members[k])] = members[k + 1];
        lay.partner[static_cast<std::size_t>(members[k + 1])] = members[k];
      }
    }
  }
  while (next < alphabet.size()) lay.generic.push_back(alphabet[next++]);
  return lay;
}

std::string draw(const std::vector<std::string>& pool, std::mt19937_64& rng) {
  return pool[pick(rng, pool.size())];
}

CategoryRecord make_category(CategoryId id, const Layout& lay, std::mt19937_64& rng) {
  const auto& own = lay.specific[static_cast<std::size_t>(id)];
  const auto& grp = lay.group[static_cast<std::size_t>(lay.group_of[static_cast<std::size_t>(id)])];
  CategoryRecord rec;
  rec.id = id;
  rec.head_flag = id < lay.num_groups;
  rec.name = own[0] + own[1] + grp[0];
  for (int w = 0; w < 4; ++w) {
    std::string word = w == 0 ? lay.pair[static_cast<std::size_t>(id)] : draw(own, rng);
    word += uniform(rng) < 0.5 ? draw(grp, rng) : draw(own, rng);
    if (uniform(rng) < 0.5) word += draw(own, rng);
    rec.product_words.push_back(word);
  }
  return rec;
}

struct PlantedQuery {
  std::string text;
  std::vector<CategoryId> gold;  // ascending
  double weight = 1.0;
};

PlantedQuery make_query(CategoryId primary, const Layout& lay, std::mt19937_64& rng) {
  PlantedQuery q;
  const int g = lay.group_of[static_cast<std::size_t>(primary)];
  q.gold.push_back(primary);
  std::vector<std::string> chars;
  const auto& own = lay.specific[static_cast<std::size_t>(primary)];
  const int k = 1 + static_cast<int>(pick(rng, 2));
  for (int i = 0; i < k; ++i) chars.push_back(draw(own, rng));
  // A linked partner is always relevant; the text only sometimes says so.
  const CategoryId partner = lay.partner[static_cast<std::size_t>(primary)];
  if (partner >= 0) q.gold.push_back(partner);
  if (uniform(rng) < 0.5) chars.push_back(lay.pair[static_cast<std::size_t>(primary)]);
  if (uniform(rng) < 0.7) chars.push_back(draw(lay.group[static_cast<std::size_t>(g)], rng));
  const int generic = static_cast<int>(pick(rng, 3));
  for (int i = 0; i < generic; ++i) chars.push_back(draw(lay.generic, rng));
  std::shuffle(chars.begin(), chars.end(), rng);
  for (const auto& ch : chars) q.text += ch;
  std::sort(q.gold.begin(), q.gold.end());
  return q;
}

}  // namespace

Dataset generate_synthetic(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const Layout lay = make_layout(config, rng);
  const int n = config.num_categories;

  Dataset ds;
  for (CategoryId c = 0; c < n; ++c) ds.categories.push_back(make_category(c, lay, rng));

  // Query pool: primary category drawn by popularity, heads ranked first.
  std::vector<double> cat_weight(static_cast<std::size_t>(n));
  for (CategoryId c = 0; c < n; ++c) cat_weight[static_cast<std::size_t>(c)] = c < lay.num_groups ? 1.0 : config.tail_weight;
  std::discrete_distribution<CategoryId> popular(cat_weight.begin(), cat_weight.end());

  const int pool_size = config.num_queries > 0 ? config.num_queries : std::max(1, config.num_samples / 10);
  std::vector<PlantedQuery> pool;
  pool.reserve(static_cast<std::size_t>(pool_size));
  for (int i = 0; i < pool_size; ++i) {
    const CategoryId primary = popular(rng);
    auto q = make_query(primary, lay, rng);
    q.weight = cat_weight[static_cast<std::size_t>(primary)];
    pool.push_back(std::move(q));
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [](const PlantedQuery& a, const PlantedQuery& b) { return a.weight > b.weight; });

  // Click sessions. Tail intents are frequently credited to the group's head
  // category instead, plus occasional stray clicks anywhere.
  const ZipfSampler zipf(pool.size(), config.zipf_exponent);
  std::vector<std::pair<std::size_t, std::vector<CategoryId>>> sessions;
  sessions.reserve(static_cast<std::size_t>(config.num_samples));
  ClickCounts counts;
  for (int s = 0; s < config.num_samples; ++s) {
    const std::size_t r = zipf(rng);
    const auto& q = pool[r];
    std::set<CategoryId> clicked;
    for (auto c : q.gold) {
      if (q.gold.size() > 1 && uniform(rng) < 0.1) continue;  // dropped click
      if (c >= lay.num_groups && uniform(rng) < config.click_noise)
        clicked.insert(lay.head_of[static_cast<std::size_t>(lay.group_of[static_cast<std::size_t>(c)])]);
      else
        clicked.insert(c);
    }
    if (uniform(rng) < 0.05 * config.click_noise) clicked.insert(static_cast<CategoryId>(pick(rng, static_cast<std::size_t>(n))));
    if (clicked.empty()) clicked.insert(lay.head_of[static_cast<std::size_t>(lay.group_of[static_cast<std::size_t>(q.gold.front())])]);
    std::vector<CategoryId> labels(clicked.begin(), clicked.end());
    for (auto c : labels) counts[q.text][c] += 1.0;
    sessions.emplace_back(r, std::move(labels));
  }

  const auto kept = filter_unreliable_labels(counts, config.cdf_cutoff);
  for (auto& [r, labels] : sessions) {
    const auto& allowed = kept.at(pool[r].text);
    std::vector<CategoryId> filtered;
    std::set_intersection(labels.begin(), labels.end(), allowed.begin(), allowed.end(),
                          std::back_inserter(filtered));
    if (filtered.empty()) continue;
    ds.train.push_back({pool[r].text, std::move(filtered)});
  }

  // Held-out splits carry planted relevance, with every category equally
  // likely as the primary intent.
  auto held_out = [&](int count) {
    std::vector<ClickSample> out;
    for (int i = 0; i < count; ++i) {
      const auto primary = static_cast<CategoryId>(pick(rng, static_cast<std::size_t>(n)));
      auto q = make_query(primary, lay, rng);
      out.push_back({q.text, q.gold});
    }
    return out;
  };
  ds.validation = held_out(config.validation_size);
  ds.test = held_out(config.test_size);

  ds.vocabulary = build_vocabulary(ds.categories, ds.train);
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// TSV IO

std::vector<ClickSample> read_click_tsv(std::istream& in, const std::string& source) {
  std::vector<ClickSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw data_error(source + ":" + std::to_string(lineno) + ": expected `query\\tlabels`");
    ClickSample s;
    s.raw_query = line.substr(0, tab);
    if (!utf8_characters(s.raw_query))
      throw data_error(source + ":" + std::to_string(lineno) + ": malformed UTF-8");
    for (const auto& field : split(line.substr(tab + 1), ',')) {
      try {
        std::size_t used = 0;
        const long v = std::stol(field, &used);
        if (used != field.size() || v < 0) throw std::invalid_argument(field);
        s.clicked_labels.push_back(static_cast<CategoryId>(v));
      } catch (const std::exception&) {
        throw data_error(source + ":" + std::to_string(lineno) + ": bad category id '" + field + "'");
      }
    }
    std::sort(s.clicked_labels.begin(), s.clicked_labels.end());
    s.clicked_labels.erase(std::unique(s.clicked_labels.begin(), s.clicked_labels.end()),
                           s.clicked_labels.end());
    out.push_back(std::move(s));
  }
  return out;
}

void write_click_tsv(std::ostream& out, const std::vector<ClickSample>& samples) {
  for (const auto& s : samples) {
    out << s.raw_query << '\t';
    for (std::size_t i = 0; i < s.clicked_labels.size(); ++i)
      out << (i ? "," : "") << s.clicked_labels[i];
    out << '\n';
  }
}

std::vector<CategoryRecord> read_category_tsv(std::istream& in, const std::string& source) {
  std::vector<CategoryRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3)
      throw data_error(source + ":" + std::to_string(lineno) + ": expected `id\\tname\\twords`");
    CategoryRecord rec;
    try {
      std::size_t used = 0;
      rec.id = static_cast<CategoryId>(std::stol(fields[0], &used));
      if (used != fields[0].size()) throw std::invalid_argument(fields[0]);
    } catch (const std::exception&) {
      throw data_error(source + ":" + std::to_string(lineno) + ": bad category id '" + fields[0] + "'");
    }
    rec.name = fields[1];
    if (!fields[2].empty()) rec.product_words = split(fields[2], ' ');
    if (!utf8_characters(rec.text()))
      throw data_error(source + ":" + std::to_string(lineno) + ": malformed UTF-8");
    out.push_back(std::move(rec));
  }
  return out;
}

void write_category_tsv(std::ostream& out, const std::vector<CategoryRecord>& categories) {
  for (const auto& c : categories) {
    out << c.id << '\t' << c.name << '\t';
    for (std::size_t i = 0; i < c.product_words.size(); ++i) out << (i ? " " : "") << c.product_words[i];
    out << '\n';
  }
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw data_error("write failed: " + path.string());
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open: " + path.string());
  return in;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset,
                  const std::string& manifest_json) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw data_error("cannot create directory " + dir.string() + ": " + ec.message());

  std::ostringstream cats;
  write_category_tsv(cats, dataset.categories);
  write_file(dir / "categories.tsv", cats.str());
  for (auto split : {Split::train, Split::validation, Split::test}) {
    std::ostringstream os;
    write_click_tsv(os, dataset.samples(split));
    write_file(dir / (std::string(split_name(split)) + ".tsv"), os.str());
  }

  nlohmann::ordered_json manifest = manifest_json.empty()
                                        ? nlohmann::ordered_json::object()
                                        : nlohmann::ordered_json::parse(manifest_json);
  std::vector<CategoryId> heads;
  for (const auto& c : dataset.categories)
    if (c.head_flag) heads.push_back(c.id);
  manifest["head_categories"] = heads;
  manifest["num_categories"] = dataset.num_categories();
  manifest["splits"] = {{"train", dataset.train.size()},
                        {"validation", dataset.validation.size()},
                        {"test", dataset.test.size()}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  if (!std::filesystem::exists(path)) return {};
  auto in = open_input(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  {
    auto in = open_input(dir / "categories.tsv");
    ds.categories = read_category_tsv(in, (dir / "categories.tsv").string());
  }
  for (auto split : {Split::train, Split::validation, Split::test}) {
    const auto path = dir / (std::string(split_name(split)) + ".tsv");
    if (!std::filesystem::exists(path)) continue;
    auto in = open_input(path);
    ds.samples(split) = read_click_tsv(in, path.string());
  }
  const auto manifest = read_manifest(dir);
  if (!manifest.empty()) {
    try {
      const auto j = nlohmann::json::parse(manifest);
      if (j.contains("head_categories")) {
        for (const auto& id : j.at("head_categories")) {
          const auto c = id.get<CategoryId>();
          if (c < 0 || static_cast<std::size_t>(c) >= ds.categories.size())
            throw data_error("manifest names unknown head category " + std::to_string(c));
          ds.categories[static_cast<std::size_t>(c)].head_flag = true;
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw data_error("manifest.json: " + std::string(e.what()));
    }
  }
  ds.vocabulary = build_vocabulary(ds.categories, ds.train);
  ds.validate();
  return ds;
}

}  // namespace smgcn
