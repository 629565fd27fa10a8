#include "smgcn/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace smgcn {

namespace {

using Json = nlohmann::ordered_json;

struct Field {
  std::string key;
  std::function<void(RunConfig&, const Json&)> set;
  std::function<Json(const RunConfig&)> get;
};

template <typename T, typename Member>
Field plain(std::string key, Member member) {
  return {key, [member](RunConfig& c, const Json& v) { std::invoke(member, c) = v.get<T>(); },
          [member](const RunConfig& c) { return Json(std::invoke(member, c)); }};
}

#define GEN(name) plain<decltype(GeneratorConfig::name)>(#name, [](auto& c) -> auto& { return c.generator.name; })
#define TRN(name) plain<decltype(TrainConfig::name)>(#name, [](auto& c) -> auto& { return c.train.name; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f{
        GEN(num_categories), GEN(head_fraction), GEN(vocab_size), GEN(num_samples), GEN(zipf_exponent),
        GEN(click_noise), GEN(num_queries), GEN(validation_size), GEN(test_size), GEN(tail_weight),
        GEN(multi_label_prob), GEN(cdf_cutoff),
        TRN(dim), TRN(num_layers), TRN(dropout), TRN(leaky_slope), TRN(learning_rate), TRN(batch_size),
        TRN(max_epochs), TRN(phase1_epochs), TRN(max_query_len), TRN(max_category_len), TRN(label_threshold),
        TRN(alpha), TRN(warmup_fraction), TRN(self_loops), TRN(final_activation), TRN(seed)};
    f.push_back({"tau_start", [](RunConfig& c, const Json& v) { c.train.semi.tau_start = v.get<double>(); },
                 [](const RunConfig& c) { return Json(c.train.semi.tau_start); }});
    f.push_back({"tau_final", [](RunConfig& c, const Json& v) { c.train.semi.tau_final = v.get<double>(); },
                 [](const RunConfig& c) { return Json(c.train.semi.tau_final); }});
    f.push_back({"warmup_steps", [](RunConfig& c, const Json& v) { c.train.semi.warmup_steps = v.get<std::int64_t>(); },
                 [](const RunConfig& c) { return Json(c.train.semi.warmup_steps); }});
    f.push_back({"channel_merge",
                 [](RunConfig& c, const Json& v) { c.train.channel_merge = parse_channel_merge(v.get<std::string>()); },
                 [](const RunConfig& c) { return Json(to_string(c.train.channel_merge)); }});
    f.push_back({"loss_reduction",
                 [](RunConfig& c, const Json& v) {
                   const auto s = v.get<std::string>();
                   if (s != "mean" && s != "sum") throw config_error("loss_reduction must be mean|sum");
                   c.train.loss_reduction = s == "mean" ? LossReduction::mean : LossReduction::sum;
                 },
                 [](const RunConfig& c) { return Json(c.train.loss_reduction == LossReduction::mean ? "mean" : "sum"); }});
    f.push_back({"semi_source",
                 [](RunConfig& c, const Json& v) {
                   const auto s = v.get<std::string>();
                   if (s != "encoder" && s != "gcn") throw config_error("semi_source must be encoder|gcn");
                   c.train.semi_source = s == "encoder" ? SemiSource::encoder : SemiSource::gcn;
                 },
                 [](const RunConfig& c) { return Json(c.train.semi_source == SemiSource::encoder ? "encoder" : "gcn"); }});
    f.push_back({"similarity_edge_weight",
                 [](RunConfig& c, const Json& v) {
                   const auto s = v.get<std::string>();
                   if (s != "cosine" && s != "binary") throw config_error("similarity_edge_weight must be cosine|binary");
                   c.train.similarity_edge_weight = s == "cosine" ? EdgeWeight::cosine : EdgeWeight::binary;
                 },
                 [](const RunConfig& c) {
                   return Json(c.train.similarity_edge_weight == EdgeWeight::cosine ? "cosine" : "binary");
                 }});
    f.push_back({"variant", [](RunConfig& c, const Json& v) { c.train.variant = parse_variant(v.get<std::string>()); },
                 [](const RunConfig& c) { return Json(to_string(c.train.variant)); }});
    return f;
  }();
  return table;
}

#undef GEN
#undef TRN

}  // namespace

std::vector<std::string> run_config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

std::string RunConfig::to_json() const {
  Json j = Json::object();
  for (const auto& f : fields()) j[f.key] = f.get(*this);
  return j.dump(2);
}

void RunConfig::validate() const {
  generator.validate();
  train.validate();
}

RunConfig parse_run_config(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw config_error("config must be a JSON object");
  RunConfig config;
  for (const auto& [key, value] : j.items()) {
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) throw config_error("unknown config key '" + key + "'");
    try {
      it->set(config, value);
    } catch (const nlohmann::json::exception& e) {
      throw config_error("config key '" + key + "': " + e.what());
    }
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_run_config(os.str());
}

}  // namespace smgcn
