// Command-line front end: data generation, training, evaluation, export,
// serving and parameter sweeps.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "smgcn/checkpoint.hpp"
#include "smgcn/config.hpp"
#include "smgcn/serving.hpp"
#include "smgcn/sweep.hpp"

namespace fs = std::filesystem;
using namespace smgcn;

namespace {

RunConfig resolve_config(const std::string& path, std::optional<std::uint64_t> seed,
                         const std::string& variant = {}) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
  if (seed) cfg.train.seed = *seed;
  if (!variant.empty()) cfg.train.variant = parse_variant(variant);
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw data_error("write failed: " + path.string());
}

std::string sibling_graphs(const std::string& checkpoint, const std::string& graphs) {
  return graphs.empty() ? (fs::path(checkpoint).parent_path() / "graphs.txt").string() : graphs;
}

int cmd_gen_data(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir) {
  const RunConfig cfg = resolve_config(config_path, seed);
  const Dataset ds = generate_synthetic(cfg.generator, cfg.train.seed);
  nlohmann::ordered_json manifest;
  manifest["seed"] = cfg.train.seed;
  manifest["config"] = nlohmann::ordered_json::parse(cfg.to_json());
  save_dataset(out_dir, ds, manifest.dump());
  std::cerr << "wrote " << ds.train.size() << " train / " << ds.validation.size() << " validation / "
            << ds.test.size() << " test samples over " << ds.num_categories() << " categories to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& variant,
              const std::string& data_dir, const std::string& out_dir) {
  const RunConfig cfg = resolve_config(config_path, seed, variant);
  const Dataset ds = load_dataset(data_dir);
  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  std::ofstream report(out / "report.jsonl", std::ios::binary);
  if (!report) throw data_error("cannot open for writing: " + (out / "report.jsonl").string());
  const TrainResult model = train(ds, cfg.train, [&](const EpochRecord& rec) {
    report << rec.to_json() << '\n';
    report.flush();
    std::cerr << "epoch " << rec.epoch << " phase " << rec.phase << " loss_mean " << rec.loss_mean
              << " val_micro_f1 " << rec.val_micro_f1 << " val_macro_f1 " << rec.val_macro_f1 << "\n";
  });

  const Checkpoint ckpt = make_checkpoint(model, cfg.train, cfg.to_json());
  save_checkpoint((out / "checkpoint.bin").string(), ckpt);
  save_graphs((out / "graphs.txt").string(), model.graphs);
  write_text(out / "config.json", cfg.to_json() + "\n");

  const MatrixXd scores = score_split(model, ds, Split::validation, cfg.train);
  EvalOptions opts;
  opts.threshold = cfg.train.label_threshold;
  const auto val = evaluate(scores, label_matrix(ds.validation, static_cast<Eigen::Index>(ds.num_categories())),
                            ds.head_flags(), opts);
  write_text(out / "validation_metrics.json", val.to_json() + "\n");
  std::cout << val.to_json() << "\n";
  return 0;
}

int cmd_export(const std::string& checkpoint, const std::string& graphs_path, const std::string& out_file,
               bool binary) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const auto graphs = load_graphs(sibling_graphs(checkpoint, graphs_path));
  save_embeddings(out_file, export_embeddings(ckpt, graphs), binary);
  return 0;
}

int cmd_serve(const std::string& checkpoint, const std::string& embeddings, const std::string& graphs_path,
              double threshold) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  CategoryEmbeddings emb = embeddings.empty()
                               ? export_embeddings(ckpt, load_graphs(sibling_graphs(checkpoint, graphs_path)))
                               : load_embeddings(embeddings);
  const Server server(std::move(ckpt), std::move(emb), threshold);
  std::ios::sync_with_stdio(false);
  server.run(std::cin, std::cout);
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& graphs_path, const std::string& data_dir,
             const std::string& slice, double threshold, const std::string& out_file, bool per_category) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const auto graphs = load_graphs(sibling_graphs(checkpoint, graphs_path));
  const Dataset ds = load_dataset(data_dir);
  if (ds.test.empty()) throw data_error(data_dir + ": test split missing or empty");
  if (static_cast<Eigen::Index>(ds.num_categories()) != ckpt.params.num_categories())
    throw data_error("dataset category count differs from checkpoint");
  const auto queries = tokenize_queries(ds.test, ckpt.vocabulary, static_cast<std::size_t>(ckpt.max_query_len));
  const MatrixXd scores = predict(ckpt.params, graphs, ckpt.category_tokens, queries, ckpt.gcn_options);
  EvalOptions opts;
  opts.threshold = threshold;
  opts.slice = parse_slice(slice);
  const auto report = evaluate(scores, label_matrix(ds.test, static_cast<Eigen::Index>(ds.num_categories())),
                               ds.head_flags(), opts);
  const std::string json = report.to_json(per_category);
  std::cout << json << "\n";
  if (!out_file.empty()) write_text(out_file, json + "\n");
  return 0;
}

int cmd_sweep(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& data_dir,
              const std::string& param, const std::vector<double>& values, const std::string& out_file) {
  const RunConfig cfg = resolve_config(config_path, seed);
  const SweepParam p = parse_sweep_param(param);
  const Dataset ds = load_dataset(data_dir);
  const auto rows = run_sweep(ds, cfg.train, p, values);
  std::ostringstream tsv;
  write_sweep_tsv(tsv, p, rows);
  std::cout << tsv.str();
  if (!out_file.empty()) write_text(out_file, tsv.str());
  return 0;
}

int cmd_grad_check() {
  const auto report = grad_check(GradCheckConfig{});
  std::cout << report.to_json() << "\n";
  return report.passed() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised multi-channel GCN query intent classifier"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, variant, checkpoint, graphs, embeddings, out_file, slice = "all";
  std::string param;
  std::vector<double> values;
  std::optional<std::uint64_t> seed;
  double threshold = 0.5;
  bool binary = false, text = false, per_category = false;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic long-tail click dataset");
  gen->add_option("--config", config_path, "Run configuration JSON");
  gen->add_option("--seed", seed, "Random seed (overrides the config)");
  gen->add_option("--out", out_dir, "Output directory")->required();

  auto* trn = app.add_subcommand("train", "Train a model");
  trn->add_option("--config", config_path, "Run configuration JSON");
  trn->add_option("--seed", seed, "Random seed (overrides the config)");
  trn->add_option("--variant", variant, "full|no_sim|no_coo|no_graph|encoder_only");
  trn->add_option("--data", data_dir, "Dataset directory")->required();
  trn->add_option("--out", out_dir, "Output directory")->required();

  auto* exp = app.add_subcommand("export-embeddings", "Export post-GCN category embeddings and bias");
  exp->add_option("--checkpoint", checkpoint)->required();
  exp->add_option("--graphs", graphs, "Graph file (default: graphs.txt next to the checkpoint)");
  exp->add_option("--out", out_file)->required();
  auto* bin_flag = exp->add_flag("--binary", binary, "Binary little-endian values");
  exp->add_flag("--text", text, "Text values (default)")->excludes(bin_flag);

  auto* srv = app.add_subcommand("serve", "Line protocol: one query per stdin line");
  srv->add_option("--checkpoint", checkpoint)->required();
  auto* emb_opt = srv->add_option("--embeddings", embeddings, "Exported embedding file");
  srv->add_option("--graphs", graphs, "Graph file, used when no embeddings are given")->excludes(emb_opt);
  srv->add_option("--threshold", threshold, "Score threshold");

  auto* evl = app.add_subcommand("eval", "Evaluate on the test split");
  evl->add_option("--checkpoint", checkpoint)->required();
  evl->add_option("--graphs", graphs, "Graph file (default: graphs.txt next to the checkpoint)");
  evl->add_option("--data", data_dir, "Dataset directory")->required();
  evl->add_option("--slice", slice, "all|head|tail");
  evl->add_option("--threshold", threshold, "Score threshold");
  evl->add_option("--out", out_file, "Also write the report here");
  evl->add_flag("--per-category", per_category, "Include per-category counts");

  auto* swp = app.add_subcommand("sweep", "Train once per value of one hyper-parameter");
  swp->add_option("--config", config_path, "Run configuration JSON");
  swp->add_option("--seed", seed, "Random seed (overrides the config)");
  swp->add_option("--data", data_dir, "Dataset directory")->required();
  swp->add_option("--param", param, "tau|alpha|l_q|l_c")->required();
  swp->add_option("--values", values, "Values to try")->required()->delimiter(',');
  swp->add_option("--out", out_file, "Also write the TSV here");

  auto* gck = app.add_subcommand("grad-check", "Finite-difference check of every parameter gradient");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen_data(config_path, seed, out_dir);
    if (*trn) return cmd_train(config_path, seed, variant, data_dir, out_dir);
    if (*exp) return cmd_export(checkpoint, graphs, out_file, binary);
    if (*srv) return cmd_serve(checkpoint, embeddings, graphs, threshold);
    if (*evl) return cmd_eval(checkpoint, graphs, data_dir, slice, threshold, out_file, per_category);
    if (*swp) return cmd_sweep(config_path, seed, data_dir, param, values, out_file);
    if (*gck) return cmd_grad_check();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
