// Command-line front end: generate | train | compare | gradcheck.
//
// Exit codes: 0 success, 1 check failure, 2 usage or input error, 3 divergence.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lts/lts.hpp"

namespace fs = std::filesystem;
using lts::detail::json;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;
constexpr int kDiverged = 3;

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json artifact_versions() {
  return {{"lts", lts::kVersion},
          {"graph_format", lts::kGraphFormatVersion},
          {"checkpoint_format", lts::kCheckpointFormatVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__}};
}

void write_run_meta(const fs::path& dir, const std::string& command, const json& details) {
  json meta = details;
  meta["command"] = command;
  meta["versions"] = artifact_versions();
  lts::detail::write_file((dir / "run_meta.json").string(), meta.dump(2) + "\n");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw lts::ParseError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::string noise_sidecar(const std::string& graph_path) {
  fs::path p(graph_path);
  return (p.parent_path() / (p.stem().string() + ".noise.json")).string();
}

// Training flags shared by `train` and `compare`. Values are kept as strings /
// optionals so only explicitly given flags override the config file.
struct TrainFlags {
  std::string config_path;
  std::optional<std::string> scheduler;
  std::optional<double> lambda0;
  std::optional<std::int64_t> T;
  std::optional<std::uint64_t> seed;
  std::optional<double> learning_rate;
  std::optional<std::string> optimizer;
  std::optional<std::int64_t> max_epochs;
  std::optional<std::int64_t> patience;
  std::optional<std::int64_t> hidden_dim;
  std::optional<std::int64_t> num_layers;
  bool timing = false;

  void attach(CLI::App* app, bool with_seed) {
    app->add_option("--config", config_path, "JSON config file of flat keys (flags override)")->check(CLI::ExistingFile);
    app->add_option("--scheduler", scheduler, "Pacing function")
        ->check(CLI::IsMember({"linear", "root", "geom", "none"}));
    app->add_option("--lambda0", lambda0, "Initial proportion of easiest training nodes");
    app->add_option("--T", T, "Epoch at which the schedule reaches the full train split");
    if (with_seed) app->add_option("--seed", seed, "Model initialisation seed");
    app->add_option("--lr,--learning-rate", learning_rate, "Learning rate");
    app->add_option("--optimizer", optimizer, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}));
    app->add_option("--max-epochs", max_epochs, "Last epoch index");
    app->add_option("--patience", patience, "Full-split epochs without validation improvement before stopping");
    app->add_option("--hidden", hidden_dim, "Hidden width");
    app->add_option("--layers", num_layers, "Number of relational layers");
    app->add_flag("--timing", timing, "Record wall time per epoch in the ms column");
  }

  lts::TrainConfig resolve() const {
    json j = json::object();
    if (!config_path.empty()) {
      j = lts::detail::parse_file(config_path);
      if (!j.is_object()) throw lts::ConfigError(config_path + ": expected a JSON object");
    }
    if (scheduler) j["scheduler"] = *scheduler;
    if (lambda0) j["lambda0"] = *lambda0;
    if (T) j["T"] = *T;
    if (seed) j["seed"] = *seed;
    if (learning_rate) j["learning_rate"] = *learning_rate;
    if (optimizer) j["optimizer"] = *optimizer;
    if (max_epochs) j["max_epochs"] = *max_epochs;
    if (patience) j["patience"] = *patience;
    if (hidden_dim) j["hidden_dim"] = *hidden_dim;
    if (num_layers) j["num_layers"] = *num_layers;
    if (timing) j["record_time"] = true;
    return lts::train_config_from_json(j);
  }
};

// --------------------------------------------------------------------------

struct GenerateArgs {
  std::string spec_path;
  std::string out;
  std::size_t target_nodes = 400;
  int classes = 2;
  std::size_t feature_dim = 16;
  double sigma = 5.0;
  double p_intra = 0.05;
  double p_inter = 0.005;
  double train_frac = 0.5;
  double val_frac = 0.25;
  double test_frac = 0.25;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

void print_statistics(const lts::HeteroGraph& g) {
  std::printf("%-14s | %8s | %8s | %10s | %8s\n", "Nodes type", "Count", "Train", "Validation", "Test");
  std::printf("%s\n", std::string(60, '-').c_str());
  for (std::size_t t = 0; t < g.node_types.size(); ++t) {
    const auto& nt = g.node_types[t];
    if (t == g.target_type)
      std::printf("%-14s | %8zu | %8zu | %10zu | %8zu\n", nt.name.c_str(), nt.count, g.splits.train.size(),
                  g.splits.val.size(), g.splits.test.size());
    else
      std::printf("%-14s | %8zu | %8s | %10s | %8s\n", nt.name.c_str(), nt.count, "--", "--", "--");
  }
  std::printf("\n%-14s | %-21s | %8s\n", "Relation", "Source -> target", "Edges");
  std::printf("%s\n", std::string(50, '-').c_str());
  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    const auto& rel = g.relations[r];
    const auto path = g.node_types[rel.src].name + " -> " + g.node_types[rel.dst].name;
    std::printf("%-14s | %-21s | %8zu\n", rel.name.c_str(), path.c_str(), g.edges[r].size());
  }
}

int cmd_generate(const GenerateArgs& a) {
  lts::SyntheticSpec spec;
  if (!a.spec_path.empty()) {
    spec = lts::synthetic_spec_from_json(lts::detail::parse_file(a.spec_path));
  } else {
    spec = lts::SyntheticSpec::paper_author(a.target_nodes, a.classes, a.feature_dim);
    spec.sigma = a.sigma;
    spec.p_intra = a.p_intra;
    spec.p_inter = a.p_inter;
    spec.train_frac = a.train_frac;
    spec.val_frac = a.val_frac;
    spec.test_frac = a.test_frac;
  }
  auto graph = lts::generate_synthetic(spec, a.seed);
  print_statistics(graph);

  if (a.noise > 0.0) {
    auto [noisy, record] = lts::inject_label_noise(std::move(graph), a.noise, a.seed + 1);
    graph = std::move(noisy);
    const auto sidecar = noise_sidecar(a.out);
    lts::save_noise_record(record, sidecar);
    std::printf("\nlabel noise: flipped %zu of %zu training labels (rho = %g), record written to %s\n",
                record.flipped.size(), graph.splits.train.size(), a.noise, sidecar.c_str());
  }
  lts::save_graph(graph, a.out);
  std::printf("\nwrote %s (fingerprint %s)\n", a.out.c_str(), hex64(lts::fingerprint(graph)).c_str());
  return kOk;
}

// --------------------------------------------------------------------------

struct TrainArgs {
  std::string graph;
  std::string out = "run";
  std::string noise_record;
  std::string save_params;
  TrainFlags flags;
};

std::optional<lts::NoiseRecord> maybe_noise(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return lts::load_noise_record(path);
}

int cmd_train(const TrainArgs& a) {
  const auto cfg = a.flags.resolve();
  const auto graph = lts::load_graph(a.graph);
  const auto noise = maybe_noise(a.noise_record);
  const fs::path dir(a.out);
  ensure_dir(dir);
  write_run_meta(dir, "train",
                 {{"graph", a.graph},
                  {"graph_fingerprint", hex64(lts::fingerprint(graph))},
                  {"noise_record", a.noise_record},
                  {"config", lts::train_config_to_json(cfg)}});

  const auto csv_path = (dir / "metrics.csv").string();
  const auto summary_path = (dir / "summary.json").string();
  try {
    const auto report = lts::run_training(graph, cfg, noise ? &*noise : nullptr);
    lts::detail::write_file(csv_path, lts::report_csv(report));
    const auto summary = lts::report_summary_json(report);
    lts::detail::write_file(summary_path, summary + "\n");
    std::cout << summary << "\n";
    return kOk;
  } catch (const lts::DivergenceError& e) {
    lts::detail::write_file(csv_path, lts::report_csv(e.partial_report()));
    lts::detail::write_file(summary_path, lts::report_summary_json(e.partial_report()) + "\n");
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  }
}

// --------------------------------------------------------------------------

struct CompareArgs {
  std::string graph;
  std::string out;
  std::string noise_record;
  std::string seeds = "1..10";
  unsigned threads = 0;
  TrainFlags flags;
};

// "1,2,5" or "1..10" (inclusive).
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  try {
    if (const auto dots = text.find(".."); dots != std::string::npos) {
      const auto lo = std::stoull(text.substr(0, dots));
      const auto hi = std::stoull(text.substr(dots + 2));
      if (hi < lo) throw lts::ConfigError("seeds: empty range '" + text + "'");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      std::stringstream ss(text);
      for (std::string tok; std::getline(ss, tok, ',');)
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
    }
  } catch (const std::logic_error&) {
    throw lts::ConfigError("seeds: cannot parse '" + text + "'");
  }
  if (seeds.empty()) throw lts::ConfigError("seeds: no seeds given");
  return seeds;
}

int cmd_compare(const CompareArgs& a) {
  const auto cfg = a.flags.resolve();
  const auto graph = lts::load_graph(a.graph);
  const auto noise = maybe_noise(a.noise_record);
  const auto seeds = parse_seeds(a.seeds);
  if (seeds.size() < 2) std::cerr << "warning: fewer than 2 seeds, std reported as 0\n";

  const auto report = lts::run_compare(graph, cfg, seeds, noise ? &*noise : nullptr, a.threads);
  const auto table = lts::format_compare(report);
  std::cout << table;
  if (!a.out.empty()) {
    const fs::path dir(a.out);
    ensure_dir(dir);
    lts::detail::write_file((dir / "compare.txt").string(), table);
    lts::detail::write_file((dir / "compare.json").string(), lts::compare_json(report) + "\n");
    write_run_meta(dir, "compare",
                   {{"graph", a.graph},
                    {"graph_fingerprint", hex64(lts::fingerprint(graph))},
                    {"seeds", seeds},
                    {"config", lts::train_config_to_json(cfg)}});
  }
  return kOk;
}

// --------------------------------------------------------------------------

struct GradcheckArgs {
  std::string graph;
  double eps = 1e-5;
  std::uint64_t seed = 0;
  std::size_t hidden = 4;
  std::size_t layers = 2;
  double proportion = 1.0;
  bool corrupt = false;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  const auto graph = a.graph.empty() ? lts::random_small_graph(a.seed) : lts::load_graph(a.graph);
  std::size_t total = 0;
  for (const auto& t : graph.node_types) total += t.count;
  if (total > 50) throw lts::ConfigError("gradcheck: graph has " + std::to_string(total) + " nodes, limit is 50");
  if (graph.splits.train.empty()) throw lts::ConfigError("gradcheck: graph has no training nodes");

  const auto params = lts::init_params(graph, a.hidden, a.layers, a.seed);
  const auto trace = lts::forward(graph, params);
  const auto losses = lts::per_node_losses(trace.logits, graph.labels, graph.splits.train);
  const auto selection = lts::select_nodes(losses, a.proportion, graph.splits.train);

  lts::GradientFn gradient = lts::analytic_gradient;
  if (a.corrupt) {
    // Negative control: a deliberately wrong backward must be caught.
    gradient = [](const lts::HeteroGraph& g, const lts::RelationalModelParams& p, std::span<const lts::NodeId> sel) {
      auto grad = lts::analytic_gradient(g, p, sel);
      grad.output_head.array() += 0.1;
      return grad;
    };
  }
  const auto res = lts::check_gradients(graph, params, selection.selected, a.eps, gradient);
  std::printf("eps = %g\n", a.eps);
  std::printf("nodes = %zu, selected = %zu, parameters checked = %zu\n", total, selection.selected.size(),
              res.entries_checked);
  std::printf("max relative error = %.3e (%s[%ld]: analytic %.10e, numeric %.10e)\n", res.max_relative_error,
              res.worst_parameter.c_str(), static_cast<long>(res.worst_entry), res.worst_analytic, res.worst_numeric);
  const bool pass = res.max_relative_error < 1e-4;
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-aware training schedule for relational graph convolution"};
  app.set_version_flag("--version", std::string(lts::kVersion));
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a synthetic heterogeneous graph");
  g->add_option("--config", gen.spec_path, "Synthetic-graph spec file (replaces the default schema flags)")
      ->check(CLI::ExistingFile);
  g->add_option("--target-nodes", gen.target_nodes, "Number of target (paper) nodes");
  g->add_option("--classes", gen.classes, "Number of classes");
  g->add_option("--feature-dim", gen.feature_dim, "Feature width of target nodes");
  g->add_option("--sigma", gen.sigma, "Distance between class means");
  g->add_option("--p-intra", gen.p_intra, "Edge probability within a class");
  g->add_option("--p-inter", gen.p_inter, "Edge probability across classes");
  g->add_option("--train-frac", gen.train_frac, "Fraction of target nodes in the train split");
  g->add_option("--val-frac", gen.val_frac, "Fraction of target nodes in the validation split");
  g->add_option("--test-frac", gen.test_frac, "Fraction of target nodes in the test split");
  g->add_option("--noise", gen.noise, "Fraction of training labels to flip")->check(CLI::Range(0.0, 1.0));
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("-o,--out", gen.out, "Output graph file")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one model and write metrics.csv, summary.json, run_meta.json");
  t->add_option("graph", tr.graph, "Graph file")->required();
  t->add_option("-o,--out", tr.out, "Output directory");
  t->add_option("--noise-record", tr.noise_record, "Noise record; adds exclusion diagnostics to the CSV");
  tr.flags.attach(t, true);

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Baseline vs loss-aware schedule across seeds");
  c->add_option("graph", cmp.graph, "Graph file")->required();
  c->add_option("-o,--out", cmp.out, "Output directory for compare.txt / compare.json");
  c->add_option("--noise-record", cmp.noise_record, "Noise record file");
  c->add_option("--seeds", cmp.seeds, "Seed list: 1,2,3 or 1..10");
  c->add_option("--threads", cmp.threads, "Concurrent runs (0 = hardware concurrency)");
  cmp.flags.attach(c, false);

  GradcheckArgs gc;
  auto* k = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
  k->add_option("graph", gc.graph, "Graph file with at most 50 nodes (default: random small graph)");
  k->add_option("--eps", gc.eps, "Central-difference step");
  k->add_option("--seed", gc.seed, "Seed for the default graph and the parameters");
  k->add_option("--hidden", gc.hidden, "Hidden width");
  k->add_option("--layers", gc.layers, "Number of layers");
  k->add_option("--lambda", gc.proportion, "Proportion of easiest training nodes in the loss")
      ->check(CLI::Range(1e-12, 1.0));
  k->add_flag("--corrupt-backward", gc.corrupt)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*t) return cmd_train(tr);
    if (*c) return cmd_compare(cmp);
    if (*k) return cmd_gradcheck(gc);
  } catch (const lts::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const lts::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
