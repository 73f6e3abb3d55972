#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "graf/graf.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repeats;
  std::optional<std::string> variant;
  std::optional<std::string> out;
};

graf::ExperimentConfig configure(const std::string& path, const Overrides& o) {
  graf::ExperimentConfig cfg = graf::load_config(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.repeats) cfg.eval_repeats = *o.repeats;
  if (o.variant) cfg.variant = *o.variant;
  if (o.out) cfg.output_dir = *o.out;
  cfg.validate();
  return cfg;
}

void print_summary(const graf::RunSummary& s) {
  std::printf("%s %s split=%s hidden=%zu lr=%s elimination=%s macro_f1=%.4f±%.4f weighted_f1=%.4f±%.4f accuracy=%.4f±%.4f\n",
              s.variant.c_str(), s.dataset.c_str(), s.split.c_str(), s.hidden, graf::format_double(s.lr).c_str(),
              s.eliminated ? "on" : "off", s.macro_f1.median, s.macro_f1.std, s.weighted_f1.median, s.weighted_f1.std,
              s.accuracy.median, s.accuracy.std);
  if (s.attention) {
    for (std::size_t a = 0; a < s.attention->associations(); ++a) {
      std::printf("  beta[%s] = %.4f\n", s.attention->names[a].c_str(), s.attention->beta[a]);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GRAF: attention-aware network fusion with a GCN classifier"};
  app.require_subcommand(1);

  Overrides o;
  std::string config;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { o.seed = v; }, "override the base seed");
    sub->add_option_function<std::size_t>("--repeats", [&](std::size_t v) { o.repeats = v; }, "override evaluation repeats");
    sub->add_option_function<std::string>("--variant", [&](const std::string& v) { o.variant = v; }, "override the variant");
    sub->add_option_function<std::string>("--out", [&](const std::string& v) { o.out = v; }, "override the output directory");
  };

  auto* run = app.add_subcommand("run", "select hyperparameters, retrain and evaluate one variant");
  add_common(run);
  auto* sweep = app.add_subcommand("sweep-splits", "run the pipeline at each train fraction over a shared test split");
  add_common(sweep);
  auto* cluster = app.add_subcommand("cluster", "k-means on the embeddings exported by a previous run");
  add_common(cluster);

  auto* fuse = app.add_subcommand("fuse", "build the fused graph from an attention file");
  std::string attention_path, fused_out, score_variant = "full";
  bool eliminate = false;
  std::uint64_t fuse_seed = 0;
  fuse->add_option("--attention", attention_path, "attention.json")->required()->check(CLI::ExistingFile);
  fuse->add_option("--out", fused_out, "fused edge list (TSV)")->required();
  fuse->add_option("--variant", score_variant, "full, node_only or assoc_only");
  fuse->add_flag("--eliminate", eliminate, "apply probabilistic edge elimination");
  fuse->add_option("--seed", fuse_seed, "elimination seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto cfg = configure(config, o);
      const auto summary = graf::run_pipeline(cfg);
      graf::emit_report(std::span(&summary, 1), cfg.output_dir);
      print_summary(summary);
    } else if (*sweep) {
      const auto cfg = configure(config, o);
      const auto summaries = graf::run_split_sweep(cfg);
      graf::emit_report(summaries, cfg.output_dir);
      for (const auto& s : summaries) print_summary(s);
    } else if (*cluster) {
      const auto cfg = configure(config, o);
      const auto rep = graf::run_clustering_eval(cfg);
      graf::emit_cluster_report(rep, cfg, cfg.output_dir);
      std::printf("%s k=%zu ARI=%.4f±%.4f NMI=%.4f±%.4f\n", cfg.variant.c_str(), rep.k, rep.ari_stat.median, rep.ari_stat.std,
                  rep.nmi_stat.median, rep.nmi_stat.std);
    } else if (*fuse) {
      const auto bundle = graf::read_attention_json(attention_path);
      const auto nets = graf::networks_of(bundle);
      auto g = graf::fuse(bundle, nets, graf::parse_score_variant(score_variant));
      if (eliminate) g = graf::eliminate_edges(g, fuse_seed);
      graf::write_fused_graph(fused_out, g);
      std::printf("%zu arcs over %zu nodes (%s%s)\n", g.arcs.size(), g.nodes(), graf::to_string(g.variant), eliminate ? ", eliminated" : "");
    }
  } catch (const graf::Error& e) {
    std::cerr << "graf: " << e.what() << '\n';
    return graf::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "graf: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
