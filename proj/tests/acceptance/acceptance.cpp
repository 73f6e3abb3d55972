#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "support/oracles.hpp"

using namespace graf;
using namespace graf::testing;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Verdict& v) {
  std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
  std::fflush(stdout);
  failures += !v.pass;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Verdict gradients() {
  const auto start = std::chrono::steady_clock::now();
  std::size_t cases = 0;
  double worst = 0.0;
  std::string worst_name;
  for (std::uint64_t seed = 1; cases < 200; ++seed) {
    for (const auto& c : gradient_battery(seed)) {
      ++cases;
      if (c.error > worst) {
        worst = c.error;
        worst_name = c.name;
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst < 1e-4 && secs < 120.0,
          fmt("%.0f cases, worst relative error %.2e, %.2fs", static_cast<double>(cases), worst, secs) + " (" + worst_name + ")"};
}

Verdict normalization() {
  Rng rng(808);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng() % 18, phi = 1 + rng() % 4;
    std::vector<AssociationNetwork> nets;
    for (std::size_t a = 0; a < phi; ++a) nets.push_back(random_network("N" + std::to_string(a), n, uniform(rng, 0.05, 0.5), rng));
    AttentionHyper hp;
    hp.heads = rng() % 2 ? 4 : 1;
    hp.hidden = 4 * hp.heads;
    hp.semantic_hidden = 6;
    AttentionModel m(4, nets, 3, hp, rng());
    Tape tape;
    const auto fw = m.forward(tape, random_tensor(n, 4, rng, -2.0, 2.0), trial % 2 == 0, rng(), false);
    const auto b = bundle_from_snapshot(nets, take_snapshot(fw));
    worst = std::max(worst, b.normalization_error());
    const auto g = score_full(b, nets);
    for (NodeId i = 0; i < n; ++i) worst = std::max(worst, std::abs(g.row_sum(i) - 1.0));
  }
  return {worst < 1e-6, fmt("100 model-produced bundles, worst deviation %.2e", worst)};
}

Verdict degeneracy() {
  const auto d = planted_dataset(15, 3, 6, 0.6, {{"PAP", 0.35, 0.05}}, 12);
  ExperimentConfig cfg;
  cfg.dataset = "planted";
  cfg.train_fraction = 0.4;
  cfg.attention_repeats = 2;
  cfg.eval_repeats = 3;
  cfg.hidden_sizes = {8};
  cfg.learning_rates = {0.01};
  cfg.heads = 2;
  cfg.semantic_hidden = 4;
  cfg.schedule = short_schedule(60, 20, 15);
  cfg.elimination = Elimination::Off;
  cfg.seed = 3;
  const Splits splits = splits_for(cfg, d);
  const auto s = run_pipeline(cfg, d, splits);
  FusedGraph g;
  g.arcs = d.associations[0].arcs;
  g.score = s.attention->alpha[0];
  for (double v : g.score) g.max_score = std::max(g.max_score, v);
  const auto sup = supervision_for(d, splits);
  const std::vector<std::size_t> rows(splits.test.begin(), splits.test.end());
  bool same = true;
  for (std::size_t r = 0; r < cfg.eval_repeats; ++r) {
    const auto run = train_gcn(d.features, g, sup, gcn_hyper(cfg, 8, 0.01), final_repeat_seed(cfg.seed, r));
    const auto logits = run.model.predict_logits(d.features);
    same = same && argmax_rows(logits, rows) == s.repeats[r].predictions &&
           run.model.export_embeddings(d.features) == s.repeats[r].embeddings &&
           run.best_validation_macro_f1 == s.repeats[r].validation_macro_f1;
  }
  return {same, same ? "predictions, embeddings and validation scores identical over 3 repeats" : "outputs differ"};
}

Verdict variant_oracles() {
  Rng rng(1010);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 29, phi = 1 + rng() % 4;
    std::vector<AssociationNetwork> nets;
    for (std::size_t a = 0; a < phi; ++a) nets.push_back(random_network("N" + std::to_string(a), n, uniform(rng, 0.05, 0.5), rng));
    const auto b = random_bundle(nets, rng);
    for (auto v : {ScoreVariant::Full, ScoreVariant::NodeOnly, ScoreVariant::AssocOnly}) {
      const auto g = fuse(b, nets, v);
      const auto oracle = brute_force_scores(b, nets, v);
      if (g.arcs.size() != oracle.size()) return {false, "arc sets differ"};
      for (std::size_t e = 0; e < g.arcs.size(); ++e) {
        worst = std::max(worst, std::abs(g.score[e] - oracle.at({g.arcs.row[e], g.arcs.col[e]})));
      }
    }
  }
  return {worst <= 1e-12, fmt("100 bundles x 3 variants, worst |diff| %.2e", worst)};
}

Verdict elimination() {
  Rng rng(1111);
  FusedGraph g;
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (NodeId i = 0; i < 250; ++i) {
    for (NodeId j = 0; j < 41; ++j) pairs.emplace_back(i, (i + j) % 250);
  }
  g.arcs = ArcList::from_pairs(250, pairs);
  for (std::size_t e = 0; e < g.arcs.size(); ++e) {
    g.score.push_back(uniform(rng, 0.01, 1.0));
    g.max_score = std::max(g.max_score, g.score.back());
  }
  double expected = 0.0, proper = 0.0;
  for (std::size_t e = 0; e < g.arcs.size(); ++e) {
    if (g.arcs.row[e] == g.arcs.col[e]) continue;
    expected += g.score[e] / g.max_score;
    proper += 1;
  }
  double worst = 0.0;
  bool loops = true, determ = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto k = eliminate_edges(g, seed);
    std::size_t kept_proper = 0;
    for (std::size_t e = 0; e < k.arcs.size(); ++e) kept_proper += k.arcs.row[e] != k.arcs.col[e];
    for (NodeId i = 0; i < 250; ++i) loops = loops && k.arcs.contains(i, i);
    worst = std::max(worst, std::abs(static_cast<double>(kept_proper) / proper - expected / proper));
    const auto again = eliminate_edges(g, seed);
    determ = determ && again.arcs.row == k.arcs.row && again.arcs.col == k.arcs.col;
  }
  return {worst <= 0.02 && loops && determ,
          fmt("%.0f arcs, worst kept-fraction gap %.4f", proper, worst) + (loops ? ", self-loops kept" : ", self-loop lost") +
              (determ ? ", deterministic" : ", nondeterministic")};
}

Verdict meta_paths() {
  Rng rng(1212);
  int agree = 0, composed = 0;
  const std::vector<std::string> types{"P", "A", "S", "T"};
  for (int trial = 0; trial < 100; ++trial) {
    TypedGraph g;
    for (const auto& t : types) g.add_node_type(t, 1 + rng() % 5);
    for (std::size_t a = 0; a < types.size(); ++a) {
      for (std::size_t b = a + 1; b < types.size(); ++b) {
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (NodeId x = 0; x < g.node_count(types[a]); ++x) {
          for (NodeId y = 0; y < g.node_count(types[b]); ++y) {
            if (uniform01(rng) < 0.3) edges.emplace_back(x, y);
          }
        }
        g.add_relation(types[a], types[b], edges);
      }
    }
    std::vector<std::string> path{"P"};
    const std::size_t inner = 1 + rng() % 3;
    for (std::size_t s = 0; s < inner; ++s) {
      std::string next = types[1 + rng() % 3];
      while (next == path.back()) next = types[1 + rng() % 3];
      path.push_back(next);
    }
    path.push_back("P");
    const auto net = compose_meta_path(g, path, "P");
    const auto oracle = walk_pairs(g, path);
    std::set<std::pair<NodeId, NodeId>> got;
    for (std::size_t e = 0; e < net.arcs.size(); ++e) got.insert({net.arcs.row[e], net.arcs.col[e]});
    ++composed;
    agree += got == oracle && got.size() == net.arcs.size();
  }
  return {agree == composed, fmt("%.0f/%.0f random typed graphs agree with walk enumeration", agree, composed)};
}

Verdict metrics() {
  bool ok = true;
  const std::vector<int> t{0, 0, 1, 1}, p{0, 1, 1, 1}, c{0, 1, 0, 1}, one{0, 0, 0, 0};
  const auto r = classification_metrics(t, p, 2);
  ok = ok && r.accuracy == 0.75 && std::abs(r.f1[0] - 2.0 / 3.0) < 1e-15 && std::abs(r.f1[1] - 0.8) < 1e-15 &&
       std::abs(r.macro_f1 - (2.0 / 3.0 + 0.8) / 2.0) < 1e-15;
  const auto perfect = classification_metrics(t, t, 2);
  ok = ok && perfect.macro_f1 == 1.0 && perfect.weighted_f1 == 1.0 && perfect.accuracy == 1.0;
  ok = ok && ari(t, t) == 1.0 && std::abs(ari(t, one)) < 1e-15 && std::abs(nmi(t, t) - 1.0) < 1e-15 && std::abs(nmi(t, c)) < 1e-15;

  Rng rng(1313);
  std::normal_distribution<double> noise(0.0, 1.0);
  int recovered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor x(60, 2);
    std::vector<int> truth;
    for (std::size_t i = 0; i < 60; ++i) {
      truth.push_back(i < 30 ? 0 : 1);
      x(i, 0) = noise(rng) + (i < 30 ? 0.0 : 8.0);
      x(i, 1) = noise(rng);
    }
    recovered += ari(truth, kmeans(x, 2, static_cast<std::uint64_t>(trial)).assignments) == 1.0;
  }
  return {ok && recovered >= 95, std::string(ok ? "worked examples exact" : "worked example mismatch") +
                                     fmt(", blobs recovered in %.0f/100 trials", recovered)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const auto d = planted_dataset(12, 3, 6, 0.6, {{"PAP", 0.4, 0.02}, {"PSP", 0.25, 0.25}}, 14);
  ExperimentConfig cfg;
  cfg.dataset = "planted";
  cfg.train_fraction = 0.4;
  cfg.attention_repeats = 2;
  cfg.eval_repeats = 2;
  cfg.hidden_sizes = {8, 16};
  cfg.learning_rates = {0.01};
  cfg.heads = 2;
  cfg.semantic_hidden = 4;
  cfg.schedule = short_schedule(40, 10, 10);
  cfg.seed = 99;
  const auto dir = scratch_dir("acceptance_determinism");
  for (const char* run : {"a", "b"}) {
    const auto s = run_pipeline(cfg, d, splits_for(cfg, d));
    emit_report(std::span<const RunSummary>(&s, 1), dir / run);
  }
  const auto a = slurp(dir / "a" / "results.tsv"), b = slurp(dir / "b" / "results.tsv");
  return {!a.empty() && a == b, a == b ? "results.tsv identical (" + std::to_string(a.size()) + " bytes)" : "results.tsv differs"};
}

}  // namespace

int main() {
  const auto guarded = [](int id, const char* name, Verdict (*fn)()) {
    try {
      report(id, name, fn());
    } catch (const std::exception& e) {
      report(id, name, {false, std::string("threw: ") + e.what()});
    }
  };
  guarded(7, "gradient-correctness", gradients);
  guarded(8, "normalization-invariants", normalization);
  guarded(9, "degeneracy-equivalence", degeneracy);
  guarded(10, "variant-oracles", variant_oracles);
  guarded(11, "elimination-statistics", elimination);
  guarded(12, "meta-path-oracle", meta_paths);
  guarded(13, "metric-oracles", metrics);
  guarded(14, "end-to-end-determinism", determinism);
  return failures == 0 ? 0 : 1;
}
