// Command-line harness: dataset synthesis, consistency analysis, encoding
// precomputation, training sweeps and evaluation.

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "sagif/errors.hpp"
#include "sagif/io.hpp"
#include "sagif/sbm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sagif;

namespace {

FusionKind fusion_from_string(const std::string& s) {
  if (s == "topology") return FusionKind::topology;
  if (s == "feature") return FusionKind::feature;
  throw ValidationError("unknown fusion kind: " + s);
}

EncodingMethod encoding_from_string(const std::string& s) {
  if (s == "laplacian") return EncodingMethod::laplacian;
  if (s == "random_walk") return EncodingMethod::random_walk;
  throw ValidationError("unknown encoding method: " + s);
}

// TrainConfig <-> JSON, mirroring the config-file field names.
json config_to_json(const TrainConfig& c) {
  return json{{"method", method_to_string(c.method)},
              {"arch", arch_to_string(c.arch)},
              {"epochs", c.epochs},
              {"lr", c.lr},
              {"weight_decay", c.weight_decay},
              {"alpha", c.alpha},
              {"inform_alpha", c.inform_alpha},
              {"k", c.k},
              {"lambda", c.lambda},
              {"d_sim", c.d_sim},
              {"hidden", c.hidden},
              {"fusion", c.fusion == FusionKind::topology ? "topology" : "feature"},
              {"encoding", c.encoding == EncodingMethod::laplacian ? "laplacian" : "random_walk"},
              {"seed", c.seed},
              {"select", c.select == SelectMode::best_val ? "best_val" : "final"},
              {"patience", c.patience}};
}

void apply_config_json(TrainConfig& c, const json& j) {
  if (j.contains("method")) c.method = method_from_string(j.at("method").get<std::string>());
  if (j.contains("arch")) c.arch = arch_from_string(j.at("arch").get<std::string>());
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
  if (j.contains("lr")) c.lr = j.at("lr").get<double>();
  if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
  if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
  if (j.contains("inform_alpha")) c.inform_alpha = j.at("inform_alpha").get<double>();
  if (j.contains("k")) c.k = j.at("k").get<int>();
  if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
  if (j.contains("d_sim")) c.d_sim = j.at("d_sim").get<int>();
  if (j.contains("hidden")) c.hidden = j.at("hidden").get<int>();
  if (j.contains("fusion")) c.fusion = fusion_from_string(j.at("fusion").get<std::string>());
  if (j.contains("encoding"))
    c.encoding = encoding_from_string(j.at("encoding").get<std::string>());
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("select"))
    c.select = j.at("select").get<std::string>() == "final" ? SelectMode::final
                                                            : SelectMode::best_val;
  if (j.contains("patience")) c.patience = j.at("patience").get<int>();
}

Arch arch_for(TrainMethod method, const std::string& backbone) {
  if (backbone == "gcn") return method == TrainMethod::sagif ? Arch::sagif_gcn : Arch::gcn2;
  if (backbone == "sgc") return method == TrainMethod::sagif ? Arch::sagif_sgc : Arch::sgc1;
  throw ValidationError("unknown backbone: " + backbone + " (expected gcn or sgc)");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct RunRecord {
  std::string method;
  std::uint64_t seed = 0;
  MetricsReport metrics;
};

std::string run_result_json(const TrainConfig& cfg, const TrainResult& result,
                            const MetricsReport& metrics) {
  json losses = json::array();
  for (const auto& l : result.trace)
    losses.push_back({{"task", l.task}, {"similarity", l.similarity}, {"total", l.total}});
  json j = {{"config", config_to_json(cfg)},
            {"best_epoch", result.best_epoch},
            {"best_val_accuracy", result.best_val_accuracy},
            {"losses", losses},
            {"metrics", json::parse(metrics_report_to_json(metrics))}};
  return j.dump(2) + "\n";
}

std::string aggregate_csv(const std::vector<RunRecord>& runs,
                          const std::vector<std::string>& methods) {
  // Population standard deviation over seeds.
  auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= v.size();
    return std::pair<double, double>(mean, std::sqrt(var));
  };
  std::string out =
      "method,auc_mean,auc_std,ndcg_mean,ndcg_std,err_mean,err_std,accuracy_mean,accuracy_std\n";
  for (const auto& method : methods) {
    std::vector<double> auc, ndcg, err, acc;
    for (const auto& r : runs)
      if (r.method == method) {
        auc.push_back(r.metrics.auc);
        ndcg.push_back(r.metrics.ndcg_at_k);
        err.push_back(r.metrics.err_at_k);
        acc.push_back(r.metrics.accuracy);
      }
    if (auc.empty()) continue;
    auto [am, as] = stats(auc);
    auto [nm, ns] = stats(ndcg);
    auto [em, es] = stats(err);
    auto [cm, cs] = stats(acc);
    out += method + "," + format_double(am) + "," + format_double(as) + "," + format_double(nm) +
           "," + format_double(ns) + "," + format_double(em) + "," + format_double(es) + "," +
           format_double(cm) + "," + format_double(cs) + "\n";
  }
  return out;
}

int cmd_generate(const SbmSpec& spec, std::uint64_t seed, const std::string& out_dir) {
  GraphBundle g = generate_sbm(spec, seed);
  save_bundle(out_dir, g);
  std::cout << "wrote bundle with n=" << g.n << " m=" << g.m << " to " << out_dir << "\n";
  return 0;
}

int cmd_analyze(const std::string& bundle_dir, int k, const std::string& out_dir,
                const std::string& checkpoint, const std::string& encoding_path) {
  GraphBundle g = load_bundle(bundle_dir);
  ConsistencyProfile profile = similarity_consistency(g, k);
  fs::create_directories(out_dir);
  std::string csv = "consistency,count\n";
  for (int level = 0; level <= k; ++level)
    csv += format_double(static_cast<double>(level) / k) + "," +
           std::to_string(profile.histogram[level]) + "\n";
  atomic_write(fs::path(out_dir) / "consistency_histogram.csv", csv);
  std::cout << "wrote consistency histogram for k=" << k << "\n";

  if (!checkpoint.empty()) {
    ModelParams params = load_checkpoint(checkpoint);
    SparseMatrix norm_adj = normalize_adjacency(g.adjacency, true);
    DenseMatrix p0(g.n, 0);
    if (arch_is_sagif(params.desc.arch) && params.desc.d_sim > 0) {
      if (encoding_path.empty())
        throw ValidationError("analyze: sagif checkpoint needs --encoding");
      p0 = load_encoding(encoding_path).p0;
    }
    ForwardTrace trace = forward(params, norm_adj, g.features,
                                 arch_is_sagif(params.desc.arch) ? &p0 : nullptr);
    MetricsReport report = fairness_report(g, trace, k);
    atomic_write(fs::path(out_dir) / "group_ndcg.csv", groups_to_csv(report));
    std::cout << "wrote per-group NDCG breakdown\n";
  }
  return 0;
}

int cmd_encode(const std::string& bundle_dir, const std::string& out_file,
               const FusionConfig& fc, EncodingMethod method) {
  if (fs::exists(out_file)) {
    SimilarityEncoding cached = load_encoding(out_file);
    if (cached.method == method && cached.p0.cols == fc.d_sim) {
      std::cout << "cache hit: " << out_file << "\n";
      return 0;
    }
  }
  GraphBundle g = load_bundle(bundle_dir);
  OracleSimilarity oracle = build_oracle(g, fc);
  SparseMatrix a_k = build_knn_graph(oracle);
  SimilarityEncoding enc = method == EncodingMethod::laplacian
                               ? laplacian_encoding(a_k, fc.d_sim, fc.k)
                               : random_walk_encoding(a_k, fc.d_sim, fc.k);
  save_encoding(out_file, enc);
  std::cout << "wrote encoding (" << enc.p0.rows << " x " << enc.p0.cols << ") to " << out_file
            << "\n";
  return 0;
}

int cmd_train(const std::string& bundle_dir, const std::string& out_dir,
              const std::vector<std::string>& methods, const std::string& backbone,
              const std::vector<std::uint64_t>& seeds, const TrainConfig& base, int jobs,
              bool grid) {
  // Validate method names before touching the filesystem.
  std::vector<TrainMethod> parsed;
  for (const auto& m : methods) parsed.push_back(method_from_string(m));
  if (seeds.empty()) throw ValidationError("train: need at least one seed");
  GraphBundle g = load_bundle(bundle_dir);
  fs::create_directories(out_dir);

  TrainConfig tuned = base;
  if (grid) {
    // Grid search by best validation accuracy on the first seed.
    const double lrs[] = {0.001, 0.005, 0.01, 0.05, 0.1};
    const int dims[] = {8, 16, 32, 64, 128};
    double best_val = -1.0;
    for (double lr : lrs)
      for (int d_sim : dims) {
        if (d_sim + 1 >= g.n) continue;
        TrainConfig c = base;
        c.method = parsed.front();
        c.arch = arch_for(c.method, backbone);
        c.lr = lr;
        c.d_sim = d_sim;
        c.seed = seeds.front();
        TrainResult r = train(g, c);
        if (r.best_val_accuracy > best_val) {
          best_val = r.best_val_accuracy;
          tuned.lr = lr;
          tuned.d_sim = d_sim;
        }
      }
    std::cout << "grid selected lr=" << tuned.lr << " d_sim=" << tuned.d_sim << "\n";
  }

  struct Task {
    TrainMethod method;
    std::string method_name;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t mi = 0; mi < parsed.size(); ++mi)
    for (std::uint64_t s : seeds) tasks.push_back({parsed[mi], methods[mi], s});

  std::vector<RunRecord> runs(tasks.size());
  std::mutex io_mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      {
        std::scoped_lock lock(error_mutex);
        if (first_error) return;
      }
      try {
        const Task& task = tasks[t];
        TrainConfig cfg = tuned;
        cfg.method = task.method;
        cfg.arch = arch_for(task.method, backbone);
        cfg.seed = task.seed;
        TrainResult result = train(g, cfg);
        SparseMatrix norm_adj = normalize_adjacency(g.adjacency, true);
        DenseMatrix p0(g.n, 0);
        if (cfg.method == TrainMethod::sagif && cfg.d_sim > 0) {
          FusionConfig fc{cfg.fusion, cfg.k, cfg.lambda, cfg.d_sim};
          OracleSimilarity oracle = build_oracle(g, fc);
          SparseMatrix a_k = build_knn_graph(oracle);
          p0 = (cfg.encoding == EncodingMethod::laplacian
                    ? laplacian_encoding(a_k, cfg.d_sim, cfg.k)
                    : random_walk_encoding(a_k, cfg.d_sim, cfg.k))
                   .p0;
        }
        ForwardTrace trace =
            forward(result.params, norm_adj, g.features,
                    cfg.method == TrainMethod::sagif ? &p0 : nullptr);
        MetricsReport metrics = fairness_report(g, trace, cfg.k);
        runs[t] = {task.method_name, task.seed, metrics};

        std::string stem = task.method_name + "_seed" + std::to_string(task.seed);
        std::scoped_lock lock(io_mutex);
        atomic_write(fs::path(out_dir) / (stem + ".json"),
                     run_result_json(cfg, result, metrics));
        save_checkpoint(fs::path(out_dir) / (stem + ".ckpt"), result.params);
        std::cout << stem << ": auc=" << metrics.auc << " ndcg@" << metrics.k << "="
                  << metrics.ndcg_at_k << " (" << result.wall_clock_seconds << "s)\n";
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int thread_count = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  atomic_write(fs::path(out_dir) / "aggregate.csv", aggregate_csv(runs, methods));
  std::cout << "wrote aggregate.csv\n";
  return 0;
}

int cmd_evaluate(const std::string& bundle_dir, const std::string& checkpoint,
                 const std::string& encoding_path, int k, const std::string& out_dir) {
  GraphBundle g = load_bundle(bundle_dir);
  ModelParams params = load_checkpoint(checkpoint);
  SparseMatrix norm_adj = normalize_adjacency(g.adjacency, true);
  DenseMatrix p0(g.n, 0);
  if (arch_is_sagif(params.desc.arch) && params.desc.d_sim > 0) {
    if (encoding_path.empty()) throw ValidationError("evaluate: sagif checkpoint needs --encoding");
    p0 = load_encoding(encoding_path).p0;
  }
  ForwardTrace trace =
      forward(params, norm_adj, g.features, arch_is_sagif(params.desc.arch) ? &p0 : nullptr);
  MetricsReport report = fairness_report(g, trace, k);
  fs::create_directories(out_dir);
  atomic_write(fs::path(out_dir) / "report.json", metrics_report_to_json(report));
  atomic_write(fs::path(out_dir) / "group_ndcg.csv", groups_to_csv(report));
  std::cout << "auc=" << report.auc << " ndcg@" << k << "=" << report.ndcg_at_k << " err@" << k
            << "=" << report.err_at_k << " accuracy=" << report.accuracy << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Individual-fairness GNN toolkit: similarity oracles, similarity-encoded "
               "dual-encoder training and ranking-based fairness evaluation"};
  app.require_subcommand(1);

  // generate
  SbmSpec spec;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Generate a synthetic SBM graph bundle");
  gen->add_option("--blocks", spec.blocks);
  gen->add_option("--nodes-per-block", spec.nodes_per_block);
  gen->add_option("--p-intra", spec.p_intra);
  gen->add_option("--p-inter", spec.p_inter);
  gen->add_option("--dim", spec.feature_dim);
  gen->add_option("--noise", spec.noise);
  gen->add_option("--mu", spec.mu);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out)->required();

  // analyze
  std::string an_bundle, an_out, an_ckpt, an_enc;
  int an_k = 10;
  auto* an = app.add_subcommand("analyze", "Similarity-consistency analysis of a bundle");
  an->add_option("--bundle", an_bundle)->required();
  an->add_option("--k", an_k);
  an->add_option("--out", an_out)->required();
  an->add_option("--checkpoint", an_ckpt);
  an->add_option("--encoding", an_enc);

  // encode
  std::string en_bundle, en_out, en_fusion = "topology", en_method = "laplacian";
  FusionConfig fc;
  auto* en = app.add_subcommand("encode", "Precompute a similarity encoding file");
  en->add_option("--bundle", en_bundle)->required();
  en->add_option("--out", en_out)->required();
  en->add_option("--fusion", en_fusion);
  en->add_option("--k", fc.k);
  en->add_option("--lambda", fc.lambda);
  en->add_option("--d-sim", fc.d_sim);
  en->add_option("--method", en_method);

  // train
  std::string tr_bundle, tr_out, tr_methods = "vanilla", tr_backbone = "gcn", tr_seeds = "0",
              tr_config;
  int tr_jobs = 1;
  bool tr_grid = false;
  TrainConfig base;
  double tr_lr = -1, tr_alpha = -1, tr_wd = -1, tr_lambda = -1, tr_inform_alpha = -1;
  int tr_epochs = -1, tr_k = -1, tr_dsim = -1, tr_hidden = -1, tr_patience = -1;
  std::string tr_fusion, tr_encoding, tr_select;
  auto* tr = app.add_subcommand("train", "Train and evaluate methods over seeds");
  tr->add_option("--bundle", tr_bundle)->required();
  tr->add_option("--out", tr_out)->required();
  tr->add_option("--methods", tr_methods, "comma list: vanilla,inform,sagif");
  tr->add_option("--arch", tr_backbone, "backbone: gcn or sgc");
  tr->add_option("--seeds", tr_seeds, "comma list of seeds");
  tr->add_option("--config", tr_config, "JSON config file mirroring TrainConfig fields");
  tr->add_option("--jobs", tr_jobs);
  tr->add_flag("--grid", tr_grid, "search the lr x d_sim grid by validation accuracy");
  tr->add_option("--epochs", tr_epochs);
  tr->add_option("--lr", tr_lr);
  tr->add_option("--weight-decay", tr_wd);
  tr->add_option("--alpha", tr_alpha);
  tr->add_option("--inform-alpha", tr_inform_alpha);
  tr->add_option("--k", tr_k);
  tr->add_option("--lambda", tr_lambda);
  tr->add_option("--d-sim", tr_dsim);
  tr->add_option("--hidden", tr_hidden);
  tr->add_option("--fusion", tr_fusion);
  tr->add_option("--encoding", tr_encoding);
  tr->add_option("--select", tr_select, "best_val or final");
  tr->add_option("--patience", tr_patience);

  // evaluate
  std::string ev_bundle, ev_ckpt, ev_enc, ev_out;
  int ev_k = 10;
  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on a bundle");
  ev->add_option("--bundle", ev_bundle)->required();
  ev->add_option("--checkpoint", ev_ckpt)->required();
  ev->add_option("--encoding", ev_enc);
  ev->add_option("--k", ev_k);
  ev->add_option("--out", ev_out)->required();

  try {
    app.parse(argc, argv);

    if (*gen) return cmd_generate(spec, gen_seed, gen_out);
    if (*an) return cmd_analyze(an_bundle, an_k, an_out, an_ckpt, an_enc);
    if (*en) {
      fc.kind = fusion_from_string(en_fusion);
      return cmd_encode(en_bundle, en_out, fc, encoding_from_string(en_method));
    }
    if (*tr) {
      if (!tr_config.empty()) {
        std::ifstream in(tr_config);
        if (!in) throw IoError("cannot open config file " + tr_config);
        json j;
        in >> j;
        apply_config_json(base, j);
      }
      if (tr_epochs >= 0) base.epochs = tr_epochs;
      if (tr_lr >= 0) base.lr = tr_lr;
      if (tr_wd >= 0) base.weight_decay = tr_wd;
      if (tr_alpha >= 0) base.alpha = tr_alpha;
      if (tr_inform_alpha >= 0) base.inform_alpha = tr_inform_alpha;
      if (tr_k >= 0) base.k = tr_k;
      if (tr_lambda >= 0) base.lambda = tr_lambda;
      if (tr_dsim >= 0) base.d_sim = tr_dsim;
      if (tr_hidden >= 0) base.hidden = tr_hidden;
      if (tr_patience >= 0) base.patience = tr_patience;
      if (!tr_fusion.empty()) base.fusion = fusion_from_string(tr_fusion);
      if (!tr_encoding.empty()) base.encoding = encoding_from_string(tr_encoding);
      if (!tr_select.empty())
        base.select = tr_select == "final" ? SelectMode::final : SelectMode::best_val;
      std::vector<std::uint64_t> seeds;
      for (const auto& s : split_list(tr_seeds)) seeds.push_back(std::stoull(s));
      return cmd_train(tr_bundle, tr_out, split_list(tr_methods), tr_backbone, seeds, base,
                       tr_jobs, tr_grid);
    }
    if (*ev) return cmd_evaluate(ev_bundle, ev_ckpt, ev_enc, ev_k, ev_out);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
