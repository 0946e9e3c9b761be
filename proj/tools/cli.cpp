#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsvd/analysis.hpp"
#include "lsvd/edit.hpp"
#include "lsvd/error.hpp"
#include "lsvd/latent.hpp"
#include "lsvd/parallel.hpp"
#include "lsvd/phi.hpp"
#include "lsvd/rng.hpp"
#include "lsvd/trainer.hpp"

namespace lsvd::cli {
namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 0;
  bool verbose = false;
  std::string format = "csv";
};

struct GenArgs {
  std::string out;
  std::vector<std::uint32_t> shape{4, 64, 64};
  double stddev = 1.0;
  double mean = 0.0;
  std::optional<std::int64_t> time_step;
  std::int64_t total_steps = 1000;
  std::optional<std::string> tag;
};

struct TrainArgs {
  std::vector<std::string> x;
  std::vector<std::string> z;
  std::string out_model;
  std::optional<std::size_t> n;
  double sigma = 0.05;
  std::size_t k = 32;
  std::size_t batch = 256;
  double lr = 1e-3;
  std::size_t epochs = 5;
  double lambda1 = 3.0;
  double lambda2 = 10.0;
  double lambda3 = 10.0;
  double lambda4 = 10.0;
  std::optional<std::string> history;
};

struct EditArgs {
  std::string x;
  std::string z;
  std::optional<std::string> model;
  double rho = 1.0;
  std::size_t k = 32;
  std::string out;
  bool identity_s = false;
};

struct InterpolateArgs {
  std::string x;
  std::string z;
  std::optional<std::string> model;
  double rho_start = 0.0;
  double rho_end = 1.0;
  std::size_t steps = 5;
  std::size_t k = 32;
  std::string out_dir;
  bool identity_s = false;
};

struct AnalyzeArgs {
  std::vector<std::string> inputs;
  std::optional<std::string> out;
  std::size_t p = 4;
  std::string mode = "consecutive";
  std::string side = "left";
  std::string match = "greedy";
  std::vector<std::string> x;
  std::vector<std::string> z;
  std::optional<std::size_t> synthetic_pairs;
  std::vector<std::uint32_t> shape{4, 64, 64};
  std::optional<std::size_t> k;
  std::string norm = "frobenius";
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

LatentShape parse_shape(const std::vector<std::uint32_t>& s) {
  if (s.size() != 3) throw ValidationError("--shape takes three values: C H W");
  return {s[0], s[1], s[2]};
}

void echo(std::ostream& err, const ojson& config) { err << config.dump() << '\n'; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// Emits a report to --out when given, otherwise to stdout.
void emit(const std::optional<std::string>& path, std::ostream& out, const std::string& body) {
  if (path) {
    write_text(*path, body);
  } else {
    out << body;
  }
}

template <typename Report>
std::string render(const Globals& g, const Report& report) {
  if (g.format == "json") return to_json(report) + "\n";
  std::ostringstream s;
  write_csv(report, s);
  return s.str();
}

std::vector<LatentTensor> load_all(const std::vector<std::string>& paths) {
  std::vector<LatentTensor> out;
  for (const auto& p : paths) out.push_back(load_latent(p));
  return out;
}

int cmd_gen(const Globals& g, const GenArgs& a, std::ostream& err) {
  if (!(a.stddev > 0.0)) throw ValidationError("--std must be positive");
  GenSpec spec{parse_shape(a.shape), g.seed, a.mean, a.stddev};
  echo(err, {{"command", "gen"},
             {"out", a.out},
             {"shape", a.shape},
             {"seed", g.seed},
             {"mean", a.mean},
             {"std", a.stddev},
             {"time_step", a.time_step ? ojson(*a.time_step) : ojson(nullptr)},
             {"total_steps", a.total_steps},
             {"tag", a.tag ? ojson(*a.tag) : ojson(nullptr)}});
  LatentTensor t = synth_latent(spec);
  LatentMeta meta = t.meta();
  meta.time_step = a.time_step;
  meta.total_steps = a.total_steps;
  meta.tag = a.tag;
  save_latent(t.with_meta(meta), a.out);
  return kExitOk;
}

TrainConfig to_train_config(const Globals& g, const TrainArgs& a) {
  if (a.x.size() != a.z.size()) {
    throw ValidationError("--x and --z must list the same number of files");
  }
  TrainConfig cfg;
  for (std::size_t i = 0; i < a.x.size(); ++i) cfg.pairs.push_back({a.x[i], a.z[i]});
  cfg.samples_per_pair = a.n;
  cfg.sigma = a.sigma;
  cfg.avi = AviConfig{a.k, 1.0, {a.lambda1, a.lambda2, a.lambda3, a.lambda4}};
  cfg.batch = a.batch;
  cfg.lr = a.lr;
  cfg.epochs = a.epochs;
  cfg.seed = g.seed;
  cfg.validate();
  return cfg;
}

int cmd_train(const Globals& g, const TrainArgs& a, std::ostream& err) {
  const TrainConfig cfg = to_train_config(g, a);
  ojson echo_cfg = ojson::parse(config_to_json(cfg));
  echo_cfg["out_model"] = a.out_model;
  echo_cfg["history"] = a.history ? ojson(*a.history) : ojson(nullptr);
  echo(err, {{"command", "train"}, {"config", echo_cfg}});

  StepObserver observer;
  if (g.verbose) {
    observer = [&err](const StepRecord& r) {
      err << "step " << r.step << " epoch " << r.epoch << " L_total " << fmt(r.total) << '\n';
    };
  }
  const TrainResult result = train(cfg, observer);
  save_model(result.model, a.out_model);
  write_text(a.out_model + ".json", config_to_json(cfg) + "\n");
  if (a.history) {
    std::ostringstream csv;
    write_history_csv(result.history, csv);
    write_text(*a.history, csv.str());
  }
  for (const EpochRecord& e : result.history.epochs) {
    err << "epoch " << e.epoch << " mean L_total " << fmt(e.total) << '\n';
  }
  return kExitOk;
}

struct EditInputs {
  LatentTensor x;
  LatentTensor z;
  std::optional<PhiModel> model;
};

EditInputs load_edit_inputs(const std::string& x, const std::string& z,
                            const std::optional<std::string>& model, bool identity_s) {
  if (!model && !identity_s) throw ValidationError("--model is required unless --identity-s is set");
  EditInputs in{load_latent(x), load_latent(z), std::nullopt};
  if (model && !identity_s) in.model = load_model(*model);
  return in;
}

void check_rho(double rho, std::ostream& err) {
  if (!(rho >= 0.0 && rho <= kMaxRho)) throw ValidationError("rho out of range [0, 1.5]: " + fmt(rho));
  if (rho > 1.0) err << "warning: rho " << fmt(rho) << " > 1 extrapolates past the target basis\n";
}

int cmd_edit(const Globals&, const EditArgs& a, std::ostream& err) {
  check_rho(a.rho, err);
  echo(err, {{"command", "edit"},
             {"x", a.x},
             {"z", a.z},
             {"model", a.model ? ojson(*a.model) : ojson(nullptr)},
             {"rho", a.rho},
             {"k", a.k},
             {"out", a.out},
             {"identity_s", a.identity_s}});
  EditInputs in = load_edit_inputs(a.x, a.z, a.model, a.identity_s);
  const AviConfig cfg{a.k, a.rho, {}};
  const LatentTensor y =
      edit_latent(in.x, in.z, in.model ? &*in.model : nullptr, cfg,
                  a.identity_s ? SingularValueSource::IdentityFromX : SingularValueSource::Model);
  save_latent(y, a.out);
  return kExitOk;
}

std::string interpolation_name(std::size_t i, double rho) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "interp_%03zu_rho%.4f.lat", i, rho);
  return buf;
}

int cmd_interpolate(const Globals&, const InterpolateArgs& a, std::ostream& err) {
  if (a.steps < 2) throw ValidationError("--steps must be at least 2");
  check_rho(a.rho_start, err);
  check_rho(a.rho_end, err);
  echo(err, {{"command", "interpolate"},
             {"x", a.x},
             {"z", a.z},
             {"model", a.model ? ojson(*a.model) : ojson(nullptr)},
             {"rho_start", a.rho_start},
             {"rho_end", a.rho_end},
             {"steps", a.steps},
             {"k", a.k},
             {"out_dir", a.out_dir},
             {"identity_s", a.identity_s}});
  EditInputs in = load_edit_inputs(a.x, a.z, a.model, a.identity_s);
  fs::create_directories(a.out_dir);
  const auto source =
      a.identity_s ? SingularValueSource::IdentityFromX : SingularValueSource::Model;
  for (std::size_t i = 0; i < a.steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(a.steps - 1);
    const double rho = i + 1 == a.steps ? a.rho_end : a.rho_start + t * (a.rho_end - a.rho_start);
    const AviConfig cfg{a.k, rho, {}};
    const LatentTensor y = edit_latent(in.x, in.z, in.model ? &*in.model : nullptr, cfg, source);
    save_latent(y, fs::path(a.out_dir) / interpolation_name(i, rho));
  }
  return kExitOk;
}

int cmd_evaluate(const Globals& g, const EditArgs& a, const std::optional<std::string>& out_path,
                 std::ostream& out, std::ostream& err) {
  check_rho(a.rho, err);
  echo(err, {{"command", "evaluate"},
             {"x", a.x},
             {"z", a.z},
             {"model", a.model ? ojson(*a.model) : ojson(nullptr)},
             {"rho", a.rho},
             {"k", a.k},
             {"identity_s", a.identity_s}});
  EditInputs in = load_edit_inputs(a.x, a.z, a.model, a.identity_s);
  const EvalReport report = evaluate(
      in.model ? &*in.model : nullptr, {in.x, in.z}, AviConfig{a.k, a.rho, {}},
      a.identity_s ? SingularValueSource::IdentityFromX : SingularValueSource::Model);
  std::string body;
  if (g.format == "json") {
    ojson rows = ojson::array();
    for (const ChannelEval& e : report.channels) {
      rows.push_back({{"channel", e.channel},
                      {"pred_to_x", e.pred_to_x},
                      {"pred_to_z", e.pred_to_z},
                      {"yhat_to_z", e.yhat_to_z},
                      {"ytilde_to_x", e.ytilde_to_x},
                      {"fidelity_ratio", e.fidelity_ratio}});
    }
    body = ojson{{"mean_fidelity_ratio", report.mean_fidelity_ratio}, {"channels", rows}}.dump(2) +
           "\n";
  } else {
    std::ostringstream s;
    write_eval_csv(report, s);
    body = s.str();
  }
  emit(out_path, out, body);
  err << "mean fidelity ratio " << fmt(report.mean_fidelity_ratio) << '\n';
  return kExitOk;
}

int cmd_geodesic(const Globals& g, const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  echo(err, {{"command", "analyze geodesic"},
             {"inputs", a.inputs},
             {"p", a.p},
             {"mode", a.mode},
             {"side", a.side},
             {"format", g.format}});
  const auto latents = load_all(a.inputs);
  const GeodesicSeries s = geodesic_trajectory(
      latents, a.p, a.mode == "consecutive" ? GeodesicMode::Consecutive : GeodesicMode::AgainstFirst,
      a.side == "left" ? SubspaceSide::Left : SubspaceSide::Right);
  emit(a.out, out, render(g, s));
  err << summary(s);
  return kExitOk;
}

int cmd_mobility(const Globals& g, const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  echo(err, {{"command", "analyze mobility"},
             {"inputs", a.inputs},
             {"match", a.match},
             {"format", g.format}});
  const auto latents = load_all(a.inputs);
  const MobilityTrace t = mobility_trace(
      latents, a.match == "greedy" ? MatchMethod::Greedy : MatchMethod::Hungarian);
  emit(a.out, out, render(g, t));
  err << summary(t);
  return kExitOk;
}

int cmd_svtrace(const Globals& g, const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  echo(err, {{"command", "analyze svtrace"}, {"inputs", a.inputs}, {"format", g.format}});
  const auto latents = load_all(a.inputs);
  const std::vector<SvTraceStep> trace = singular_value_trajectory(latents);
  const std::span<const SvTraceStep> view(trace);
  emit(a.out, out, render(g, view));
  err << summary(view);
  return kExitOk;
}

int cmd_theorem(const Globals& g, const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<LatentPair> corpus;
  if (a.synthetic_pairs) {
    if (!a.x.empty() || !a.z.empty()) {
      throw ValidationError("--synthetic-pairs cannot be combined with --x/--z");
    }
    const LatentShape shape = parse_shape(a.shape);
    for (std::size_t i = 0; i < *a.synthetic_pairs; ++i) {
      corpus.push_back({synth_latent({shape, derive_seed(g.seed, 2 * i), 0.0, 1.0}),
                        synth_latent({shape, derive_seed(g.seed, 2 * i + 1), 0.0, 1.0})});
    }
  } else {
    if (a.x.empty() || a.x.size() != a.z.size()) {
      throw ValidationError("analyze theorem needs matching --x and --z lists or --synthetic-pairs");
    }
    for (std::size_t i = 0; i < a.x.size(); ++i) {
      corpus.push_back({load_latent(a.x[i]), load_latent(a.z[i])});
    }
  }
  if (corpus.empty()) throw ValidationError("--synthetic-pairs must be positive");
  const std::size_t k = a.k.value_or(corpus.front().x.shape().height / 2);
  echo(err, {{"command", "analyze theorem"},
             {"x", a.x},
             {"z", a.z},
             {"synthetic_pairs", a.synthetic_pairs ? ojson(*a.synthetic_pairs) : ojson(nullptr)},
             {"seed", g.seed},
             {"k", k},
             {"norm", a.norm},
             {"format", g.format}});
  const TheoremReport r = verify_theorem(
      corpus, k, a.norm == "frobenius" ? TheoremNorm::Frobenius : TheoremNorm::Spectral);
  emit(a.out, out, render(g, r));
  err << summary(r);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_threads();

  CLI::App app{"SVD-based latent attribute editing toolkit"};
  app.name("lsvd");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random draw")->capture_default_str();
  app.add_flag("--verbose", g.verbose, "Print per-step progress");
  app.add_option("--format", g.format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a seeded synthetic latent");
  gen_cmd->add_option("--out", gen.out, "Output LSVD file")->required();
  gen_cmd->add_option("--shape", gen.shape, "C H W")->expected(3)->capture_default_str();
  gen_cmd->add_option("--std", gen.stddev, "Standard deviation")->capture_default_str();
  gen_cmd->add_option("--mean", gen.mean, "Mean")->capture_default_str();
  gen_cmd->add_option("--time-step", gen.time_step, "Time step recorded in the metadata");
  gen_cmd->add_option("--total-steps", gen.total_steps, "Total steps recorded in the metadata")
      ->capture_default_str();
  gen_cmd->add_option("--tag", gen.tag, "Tag recorded in the metadata");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the singular value predictor");
  train_cmd->add_option("--x", tr.x, "Original latent(s)")->required();
  train_cmd->add_option("--z", tr.z, "Target latent(s), one per --x")->required();
  train_cmd->add_option("--out-model", tr.out_model, "Output PHI1 model file")->required();
  train_cmd->add_option("--n", tr.n, "Samples per pair (default 5000 for one pair, 500 for >5)");
  train_cmd->add_option("--sigma", tr.sigma, "Perturbation scale per sample")->capture_default_str();
  train_cmd->add_option("--k", tr.k, "Leading singular vectors kept")->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "Batch size in channel pairs")->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--lambda1", tr.lambda1)->capture_default_str();
  train_cmd->add_option("--lambda2", tr.lambda2)->capture_default_str();
  train_cmd->add_option("--lambda3", tr.lambda3)->capture_default_str();
  train_cmd->add_option("--lambda4", tr.lambda4)->capture_default_str();
  train_cmd->add_option("--history", tr.history, "Write the per-step loss history CSV here");

  EditArgs ed;
  auto* edit_cmd = app.add_subcommand("edit", "Edit x toward z's attributes");
  edit_cmd->add_option("--x", ed.x)->required();
  edit_cmd->add_option("--z", ed.z)->required();
  edit_cmd->add_option("--model", ed.model, "PHI1 model file");
  edit_cmd->add_option("--rho", ed.rho, "Blend strength in [0, 1.5]")->capture_default_str();
  edit_cmd->add_option("--k", ed.k)->capture_default_str();
  edit_cmd->add_option("--out", ed.out)->required();
  edit_cmd->add_flag("--identity-s", ed.identity_s, "Use S = S_x, delta_s = 0 instead of the model");

  InterpolateArgs ip;
  auto* interp_cmd = app.add_subcommand("interpolate", "Edit over evenly spaced rho values");
  interp_cmd->add_option("--x", ip.x)->required();
  interp_cmd->add_option("--z", ip.z)->required();
  interp_cmd->add_option("--model", ip.model);
  interp_cmd->add_option("--rho-start", ip.rho_start)->capture_default_str();
  interp_cmd->add_option("--rho-end", ip.rho_end)->capture_default_str();
  interp_cmd->add_option("--steps", ip.steps, "Number of outputs, inclusive of both ends")
      ->capture_default_str();
  interp_cmd->add_option("--k", ip.k)->capture_default_str();
  interp_cmd->add_option("--out-dir", ip.out_dir)->required();
  interp_cmd->add_flag("--identity-s", ip.identity_s);

  EditArgs ev;
  std::optional<std::string> ev_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "Report identity-fidelity distances");
  eval_cmd->add_option("--x", ev.x)->required();
  eval_cmd->add_option("--z", ev.z)->required();
  eval_cmd->add_option("--model", ev.model);
  eval_cmd->add_option("--rho", ev.rho)->capture_default_str();
  eval_cmd->add_option("--k", ev.k)->capture_default_str();
  eval_cmd->add_option("--out", ev_out);
  eval_cmd->add_flag("--identity-s", ev.identity_s);

  auto* analyze_cmd = app.add_subcommand("analyze", "Latent geometry reports");
  analyze_cmd->require_subcommand(1);
  analyze_cmd->fallthrough();
  AnalyzeArgs an;
  auto* geo_cmd = analyze_cmd->add_subcommand("geodesic", "Subspace geodesic distances");
  geo_cmd->add_option("--inputs", an.inputs, "Ordered latent files")->required();
  geo_cmd->add_option("--p", an.p, "Subspace dimension")->capture_default_str();
  geo_cmd->add_option("--mode", an.mode)
      ->check(CLI::IsMember({"consecutive", "against-first"}))
      ->capture_default_str();
  geo_cmd->add_option("--side", an.side)->check(CLI::IsMember({"left", "right"}))->capture_default_str();
  geo_cmd->add_option("--out", an.out);
  auto* mob_cmd = analyze_cmd->add_subcommand("mobility", "Singular vector order mobility");
  mob_cmd->add_option("--inputs", an.inputs)->required();
  mob_cmd->add_option("--match", an.match)
      ->check(CLI::IsMember({"greedy", "hungarian"}))
      ->capture_default_str();
  mob_cmd->add_option("--out", an.out);
  auto* sv_cmd = analyze_cmd->add_subcommand("svtrace", "Singular values along a sequence");
  sv_cmd->add_option("--inputs", an.inputs)->required();
  sv_cmd->add_option("--out", an.out);
  auto* thm_cmd = analyze_cmd->add_subcommand("theorem", "Attribute-vector distance check");
  thm_cmd->add_option("--x", an.x);
  thm_cmd->add_option("--z", an.z);
  thm_cmd->add_option("--synthetic-pairs", an.synthetic_pairs, "Seeded Gaussian pairs to generate");
  thm_cmd->add_option("--shape", an.shape, "C H W for --synthetic-pairs")->expected(3);
  thm_cmd->add_option("--k", an.k, "Defaults to N/2");
  thm_cmd->add_option("--norm", an.norm)
      ->check(CLI::IsMember({"frobenius", "spectral"}))
      ->capture_default_str();
  thm_cmd->add_option("--out", an.out);

  std::vector<std::string> argv_storage{"lsvd"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(g, gen, err);
    if (*train_cmd) return cmd_train(g, tr, err);
    if (*edit_cmd) return cmd_edit(g, ed, err);
    if (*interp_cmd) return cmd_interpolate(g, ip, err);
    if (*eval_cmd) return cmd_evaluate(g, ev, ev_out, out, err);
    if (*geo_cmd) return cmd_geodesic(g, an, out, err);
    if (*mob_cmd) return cmd_mobility(g, an, out, err);
    if (*sv_cmd) return cmd_svtrace(g, an, out, err);
    if (*thm_cmd) return cmd_theorem(g, an, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace lsvd::cli
