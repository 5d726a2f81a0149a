// ionprof: dataset generation, model training, profile prediction,
// evaluation and inference benchmarking for ion concentration profiles in
// slit nanochannels.
//
//   ionprof --preset desk --out run generate
//   ionprof --preset desk --out run train mlp
//   ionprof --out run predict --model run/models/mlp.json --ion Na --width 2 --molarity 2.2 --bin-size 0.05
//
// Failures exit with status 2 and print one JSON line {"error":{code,message}} to stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ionprof/domain.hpp"
#include "ionprof/error.hpp"
#include "ionprof/eval.hpp"
#include "ionprof/gbdt.hpp"
#include "ionprof/ground_truth.hpp"
#include "ionprof/io.hpp"
#include "ionprof/mlp.hpp"
#include "ionprof/profile.hpp"
#include "ionprof/rng.hpp"
#include "ionprof/run_config.hpp"
#include "ionprof/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ionprof;

namespace {

struct GlobalOptions {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "run";
  std::string preset = "paper";
  int threads = 0;
};

struct Context {
  RunConfig config;
  IonCatalog catalog;
  fs::path out;
  unsigned threads = 1;
  std::string config_hash;

  fs::path dataset_dir() const { return out / config.paths.dataset_dir; }
  fs::path model_dir() const { return out / config.paths.model_dir; }
  fs::path report_dir() const { return out / config.paths.report_dir; }
  fs::path cache_dir() const {
    return config.ground_truth.cache_dir.is_absolute() ? config.ground_truth.cache_dir
                                                        : out / config.ground_truth.cache_dir;
  }
};

Context make_context(const GlobalOptions& g) {
  Context ctx;
  ctx.config = preset_by_name(g.preset);
  if (!g.config_file.empty()) ctx.config = apply_config_json(ctx.config, read_file(g.config_file));
  if (g.seed) ctx.config.sampling.master_seed = *g.seed;
  ctx.config.mlp.train.seed = mix_seed(ctx.config.sampling.master_seed, "mlp");
  ctx.catalog = resolve_catalog(ctx.config.catalog_path);
  validate(ctx.config, ctx.catalog);
  ctx.out = g.out_dir;
  ctx.threads = resolve_threads(g.threads);
  ctx.config_hash = sha256_hex(run_config_to_json(ctx.config));
  return ctx;
}

// Records sha256 and input hash of every file written into `dir`.
void record_outputs(const fs::path& dir, const std::vector<fs::path>& files,
                    const std::string& input_hash, const json& extra = json::object()) {
  const fs::path manifest_path = dir / "manifest.json";
  json manifest = json::object();
  if (fs::exists(manifest_path)) manifest = json::parse(read_file(manifest_path));
  if (!manifest.contains("files")) manifest["files"] = json::object();
  for (const auto& f : files) {
    manifest["files"][f.filename().string()] = {{"sha256", sha256_file(f)},
                                                {"input_hash", input_hash}};
  }
  for (const auto& [k, v] : extra.items()) manifest[k] = v;
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
}

std::unique_ptr<CdfFunction> make_ground_truth(const Context& ctx) {
  if (ctx.config.ground_truth.kind == "empirical")
    return std::make_unique<EmpiricalSource>(load_cdf_cache_dir(ctx.cache_dir()));
  return std::make_unique<SyntheticOracle>();
}

struct LoadedModel {
  std::string kind;
  std::string file_hash;
  std::variant<std::monostate, MlpModel, GbdtModel> model;
  std::unique_ptr<CdfFunction> truth;  // for the "oracle" pseudo-model
  std::unique_ptr<CdfFunction> fn;

  const CdfFunction& cdf() const { return fn ? *fn : *truth; }
};

std::unique_ptr<LoadedModel> load_model(const std::string& spec, const Context& ctx) {
  auto m = std::make_unique<LoadedModel>();
  if (spec == "oracle") {
    m->kind = "oracle";
    m->truth = make_ground_truth(ctx);
    m->file_hash = sha256_hex(std::string("oracle:") + std::string(SyntheticOracle::kVersion));
    return m;
  }
  const auto text = read_file(spec);
  m->file_hash = sha256_hex(text);
  std::string type;
  try {
    type = json::parse(text).at("type").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, spec + ": " + e.what());
  }
  if (type == "mlp") {
    m->kind = "mlp";
    m->model = mlp_from_json(text);
    m->fn = std::make_unique<MlpCdf>(std::get<MlpModel>(m->model));
  } else if (type == "gbdt") {
    m->kind = "gbdt";
    m->model = gbdt_from_json(text);
    m->fn = std::make_unique<GbdtCdf>(std::get<GbdtModel>(m->model));
  } else {
    fail(ErrorCode::kParse, spec + ": unknown model type '" + type + "'");
  }
  return m;
}

std::string bin_tag(double b) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "b%.4g", b);
  return buf;
}

// --- verbs -----------------------------------------------------------------

void cmd_catalog(const Context& ctx, bool write) {
  const auto text = catalog_to_json_text(ctx.catalog);
  std::cout << text;
  if (write) write_file_atomic(ctx.out / "catalog.json", text);
}

void cmd_generate(const Context& ctx) {
  const auto grid = grid_configs(ctx.config.grid, ctx.catalog);
  const auto source = make_ground_truth(ctx);
  const auto ds = build_dataset(grid, *source, ctx.config.sampling.per_config,
                                ctx.config.sampling.master_seed, ctx.threads);
  const auto dir = ctx.dataset_dir();
  const auto train_path = dir / "train.csv";
  const auto test_path = dir / "test.csv";
  write_file_atomic(train_path, samples_to_csv(ds.train));
  write_file_atomic(test_path, samples_to_csv(ds.test));

  json extra = {
      {"kind", "dataset"},
      {"source", ds.provenance.source_kind},
      {"oracle_version", ds.provenance.source_kind == "synthetic"
                             ? json(std::string(SyntheticOracle::kVersion))
                             : json(nullptr)},
      {"master_seed", ds.provenance.master_seed},
      {"per_config", ds.provenance.per_config},
      {"grid", ds.provenance.grid_description},
      {"train_configs", ds.provenance.train_configs},
      {"test_configs", ds.provenance.test_configs},
      {"train_rows", ds.train.size()},
      {"test_rows", ds.test.size()},
      {"run_config", json::parse(run_config_to_json(ctx.config))},
  };
  record_outputs(dir, {train_path, test_path}, ctx.config_hash, extra);
  std::cout << "generated " << ds.train.size() << " train rows (" << ds.provenance.train_configs
            << " configs) and " << ds.test.size() << " test rows ("
            << ds.provenance.test_configs << " configs) in " << dir.string() << "\n";
}

void cmd_ingest(const Context& ctx, const std::vector<std::string>& trajectories,
                const std::vector<std::string>& sidecars) {
  require(!trajectories.empty(), ErrorCode::kMissingInput, "ingest needs --trajectory files");
  require(trajectories.size() == sidecars.size(), ErrorCode::kInvalidArgument,
          "each --trajectory needs a matching --sidecar");
  const auto dir = ctx.cache_dir();
  std::vector<fs::path> written;
  std::string inputs;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto sidecar = load_sidecar(sidecars[i]);
    const auto slab = load_trajectory(trajectories[i], sidecar, ctx.catalog);
    const EmpiricalCdf cdf(slab);
    const auto path = dir / cdf_cache_filename(slab.config);
    write_cdf_cache(path, cdf);
    written.push_back(path);
    inputs += sha256_file(trajectories[i]) + sha256_file(sidecars[i]);
    std::cout << "ingested " << slab.z.size() << " coordinates for " << slab.config.label()
              << " -> " << path.string() << "\n";
  }
  record_outputs(dir, written, sha256_hex(inputs), {{"kind", "cdf_cache"}});
}

void cmd_train(const Context& ctx, const std::string& kind) {
  const auto train_path = ctx.dataset_dir() / "train.csv";
  fs::path source = train_path;
  if (!fs::exists(source) && fs::exists(ctx.dataset_dir() / "train.csv.gz"))
    source = ctx.dataset_dir() / "train.csv.gz";
  require(fs::exists(source), ErrorCode::kMissingInput,
          "dataset not found: " + train_path.string() + " (run generate first)");
  const auto train = read_samples_csv(source);
  require(!train.empty(), ErrorCode::kMissingInput, "training split is empty");
  const std::string input_hash = sha256_hex(sha256_file(source) + ctx.config_hash);
  const auto dir = ctx.model_dir();

  if (kind == "mlp") {
    std::vector<int> dims = {static_cast<int>(kNumFeatures)};
    dims.insert(dims.end(), ctx.config.mlp.hidden.begin(), ctx.config.mlp.hidden.end());
    dims.push_back(1);
    auto model = init_mlp(dims, ctx.config.mlp.train.seed);
    auto result = train_mlp(std::move(model), train, ctx.config.mlp.train);
    result.model.provenance.input_hash = input_hash;
    std::string loss = "epoch,mse\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e)
      loss += std::to_string(e + 1) + "," + format_double(result.loss_history[e]) + "\n";
    write_file_atomic(dir / "mlp.json", mlp_to_json(result.model));
    write_file_atomic(dir / "mlp_loss.csv", loss);
    record_outputs(dir, {dir / "mlp.json", dir / "mlp_loss.csv"}, input_hash);
    std::cout << "trained mlp " << dims.size() - 2 << " hidden layers, "
              << result.model.parameter_count() << " parameters, " << result.loss_history.size()
              << " epochs";
    if (!result.loss_history.empty())
      std::cout << ", first/last epoch MSE " << format_double(result.loss_history.front()) << " / "
                << format_double(result.loss_history.back());
    std::cout << "\n";
  } else if (kind == "gbdt") {
    auto result = train_gbdt(train, ctx.config.gbdt);
    result.model.provenance.input_hash = input_hash;
    std::string loss = "round,mse\n";
    for (std::size_t m = 0; m < result.mse_history.size(); ++m)
      loss += std::to_string(m + 1) + "," + format_double(result.mse_history[m]) + "\n";
    write_file_atomic(dir / "gbdt.json", gbdt_to_json(result.model));
    write_file_atomic(dir / "gbdt_loss.csv", loss);
    record_outputs(dir, {dir / "gbdt.json", dir / "gbdt_loss.csv"}, input_hash);
    std::cout << "trained gbdt " << result.model.rounds() << " rounds, depth "
              << result.model.max_depth << ", lambda " << format_double(result.model.lambda);
    if (!result.mse_history.empty())
      std::cout << ", final training MSE " << format_double(result.mse_history.back());
    std::cout << "\n";
  } else {
    fail(ErrorCode::kInvalidArgument, "train expects 'mlp' or 'gbdt', got '" + kind + "'");
  }
}

void cmd_predict(const Context& ctx, const std::string& model_spec, const std::string& ion,
                 double width, double molarity, double bin_size, const std::string& output) {
  const auto model = load_model(model_spec, ctx);
  const ChannelConfig config(ctx.catalog.at(ion), width, molarity);
  const auto profile = predict_profile(model->cdf(), config, bin_size);
  fs::path path = output.empty() ? ctx.out / "profiles" /
                                       (model->kind + "_" + config.label() + "_" +
                                        bin_tag(bin_size) + ".csv")
                                 : fs::path(output);
  write_file_atomic(path, profile_to_csv(profile));
  if (path.has_parent_path())
    record_outputs(path.parent_path(), {path},
                   sha256_hex(model->file_hash + config.label() + format_double(bin_size)));
  const double mean = profile_mean_concentration(profile);
  std::cout << "profile " << path.string() << ": " << profile.bin_count() << " bins, peak at r="
            << format_double(peak_location(profile)) << " nm ("
            << format_double(profile.concentrations[peak_bin(profile)]) << " M), "
            << "channel-average " << format_double(mean) << " M vs molarity "
            << format_double(molarity) << " M\n";
}

void cmd_evaluate(const Context& ctx, const std::vector<std::string>& model_specs) {
  require(!model_specs.empty(), ErrorCode::kMissingInput, "evaluate needs at least one --model");
  const auto grid = grid_configs(ctx.config.grid, ctx.catalog);
  const auto truth = make_ground_truth(ctx);
  const auto dir = ctx.report_dir();
  std::vector<fs::path> written;

  std::string truth_long(kLongProfileHeader);
  truth_long += '\n';
  for (double b : ctx.config.evaluation.bin_sizes)
    for (const auto& c : grid) append_long_rows(truth_long, predict_profile(*truth, c, b));
  write_file_atomic(dir / "profiles_truth.csv", truth_long);
  written.push_back(dir / "profiles_truth.csv");

  std::string inputs = ctx.config_hash;
  for (const auto& spec : model_specs) {
    const auto model = load_model(spec, ctx);
    inputs += model->file_hash;
    const std::string input_hash = sha256_hex(model->file_hash + ctx.config_hash);
    std::string long_rows(kLongProfileHeader);
    long_rows += '\n';
    for (double b : ctx.config.evaluation.bin_sizes) {
      auto report = make_report(model->kind, b, mae_grid(model->cdf(), *truth, grid, b, ctx.threads));
      const auto report_path = dir / ("report_" + model->kind + "_" + bin_tag(b) + ".json");
      write_file_atomic(report_path, report_to_json(report, input_hash));
      written.push_back(report_path);
      for (const auto& ion : ctx.config.grid.ions) {
        std::vector<ConfigMetrics> rows;
        for (const auto& m : report.per_config)
          if (m.config.species.name == ion) rows.push_back(m);
        const auto heat = dir / ("heatmap_" + model->kind + "_" + ion + "_" + bin_tag(b) + ".csv");
        write_file_atomic(heat, heatmap_to_csv(rows));
        written.push_back(heat);
      }
      for (const auto& c : grid) append_long_rows(long_rows, predict_profile(model->cdf(), c, b));
      std::printf("%-6s bin %.4g nm: interpolation MAE %.4f M, peak deviation %.4f nm (%zu configs); "
                  "training-set MAE %.4f M (%zu configs)\n",
                  model->kind.c_str(), b, report.test.mae, report.test.peak_deviation,
                  report.test.count, report.train.mae, report.train.count);
    }
    const auto long_path = dir / ("profiles_" + model->kind + ".csv");
    write_file_atomic(long_path, long_rows);
    written.push_back(long_path);
  }
  record_outputs(dir, written, sha256_hex(inputs), {{"kind", "evaluation"}});
}

void cmd_bench(const Context& ctx, const std::vector<std::string>& model_specs) {
  require(!model_specs.empty(), ErrorCode::kMissingInput, "bench needs at least one --model");
  const auto& ev = ctx.config.evaluation;
  const auto grid = grid_configs(ev.bench_grid ? *ev.bench_grid : paper_preset().grid, ctx.catalog);
  const auto dir = ctx.report_dir();
  for (const auto& spec : model_specs) {
    const auto model = load_model(spec, ctx);
    const auto timing = bench_inference(model->cdf(), grid, ev.bench_bin_size, ev.bench_runs);
    json doc = {{"model", model->kind},
                {"bin_size", ev.bench_bin_size},
                {"configs", grid.size()},
                {"timing",
                 {{"runs", timing.runs},
                  {"mean", timing.mean},
                  {"std", timing.stddev},
                  {"profiles_per_run", timing.profiles_per_run}}},
                {"provenance", {{"input_hash", sha256_hex(model->file_hash + ctx.config_hash)}}}};
    const auto path = dir / ("bench_" + model->kind + ".json");
    write_file_atomic(path, doc.dump(2) + "\n");
    record_outputs(dir, {path}, sha256_hex(model->file_hash + ctx.config_hash));
    std::cout << model->kind << " inference time (s) over " << grid.size() << " configs at "
              << format_double(ev.bench_bin_size) << " nm bins, " << timing.runs.size()
              << " runs: " << format_timing(timing) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ion concentration profiles in slit nanochannels via learned conditional CDFs"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config_file, "Run config JSON (overrides the preset)");
  auto* seed_opt = app.add_option("--seed", seed_value, "Master seed");
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--preset", g.preset, "Built-in preset")
      ->check(CLI::IsMember({"paper", "desk"}))
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (IONPROF_THREADS when unset)");

  auto* catalog = app.add_subcommand("catalog", "Print the ion catalog as JSON");
  bool write_catalog = false;
  catalog->add_flag("--write", write_catalog, "Also write <out>/catalog.json");

  app.add_subcommand("generate", "Sample train/test datasets from the ground-truth CDF");

  auto* ingest = app.add_subcommand("ingest", "Cache empirical CDFs from trajectory exports");
  std::vector<std::string> trajectories, sidecars;
  ingest->add_option("--trajectory", trajectories, "CSV with header frame,ion_id,z")->required();
  ingest->add_option("--sidecar", sidecars, "JSON {ion_name,width_nm,molarity_M,center_nm}")
      ->required();

  auto* train = app.add_subcommand("train", "Train a regressor on the training split");
  std::string train_kind;
  train->add_option("kind", train_kind, "mlp or gbdt")
      ->required()
      ->check(CLI::IsMember({"mlp", "gbdt"}));

  auto* predict = app.add_subcommand("predict", "Predict one concentration profile");
  std::string model_file, ion, output;
  double width = 0, molarity = 0, bin_size = 0.05;
  predict->add_option("--model", model_file, "Model file, or 'oracle'")->required();
  predict->add_option("--ion", ion)->required();
  predict->add_option("--width", width, "Channel width, nm")->required();
  predict->add_option("--molarity", molarity, "Molarity, M")->required();
  predict->add_option("--bin-size", bin_size, "Bin size, nm")->capture_default_str();
  predict->add_option("--output", output, "Profile CSV path");

  auto* evaluate = app.add_subcommand("evaluate", "MAE / peak deviation over the config grid");
  std::vector<std::string> eval_models;
  evaluate->add_option("--model", eval_models, "Model files ('oracle' allowed)")->required();

  auto* bench = app.add_subcommand("bench", "Time profile inference over the bench grid");
  std::vector<std::string> bench_models;
  bench->add_option("--model", bench_models, "Model files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", {{"code", "usage"}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    const Context ctx = make_context(g);
    if (*catalog) cmd_catalog(ctx, write_catalog);
    else if (app.got_subcommand("generate")) cmd_generate(ctx);
    else if (*ingest) cmd_ingest(ctx, trajectories, sidecars);
    else if (*train) cmd_train(ctx, train_kind);
    else if (*predict) cmd_predict(ctx, model_file, ion, width, molarity, bin_size, output);
    else if (*evaluate) cmd_evaluate(ctx, eval_models);
    else if (*bench) cmd_bench(ctx, bench_models);
  } catch (const Error& e) {
    std::cerr << json{{"error", {{"code", error_code_name(e.code())}, {"message", e.what()}}}}.dump()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  }
  return 0;
}
