#include "ionprof/run_config.hpp"

#include <json.hpp>

#include "ionprof/error.hpp"
#include "ionprof/sampler.hpp"

namespace ionprof {

using nlohmann::json;

RunConfig paper_preset() {
  RunConfig c;
  c.preset = "paper";
  for (const auto& ion : ion_catalog().ions) c.grid.ions.push_back(ion.name);
  c.grid.widths = paper_widths();
  c.grid.molarities = paper_molarities();
  c.sampling = {2000, 0};
  c.mlp.hidden = kPaperHiddenDims;
  c.mlp.train = {100, 0.005, 1024, 0};
  c.gbdt = {100, 0.3, 15, 5.0, 0.5, 1};
  return c;
}

RunConfig desk_preset() {
  RunConfig c = paper_preset();
  c.preset = "desk";
  c.grid.widths = {0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4, 2.6, 2.8, 3.0};
  c.grid.molarities = {0.8, 1.2, 1.4, 1.8, 2.2, 2.6, 3.0, 3.4};
  c.sampling.per_config = 500;
  c.mlp.hidden = {64, 32};
  c.mlp.train.epochs = 50;
  c.gbdt.rounds = 20;
  return c;
}

RunConfig preset_by_name(std::string_view name) {
  if (name == "paper") return paper_preset();
  if (name == "desk") return desk_preset();
  fail(ErrorCode::kInvalidArgument, "unknown preset '" + std::string(name) + "'");
}

namespace {

GridSpec grid_from_json(const json& j, GridSpec g) {
  if (j.contains("ions")) g.ions = j["ions"].get<std::vector<std::string>>();
  if (j.contains("widths")) g.widths = j["widths"].get<std::vector<double>>();
  if (j.contains("molarities")) g.molarities = j["molarities"].get<std::vector<double>>();
  return g;
}

json grid_to_json(const GridSpec& g) {
  return {{"ions", g.ions}, {"widths", g.widths}, {"molarities", g.molarities}};
}

}  // namespace

RunConfig apply_config_json(RunConfig c, std::string_view json_text) {
  try {
    const auto j = json::parse(json_text);
    require(j.is_object(), ErrorCode::kParse, "run config must be a JSON object");
    if (j.contains("preset")) c = preset_by_name(j["preset"].get<std::string>());
    if (j.contains("grid")) c.grid = grid_from_json(j["grid"], c.grid);
    if (j.contains("sampling")) {
      const auto& s = j["sampling"];
      c.sampling.per_config = s.value("per_config", c.sampling.per_config);
      c.sampling.master_seed = s.value("master_seed", c.sampling.master_seed);
    }
    if (j.contains("ground_truth")) {
      const auto& g = j["ground_truth"];
      c.ground_truth.kind = g.value("kind", c.ground_truth.kind);
      if (g.contains("cache_dir"))
        c.ground_truth.cache_dir = g["cache_dir"].get<std::string>();
    }
    if (j.contains("catalog") && !j["catalog"].is_null())
      c.catalog_path = j["catalog"].get<std::string>();
    if (j.contains("mlp")) {
      const auto& m = j["mlp"];
      if (m.contains("hidden")) c.mlp.hidden = m["hidden"].get<std::vector<int>>();
      c.mlp.train.epochs = m.value("epochs", c.mlp.train.epochs);
      c.mlp.train.learning_rate = m.value("learning_rate", c.mlp.train.learning_rate);
      c.mlp.train.batch_size = m.value("batch_size", c.mlp.train.batch_size);
    }
    if (j.contains("gbdt")) {
      const auto& g = j["gbdt"];
      c.gbdt.rounds = g.value("rounds", c.gbdt.rounds);
      c.gbdt.shrinkage = g.value("shrinkage", c.gbdt.shrinkage);
      c.gbdt.max_depth = g.value("max_depth", c.gbdt.max_depth);
      c.gbdt.lambda = g.value("lambda", c.gbdt.lambda);
      c.gbdt.base_score = g.value("base_score", c.gbdt.base_score);
      c.gbdt.min_samples = g.value("min_samples", c.gbdt.min_samples);
    }
    if (j.contains("evaluation")) {
      const auto& e = j["evaluation"];
      if (e.contains("bin_sizes")) c.evaluation.bin_sizes = e["bin_sizes"].get<std::vector<double>>();
      c.evaluation.bench_bin_size = e.value("bench_bin_size", c.evaluation.bench_bin_size);
      c.evaluation.bench_runs = e.value("bench_runs", c.evaluation.bench_runs);
      if (e.contains("bench_grid") && !e["bench_grid"].is_null())
        c.evaluation.bench_grid = grid_from_json(e["bench_grid"], paper_preset().grid);
    }
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      if (p.contains("dataset_dir")) c.paths.dataset_dir = p["dataset_dir"].get<std::string>();
      if (p.contains("model_dir")) c.paths.model_dir = p["model_dir"].get<std::string>();
      if (p.contains("report_dir")) c.paths.report_dir = p["report_dir"].get<std::string>();
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("run config: ") + e.what());
  }
  return c;
}

void validate(const RunConfig& c, const IonCatalog& catalog) {
  auto check_grid = [&](const GridSpec& g, const std::string& what) {
    require(!g.ions.empty() && !g.widths.empty() && !g.molarities.empty(),
            ErrorCode::kInvalidArgument, what + " must list ions, widths and molarities");
    for (const auto& ion : g.ions)
      require(catalog.find(ion) != nullptr, ErrorCode::kUnknownIon,
              what + " references unknown ion '" + ion + "'");
    for (double w : g.widths)
      require(w > 0.0, ErrorCode::kInvalidArgument, what + ": widths must be > 0");
    for (double m : g.molarities)
      require(m > 0.0, ErrorCode::kInvalidArgument, what + ": molarities must be > 0");
  };
  check_grid(c.grid, "grid");
  if (c.evaluation.bench_grid) check_grid(*c.evaluation.bench_grid, "bench_grid");
  require(c.sampling.per_config >= 2 && c.sampling.per_config % 2 == 0,
          ErrorCode::kInvalidArgument, "sampling.per_config must be even and >= 2");
  require(!c.evaluation.bin_sizes.empty(), ErrorCode::kInvalidArgument,
          "evaluation.bin_sizes must be non-empty");
  for (double b : c.evaluation.bin_sizes)
    require(b > 0.0, ErrorCode::kOutOfRange, "bin sizes must be > 0");
  require(c.evaluation.bench_bin_size > 0.0, ErrorCode::kOutOfRange, "bench bin size must be > 0");
  require(c.evaluation.bench_runs >= 1, ErrorCode::kInvalidArgument, "bench_runs must be >= 1");
  require(c.ground_truth.kind == "synthetic" || c.ground_truth.kind == "empirical",
          ErrorCode::kInvalidArgument, "ground_truth.kind must be synthetic or empirical");
  for (int h : c.mlp.hidden)
    require(h >= 1, ErrorCode::kInvalidArgument, "mlp hidden widths must be >= 1");
  require(c.mlp.train.batch_size >= 1, ErrorCode::kInvalidArgument, "mlp batch_size must be >= 1");
  require(c.gbdt.shrinkage > 0.0 && c.gbdt.shrinkage <= 1.0, ErrorCode::kInvalidArgument,
          "gbdt shrinkage must be in (0, 1]");
  require(c.gbdt.lambda >= 0.0, ErrorCode::kInvalidArgument, "gbdt lambda must be >= 0");
  require(c.gbdt.max_depth >= 0, ErrorCode::kInvalidArgument, "gbdt max_depth must be >= 0");
}

std::string run_config_to_json(const RunConfig& c) {
  json doc = {
      {"preset", c.preset},
      {"grid", grid_to_json(c.grid)},
      {"sampling", {{"per_config", c.sampling.per_config}, {"master_seed", c.sampling.master_seed}}},
      {"ground_truth", {{"kind", c.ground_truth.kind}, {"cache_dir", c.ground_truth.cache_dir.string()}}},
      {"catalog", c.catalog_path ? json(c.catalog_path->string()) : json(nullptr)},
      {"mlp",
       {{"hidden", c.mlp.hidden},
        {"epochs", c.mlp.train.epochs},
        {"learning_rate", c.mlp.train.learning_rate},
        {"batch_size", c.mlp.train.batch_size}}},
      {"gbdt",
       {{"rounds", c.gbdt.rounds},
        {"shrinkage", c.gbdt.shrinkage},
        {"max_depth", c.gbdt.max_depth},
        {"lambda", c.gbdt.lambda},
        {"base_score", c.gbdt.base_score},
        {"min_samples", c.gbdt.min_samples}}},
      {"evaluation",
       {{"bin_sizes", c.evaluation.bin_sizes},
        {"bench_bin_size", c.evaluation.bench_bin_size},
        {"bench_runs", c.evaluation.bench_runs},
        {"bench_grid",
         c.evaluation.bench_grid ? grid_to_json(*c.evaluation.bench_grid) : json(nullptr)}}},
      {"paths",
       {{"dataset_dir", c.paths.dataset_dir.string()},
        {"model_dir", c.paths.model_dir.string()},
        {"report_dir", c.paths.report_dir.string()}}},
  };
  return doc.dump(2) + "\n";
}

std::vector<ChannelConfig> grid_configs(const GridSpec& grid, const IonCatalog& catalog) {
  return make_grid(catalog, grid.ions, grid.widths, grid.molarities);
}

}  // namespace ionprof
