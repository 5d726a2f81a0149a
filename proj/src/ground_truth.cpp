#include "ionprof/ground_truth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "ionprof/error.hpp"
#include "ionprof/io.hpp"
#include "ionprof/rng.hpp"

namespace ionprof {

namespace fs = std::filesystem;

void validate_slab(const TrajectorySlab& slab) {
  require(!slab.z.empty(), ErrorCode::kInvalidArgument, "trajectory slab is empty");
  const double limit = slab.config.half_width() + kWallTolerance;
  for (std::size_t i = 0; i < slab.z.size(); ++i) {
    require(std::abs(slab.z[i] - slab.center) <= limit, ErrorCode::kOutOfRange,
            "coordinate " + std::to_string(i) + " lies outside the channel");
  }
}

double empirical_cdf(const TrajectorySlab& slab, double r) {
  require(!slab.z.empty(), ErrorCode::kInvalidArgument, "trajectory slab is empty");
  require(r >= 0.0, ErrorCode::kOutOfRange, "r must be >= 0");
  std::size_t inside = 0;
  for (double z : slab.z)
    if (std::abs(z - slab.center) <= r) ++inside;
  return static_cast<double>(inside) / static_cast<double>(slab.z.size());
}

EmpiricalCdf::EmpiricalCdf(const TrajectorySlab& slab) : config_(slab.config) {
  require(!slab.z.empty(), ErrorCode::kInvalidArgument, "trajectory slab is empty");
  distances_.reserve(slab.z.size());
  for (double z : slab.z) distances_.push_back(std::abs(z - slab.center));
  std::sort(distances_.begin(), distances_.end());
}

EmpiricalCdf::EmpiricalCdf(ChannelConfig config, std::vector<double> sorted_distances)
    : config_(std::move(config)), distances_(std::move(sorted_distances)) {
  require(!distances_.empty(), ErrorCode::kInvalidArgument, "empirical CDF needs samples");
  require(std::is_sorted(distances_.begin(), distances_.end()), ErrorCode::kInvalidArgument,
          "empirical CDF distances must be sorted");
}

double EmpiricalCdf::operator()(double r) const {
  require(r >= 0.0, ErrorCode::kOutOfRange, "r must be >= 0");
  // upper_bound counts ties at r as inside.
  const auto it = std::upper_bound(distances_.begin(), distances_.end(), r);
  return static_cast<double>(it - distances_.begin()) / static_cast<double>(distances_.size());
}

void EmpiricalSource::add(EmpiricalCdf cdf) {
  auto key = config_key(cdf.config());
  cdfs_.insert_or_assign(std::move(key), std::move(cdf));
}

bool EmpiricalSource::contains(const ChannelConfig& config) const {
  return cdfs_.count(config_key(config)) > 0;
}

void EmpiricalSource::evaluate(const ChannelConfig& config, std::span<const double> r,
                               std::span<double> out) const {
  require(r.size() == out.size(), ErrorCode::kInvalidArgument, "size mismatch");
  const auto it = cdfs_.find(config_key(config));
  if (it == cdfs_.end())
    fail(ErrorCode::kMissingInput, "no ingested trajectory for " + config.label());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = it->second(r[i]);
}

// --- synthetic oracle ------------------------------------------------------

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double smoothstep(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * (3.0 - 2.0 * x);
}

// Gaussian(center, spread) truncated to [0, h].
struct TruncatedGaussian {
  double center, spread, h, lo_cdf, mass;

  TruncatedGaussian(double c, double s, double half)
      : center(c), spread(s), h(half), lo_cdf(normal_cdf(-c / s)),
        mass(normal_cdf((half - c) / s) - normal_cdf(-c / s)) {}

  double cdf(double r) const { return (normal_cdf((r - center) / spread) - lo_cdf) / mass; }
  double pdf(double r) const { return normal_pdf((r - center) / spread) / (spread * mass); }
};

}  // namespace

SyntheticOracle::Mixture SyntheticOracle::mixture(const ChannelConfig& config) {
  const double h = config.half_width();
  const double radius = config.species.sigma / 20.0;  // angstrom diameter -> nm radius
  const double q = config.species.charge;

  Mixture m{};
  m.primary_center = h - (radius + kHydrationOffset);
  m.primary_spread = 0.035 + 0.05 * radius;
  m.primary_weight = 0.24 + 0.07 * (std::abs(q) - 1.0) + 0.02 * q +
                     0.06 * std::tanh((config.molarity - 2.0) / 1.5) +
                     0.05 * std::tanh(config.species.epsilon / 0.3);
  m.primary_weight = std::clamp(m.primary_weight, 0.05, 0.6);

  m.secondary_center = m.primary_center - kWaterDiameter;
  m.secondary_spread = 1.6 * m.primary_spread;
  m.secondary_weight = 0.4 * m.primary_weight * smoothstep(m.secondary_center / 0.2);

  m.uniform_weight = 1.0 - m.primary_weight - m.secondary_weight;
  return m;
}

double SyntheticOracle::cdf(const ChannelConfig& config, double r) {
  const double h = config.half_width();
  if (r <= 0.0) return 0.0;
  if (r >= h) return 1.0;
  const auto m = mixture(config);
  double f = m.uniform_weight * (r / h) +
             m.primary_weight * TruncatedGaussian(m.primary_center, m.primary_spread, h).cdf(r);
  if (m.secondary_weight > 0.0)
    f += m.secondary_weight *
         TruncatedGaussian(m.secondary_center, m.secondary_spread, h).cdf(r);
  return std::clamp(f, 0.0, 1.0);
}

double SyntheticOracle::density(const ChannelConfig& config, double r) {
  const double h = config.half_width();
  if (r < 0.0 || r > h) return 0.0;
  const auto m = mixture(config);
  double p = m.uniform_weight / h +
             m.primary_weight * TruncatedGaussian(m.primary_center, m.primary_spread, h).pdf(r);
  if (m.secondary_weight > 0.0)
    p += m.secondary_weight *
         TruncatedGaussian(m.secondary_center, m.secondary_spread, h).pdf(r);
  return p;
}

double SyntheticOracle::inverse_cdf(const ChannelConfig& config, double u) {
  double lo = 0.0;
  double hi = config.half_width();
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return hi;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (cdf(config, mid) >= u)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

void SyntheticOracle::evaluate(const ChannelConfig& config, std::span<const double> r,
                               std::span<double> out) const {
  require(r.size() == out.size(), ErrorCode::kInvalidArgument, "size mismatch");
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = cdf(config, r[i]);
}

TrajectorySlab synthesize_trajectory(const ChannelConfig& config, std::size_t n_ions,
                                     std::size_t n_frames, std::uint64_t seed) {
  require(n_ions >= 1 && n_frames >= 1, ErrorCode::kInvalidArgument,
          "need at least one ion and one frame");
  TrajectorySlab slab{config, config.half_width(), {}};
  const std::size_t n = n_ions * n_frames;
  slab.z.reserve(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = SyntheticOracle::inverse_cdf(config, rng.uniform());
    const bool upper = (rng.next() >> 63) != 0;
    slab.z.push_back(upper ? slab.center + r : slab.center - r);
  }
  return slab;
}

// --- ingestion -------------------------------------------------------------

TrajectorySidecar load_sidecar(const fs::path& path) {
  const auto text = read_file(path);
  try {
    const auto j = nlohmann::json::parse(text);
    TrajectorySidecar s;
    s.ion_name = j.at("ion_name").get<std::string>();
    s.width_nm = j.at("width_nm").get<double>();
    s.molarity_M = j.at("molarity_M").get<double>();
    s.center_nm = j.at("center_nm").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

TrajectorySlab load_trajectory(const fs::path& csv_path, const TrajectorySidecar& sidecar,
                               const IonCatalog& catalog) {
  TrajectorySlab slab{ChannelConfig(catalog.at(sidecar.ion_name), sidecar.width_nm,
                                    sidecar.molarity_M),
                      sidecar.center_nm,
                      {}};
  const auto text = read_file(csv_path);
  const double limit = slab.config.half_width() + kWallTolerance;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (!header_seen) {
      require(fields.size() == 3 && fields[0] == "frame" && fields[1] == "ion_id" &&
                  fields[2] == "z",
              ErrorCode::kParse,
              csv_path.string() + ": expected header frame,ion_id,z");
      header_seen = true;
      continue;
    }
    const std::string where = csv_path.string() + " row " + std::to_string(line_no);
    require(fields.size() == 3, ErrorCode::kParse, where + ": expected 3 fields");
    parse_int(fields[0], where + " frame");
    parse_int(fields[1], where + " ion_id");
    const double z = parse_double(fields[2], where + " z");
    require(std::isfinite(z), ErrorCode::kParse, where + ": non-finite z");
    require(std::abs(z - slab.center) <= limit, ErrorCode::kOutOfRange,
            where + ": z=" + format_double(z) + " lies outside the channel (|z-o| > w/2 + " +
                format_double(kWallTolerance) + " nm)");
    slab.z.push_back(z);
  }
  require(header_seen, ErrorCode::kParse, csv_path.string() + ": empty trajectory file");
  require(!slab.z.empty(), ErrorCode::kParse, csv_path.string() + ": no coordinates");
  return slab;
}

namespace {

constexpr char kCacheMagic[8] = {'I', 'P', 'C', 'D', 'F', 'C', '0', '1'};

template <typename T>
void put(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::string_view& in, const fs::path& path) {
  require(in.size() >= sizeof(T), ErrorCode::kParse, path.string() + ": truncated cache");
  T value;
  std::memcpy(&value, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return value;
}

}  // namespace

std::string cdf_cache_filename(const ChannelConfig& config) {
  return config.label() + ".cdfcache";
}

void write_cdf_cache(const fs::path& path, const EmpiricalCdf& cdf) {
  std::string out(kCacheMagic, sizeof(kCacheMagic));
  const auto& c = cdf.config();
  put(out, static_cast<std::uint32_t>(c.species.name.size()));
  out += c.species.name;
  put(out, c.width);
  put(out, c.molarity);
  put(out, c.species.sigma);
  put(out, c.species.epsilon);
  put(out, static_cast<std::int32_t>(c.species.charge));
  put(out, static_cast<std::uint64_t>(cdf.distances().size()));
  out.append(reinterpret_cast<const char*>(cdf.distances().data()),
             cdf.distances().size() * sizeof(double));
  write_file_atomic(path, out);
}

EmpiricalCdf read_cdf_cache(const fs::path& path) {
  const auto data = read_file(path);
  std::string_view in(data);
  require(in.size() >= sizeof(kCacheMagic) &&
              std::memcmp(in.data(), kCacheMagic, sizeof(kCacheMagic)) == 0,
          ErrorCode::kParse, path.string() + ": not a CDF cache file");
  in.remove_prefix(sizeof(kCacheMagic));
  const auto name_len = take<std::uint32_t>(in, path);
  require(in.size() >= name_len, ErrorCode::kParse, path.string() + ": truncated cache");
  std::string name(in.substr(0, name_len));
  in.remove_prefix(name_len);
  const auto width = take<double>(in, path);
  const auto molarity = take<double>(in, path);
  const auto sigma = take<double>(in, path);
  const auto epsilon = take<double>(in, path);
  const auto charge = take<std::int32_t>(in, path);
  const auto count = take<std::uint64_t>(in, path);
  require(in.size() == count * sizeof(double), ErrorCode::kParse,
          path.string() + ": cache size does not match its sample count");
  std::vector<double> distances(count);
  std::memcpy(distances.data(), in.data(), in.size());
  return EmpiricalCdf(ChannelConfig(IonSpecies(name, sigma, epsilon, charge), width, molarity),
                      std::move(distances));
}

EmpiricalSource load_cdf_cache_dir(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCode::kMissingInput,
          "CDF cache directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".cdfcache") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  require(!files.empty(), ErrorCode::kMissingInput, "no .cdfcache files in " + dir.string());
  EmpiricalSource source;
  for (const auto& f : files) source.add(read_cdf_cache(f));
  return source;
}

}  // namespace ionprof
