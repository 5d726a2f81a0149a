#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ionprof {

// One ion species: Lennard-Jones parameters and charge.
// Units: sigma in angstrom, epsilon in kcal/mol, charge in e.
struct IonSpecies {
  std::string name;
  double sigma = 0.0;
  double epsilon = 0.0;
  int charge = 0;

  IonSpecies() = default;
  IonSpecies(std::string name, double sigma, double epsilon, int charge);

  friend bool operator==(const IonSpecies&, const IonSpecies&) = default;
};

// One slit-channel system: ion species, channel width (nm), mean molarity (M).
struct ChannelConfig {
  IonSpecies species;
  double width = 0.0;
  double molarity = 0.0;

  ChannelConfig() = default;
  ChannelConfig(IonSpecies species, double width, double molarity);

  double half_width() const { return 0.5 * width; }
  std::string label() const;
};

// Identity of a config for lookups and duplicate detection: width and
// molarity quantized to 1e-6.
struct ConfigKey {
  std::string ion;
  long long width_micro = 0;
  long long molarity_micro = 0;

  friend auto operator<=>(const ConfigKey&, const ConfigKey&) = default;
};

ConfigKey config_key(const ChannelConfig& config);

// Feature layout shared by every regressor and file format.
enum FeatureIndex : std::size_t {
  kR = 0,
  kSigma = 1,
  kEpsilon = 2,
  kWidth = 3,
  kMolarity = 4,
  kCharge = 5,
};
inline constexpr std::size_t kNumFeatures = 6;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "r", "sigma", "epsilon", "width", "molarity", "charge"};

// (r, sigma, epsilon, width, molarity, charge) in raw units; r in nm from
// the channel center.
using FeatureVector = std::array<double, kNumFeatures>;

FeatureVector assemble_features(const ChannelConfig& config, double r);

// Graphene wall parameters. Constant across all systems and never a feature.
struct WallSpecies {
  std::string name = "C";
  double sigma = 3.3900;
  double epsilon = 0.0692;
};

struct IonCatalog {
  std::vector<IonSpecies> ions;
  WallSpecies wall;

  const IonSpecies& at(std::string_view name) const;
  const IonSpecies* find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
};

// The five simulated ions (Na, Cl, Mg, Li, K).
const IonCatalog& ion_catalog();

// JSON: {"ions": [{name, sigma, epsilon, charge}, ...], "wall": {...}}.
// A bare array of ion objects is also accepted on load.
IonCatalog load_catalog(const std::filesystem::path& path);
IonCatalog catalog_from_json_text(std::string_view text);
std::string catalog_to_json_text(const IonCatalog& catalog);

// Built-in catalog unless an override file is given.
IonCatalog resolve_catalog(const std::optional<std::filesystem::path>& override_path);

}  // namespace ionprof
