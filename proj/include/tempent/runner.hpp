#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tempent/echo.hpp"
#include "tempent/fit.hpp"
#include "tempent/influence.hpp"
#include "tempent/toy_spectrum.hpp"

namespace tempent {

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DisjointSpec {
  std::size_t block_len = 1;
  std::size_t separation = 0;
};

struct InfluenceJob {
  double J = 1.0;
  double dt = 0.1;
  std::vector<double> h{0.5};
  std::vector<double> g{0.0};
  std::vector<std::size_t> bond_cap{128};
  std::size_t n_t_min = 1;
  std::size_t n_t_max = 10;
  std::size_t sample_every = 1;
  std::size_t checkpoint_every = 0;  // 0: only at the end
  std::size_t power_bond_cap = 0;    // 0: twice the bond cap
  std::vector<int> renyi{2};
  std::vector<std::pair<int, int>> delta;
  std::vector<int> forward_backward;
  bool mutual_info_bipartition = false;
  bool mutual_info_max = false;
  std::vector<DisjointSpec> mutual_info_disjoint;
  bool trotter_pair = false;  // rerun at dt/2 and report max |dS2|
};

struct ToyJob {
  std::vector<SpectrumModel> models;
  double T_min = 0.0;
  double T_max = 30.0;
  double T_step = 0.1;
  std::vector<std::pair<int, int>> delta{{6, 4}};
  std::vector<double> forward_backward;
};

struct EchoJob {
  std::vector<std::size_t> L{8};
  double J = 1.0;
  double h = 0.809;
  double g = -0.9045;
  double dt = 0.05;
  std::vector<std::size_t> bond_cap{64};
  double t_max = 5.0;
  std::optional<std::pair<double, double>> fit_window;
};

struct FitJob {
  std::filesystem::path input;
  std::string quantity = "S";
  std::optional<int> n;
  std::optional<int> m;
  std::vector<FitKind> kinds{FitKind::power_law};
  std::vector<double> lower_bounds;  // empty: a single fit over everything
  std::optional<double> upper_bound;
  bool derivative_mode = false;
  bool include_offset = true;
  std::size_t monte_carlo_trials = 0;
  double monte_carlo_noise = 1e-3;
};

enum class Command { influence, toy, echo, fit };

struct ExperimentConfig {
  Command command = Command::influence;
  std::filesystem::path out = "results";
  std::size_t workers = 1;
  double drift_threshold = 1e-3;
  std::uint64_t seed = 0;
  InfluenceJob influence;
  ToyJob toy;
  EchoJob echo;
  FitJob fit;
  std::string canonical;  // normalized JSON text the hash is taken over

  std::uint64_t hash() const;
};

/// Parses and validates a JSON document. Fields absent from the document
/// keep the defaults above.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Overrides applied after parsing (from command-line flags); the canonical
/// text and hash are recomputed.
struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::size_t> workers;
  std::optional<double> drift_threshold;
  std::optional<std::uint64_t> seed;
};
void apply_overrides(ExperimentConfig& c, const Overrides& o);

/// One CSV row. Empty optionals print as empty cells.
struct Row {
  std::optional<double> J, h, g, dt;
  std::optional<std::size_t> bond_cap;
  double T = 0.0;
  std::string quantity;
  std::optional<double> n, m, t_l, delta_t;
  double value = 0.0;
  bool flagged = false;
};

inline constexpr const char* kCsvHeader = "J,h,g,dt,bond_cap,T,quantity,n,m,t_l,delta_t,value,flag";

std::string format_row(const Row& r);
void write_csv(const std::filesystem::path& path, std::uint64_t config_hash, const std::vector<Row>& rows);

struct PointSummary {
  std::string label;
  double max_trace_drift = 0.0;
  double wall_seconds = 0.0;
  std::optional<double> trotter_max_ds2;
};

struct RunReport {
  std::vector<Row> rows;
  std::vector<PointSummary> points;
  std::string fit_json;  // fit command only
};

/// Rows for one influence parameter point from n_t_first to n_t_last using
/// the quantity selectors of `job`; `l` is extended in place.
std::vector<Row> influence_rows(TemporalMps& l, const InfluenceJob& job, std::size_t n_t_last,
                                const std::filesystem::path& checkpoint_path);

std::filesystem::path checkpoint_path_for(const ExperimentConfig& c, const IsingParams& p, std::size_t bond_cap);

/// Executes the configured command and writes its outputs under c.out.
RunReport run(const ExperimentConfig& c);

/// Extends the checkpoint by `extend` steps, writing rows for the new T
/// values. The checkpoint must belong to a grid point of `c`; overriding
/// parameters that disagree with the checkpoint is rejected.
struct ResumeRequest {
  std::filesystem::path checkpoint;
  std::size_t extend = 0;
  std::optional<double> J, h, g, dt;
};
RunReport resume(const ExperimentConfig& c, const ResumeRequest& r);

}  // namespace tempent
