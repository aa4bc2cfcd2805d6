#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "glds/bench/config.hpp"
#include "glds/bench/csv.hpp"
#include "glds/bench/generators.hpp"
#include "glds/conditioning.hpp"
#include "glds/glmtron.hpp"
#include "glds/relu_moments.hpp"
#include "glds/rng.hpp"
#include "glds/stability.hpp"
#include "glds/trajectory.hpp"
#include "glds/version.hpp"

namespace glds::bench {

// Raised when a run's own validity conditions fail (too many skipped cells,
// uncertifiable single-fit system, runaway iteration counts); the CLI maps it
// to exit code 2, distinct from config errors.
class RunFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Theory schedules can prescribe astronomically many updates; refuse to start
// a run that cannot plausibly finish instead of hanging.
inline constexpr std::uint64_t kMaxUpdatesPerCell = 2000000;

struct RunResult {
  std::string table;   // primary output (CSV or JSON, already newline-terminated)
  std::string meta;    // metadata sidecar (JSON)
  std::string timing;  // wall-time sidecar (CSV); empty when not applicable
  std::vector<std::string> warnings;
  bool checks_passed = true;  // lemma-suite verdict aggregate
};

namespace detail {

using Json = nlohmann::json;

// Stream-derivation salts: every random object hangs off (master, salt, ...),
// so adding new draw sites never perturbs existing ones.
inline constexpr std::uint64_t kThetaSalt = 101;
inline constexpr std::uint64_t kTrajectorySalt = 102;
inline constexpr std::uint64_t kLemmaVectorSalt = 103;
inline constexpr std::uint64_t kLemmaMcSalt = 104;

inline double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t k = values.size() / 2;
  if (values.size() % 2 == 1) return values[k];
  return 0.5 * (values[k - 1] + values[k]);
}

inline double least_squares_slope(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / denom;
}

inline void parallel_for(int threads, std::int64_t count,
                         const std::function<void(std::int64_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const int workers = static_cast<int>(std::min<std::int64_t>(threads, count));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Json meta_header(const ExperimentSpec& spec, std::uint64_t master_seed,
                        std::uint64_t config_hash) {
  Json meta;
  meta["config_hash"] = hex64(config_hash);
  meta["kind"] = kind_name(spec.kind);
  meta["master_seed"] = master_seed;
  meta["version"] = kVersion;
  return meta;
}

// Effective update count and step size for one fitted cell. The step defaults
// to the data-driven practical choice; theory_step swaps in the theorem value.
// The update count comes from (in priority order) the explicit m, then the
// regime's theorem formula; the practical regime requires an explicit m.
struct CellSchedule {
  double eta = 0.0;
  std::uint64_t m = 0;
};

inline CellSchedule cell_schedule(const ExperimentSpec& spec, const Trajectory& traj,
                                  const LyapunovCertificate& cert,
                                  const LinkFunction& link) {
  CellSchedule out;
  std::optional<Schedule> theory;
  if (spec.regime != "practical") {
    try {
      theory = theory_schedule(cert, link.zeta(), spec.noise.tau, spec.schedule_regime(),
                               static_cast<std::uint64_t>(traj.n), spec.w_bound,
                               spec.delta);
    } catch (const InvalidInputError& e) {
      throw ConfigError(std::string("schedule: ") + e.what());
    }
  }

  out.eta = (spec.theory_step && theory) ? theory->eta : practical_step(traj);
  if (spec.m) {
    out.m = static_cast<std::uint64_t>(*spec.m);
  } else if (theory) {
    out.m = theory->m;
  } else {
    throw ConfigError("regime practical requires an explicit m");
  }
  if (out.m > kMaxUpdatesPerCell) {
    throw RunFailure("scheduled update count " + std::to_string(out.m) +
                     " exceeds the per-cell cap; set m explicitly");
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// simulate: one rollout dumped as CSV (t, x0..x{d-1}).
// ---------------------------------------------------------------------------
inline RunResult run_simulate(const ExperimentSpec& spec, std::uint64_t master_seed,
                              std::uint64_t config_hash) {
  const int d = spec.dims[0];
  const int n = spec.n_grid[0];
  Rng theta_rng(derive_stream(master_seed, detail::kThetaSalt, d, 0));
  const WeightMatrix theta = make_theta(*spec.theta_gen, d, theta_rng);

  Trajectory traj;
  try {
    traj = simulate(theta, spec.link.make(), spec.noise.make(d), n,
                    derive_stream(master_seed, detail::kTrajectorySalt, d, 0, n));
  } catch (const DivergenceError& e) {
    throw RunFailure(std::string("simulate: ") + e.what());
  }

  std::vector<std::string> header{"t"};
  for (int i = 0; i < d; ++i) header.push_back("x" + std::to_string(i));
  CsvTable table(header);
  for (int t = 0; t < n + 2; ++t) {
    std::vector<std::string> row{format_int(t)};
    for (int i = 0; i < d; ++i) row.push_back(format_double(traj.states(i, t)));
    table.add_row(std::move(row));
  }

  detail::Json meta = detail::meta_header(spec, master_seed, config_hash);
  meta["d"] = d;
  meta["n"] = n;
  meta["link"] = spec.link.kind;
  meta["noise"] = spec.noise.kind;

  RunResult result;
  result.table = table.to_string();
  result.meta = meta.dump(2) + "\n";
  return result;
}

// ---------------------------------------------------------------------------
// certify: certificate search report as JSON.
// ---------------------------------------------------------------------------
inline RunResult run_certify(const ExperimentSpec& spec, std::uint64_t master_seed,
                             std::uint64_t config_hash) {
  const int d = spec.dims[0];
  Rng theta_rng(derive_stream(master_seed, detail::kThetaSalt, d, 0));
  const WeightMatrix theta = make_theta(*spec.theta_gen, d, theta_rng);

  detail::Json out;
  out["kind"] = "certify";
  out["d"] = d;
  out["theta"] = detail::matrix_to_json(theta);
  out["operator_norm"] = operator_norm(theta);
  out["abs_spectral_radius"] = spectral_radius(theta.cwiseAbs());

  const auto cert = find_certificate(theta);
  out["found"] = cert.has_value();
  if (cert) {
    const auto check = check_certificate(theta, *cert);
    out["certificate"] = {{"k_diag", detail::vector_to_json(cert->k_diag)},
                          {"rho", cert->rho},
                          {"effective_radius", cert->effective_radius}};
    out["check"] = {{"ok", check.ok}, {"violation", check.violation}};
  }

  RunResult result;
  result.table = out.dump(2) + "\n";
  result.meta = detail::meta_header(spec, master_seed, config_hash).dump(2) + "\n";
  return result;
}

// ---------------------------------------------------------------------------
// single_fit: one end-to-end pipeline run with full diagnostics.
// ---------------------------------------------------------------------------
inline RunResult run_single_fit(const ExperimentSpec& spec, std::uint64_t master_seed,
                                std::uint64_t config_hash) {
  const int d = spec.dims[0];
  const int n = spec.n_grid[0];
  const LinkFunction link = spec.link.make();

  Rng theta_rng(derive_stream(master_seed, detail::kThetaSalt, d, 0));
  const WeightMatrix theta_star = make_theta(*spec.theta_gen, d, theta_rng);
  const auto cert = find_certificate(theta_star);
  if (!cert) {
    throw RunFailure("single_fit: generated system admits no stability certificate");
  }

  Trajectory traj;
  try {
    traj = simulate(theta_star, link, spec.noise.make(d), n,
                    derive_stream(master_seed, detail::kTrajectorySalt, d, 0, n));
  } catch (const DivergenceError& e) {
    throw RunFailure(std::string("single_fit: ") + e.what());
  }

  const auto schedule = detail::cell_schedule(spec, traj, *cert, link);
  GlmtronConfig config;
  config.w_bound = spec.w_bound;
  config.eta = schedule.eta;
  config.m = static_cast<int>(schedule.m);
  config.option = spec.iterate_option();
  config.seed = derive_stream(master_seed, detail::kTrajectorySalt, d, 0, n, 1);
  config.record_history = spec.record_history;
  const auto report = glmtron_fit(traj, link, config, theta_star);

  const auto iso = isometry_report(traj, *cert);
  const auto cross = cross_term_report(traj, theta_star, link, *cert, spec.noise.tau,
                                       spec.delta);

  detail::Json out;
  out["kind"] = "single_fit";
  out["d"] = d;
  out["n"] = n;
  out["link"] = spec.link.kind;
  out["noise"] = spec.noise.kind;
  out["theta_star"] = detail::matrix_to_json(theta_star);
  out["certificate"] = {{"k_diag", detail::vector_to_json(cert->k_diag)},
                        {"rho", cert->rho},
                        {"effective_radius", cert->effective_radius}};
  out["fit"] = {{"eta", report.eta},
                {"m", report.m},
                {"option", spec.option},
                {"chosen_iterate", report.chosen_iterate},
                {"iterations_run", report.iterations_run},
                {"theta_hat", detail::matrix_to_json(report.theta_hat)},
                {"param_err_sq", parameter_error(report.theta_hat, theta_star)},
                {"pred_err", report.prediction_error}};
  if (spec.record_history) {
    detail::Json history = detail::Json::array();
    for (const auto& row : report.history) {
      history.push_back({{"param_err_sq", row.param_err_sq},
                         {"grad_norm", row.grad_norm},
                         {"pred_err", row.pred_err}});
    }
    out["fit"]["history"] = std::move(history);
  }
  out["isometry"] = {{"lambda_min", iso.lambda_min},
                     {"lambda_max", iso.lambda_max},
                     {"lower_ok", iso.lower_ok},
                     {"upper_ok", iso.upper_ok},
                     {"R", iso.R}};
  out["cross_term"] = {{"cross_norm", cross.cross_norm},
                       {"mu_bound", cross.mu_bound},
                       {"trace_cov", cross.trace_cov},
                       {"b_bound", cross.b_bound}};

  RunResult result;
  result.table = out.dump(2) + "\n";
  result.meta = detail::meta_header(spec, master_seed, config_hash).dump(2) + "\n";
  return result;
}

// ---------------------------------------------------------------------------
// rate_sweep: recovery error vs n over (dims x trials x n_grid) cells.
// ---------------------------------------------------------------------------
struct RateSweepRow {
  int d = 0;
  int n = 0;
  int seed = 0;  // trial index within the run
  std::string link_kind;
  double rho = 0.0;
  double effective_radius = 0.0;
  double param_err_sq = 0.0;
  double pred_err = 0.0;
  std::int64_t iterations = 0;
  double wall_time_seconds = 0.0;
  bool skipped = false;
  std::string skip_reason;
};

inline RunResult run_rate_sweep(const ExperimentSpec& spec, std::uint64_t master_seed,
                                std::uint64_t config_hash, int threads) {
  const LinkFunction link = spec.link.make();
  const std::int64_t n_count = static_cast<std::int64_t>(spec.n_grid.size());
  const std::int64_t cells_per_dim = spec.trials * n_count;
  const std::int64_t total =
      static_cast<std::int64_t>(spec.dims.size()) * cells_per_dim;
  std::vector<RateSweepRow> rows(static_cast<std::size_t>(total));

  detail::parallel_for(threads, static_cast<std::int64_t>(spec.dims.size()) * spec.trials,
                       [&](std::int64_t group) {
    const int d_idx = static_cast<int>(group / spec.trials);
    const int trial = static_cast<int>(group % spec.trials);
    const int d = spec.dims[static_cast<std::size_t>(d_idx)];

    Rng theta_rng(derive_stream(master_seed, detail::kThetaSalt,
                                static_cast<std::uint64_t>(d),
                                static_cast<std::uint64_t>(trial)));
    const WeightMatrix theta_star = make_theta(*spec.theta_gen, d, theta_rng);
    const auto cert = find_certificate(theta_star);

    for (std::int64_t n_idx = 0; n_idx < n_count; ++n_idx) {
      const int n = spec.n_grid[static_cast<std::size_t>(n_idx)];
      RateSweepRow& row = rows[static_cast<std::size_t>(
          d_idx * cells_per_dim + trial * n_count + n_idx)];
      row.d = d;
      row.n = n;
      row.seed = trial;
      row.link_kind = spec.link.kind;
      if (!cert) {
        row.skipped = true;
        row.skip_reason = "no certificate for generated system";
        continue;
      }
      row.rho = cert->rho;
      row.effective_radius = cert->effective_radius;
      try {
        const Trajectory traj =
            simulate(theta_star, link, spec.noise.make(d), n,
                     derive_stream(master_seed, detail::kTrajectorySalt,
                                   static_cast<std::uint64_t>(d),
                                   static_cast<std::uint64_t>(trial),
                                   static_cast<std::uint64_t>(n)));
        const auto schedule = detail::cell_schedule(spec, traj, *cert, link);
        GlmtronConfig config;
        config.w_bound = spec.w_bound;
        config.eta = schedule.eta;
        config.m = static_cast<int>(schedule.m);
        config.option = spec.iterate_option();
        config.seed = derive_stream(master_seed, detail::kTrajectorySalt,
                                    static_cast<std::uint64_t>(d),
                                    static_cast<std::uint64_t>(trial),
                                    static_cast<std::uint64_t>(n), 1);
        const auto start = std::chrono::steady_clock::now();
        const auto report = glmtron_fit(traj, link, config, theta_star);
        const auto stop = std::chrono::steady_clock::now();
        row.wall_time_seconds = std::chrono::duration<double>(stop - start).count();
        row.param_err_sq = parameter_error(report.theta_hat, theta_star);
        row.pred_err = report.prediction_error;
        row.iterations = report.iterations_run;
      } catch (const DivergenceError& e) {
        row.skipped = true;
        row.skip_reason = e.what();
      }
    }
  });

  CsvTable table({"d", "n", "seed", "link_kind", "rho", "R", "param_err_sq", "pred_err",
                  "iterations"});
  CsvTable timing({"d", "n", "seed", "wall_time_seconds"});
  RunResult result;

  // Canonical output order (d, n, seed) independent of execution order.
  std::int64_t skipped = 0;
  for (std::size_t d_idx = 0; d_idx < spec.dims.size(); ++d_idx) {
    for (std::int64_t n_idx = 0; n_idx < n_count; ++n_idx) {
      for (int trial = 0; trial < spec.trials; ++trial) {
        const RateSweepRow& row = rows[static_cast<std::size_t>(
            static_cast<std::int64_t>(d_idx) * cells_per_dim + trial * n_count + n_idx)];
        if (row.skipped) {
          ++skipped;
          result.warnings.push_back("skipped d=" + std::to_string(row.d) +
                                    " n=" + std::to_string(row.n) +
                                    " seed=" + std::to_string(row.seed) + ": " +
                                    row.skip_reason);
          continue;
        }
        table.add_row({format_int(row.d), format_int(row.n), format_int(row.seed),
                       row.link_kind, format_double(row.rho),
                       format_double(row.effective_radius),
                       format_double(row.param_err_sq), format_double(row.pred_err),
                       format_int(row.iterations)});
        timing.add_row({format_int(row.d), format_int(row.n), format_int(row.seed),
                        format_double(row.wall_time_seconds)});
      }
    }
  }
  if (2 * skipped > total) {
    throw RunFailure("rate_sweep: " + std::to_string(skipped) + " of " +
                     std::to_string(total) + " cells skipped");
  }

  // Per-dimension log-log slope of the median squared parameter error.
  detail::Json slopes;
  for (int d : spec.dims) {
    std::vector<std::pair<double, double>> pts;
    for (int n : spec.n_grid) {
      std::vector<double> errs;
      for (const auto& row : rows) {
        if (!row.skipped && row.d == d && row.n == n) errs.push_back(row.param_err_sq);
      }
      const double med = detail::median(std::move(errs));
      if (std::isfinite(med) && med > 0.0) {
        pts.emplace_back(std::log(static_cast<double>(n)), std::log(med));
      }
    }
    slopes[std::to_string(d)] = detail::least_squares_slope(pts);
  }

  detail::Json meta = detail::meta_header(spec, master_seed, config_hash);
  meta["slopes"] = std::move(slopes);
  meta["cells_total"] = total;
  meta["cells_skipped"] = skipped;
  result.table = table.to_string();
  result.meta = meta.dump(2) + "\n";
  result.timing = timing.to_string();
  return result;
}

// ---------------------------------------------------------------------------
// isometry_trials: empirical covariance eigenvalue bounds across trials.
// ---------------------------------------------------------------------------
inline RunResult run_isometry_trials(const ExperimentSpec& spec,
                                     std::uint64_t master_seed,
                                     std::uint64_t config_hash, int threads) {
  const LinkFunction link = spec.link.make();
  const std::int64_t n_count = static_cast<std::int64_t>(spec.n_grid.size());
  const std::int64_t cells_per_dim = spec.trials * n_count;
  const std::int64_t total =
      static_cast<std::int64_t>(spec.dims.size()) * cells_per_dim;

  struct Cell {
    IsometryReport report;
    double rho = 0.0;
    bool skipped = false;
    std::string skip_reason;
  };
  std::vector<Cell> cells(static_cast<std::size_t>(total));

  detail::parallel_for(threads, static_cast<std::int64_t>(spec.dims.size()) * spec.trials,
                       [&](std::int64_t group) {
    const int d_idx = static_cast<int>(group / spec.trials);
    const int trial = static_cast<int>(group % spec.trials);
    const int d = spec.dims[static_cast<std::size_t>(d_idx)];

    Rng theta_rng(derive_stream(master_seed, detail::kThetaSalt,
                                static_cast<std::uint64_t>(d),
                                static_cast<std::uint64_t>(trial)));
    const WeightMatrix theta_star = make_theta(*spec.theta_gen, d, theta_rng);
    const auto cert = find_certificate(theta_star);

    for (std::int64_t n_idx = 0; n_idx < n_count; ++n_idx) {
      const int n = spec.n_grid[static_cast<std::size_t>(n_idx)];
      Cell& cell = cells[static_cast<std::size_t>(d_idx * cells_per_dim +
                                                  trial * n_count + n_idx)];
      if (!cert) {
        cell.skipped = true;
        cell.skip_reason = "no certificate for generated system";
        continue;
      }
      cell.rho = cert->rho;
      try {
        const Trajectory traj =
            simulate(theta_star, link, spec.noise.make(d), n,
                     derive_stream(master_seed, detail::kTrajectorySalt,
                                   static_cast<std::uint64_t>(d),
                                   static_cast<std::uint64_t>(trial),
                                   static_cast<std::uint64_t>(n)));
        cell.report = isometry_report(traj, *cert);
      } catch (const DivergenceError& e) {
        cell.skipped = true;
        cell.skip_reason = e.what();
      }
    }
  });

  CsvTable table({"d", "n", "trial", "lambda_min", "lambda_max", "lower_ok", "upper_ok",
                  "rho", "R"});
  RunResult result;
  // Canonical output order (d, n, trial) independent of execution order.
  std::int64_t skipped = 0;
  for (std::size_t d_idx = 0; d_idx < spec.dims.size(); ++d_idx) {
    for (std::int64_t n_idx = 0; n_idx < n_count; ++n_idx) {
      for (int trial = 0; trial < spec.trials; ++trial) {
        const Cell& cell = cells[static_cast<std::size_t>(
            static_cast<std::int64_t>(d_idx) * cells_per_dim + trial * n_count + n_idx)];
        const int d = spec.dims[d_idx];
        const int n = spec.n_grid[static_cast<std::size_t>(n_idx)];
        if (cell.skipped) {
          ++skipped;
          result.warnings.push_back("skipped d=" + std::to_string(d) +
                                    " n=" + std::to_string(n) +
                                    " trial=" + std::to_string(trial) + ": " +
                                    cell.skip_reason);
          continue;
        }
        table.add_row({format_int(d), format_int(n), format_int(trial),
                       format_double(cell.report.lambda_min),
                       format_double(cell.report.lambda_max),
                       format_bool(cell.report.lower_ok),
                       format_bool(cell.report.upper_ok), format_double(cell.rho),
                       format_double(cell.report.R)});
      }
    }
  }
  if (2 * skipped > total) {
    throw RunFailure("isometry_trials: " + std::to_string(skipped) + " of " +
                     std::to_string(total) + " cells skipped");
  }

  // Pass fractions per (d, n) over the surviving trials.
  detail::Json fractions = detail::Json::array();
  for (std::size_t d_idx = 0; d_idx < spec.dims.size(); ++d_idx) {
    for (std::int64_t n_idx = 0; n_idx < n_count; ++n_idx) {
      std::int64_t kept = 0, lower = 0, upper = 0;
      for (int trial = 0; trial < spec.trials; ++trial) {
        const Cell& cell = cells[static_cast<std::size_t>(
            static_cast<std::int64_t>(d_idx) * cells_per_dim + trial * n_count + n_idx)];
        if (cell.skipped) continue;
        ++kept;
        lower += cell.report.lower_ok ? 1 : 0;
        upper += cell.report.upper_ok ? 1 : 0;
      }
      detail::Json entry;
      entry["d"] = spec.dims[d_idx];
      entry["n"] = spec.n_grid[static_cast<std::size_t>(n_idx)];
      entry["trials"] = kept;
      entry["lower_frac"] = kept ? static_cast<double>(lower) / kept : 0.0;
      entry["upper_frac"] = kept ? static_cast<double>(upper) / kept : 0.0;
      fractions.push_back(std::move(entry));
    }
  }

  detail::Json meta = detail::meta_header(spec, master_seed, config_hash);
  meta["fractions"] = std::move(fractions);
  meta["cells_total"] = total;
  meta["cells_skipped"] = skipped;
  result.table = table.to_string();
  result.meta = meta.dump(2) + "\n";
  return result;
}

// ---------------------------------------------------------------------------
// lemma_suite: closed forms vs Monte Carlo plus the analytic bounds.
// ---------------------------------------------------------------------------
namespace detail {

inline Eigen::VectorXd lemma_vector(Rng& rng, int d, double scale = 1.0) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

struct LemmaRow {
  std::string family;
  std::int64_t case_index = 0;
  int d = 0;
  double closed_form = 0.0;
  double bound = 0.0;
  double mc_estimate = 0.0;
  double mc_stderr = 0.0;
  std::int64_t samples = 0;
  bool pass = false;
};

}  // namespace detail

inline RunResult run_lemma_suite(const ExperimentSpec& spec, std::uint64_t master_seed,
                                 std::uint64_t config_hash, int threads) {
  const LemmaSpec& lemma = spec.lemma;
  const auto dim_for = [&](std::int64_t index, int min_d = 1) {
    return std::max(spec.dims[static_cast<std::size_t>(
                        index % static_cast<std::int64_t>(spec.dims.size()))],
                    min_d);
  };

  // Families: 0 arccos kernel, 1 gap bound, 2 shifted gap, 3 trig. Case 0 (and
  // case 1 where noted) are the pinned special cases; the rest are random.
  std::vector<detail::LemmaRow> arccos(static_cast<std::size_t>(lemma.arccos_pairs + 2));
  std::vector<detail::LemmaRow> gap(static_cast<std::size_t>(lemma.gap_cases + 2));
  std::vector<detail::LemmaRow> shifted(static_cast<std::size_t>(lemma.shifted_cases + 1));
  std::vector<detail::LemmaRow> trig(static_cast<std::size_t>(lemma.trig_pairs + 2));

  const auto arccos_case = [&](std::int64_t i) {
    detail::LemmaRow& row = arccos[static_cast<std::size_t>(i)];
    row.family = "arccos_kernel";
    row.case_index = i;
    Rng rng(derive_stream(master_seed, detail::kLemmaVectorSalt, 0,
                          static_cast<std::uint64_t>(i)));
    const std::uint64_t mc_seed = derive_stream(master_seed, detail::kLemmaMcSalt, 0,
                                                static_cast<std::uint64_t>(i));
    Eigen::VectorXd u, v;
    if (i == 0) {
      // u = v: moment is |u|^2 / 2.
      const int d = dim_for(i);
      u = detail::lemma_vector(rng, d);
      v = u;
    } else if (i == 1) {
      // Orthogonal unit pair: moment is 1/(2 pi).
      const int d = dim_for(i, 2);
      u = Eigen::VectorXd::Unit(d, 0);
      v = Eigen::VectorXd::Unit(d, 1);
    } else {
      const int d = dim_for(i);
      u = detail::lemma_vector(rng, d, rng.uniform(0.2, 2.0));
      v = detail::lemma_vector(rng, d, rng.uniform(0.2, 2.0));
    }
    const auto check = check_arccos_kernel_moment(
        u, v, static_cast<std::uint64_t>(lemma.arccos_samples), mc_seed);
    row.d = static_cast<int>(u.size());
    row.closed_form = check.closed_form;
    row.mc_estimate = check.mc_estimate;
    row.mc_stderr = check.mc_stderr;
    row.samples = static_cast<std::int64_t>(check.samples);
    row.pass = check.pass;
  };

  const auto gap_case = [&](std::int64_t i) {
    detail::LemmaRow& row = gap[static_cast<std::size_t>(i)];
    row.family = "gap_bound";
    row.case_index = i;
    Rng rng(derive_stream(master_seed, detail::kLemmaVectorSalt, 1,
                          static_cast<std::uint64_t>(i)));
    const std::uint64_t mc_seed = derive_stream(master_seed, detail::kLemmaMcSalt, 1,
                                                static_cast<std::uint64_t>(i));
    Eigen::VectorXd u, v;
    double gamma = 1.0;
    bool require_equality = false;
    if (i == 0) {
      // u = v: both sides vanish.
      const int d = dim_for(i);
      u = detail::lemma_vector(rng, d);
      v = u;
    } else if (i == 1) {
      // u = -v: the bound is attained exactly.
      const int d = dim_for(i);
      u = detail::lemma_vector(rng, d);
      v = -u;
      gamma = rng.uniform(0.5, 2.0);
      require_equality = true;
    } else {
      const int d = dim_for(i);
      u = detail::lemma_vector(rng, d);
      v = detail::lemma_vector(rng, d);
      gamma = rng.uniform(0.2, 5.0);
    }
    const auto check = check_relu_gap_bound(
        u, v, gamma, static_cast<std::uint64_t>(lemma.gap_samples), mc_seed);
    row.d = static_cast<int>(u.size());
    row.closed_form = check.moment.closed_form;
    row.bound = check.bound;
    row.mc_estimate = check.moment.mc_estimate;
    row.mc_stderr = check.moment.mc_stderr;
    row.samples = static_cast<std::int64_t>(check.moment.samples);
    row.pass = check.bound_holds && check.moment.pass;
    if (require_equality) {
      row.pass = row.pass && std::abs(check.moment.closed_form - check.bound) <=
                                 1e-12 * std::max(1.0, check.bound);
    }
  };

  const auto shifted_case = [&](std::int64_t i) {
    detail::LemmaRow& row = shifted[static_cast<std::size_t>(i)];
    row.family = "shifted_gap";
    row.case_index = i;
    Rng rng(derive_stream(master_seed, detail::kLemmaVectorSalt, 2,
                          static_cast<std::uint64_t>(i)));
    const std::uint64_t mc_seed = derive_stream(master_seed, detail::kLemmaMcSalt, 2,
                                                static_cast<std::uint64_t>(i));
    const int d = dim_for(i);
    const Eigen::VectorXd u = detail::lemma_vector(rng, d);
    const Eigen::VectorXd v = detail::lemma_vector(rng, d);
    // Case 0 pins the mu = 0 reduction; others draw |mu| in [0.25, 2].
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    if (i > 0) {
      mu = detail::lemma_vector(rng, d);
      if (mu.norm() > 0.0) mu *= rng.uniform(0.25, 2.0) / mu.norm();
    }
    const auto check = check_shifted_relu_gap(
        u, v, mu, static_cast<std::uint64_t>(lemma.shifted_samples), mc_seed);
    row.d = d;
    row.bound = check.bound;
    row.mc_estimate = check.mc_estimate;
    row.mc_stderr = check.mc_stderr;
    row.samples = static_cast<std::int64_t>(check.samples);
    row.pass = check.bound_holds;
  };

  const auto trig_case = [&](std::int64_t i) {
    detail::LemmaRow& row = trig[static_cast<std::size_t>(i)];
    row.family = "trig_bound";
    row.case_index = i;
    Rng rng(derive_stream(master_seed, detail::kLemmaVectorSalt, 3,
                          static_cast<std::uint64_t>(i)));
    Eigen::VectorXd u, v;
    if (i == 0) {
      // u = v: 0 <= 0.
      const int d = dim_for(i);
      u = detail::lemma_vector(rng, d);
      v = u;
    } else if (i == 1) {
      // Orthogonal unit pair: equality at 1/2 = 1/2.
      const int d = dim_for(i, 2);
      u = Eigen::VectorXd::Unit(d, 0);
      v = Eigen::VectorXd::Unit(d, 1);
    } else {
      // The claim only holds universally on acute angles; sample there.
      const int d = dim_for(i);
      u = detail::lemma_vector(rng, d, rng.uniform(0.2, 2.0));
      v = detail::lemma_vector(rng, d, rng.uniform(0.2, 2.0));
      if (u.dot(v) < 0.0) v = -v;
    }
    if (u.norm() == 0.0 || v.norm() == 0.0) {
      u = Eigen::VectorXd::Unit(std::max<Eigen::Index>(u.size(), 1), 0);
      v = u;
    }
    const auto check = check_trig_bound(u, v);
    row.d = static_cast<int>(u.size());
    row.closed_form = check.lhs;
    row.bound = check.rhs;
    row.pass = check.holds;
  };

  const std::int64_t arccos_count = static_cast<std::int64_t>(arccos.size());
  const std::int64_t gap_count = static_cast<std::int64_t>(gap.size());
  const std::int64_t shifted_count = static_cast<std::int64_t>(shifted.size());
  const std::int64_t trig_count = static_cast<std::int64_t>(trig.size());
  detail::parallel_for(
      threads, arccos_count + gap_count + shifted_count + trig_count,
      [&](std::int64_t i) {
        if (i < arccos_count) {
          arccos_case(i);
        } else if (i < arccos_count + gap_count) {
          gap_case(i - arccos_count);
        } else if (i < arccos_count + gap_count + shifted_count) {
          shifted_case(i - arccos_count - gap_count);
        } else {
          trig_case(i - arccos_count - gap_count - shifted_count);
        }
      });

  CsvTable table({"family", "case", "d", "closed_form", "bound", "mc_estimate",
                  "mc_stderr", "samples", "pass"});
  detail::Json summary;
  bool all_pass = true;
  for (const auto* family : {&arccos, &gap, &shifted, &trig}) {
    std::int64_t passed = 0;
    for (const auto& row : *family) {
      table.add_row({row.family, format_int(row.case_index), format_int(row.d),
                     format_double(row.closed_form), format_double(row.bound),
                     format_double(row.mc_estimate), format_double(row.mc_stderr),
                     format_int(row.samples), format_bool(row.pass)});
      passed += row.pass ? 1 : 0;
      all_pass = all_pass && row.pass;
    }
    summary[(*family)[0].family] = {{"passed", passed},
                                    {"total", static_cast<std::int64_t>(family->size())}};
  }

  detail::Json meta = detail::meta_header(spec, master_seed, config_hash);
  meta["families"] = std::move(summary);
  meta["all_pass"] = all_pass;

  RunResult result;
  result.table = table.to_string();
  result.meta = meta.dump(2) + "\n";
  result.checks_passed = all_pass;
  return result;
}

}  // namespace glds::bench
