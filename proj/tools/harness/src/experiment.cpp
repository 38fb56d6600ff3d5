#include "mimoic/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "mimoic/export.hpp"
#include "mimoic/metrics.hpp"
#include "mimoic/random.hpp"
#include "mimoic/serialization.hpp"

namespace mimoic::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Runs fn(i) for i in [0, count) on `workers` threads. Exceptions escaping
/// fn are rethrown after all threads join.
template <class Fn>
void parallel_for(long count, int workers, Fn&& fn) {
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (long i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(std::min<long>(count, 1024))));
  if (n == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

std::string artifact_stem(std::size_t snr_index, long id) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "snr%zu_r%06ld", snr_index + 1, id);
  return buf;
}

/// Per-realization output of one stage, rendered to text inside the worker
/// and emitted in realization order by the collector.
struct Chunk {
  std::vector<std::string> parts;
  std::optional<std::string> skipped;
};

/// All realizations across the SNR list, in output order.
std::vector<std::pair<std::size_t, long>> realization_grid(const ExperimentSpec& spec) {
  std::vector<std::pair<std::size_t, long>> grid;
  for (std::size_t s = 0; s < spec.snr_db.size(); ++s) {
    const int n = spec.realizations_at(s);
    for (long id = 1; id <= n; ++id) grid.emplace_back(s, id);
  }
  return grid;
}

template <class Fn>
RunSummary run_chunks(const ExperimentSpec& spec, const RunOptions& options, std::size_t parts,
                      std::vector<std::ofstream*> sinks, Fn&& stage) {
  const auto grid = realization_grid(spec);
  std::vector<Chunk> chunks(grid.size());
  parallel_for(static_cast<long>(grid.size()), options.workers, [&](long i) {
    const auto [snr_index, id] = grid[static_cast<std::size_t>(i)];
    Chunk& chunk = chunks[static_cast<std::size_t>(i)];
    chunk.parts.assign(parts, {});
    try {
      stage(snr_index, id, chunk);
    } catch (const DegenerateStreamError& e) {
      chunk.skipped = "snr " + num(spec.snr_db[snr_index]) + " dB realization " + std::to_string(id) + ": " + e.what();
    }
  });
  RunSummary summary;
  for (const auto& chunk : chunks) {
    if (chunk.skipped) {
      std::cerr << "skipped " << *chunk.skipped << '\n';
      summary.skipped.push_back(*chunk.skipped);
    } else {
      ++summary.processed;
    }
    for (std::size_t p = 0; p < parts && p < sinks.size(); ++p) *sinks[p] << chunk.parts[p];
  }
  return summary;
}

std::vector<int> broadcast(const json& value, int users, const char* field) {
  if (value.is_number_integer()) return std::vector<int>(static_cast<std::size_t>(users), value.get<int>());
  if (value.is_array()) {
    auto out = value.get<std::vector<int>>();
    if (out.size() != static_cast<std::size_t>(users)) {
      throw ConfigError(std::string(field) + ": expected one entry per user");
    }
    return out;
  }
  throw ConfigError(std::string(field) + ": expected an integer or a list");
}

Eigen::MatrixXd matrix_from(const json& value) {
  const auto rows = value.get<std::vector<std::vector<double>>>();
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rows[static_cast<std::size_t>(i)].size() != rows.size()) throw ConfigError("toy gains must be square");
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

double ratio(const std::vector<double>& s) { return s.back() / s.front(); }

double weighted_spread(const std::vector<double>& s, const std::vector<double>& w) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t l = 0; l < s.size(); ++l) {
    lo = std::min(lo, s[l] / w[l]);
    hi = std::max(hi, s[l] / w[l]);
  }
  return hi / lo;
}

StreamTable scaled(StreamTable table, double factor) {
  for (auto& row : table)
    for (auto& x : row) x *= factor;
  return table;
}

}  // namespace

// ExperimentSpec

NetworkConfig ExperimentSpec::network(double snr) const {
  NetworkConfig config;
  config.tx_antennas = tx_antennas;
  config.rx_antennas = rx_antennas;
  config.streams = streams;
  config.power_budget.assign(streams.size(), std::pow(10.0, snr / 10.0));
  if (weights.empty()) {
    for (int d : streams) config.weights.emplace_back(static_cast<std::size_t>(std::max(d, 0)), 1.0);
  } else {
    config.weights = weights;
  }
  config.epsilon = epsilon;
  config.inner_limit = inner_limit;
  config.bf_iters = bf_iters;
  config.validate();
  return config;
}

int ExperimentSpec::realizations_at(std::size_t snr_index) const {
  if (scale == RealizationScale::paper) {
    const double snr = snr_db.at(snr_index);
    constexpr std::pair<double, int> kPaperCounts[] = {{0.0, 1000}, {5.0, 10000}, {10.0, 100000}, {15.0, 1000000}};
    for (const auto& [at, count] : kPaperCounts) {
      if (std::abs(snr - at) < 1e-9) return count;
    }
  }
  return realizations;
}

BalanceOptions ExperimentSpec::balance_options(std::uint64_t schedule_seed) const {
  BalanceOptions options;
  options.outer_limit = outer_limit;
  options.delta_min_mode = delta_min_mode;
  options.inner.schedule = async_schedule ? Schedule::asynchronous : Schedule::synchronous;
  options.inner.schedule_seed = schedule_seed;
  return options;
}

void ExperimentSpec::validate() const {
  if (scenario.empty() || scenario.find_first_of(",\n\"") != std::string::npos) {
    throw ConfigError("scenario name must be non-empty and free of commas, quotes and newlines");
  }
  if (realizations < 1) throw ConfigError("realizations must be >= 1");
  if (snr_db.empty()) throw ConfigError("snr_db list must not be empty");
  if (outer_limit < 1) throw ConfigError("outer_limit must be >= 1");
  if (ber && ber_symbols < 1) throw ConfigError("ber.symbols must be >= 1");
  if (!(target_scale > 0.0)) throw ConfigError("target_scale must be positive");
  for (double snr : snr_db) {
    if (!std::isfinite(snr)) throw ConfigError("snr_db entries must be finite");
    network(snr);
  }
  if (toy) {
    if (toy->gains.rows() != toy->targets.size()) throw ConfigError("toy gains and targets disagree in size");
    if ((toy->gains.array() < 0.0).any() || (toy->targets.array() <= 0.0).any()) {
      throw ConfigError("toy gains must be nonnegative and targets positive");
    }
  }
}

ExperimentSpec parse_spec(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  ExperimentSpec spec;
  try {
    spec.scenario = j.value("scenario", spec.scenario);
    const int users = j.value("users", 3);
    if (users < 1) throw ConfigError("users must be >= 1");
    spec.tx_antennas = broadcast(j.value("tx_antennas", json(4)), users, "tx_antennas");
    spec.rx_antennas = broadcast(j.value("rx_antennas", json(4)), users, "rx_antennas");
    spec.streams = broadcast(j.value("streams", json(2)), users, "streams");

    if (j.contains("weights")) {
      const json& w = j.at("weights");
      if (w.is_string()) {
        if (w.get<std::string>() != "equal") throw ConfigError("weights: unknown profile '" + w.get<std::string>() + "'");
      } else if (w.is_array() && !w.empty() && w.front().is_number()) {
        const auto profile = w.get<std::vector<double>>();
        spec.weights.assign(static_cast<std::size_t>(users), profile);
      } else {
        spec.weights = w.get<StreamTable>();
      }
    }

    if (j.contains("snr_db")) {
      const json& s = j.at("snr_db");
      spec.snr_db = s.is_array() ? s.get<std::vector<double>>() : std::vector<double>{s.get<double>()};
    }
    spec.realizations = j.value("realizations", spec.realizations);
    spec.seed = j.value("seed", spec.seed);
    spec.epsilon = j.value("epsilon", spec.epsilon);
    spec.inner_limit = j.value("inner_limit", spec.inner_limit);
    spec.outer_limit = j.value("outer_limit", spec.outer_limit);
    spec.bf_iters = j.value("bf_iters", spec.bf_iters);
    spec.async_schedule = j.value("async_schedule", spec.async_schedule);
    spec.target_scale = j.value("target_scale", spec.target_scale);
    spec.write_artifacts = j.value("write_artifacts", spec.write_artifacts);

    const std::string mode = j.value("delta_min_mode", std::string("weighted"));
    if (mode == "weighted") {
      spec.delta_min_mode = DeltaMinMode::weighted;
    } else if (mode == "raw") {
      spec.delta_min_mode = DeltaMinMode::raw;
    } else {
      throw ConfigError("delta_min_mode must be 'weighted' or 'raw'");
    }

    const std::string scale = j.value("scale", std::string("desk"));
    if (scale == "desk") {
      spec.scale = RealizationScale::desk;
    } else if (scale == "paper") {
      spec.scale = RealizationScale::paper;
    } else {
      throw ConfigError("scale must be 'desk' or 'paper'");
    }

    if (j.contains("ber")) {
      const json& b = j.at("ber");
      spec.ber = b.value("enabled", true);
      spec.ber_symbols = b.value("symbols", spec.ber_symbols);
    }

    if (j.contains("toy_instance")) {
      const json& t = j.at("toy_instance");
      ToyInstance toy;
      toy.gains = matrix_from(t.at("gains"));
      const auto targets = t.at("targets").get<std::vector<double>>();
      toy.targets = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
      spec.toy = std::move(toy);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("configuration '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_spec(j);
}

std::uint64_t realization_seed(const ExperimentSpec& spec, std::size_t snr_index, long id, SeedPurpose purpose) {
  return derive_seed(spec.seed, {static_cast<std::uint64_t>(snr_index), static_cast<std::uint64_t>(id),
                                 static_cast<std::uint64_t>(purpose)});
}

Realization prepare_realization(const ExperimentSpec& spec, std::size_t snr_index, long id) {
  const double snr = spec.snr_db.at(snr_index);
  NetworkConfig config = spec.network(snr);
  ChannelSet channels = generate_channels(config, realization_seed(spec, snr_index, id, SeedPurpose::channel));
  BeamformerSet bf = max_sinr_alternate(channels, config, realization_seed(spec, snr_index, id, SeedPurpose::beamformer));
  StreamTable sinrs = all_sinrs(channels, bf, PowerAllocation::equal_split(config));
  sort_streams_by_sinr(bf, sinrs);
  return {snr_index, snr, id, std::move(config), std::move(channels), std::move(bf), std::move(sinrs)};
}

// beamform

RunSummary run_beamform(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  ensure_dir(options.out_dir);
  const fs::path artifacts = options.out_dir / "artifacts";
  if (spec.write_artifacts) ensure_dir(artifacts);

  const fs::path csv_path = options.out_dir / "beamform_sinr.csv";
  auto csv = open_output(csv_path);
  csv << "scenario,seed,snr_db,realization,k,l,sinr,spread\n";

  auto summary = run_chunks(spec, options, 1, {&csv}, [&](std::size_t snr_index, long id, Chunk& chunk) {
    const Realization r = prepare_realization(spec, snr_index, id);
    if (spec.write_artifacts) {
      const std::string stem = artifact_stem(snr_index, id);
      save_channels(artifacts / (stem + ".channels"), r.channels);
      save_beamformers(artifacts / (stem + ".beams"), r.beamformers);
    }
    std::ostringstream rows;
    for (std::size_t k = 0; k < r.initial_sinrs.size(); ++k) {
      const auto& s = r.initial_sinrs[k];
      for (std::size_t l = 0; l < s.size(); ++l) {
        rows << spec.scenario << ',' << spec.seed << ',' << num(r.snr_db) << ',' << r.id << ',' << k + 1 << ','
             << l + 1 << ',' << num(s[l]) << ',' << num(ratio(s)) << '\n';
      }
    }
    chunk.parts[0] = rows.str();
  });
  finish(csv, csv_path);
  return summary;
}

// balance

RunSummary run_balance(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  ensure_dir(options.out_dir);
  const fs::path summary_path = options.out_dir / "balance_summary.csv";
  const fs::path users_path = options.out_dir / "balance_users.csv";
  const fs::path streams_path = options.out_dir / "balance_streams.csv";
  const fs::path trace_path = options.out_dir / "balance_trace.jsonl";
  auto summary_csv = open_output(summary_path);
  auto users_csv = open_output(users_path);
  auto streams_csv = open_output(streams_path);
  auto trace = open_output(trace_path);
  summary_csv << "scenario,seed,snr_db,realization,status,converged,outer_iters,inner_iters,fairness_gap,"
                 "sum_rate_pre,sum_rate_post\n";
  users_csv << "scenario,seed,snr_db,realization,k,converged,ratio_pre,ratio_post,weighted_spread_post,"
               "sum_rate_pre,sum_rate_post\n";
  streams_csv << metric_csv_header() << '\n';

  auto summary = run_chunks(
      spec, options, 4, {&summary_csv, &users_csv, &streams_csv, &trace},
      [&](std::size_t snr_index, long id, Chunk& chunk) {
        const std::string prefix = spec.scenario + ',' + std::to_string(spec.seed) + ',' +
                                   num(spec.snr_db[snr_index]) + ',' + std::to_string(id) + ',';
        try {
          const Realization r = prepare_realization(spec, snr_index, id);
          const BalanceResult result = balance(
              r.channels, r.beamformers, r.config,
              spec.balance_options(realization_seed(spec, snr_index, id, SeedPurpose::schedule)));

          const PowerAllocation equal = PowerAllocation::equal_split(r.config);
          MetricReport pre;
          MetricReport post;
          if (spec.ber) {
            const BerOptions ber{spec.ber_symbols, realization_seed(spec, snr_index, id, SeedPurpose::ber)};
            pre = simulate_ber(r.channels, r.beamformers, equal, ber);
            post = simulate_ber(r.channels, r.beamformers, result.powers, ber);
          } else {
            pre = analytic_report(r.channels, r.beamformers, equal);
            post = analytic_report(r.channels, r.beamformers, result.powers);
          }

          std::ostringstream s;
          s << prefix << "ok," << (result.converged ? 1 : 0) << ',' << result.outer_iters << ','
            << result.inner_iters_total << ',' << num(result.fairness_gap) << ',' << num(pre.sum_rate) << ','
            << num(post.sum_rate) << '\n';
          chunk.parts[0] = s.str();

          std::ostringstream u;
          const StreamTable& final_sinrs = result.final_sinrs();
          for (std::size_t k = 0; k < final_sinrs.size(); ++k) {
            u << prefix << k + 1 << ',' << (result.converged ? 1 : 0) << ',' << num(ratio(r.initial_sinrs[k])) << ','
              << num(ratio(final_sinrs[k])) << ',' << num(weighted_spread(final_sinrs[k], r.config.weights[k])) << ','
              << num(pre.user_sum_rate[k]) << ',' << num(post.user_sum_rate[k]) << '\n';
          }
          chunk.parts[1] = u.str();

          std::ostringstream m;
          write_metric_rows(m, pre, spec.scenario, spec.seed, r.snr_db, r.id, "pre");
          write_metric_rows(m, post, spec.scenario, spec.seed, r.snr_db, r.id, "post");
          chunk.parts[2] = m.str();

          // One certificate per outer iteration, at that iteration's targets.
          std::vector<json> records = balance_records(result);
          for (std::size_t i = 0; i < records.size(); ++i) {
            const auto map = build_map(r.channels, r.beamformers, result.steps[i].targets.targets);
            records[i]["certificate"] = to_json(certify(map));
          }
          std::ostringstream t;
          write_json_lines(t, records,
                           json{{"scenario", spec.scenario}, {"snr_db", r.snr_db}, {"realization", r.id},
                                {"converged", result.converged}});
          chunk.parts[3] = t.str();
        } catch (const DegenerateStreamError& e) {
          chunk.parts[0] = prefix + "skipped,0,0,0,,,\n";
          throw;
        }
      });
  finish(summary_csv, summary_path);
  finish(users_csv, users_path);
  finish(streams_csv, streams_path);
  finish(trace, trace_path);
  return summary;
}

// sweep

namespace {

/// Running mean and standard error.
struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  long n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
  double std_error() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(sum_sq / static_cast<double>(n) - m * m, 0.0) * static_cast<double>(n) /
                       static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
  }
};

/// Pooled bit errors plus the spread of the per-realization BER, which is
/// what the pooled rate's standard error has to reflect when every
/// realization contributes the same number of bits.
struct BitCount {
  std::uint64_t errors = 0;
  std::uint64_t bits = 0;
  Moments per_realization;

  void add(std::uint64_t e, std::uint64_t b) {
    errors += e;
    bits += b;
    per_realization.add(b == 0 ? 0.0 : static_cast<double>(e) / static_cast<double>(b));
  }
  double rate() const { return bits == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(bits); }
};

struct VariantAggregate {
  Moments sum_rate;
  Moments converged;
  std::vector<std::vector<Moments>> sinr;
  std::vector<std::vector<BitCount>> ber;
  std::vector<BitCount> by_stream;  // stream l pooled over users
  BitCount total;

  void add(const MetricReport& report) {
    sum_rate.add(report.sum_rate);
    if (sinr.empty()) {
      for (const auto& user : report.streams) {
        sinr.emplace_back(user.size());
        ber.emplace_back(user.size());
      }
    }
    std::size_t max_streams = 0;
    for (std::size_t k = 0; k < report.streams.size(); ++k) {
      max_streams = std::max(max_streams, report.streams[k].size());
      for (std::size_t l = 0; l < report.streams[k].size(); ++l) {
        const auto& m = report.streams[k][l];
        sinr[k][l].add(m.sinr);
        ber[k][l].add(m.bit_errors, m.bits);
      }
    }
    if (by_stream.size() < max_streams) by_stream.resize(max_streams);
    for (std::size_t l = 0; l < max_streams; ++l) {
      std::uint64_t e = 0;
      std::uint64_t b = 0;
      for (const auto& user : report.streams) {
        if (l < user.size()) {
          e += user[l].bit_errors;
          b += user[l].bits;
        }
      }
      by_stream[l].add(e, b);
    }
    total.add(report.bit_errors, report.bits);
  }
};

struct SweepSample {
  MetricReport unbalanced;
  MetricReport balanced;
  bool converged = false;
};

}  // namespace

RunSummary run_sweep(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  ensure_dir(options.out_dir);
  const fs::path csv_path = options.out_dir / "sweep.csv";
  auto csv = open_output(csv_path);
  csv << "scenario,seed,snr_db,variant,metric,value,std_error,samples,bits\n";

  RunSummary summary;
  for (std::size_t s = 0; s < spec.snr_db.size(); ++s) {
    const long count = spec.realizations_at(s);
    std::vector<std::optional<SweepSample>> samples(static_cast<std::size_t>(count));
    std::vector<std::string> reasons(static_cast<std::size_t>(count));
    parallel_for(count, options.workers, [&](long i) {
      const long id = i + 1;
      try {
        const Realization r = prepare_realization(spec, s, id);
        const BalanceResult result =
            balance(r.channels, r.beamformers, r.config,
                    spec.balance_options(realization_seed(spec, s, id, SeedPurpose::schedule)));
        const PowerAllocation equal = PowerAllocation::equal_split(r.config);
        SweepSample sample;
        sample.converged = result.converged;
        if (spec.ber) {
          const BerOptions ber{spec.ber_symbols, realization_seed(spec, s, id, SeedPurpose::ber)};
          sample.unbalanced = simulate_ber(r.channels, r.beamformers, equal, ber);
          sample.balanced = simulate_ber(r.channels, r.beamformers, result.powers, ber);
        } else {
          sample.unbalanced = analytic_report(r.channels, r.beamformers, equal);
          sample.balanced = analytic_report(r.channels, r.beamformers, result.powers);
        }
        samples[static_cast<std::size_t>(i)] = std::move(sample);
      } catch (const DegenerateStreamError& e) {
        reasons[static_cast<std::size_t>(i)] =
            "snr " + num(spec.snr_db[s]) + " dB realization " + std::to_string(id) + ": " + e.what();
      }
    });

    VariantAggregate without;
    VariantAggregate with;
    for (long i = 0; i < count; ++i) {
      const auto& sample = samples[static_cast<std::size_t>(i)];
      if (!sample) {
        std::cerr << "skipped " << reasons[static_cast<std::size_t>(i)] << '\n';
        summary.skipped.push_back(reasons[static_cast<std::size_t>(i)]);
        continue;
      }
      ++summary.processed;
      without.add(sample->unbalanced);
      with.add(sample->balanced);
      with.converged.add(sample->converged ? 1.0 : 0.0);
    }

    const std::string prefix = spec.scenario + ',' + std::to_string(spec.seed) + ',' + num(spec.snr_db[s]) + ',';
    auto row = [&](const char* variant, const std::string& metric, const Moments& m, std::uint64_t bits) {
      csv << prefix << variant << ',' << metric << ',' << num(m.mean()) << ',' << num(m.std_error()) << ',' << m.n
          << ',' << bits << '\n';
    };
    auto ber_row = [&](const char* variant, const std::string& metric, const BitCount& b) {
      csv << prefix << variant << ',' << metric << ',' << num(b.rate()) << ',' << num(b.per_realization.std_error())
          << ',' << b.per_realization.n << ',' << b.bits << '\n';
    };
    for (const auto& [variant, agg] : {std::pair<const char*, const VariantAggregate*>{"without-balancing", &without},
                                       std::pair<const char*, const VariantAggregate*>{"with-balancing", &with}}) {
      row(variant, "sum_rate", agg->sum_rate, 0);
      if (agg == &with) row(variant, "converged_fraction", agg->converged, 0);
      for (std::size_t k = 0; k < agg->sinr.size(); ++k) {
        for (std::size_t l = 0; l < agg->sinr[k].size(); ++l) {
          row(variant, "sinr_k" + std::to_string(k + 1) + "_l" + std::to_string(l + 1), agg->sinr[k][l], 0);
        }
      }
      if (spec.ber) {
        ber_row(variant, "ber", agg->total);
        for (std::size_t l = 0; l < agg->by_stream.size(); ++l) {
          ber_row(variant, "ber_l" + std::to_string(l + 1), agg->by_stream[l]);
        }
        for (std::size_t k = 0; k < agg->ber.size(); ++k) {
          for (std::size_t l = 0; l < agg->ber[k].size(); ++l) {
            ber_row(variant, "ber_k" + std::to_string(k + 1) + "_l" + std::to_string(l + 1), agg->ber[k][l]);
          }
        }
      }
    }
  }
  finish(csv, csv_path);
  return summary;
}

// certify

RunSummary run_certify(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  ensure_dir(options.out_dir);
  const fs::path csv_path = options.out_dir / "certify.csv";
  const fs::path jsonl_path = options.out_dir / "certify.jsonl";
  auto csv = open_output(csv_path);
  auto jsonl = open_output(jsonl_path);
  csv << "scenario,seed,snr_db,realization,c,c_perron,rho,contractive,feasible\n";

  auto emit = [&](const std::string& snr, long id, const ContractionCertificate& cert, std::string* rows,
                  std::string* lines) {
    std::ostringstream c;
    c << spec.scenario << ',' << spec.seed << ',' << snr << ',' << id << ',' << num(cert.c) << ','
      << (std::isfinite(cert.c_perron) ? num(cert.c_perron) : std::string()) << ',' << num(cert.rho) << ','
      << (cert.contractive ? 1 : 0) << ',' << (cert.rho < 1.0 ? 1 : 0) << '\n';
    *rows += c.str();
    json record = to_json(cert);
    record["scenario"] = spec.scenario;
    record["realization"] = id;
    if (!snr.empty()) record["snr_db"] = std::stod(snr);
    *lines += record.dump() + "\n";
  };

  RunSummary summary;
  if (spec.toy) {
    const auto map = build_map(spec.toy->gains, spec.toy->targets * spec.target_scale);
    std::string rows;
    std::string lines;
    emit("", 0, certify(map), &rows, &lines);
    csv << rows;
    jsonl << lines;
    summary.processed = 1;
  } else {
    summary = run_chunks(spec, options, 2, {&csv, &jsonl}, [&](std::size_t snr_index, long id, Chunk& chunk) {
      const double snr = spec.snr_db[snr_index];
      NetworkConfig config = spec.network(snr);
      std::optional<Realization> r;
      if (options.artifacts_dir) {
        const std::string stem = artifact_stem(snr_index, id);
        ChannelSet channels = load_channels(*options.artifacts_dir / (stem + ".channels"));
        BeamformerSet bf = load_beamformers(*options.artifacts_dir / (stem + ".beams"));
        channels.check(config);
        bf.check(config);
        StreamTable sinrs = all_sinrs(channels, bf, PowerAllocation::equal_split(config));
        r.emplace(Realization{snr_index, snr, id, config, std::move(channels), std::move(bf), std::move(sinrs)});
      } else {
        r.emplace(prepare_realization(spec, snr_index, id));
      }
      const TargetState targets = update_targets(r->initial_sinrs, r->config.weights);
      const auto map = build_map(r->channels, r->beamformers, scaled(targets.targets, spec.target_scale));
      emit(num(snr), id, certify(map), &chunk.parts[0], &chunk.parts[1]);
    });
  }
  finish(csv, csv_path);
  finish(jsonl, jsonl_path);
  return summary;
}

}  // namespace mimoic::harness
