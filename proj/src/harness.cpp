// Copyright 2026 The eswmv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eswmv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "eswmv/random.hpp"
#include "eswmv/stream_format.hpp"

namespace eswmv {

namespace {

// Seed streams derived from a trial seed.
enum SeedStream : std::uint64_t { kSignalSeed = 0, kNoiseSeed = 1, kMixingSeed = 2, kWeightSeed = 3 };

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::string format_optional(const std::optional<double>& value) {
  return value ? format_number(*value) : std::string();
}

std::string trial_dir_name(std::size_t trial) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trial_%03zu", trial);
  return buf;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

void ExperimentConfig::validate() const {
  if (!input && (n == 0 || basis_count == 0 || basis_count > n)) {
    throw InvalidArgument("experiment: need 1 <= basis_count <= n");
  }
  if (input && !std::filesystem::exists(*input)) {
    throw InvalidArgument("experiment: input " + input->string() + " does not exist");
  }
  if (width == 0) throw InvalidArgument("experiment: decoder width must be positive");
  if (trials == 0) throw InvalidArgument("experiment: trials must be positive");
  if (eta && !(*eta >= 0.0)) throw InvalidArgument("experiment: eta must be nonnegative");
  if (!(step_fraction > 0.0)) throw InvalidArgument("experiment: step fraction must be positive");
}

CurveSeries RunRecord::psnr_curve() const {
  CurveSeries c("psnr");
  for (const auto& r : rows) c.push(r.iteration, r.psnr);
  return c;
}

CurveSeries RunRecord::mse_curve() const {
  CurveSeries c("mse");
  for (const auto& r : rows) c.push(r.iteration, r.mse);
  return c;
}

CurveSeries RunRecord::variance_curve() const {
  CurveSeries c("variance");
  for (const auto& [it, v] : verdict.variance_trace) c.push(it, v);
  return c;
}

Scenario make_scenario(const ExperimentConfig& cfg, std::uint64_t seed) {
  Scenario s;
  if (cfg.input) {
    s.truth = read_pgm(*cfg.input);
  } else {
    Rng rng(derive_seed(seed, kSignalSeed));
    TrigBasisSpec spec{cfg.n, cfg.basis_count, {}};
    for (std::size_t i = 0; i < cfg.basis_count; ++i) spec.coefficients.push_back(rng.normal());
    s.truth = make_trig_signal(spec);
  }
  NoiseSpec noise{cfg.noise, cfg.level, derive_seed(seed, kNoiseSeed), cfg.clip, cfg.noise_parameter};
  s.observation = add_noise(s.truth, noise);
  return s;
}

RunRecord run_trial(const ExperimentConfig& cfg, std::size_t trial, const std::filesystem::path& dir) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  RunRecord record;
  record.trial = trial;
  record.seed = cfg.trial_seed(trial);

  const Scenario scenario = make_scenario(cfg, record.seed);
  const Image& truth = scenario.truth;
  const std::size_t n = truth.size();
  const std::size_t support = std::min(cfg.kernel_support, n % 2 == 1 ? n : n - 1);
  const UpsamplingKernel kernel = UpsamplingKernel::triangular(n, support);
  TwoLayerDecoder decoder(kernel, cfg.width, derive_seed(record.seed, kMixingSeed));

  TrainerConfig trainer;
  trainer.eta = cfg.eta.value_or(cfg.step_fraction * max_step_size(kernel));
  trainer.max_iters = cfg.max_iters;
  trainer.seed = derive_seed(record.seed, kWeightSeed);
  TrainStream stream(std::move(decoder), Image::signal(scenario.observation.data()), trainer);

  auto detector = make_detector(cfg.detector);
  std::optional<Verdict> verdict;

  std::ofstream recording;
  if (cfg.record_stream) {
    recording = open_output(*cfg.record_stream);
    write_stream_header(recording, static_cast<std::uint32_t>(n));
  }

  const bool two_d = truth.is_2d() && truth.height() >= kSsimWindow && truth.width() >= kSsimWindow;
  while (auto step = stream.next()) {
    const Image frame(truth.height(), truth.width(), step->x.data());
    TraceRow row;
    row.iteration = step->iteration;
    row.loss = step->loss;
    row.mse = mse(truth, frame);
    row.psnr = psnr(truth, frame);
    if (two_d) row.ssim = ssim(truth, frame);
    if (!verdict || cfg.on_iterate) {
      // The detector sees float32 samples, exactly as a reader of the
      // recorded stream would.
      const Image quantized = quantize_to_float(frame);
      if (cfg.on_iterate) cfg.on_iterate(step->iteration, quantized);
      if (!verdict) {
        if (recording.is_open()) write_stream_frame(recording, quantized);
        verdict = detector->step(quantized);
        row.variance = detector->last_variance();
      }
    }
    record.rows.push_back(row);
    if (verdict && !cfg.full_trace) break;
  }
  record.verdict = verdict ? std::move(*verdict) : detector->finish();

  if (record.rows.empty()) {
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return record;
  }
  record.detected_iteration =
      record.verdict.has_best() ? record.verdict.best_iteration : record.rows.back().iteration;
  const CurveSeries psnr_trace = record.psnr_curve();
  record.peak_iteration = psnr_trace.argmax();
  record.peak_psnr = psnr_trace.max();
  record.detected_psnr = *psnr_trace.value_at(record.detected_iteration);
  record.psnr_gap = detection_gap(psnr_trace, record.detected_iteration);
  if (two_d) {
    CurveSeries ssim_trace("ssim");
    for (const auto& r : record.rows) ssim_trace.push(r.iteration, *r.ssim);
    record.peak_ssim = ssim_trace.max();
    record.detected_ssim = *ssim_trace.value_at(record.detected_iteration);
    record.ssim_gap = detection_gap(ssim_trace, record.detected_iteration);
  }
  record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    auto trace = open_output(dir / "trace.csv");
    write_trace_csv(trace, record);
    auto summary = open_output(dir / "summary.csv");
    write_summary_header(summary);
    write_summary_row(summary, record);
  }
  return record;
}

RunRecord run_denoise(const ExperimentConfig& cfg) { return run_trial(cfg, 0, cfg.out_dir); }

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn,
                  const std::vector<std::size_t>& order) {
  if (!order.empty() && order.size() != count) throw InvalidArgument("parallel_for: bad order");
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(order.empty() ? i : order[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, std::size_t threads) {
  cfg.validate();
  std::vector<RunRecord> records(cfg.trials);
  if (cfg.trials == 1) {
    records[0] = run_trial(cfg, 0, cfg.out_dir);
    return records;
  }
  ExperimentConfig per_trial = cfg;
  per_trial.record_stream.reset();
  parallel_for(cfg.trials, threads, [&](std::size_t trial) {
    const auto dir = cfg.out_dir.empty() ? std::filesystem::path() : cfg.out_dir / trial_dir_name(trial);
    records[trial] = run_trial(per_trial, trial, dir);
  });
  if (!cfg.out_dir.empty()) {
    auto summary = open_output(cfg.out_dir / "summary.csv");
    write_summary_header(summary);
    for (const auto& r : records) write_summary_row(summary, r);
  }
  return records;
}

void write_trace_csv(std::ostream& out, const RunRecord& record) {
  out << "iter,loss,mse,psnr,ssim,variance\n";
  for (const auto& r : record.rows) {
    out << r.iteration << ',' << format_number(r.loss) << ',' << format_number(r.mse) << ','
        << format_number(r.psnr) << ',' << format_optional(r.ssim) << ','
        << format_optional(r.variance) << '\n';
  }
}

void write_summary_header(std::ostream& out) {
  out << "trial,seed,stopped,stop_iteration,best_iteration,detected_iteration,peak_iteration,"
         "detected_psnr,peak_psnr,psnr_gap,detected_ssim,peak_ssim,ssim_gap,best_variance\n";
}

void write_summary_row(std::ostream& out, const RunRecord& r) {
  out << r.trial << ',' << r.seed << ',' << (r.verdict.stopped ? 1 : 0) << ','
      << r.verdict.stop_iteration << ',' << r.verdict.best_iteration << ',' << r.detected_iteration
      << ',' << r.peak_iteration << ',' << format_number(r.detected_psnr) << ','
      << format_number(r.peak_psnr) << ',' << format_number(r.psnr_gap) << ','
      << format_optional(r.detected_ssim) << ',' << format_optional(r.peak_ssim) << ','
      << format_optional(r.ssim_gap) << ',' << format_number(r.verdict.best_variance) << '\n';
}

// ---------------------------------------------------------------------------

StreamDetection detect_stream(std::istream& in, const DetectorParams& params) {
  StreamReader reader(in);
  auto detector = make_detector(params);
  StreamDetection result;
  while (auto frame = reader.next()) {
    ++result.frames;
    if (auto verdict = detector->step(*frame)) {
      result.verdict = std::move(*verdict);
      return result;
    }
  }
  result.verdict = detector->finish();
  return result;
}

void write_variance_csv(std::ostream& out, const Verdict& verdict) {
  out << "iter,variance\n";
  for (const auto& [it, v] : verdict.variance_trace) out << it << ',' << format_number(v) << '\n';
}

// ---------------------------------------------------------------------------

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kWindow: return "W";
    case SweepAxis::kPatience: return "P";
    case SweepAxis::kAlpha: return "alpha";
    case SweepAxis::kNoiseLevel: return "noise-level";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (auto axis : {SweepAxis::kWindow, SweepAxis::kPatience, SweepAxis::kAlpha, SweepAxis::kNoiseLevel}) {
    if (to_string(axis) == name) return axis;
  }
  throw InvalidArgument("unknown sweep axis '" + std::string(name) + "'");
}

namespace {

std::size_t parse_count(const std::string& text) {
  std::size_t pos = 0;
  const unsigned long long value = std::stoull(text, &pos);
  if (pos != text.size() || value == 0) throw InvalidArgument("expected a positive integer, got '" + text + "'");
  return static_cast<std::size_t>(value);
}

ExperimentConfig apply_axis(ExperimentConfig cfg, SweepAxis axis, const std::string& value) {
  switch (axis) {
    case SweepAxis::kWindow: cfg.detector.window = parse_count(value); break;
    case SweepAxis::kPatience: cfg.detector.patience = parse_count(value); break;
    case SweepAxis::kAlpha: {
      std::size_t pos = 0;
      cfg.detector.alpha = std::stod(value, &pos);
      if (pos != value.size()) throw InvalidArgument("bad alpha '" + value + "'");
      break;
    }
    case SweepAxis::kNoiseLevel: cfg.level = parse_noise_level(value); break;
  }
  cfg.record_stream.reset();
  return cfg;
}

}  // namespace

std::vector<SweepRow> sweep(const ExperimentConfig& base, SweepAxis axis,
                            const std::vector<std::string>& values, const SweepOptions& options) {
  if (values.empty()) throw InvalidArgument("sweep: no values");
  base.validate();
  std::vector<ExperimentConfig> configs;
  for (const auto& v : values) configs.push_back(apply_axis(base, axis, v));

  const std::size_t jobs = values.size() * base.trials;
  std::vector<SweepRow> rows(jobs);
  std::vector<std::size_t> order(jobs);
  std::iota(order.begin(), order.end(), 0);
  if (options.shuffle_seed) {
    Rng rng(*options.shuffle_seed);
    for (std::size_t i = jobs; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
  }
  parallel_for(jobs, options.threads, [&](std::size_t job) {
    const std::size_t vi = job / base.trials;
    const std::size_t trial = job % base.trials;
    std::filesystem::path dir;
    if (!base.out_dir.empty()) {
      dir = base.out_dir / (std::string(to_string(axis)) + "_" + values[vi]) / trial_dir_name(trial);
    }
    rows[job] = SweepRow{values[vi], vi, run_trial(configs[vi], trial, dir)};
  }, order);

  if (!base.out_dir.empty()) {
    std::filesystem::create_directories(base.out_dir);
    auto out = open_output(base.out_dir / "sweep.csv");
    write_sweep_csv(out, axis, rows);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepRow>& rows) {
  out << "axis,value,trial,seed,stopped,stop_iteration,best_iteration,peak_iteration,"
         "detected_psnr,peak_psnr,psnr_gap,ssim_gap\n";
  for (const auto& row : rows) {
    const auto& r = row.record;
    out << to_string(axis) << ',' << row.value << ',' << r.trial << ',' << r.seed << ','
        << (r.verdict.stopped ? 1 : 0) << ',' << r.verdict.stop_iteration << ','
        << r.verdict.best_iteration << ',' << r.peak_iteration << ','
        << format_number(r.detected_psnr) << ',' << format_number(r.peak_psnr) << ','
        << format_number(r.psnr_gap) << ',' << format_optional(r.ssim_gap) << '\n';
  }
}

// ---------------------------------------------------------------------------

OracleReport oracle_report(const SpectralModel& model, std::size_t window, std::size_t steps) {
  if (window == 0) throw InvalidArgument("oracle_report: window must be >= 1");
  model.validate();
  const auto frames = simulate_linearized(model, steps + window - 1);
  OracleReport report;
  for (std::size_t t = 0; t <= steps; ++t) {
    OracleRow row;
    row.t = t;
    row.closed_form = closed_form_wmv(model, window, t);
    row.empirical = windowed_variance(std::span<const Image>(frames).subspan(t, window));
    const double diff = std::abs(row.closed_form - row.empirical);
    row.rel_err = row.closed_form != 0.0 ? diff / std::abs(row.closed_form) : diff;
    report.max_rel_err = std::max(report.max_rel_err, row.rel_err);
    report.rows.push_back(row);
  }
  return report;
}

void write_oracle_csv(std::ostream& out, const OracleReport& report) {
  out << "t,closed_form,empirical,abs_rel_err\n";
  for (const auto& r : report.rows) {
    out << r.t << ',' << format_number(r.closed_form) << ',' << format_number(r.empirical) << ','
        << format_number(r.rel_err) << '\n';
  }
  out << "max,,," << format_number(report.max_rel_err) << '\n';
}

SpectralModel kernel_spectral_model(const UpsamplingKernel& kernel, const Eigen::VectorXd& y_hat,
                                    double eta) {
  const std::size_t n = kernel.size();
  if (static_cast<std::size_t>(y_hat.size()) != n) throw InvalidArgument("kernel_spectral_model: size mismatch");
  const auto by_frequency = spectrum_by_frequency(kernel);
  SpectralModel model;
  model.left_vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t b = 0; b < n; ++b) {
    const auto phi = trig_basis_function(n, b);
    for (std::size_t j = 0; j < n; ++j) {
      model.left_vectors(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) = phi[j];
    }
    model.sigmas.push_back(by_frequency[(b + 1) / 2]);
  }
  model.y_hat = y_hat;
  model.eta = eta;
  return model;
}

}  // namespace eswmv
