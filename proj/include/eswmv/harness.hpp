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

#ifndef ESWMV_HARNESS_HPP_
#define ESWMV_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eswmv/decoder.hpp"
#include "eswmv/detector.hpp"
#include "eswmv/ntk_oracle.hpp"
#include "eswmv/signals.hpp"

namespace eswmv {

// Triangular kernel support used when none is given (n = 64 setting).
inline constexpr std::size_t kDefaultKernelSupport = 41;
inline constexpr std::size_t kDefaultMaxIters = 10000;

struct ExperimentConfig {
  // Ground truth: a random trig signal of length n in the span of the first
  // basis_count functions, or a PGM image when input is set.
  std::size_t n = 64;
  std::size_t basis_count = 8;
  std::optional<std::filesystem::path> input;

  NoiseKind noise = NoiseKind::kGaussian;
  NoiseLevel level = NoiseLevel::kHigh;
  std::optional<double> noise_parameter;
  bool clip = true;

  std::size_t width = 256;
  std::size_t kernel_support = kDefaultKernelSupport;
  // Step size; when unset, step_fraction * max_step_size(kernel).
  std::optional<double> eta;
  double step_fraction = 0.5;
  std::size_t max_iters = kDefaultMaxIters;

  DetectorParams detector;
  // Keep training to max_iters after the verdict so the peak is taken over
  // the whole trajectory. The verdict itself is unaffected.
  bool full_trace = false;

  std::filesystem::path out_dir;  // empty: write nothing
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
  // Writes the iterate stream (ESWM) of single-trial runs here.
  std::optional<std::filesystem::path> record_stream;

  // Called with every iterate as the detector would see it (float32 samples),
  // including those after the verdict when full_trace is set.
  std::function<void(std::size_t iteration, const Image& frame)> on_iterate;

  std::uint64_t trial_seed(std::size_t trial) const { return base_seed + trial; }
  void validate() const;
};

struct TraceRow {
  std::size_t iteration = 0;
  double loss = 0.0;
  double mse = 0.0;
  double psnr = 0.0;
  std::optional<double> ssim;
  std::optional<double> variance;
};

struct RunRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<TraceRow> rows;
  Verdict verdict;
  std::size_t detected_iteration = 0;
  std::size_t peak_iteration = 0;
  double detected_psnr = 0.0;
  double peak_psnr = 0.0;
  double psnr_gap = 0.0;
  std::optional<double> detected_ssim;
  std::optional<double> peak_ssim;
  std::optional<double> ssim_gap;
  double wall_seconds = 0.0;

  CurveSeries psnr_curve() const;
  CurveSeries mse_curve() const;
  CurveSeries variance_curve() const;
};

// Deterministic number formatting shared by all CSV writers: 12 significant
// digits, "inf"/"-inf"/"nan" for non-finite values.
std::string format_number(double value);

// Scenario inputs of one trial: ground truth and corrupted observation.
struct Scenario {
  Image truth;
  Image observation;
};
Scenario make_scenario(const ExperimentConfig& cfg, std::uint64_t seed);

// One denoise-train-detect trial. Writes trace.csv and summary.csv into
// `dir` when it is non-empty.
RunRecord run_trial(const ExperimentConfig& cfg, std::size_t trial, const std::filesystem::path& dir);

// Single trial with the files written to cfg.out_dir.
RunRecord run_denoise(const ExperimentConfig& cfg);

// All trials on a worker pool. With more than one trial each writes into
// out_dir/trial_NNN and the summaries are merged into out_dir/summary.csv.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, std::size_t threads = 0);

void write_trace_csv(std::ostream& out, const RunRecord& record);
void write_summary_header(std::ostream& out);
void write_summary_row(std::ostream& out, const RunRecord& record);

// Stream ingestion for external trainers.
struct StreamDetection {
  Verdict verdict;
  std::size_t frames = 0;
};
StreamDetection detect_stream(std::istream& in, const DetectorParams& params);
void write_variance_csv(std::ostream& out, const Verdict& verdict);

enum class SweepAxis { kWindow, kPatience, kAlpha, kNoiseLevel };
std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view name);

struct SweepRow {
  std::string value;
  std::size_t value_index = 0;
  RunRecord record;
};

struct SweepOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
  // Permutes the job execution order (results are unaffected).
  std::optional<std::uint64_t> shuffle_seed;
};

// Runs every (value, trial) pair with shared trial seeds. Rows come back
// sorted by (value index, trial); out_dir/sweep.csv is written if set.
std::vector<SweepRow> sweep(const ExperimentConfig& base, SweepAxis axis,
                            const std::vector<std::string>& values, const SweepOptions& options = {});
void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepRow>& rows);

struct OracleRow {
  std::size_t t = 0;
  double closed_form = 0.0;
  double empirical = 0.0;
  double rel_err = 0.0;
};

struct OracleReport {
  std::vector<OracleRow> rows;
  double max_rel_err = 0.0;
};

// closed_form_wmv next to the windowed variance of simulate_linearized for
// t = 0..T. rel_err = |c - e| / |c|, or |c - e| when c = 0.
OracleReport oracle_report(const SpectralModel& model, std::size_t window, std::size_t steps);
void write_oracle_csv(std::ostream& out, const OracleReport& report);

// Spectral model of the kernel's reference Jacobian: the trig basis as left
// vectors with the singular value of each basis function's frequency.
SpectralModel kernel_spectral_model(const UpsamplingKernel& kernel, const Eigen::VectorXd& y_hat,
                                    double eta);

// Runs `count` jobs over a pool of worker threads; job i calls fn(order[i]).
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn,
                  const std::vector<std::size_t>& order = {});

}  // namespace eswmv

#endif  // ESWMV_HARNESS_HPP_
