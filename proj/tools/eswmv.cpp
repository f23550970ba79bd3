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

// Command-line front end: denoise, detect, sweep, oracle.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "eswmv/decoder.hpp"
#include "eswmv/harness.hpp"
#include "eswmv/random.hpp"
#include "eswmv/stream_format.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitFormat = 2;
constexpr int kExitDivergence = 3;

struct CommonFlags {
  std::string noise = "gaussian";
  std::string level = "high";
  std::string detector = "wmv";
  std::size_t window = eswmv::kDefaultWindow;
  std::size_t patience = eswmv::kDefaultPatience;
  double alpha = eswmv::kDefaultAlpha;
  double eta = -1.0;
  std::size_t iters = eswmv::kDefaultMaxIters;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  std::string out;
  std::string input;
  std::size_t n = 64;
  std::size_t basis = 8;
  std::size_t width = 256;
  std::size_t support = eswmv::kDefaultKernelSupport;
  bool full_trace = false;
  std::string record;
};

void add_detector_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--detector", f.detector, "wmv | emv | ema-wmv")
      ->check(CLI::IsMember({"wmv", "emv", "ema-wmv"}))
      ->capture_default_str();
  app->add_option("-W,--window", f.window, "Window size")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("-P,--patience", f.patience, "Patience")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--alpha", f.alpha, "EMA forgetting factor")->check(CLI::Range(0.0, 1.0))->capture_default_str();
}

void add_experiment_flags(CLI::App* app, CommonFlags& f) {
  add_detector_flags(app, f);
  app->add_option("--noise", f.noise, "gaussian | impulse | speckle | shot")
      ->check(CLI::IsMember({"gaussian", "impulse", "speckle", "shot"}))
      ->capture_default_str();
  app->add_option("--level", f.level, "low | medium | high")
      ->check(CLI::IsMember({"low", "medium", "high"}))
      ->capture_default_str();
  app->add_option("--eta", f.eta, "Step size (default: half of the kernel's step bound)");
  app->add_option("--iters", f.iters, "Maximum iterations")->capture_default_str();
  app->add_option("--seed", f.seed, "Base seed; trial i uses seed + i")->capture_default_str();
  app->add_option("--trials", f.trials, "Number of trials")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--input", f.input, "Ground-truth PGM instead of a synthetic signal")->check(CLI::ExistingFile);
  app->add_option("-n,--length", f.n, "Synthetic signal length")->capture_default_str();
  app->add_option("--basis", f.basis, "Number of trig basis functions in the signal")->capture_default_str();
  app->add_option("-k,--width", f.width, "Decoder width")->capture_default_str();
  app->add_option("--support", f.support, "Triangular kernel support (odd)")->capture_default_str();
  app->add_flag("--full-trace", f.full_trace, "Keep training to --iters after the verdict");
}

eswmv::DetectorParams detector_params(const CommonFlags& f) {
  return {eswmv::parse_detector_kind(f.detector), f.window, f.patience, f.alpha};
}

eswmv::ExperimentConfig experiment_config(const CommonFlags& f) {
  eswmv::ExperimentConfig cfg;
  cfg.n = f.n;
  cfg.basis_count = f.basis;
  if (!f.input.empty()) cfg.input = f.input;
  cfg.noise = eswmv::parse_noise_kind(f.noise);
  cfg.level = eswmv::parse_noise_level(f.level);
  cfg.width = f.width;
  cfg.kernel_support = f.support;
  if (f.eta >= 0.0) cfg.eta = f.eta;
  cfg.max_iters = f.iters;
  cfg.detector = detector_params(f);
  cfg.full_trace = f.full_trace;
  cfg.out_dir = f.out;
  cfg.trials = f.trials;
  cfg.base_seed = f.seed;
  if (!f.record.empty()) cfg.record_stream = f.record;
  return cfg;
}

void print_record(const eswmv::RunRecord& r) {
  std::printf("trial=%zu seed=%llu stopped=%d stop_iteration=%zu best_iteration=%zu peak_iteration=%zu "
              "detected_psnr=%s peak_psnr=%s psnr_gap=%s wall=%.2fs\n",
              r.trial, static_cast<unsigned long long>(r.seed), r.verdict.stopped ? 1 : 0,
              r.verdict.stop_iteration, r.verdict.best_iteration, r.peak_iteration,
              eswmv::format_number(r.detected_psnr).c_str(), eswmv::format_number(r.peak_psnr).c_str(),
              eswmv::format_number(r.psnr_gap).c_str(), r.wall_seconds);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) values.push_back(std::stod(item));
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-based early stopping for untrained-network reconstruction"};
  app.require_subcommand(1);

  CommonFlags denoise_flags;
  auto* denoise = app.add_subcommand("denoise", "Corrupt a signal, fit the two-layer decoder, detect the stop");
  add_experiment_flags(denoise, denoise_flags);
  denoise->add_option("--record-stream", denoise_flags.record, "Write the iterate stream (single trial)");

  CommonFlags detect_flags;
  std::string stream_path;
  auto* detect = app.add_subcommand("detect", "Run a detector over an ESWM iterate stream");
  add_detector_flags(detect, detect_flags);
  detect->add_option("--stream", stream_path, "Stream file (default: stdin)");
  detect->add_option("--out", detect_flags.out, "Directory for variance.csv");

  CommonFlags sweep_flags;
  std::string axis;
  std::vector<std::string> values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat denoise over one parameter axis");
  add_experiment_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--axis", axis, "W | P | alpha | noise-level")
      ->required()
      ->check(CLI::IsMember({"W", "P", "alpha", "noise-level"}));
  sweep_cmd->add_option("--values", values, "Values for the axis")->required()->delimiter(',');

  std::string sigmas_text, proj_text;
  double oracle_eta = -1.0;
  std::size_t oracle_window = 10, oracle_steps = 200, oracle_support = 0, oracle_n = 64;
  std::uint64_t oracle_seed = 0;
  std::string oracle_out;
  auto* oracle = app.add_subcommand("oracle", "Closed-form running variance vs. simulated linearized descent");
  oracle->add_option("--sigmas", sigmas_text, "Comma-separated singular values (standard-basis modes)");
  oracle->add_option("--proj", proj_text, "Comma-separated projections <w_i, y_hat>");
  oracle->add_option("--support", oracle_support, "Use the spectrum of a triangular kernel of this support");
  oracle->add_option("-n,--length", oracle_n, "Kernel length with --support")->capture_default_str();
  oracle->add_option("--seed", oracle_seed, "Seed for the kernel-mode observation")->capture_default_str();
  oracle->add_option("--eta", oracle_eta, "Step size (default 1 / max sigma^2)");
  oracle->add_option("-W,--window", oracle_window, "Window size")->check(CLI::PositiveNumber)->capture_default_str();
  oracle->add_option("-T,--steps", oracle_steps, "Last window start t")->capture_default_str();
  oracle->add_option("--out", oracle_out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitFailure;
  }

  try {
    if (denoise->parsed()) {
      const auto cfg = experiment_config(denoise_flags);
      for (const auto& r : eswmv::run_experiment(cfg)) print_record(r);
    } else if (detect->parsed()) {
      std::ifstream file;
      if (!stream_path.empty()) {
        file.open(stream_path, std::ios::binary);
        if (!file) throw std::runtime_error("cannot open " + stream_path);
      }
      std::istream& in = stream_path.empty() ? std::cin : file;
      const auto result = eswmv::detect_stream(in, detector_params(detect_flags));
      std::printf("frames=%zu stopped=%d stop_iteration=%zu best_iteration=%zu best_variance=%s\n",
                  result.frames, result.verdict.stopped ? 1 : 0, result.verdict.stop_iteration,
                  result.verdict.best_iteration, eswmv::format_number(result.verdict.best_variance).c_str());
      if (!detect_flags.out.empty()) {
        std::filesystem::create_directories(detect_flags.out);
        std::ofstream csv(std::filesystem::path(detect_flags.out) / "variance.csv", std::ios::binary);
        eswmv::write_variance_csv(csv, result.verdict);
      }
    } else if (sweep_cmd->parsed()) {
      const auto cfg = experiment_config(sweep_flags);
      const auto rows = eswmv::sweep(cfg, eswmv::parse_sweep_axis(axis), values);
      if (cfg.out_dir.empty()) eswmv::write_sweep_csv(std::cout, eswmv::parse_sweep_axis(axis), rows);
    } else if (oracle->parsed()) {
      eswmv::SpectralModel model;
      if (oracle_support > 0) {
        const auto kernel = eswmv::UpsamplingKernel::triangular(oracle_n, oracle_support);
        eswmv::ExperimentConfig cfg;
        cfg.n = oracle_n;
        const auto scenario = eswmv::make_scenario(cfg, oracle_seed);
        const auto sigmas = eswmv::spectrum_from_kernel(kernel);
        const double eta = oracle_eta > 0.0 ? oracle_eta : 1.0 / (sigmas.front() * sigmas.front());
        model = eswmv::kernel_spectral_model(kernel, eswmv::vector_from(scenario.observation), eta);
      } else {
        const auto sigmas = parse_list(sigmas_text);
        const auto proj = parse_list(proj_text);
        if (sigmas.empty() || sigmas.size() != proj.size()) {
          throw eswmv::InvalidArgument("--sigmas and --proj need the same nonzero length");
        }
        const auto n = static_cast<Eigen::Index>(sigmas.size());
        model.sigmas = sigmas;
        model.left_vectors = Eigen::MatrixXd::Identity(n, n);
        model.y_hat = Eigen::Map<const Eigen::VectorXd>(proj.data(), n);
        double peak = 0.0;
        for (double s : sigmas) peak = std::max(peak, s * s);
        model.eta = oracle_eta > 0.0 ? oracle_eta : 1.0 / peak;
      }
      const auto report = eswmv::oracle_report(model, oracle_window, oracle_steps);
      if (oracle_out.empty()) {
        eswmv::write_oracle_csv(std::cout, report);
      } else {
        std::ofstream csv(oracle_out, std::ios::binary);
        eswmv::write_oracle_csv(csv, report);
      }
    }
  } catch (const eswmv::FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kExitFormat;
  } catch (const eswmv::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return 0;
}
