#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vcmm/pipeline.hpp"

namespace vcmm::cli {

enum ExitCode { kOk = 0, kOther = 1, kIngestion = 2, kConvergence = 3, kConfig = 4 };

struct SimulateOptions {
  std::string scenario = "s1";
  std::size_t n = 500;
  std::uint64_t seed = 1;
  std::string out = ".";
};

struct FitOptions {
  std::string data;
  int k = 2;
  int k_min = 0;
  int k_max = 0;
  std::string init = "kmeans";
  int seeds = 10;
  std::uint64_t seed = 1;
  std::optional<std::string> labels;
  std::string out = ".";
  FitConfig config;
};

struct EvaluateOptions {
  std::string model;
  std::string data;
  std::optional<std::string> labels;
};

struct ReplicateOptions {
  std::string scenario = "s1";
  std::size_t n = 500;
  int reps = 20;
  std::uint64_t seed = 1;
  std::string out = ".";
  FitConfig config;
};

void cmd_simulate(const SimulateOptions& opt);
void cmd_fit(const FitOptions& opt);
void cmd_evaluate(const EvaluateOptions& opt);
void cmd_sweep(const FitOptions& opt);
void cmd_replicate(const ReplicateOptions& opt);

std::vector<MarginFamily> parse_margin_list(const std::string& list);
std::vector<CopulaFamily> parse_copula_list(const std::string& list);

}  // namespace vcmm::cli
