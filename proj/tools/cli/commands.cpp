#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vcmm/errors.hpp"
#include "vcmm/model_io.hpp"
#include "vcmm/simgen.hpp"

namespace vcmm::cli {
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write '" + path.string() + "'");
  os << content;
  if (!os) throw Error("write to '" + path.string() + "' failed");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot read '" + path + "'");
  return is;
}

Dataset load_data(const std::string& path) {
  std::ifstream is = open_input(path);
  try {
    return read_csv(is);
  } catch (const IngestionError& e) {
    throw IngestionError(path + ": " + e.what());
  }
}

Partition load_partition(const std::string& path) {
  std::ifstream is = open_input(path);
  try {
    return read_partition(is);
  } catch (const IngestionError& e) {
    throw IngestionError(path + ": " + e.what());
  }
}

// --labels COLUMN | file:PATH. A label column is removed from the data.
std::optional<Partition> resolve_labels(const std::optional<std::string>& spec, Dataset& data) {
  if (!spec) return std::nullopt;
  Partition labels;
  if (spec->rfind("file:", 0) == 0) {
    labels = load_partition(spec->substr(5));
  } else {
    labels = extract_label_column(data, *spec);
  }
  if (labels.size() != data.x.rows())
    throw IngestionError("labels have " + std::to_string(labels.size()) + " entries for " +
                         std::to_string(data.x.rows()) + " observations");
  return labels;
}

InitSpec resolve_init(const FitOptions& opt) {
  InitSpec init;
  init.seed = opt.seed;
  if (opt.init == "kmeans") return init;
  if (opt.init.rfind("file:", 0) == 0) {
    init.partition = load_partition(opt.init.substr(5));
    return init;
  }
  throw ConfigError("--init must be 'kmeans' or 'file:PATH'");
}

std::string metrics_text(const ClusterReport& r, std::size_t n, const std::optional<Partition>& labels) {
  std::ostringstream os;
  os << "k: " << r.k << '\n'
     << "n: " << n << '\n'
     << "seed: " << r.seed << '\n'
     << "loglik: " << num(r.loglik) << '\n'
     << "loglik_markov: " << num(r.loglik_markov) << '\n'
     << "bic: " << num(r.bic) << '\n'
     << "free_params: " << r.free_params << '\n'
     << "iterations: " << r.trace.iterations << '\n'
     << "converged: " << (r.trace.converged ? "true" : "false") << '\n';
  if (labels) {
    os << "misclassification: " << num(misclassification_rate(r.labels, *labels)) << '\n'
       << "misclassification_initial: " << num(misclassification_rate(r.initial, *labels)) << '\n';
  }
  os << "wall_seconds: " << num(r.seconds.total) << '\n';
  return os.str();
}

ClusterReport run_fit(const Matrix& x, int k, const FitOptions& opt) {
  const InitSpec init = resolve_init(opt);
  if (init.partition) {
    for (int l : *init.partition)
      if (l >= k) throw ConfigError("initial partition has more clusters than k");
    return vcmm_fit(x, k, init, opt.config);
  }
  return vcmm_fit_multistart(x, k, opt.seed, opt.seeds, opt.config);
}

void write_fit_outputs(const fs::path& dir, const ClusterReport& r) {
  write_file(dir / "model.json", serialize_model(r.model, r.trace));
  std::ostringstream as;
  write_assignment(as, r.labels, r.posterior);
  write_file(dir / "assignment.csv", as.str());
}

}  // namespace

std::vector<MarginFamily> parse_margin_list(const std::string& list) {
  std::vector<MarginFamily> out;
  std::istringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(margin_family_from_string(item));
    } catch (const Error&) {
      throw ConfigError("unknown margin family '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty margin list");
  return out;
}

std::vector<CopulaFamily> parse_copula_list(const std::string& list) {
  std::vector<CopulaFamily> out;
  std::istringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(copula_family_from_string(item));
    } catch (const Error&) {
      throw ConfigError("unknown copula family '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty copula list");
  return out;
}

void cmd_simulate(const SimulateOptions& opt) {
  const ScenarioSpec spec = builtin_scenario(opt.scenario);
  if (opt.n < 1) throw ConfigError("--n must be at least 1");
  const Sample s = generate(spec, opt.n, opt.seed);
  const fs::path dir = prepare_dir(opt.out);
  std::vector<std::string> names;
  for (int p = 0; p < spec.dim(); ++p) names.push_back("X" + std::to_string(p + 1));
  std::ostringstream data, labels;
  write_csv(data, names, s.x);
  write_partition(labels, s.truth);
  write_file(dir / "data.csv", data.str());
  write_file(dir / "labels.csv", labels.str());
  std::cout << "wrote " << s.x.rows() << " rows to " << (dir / "data.csv").string() << '\n';
}

void cmd_fit(const FitOptions& opt) {
  if (opt.k < 1) throw ConfigError("--k must be at least 1");
  if (opt.seeds < 1) throw ConfigError("--seeds must be at least 1");
  Dataset data = load_data(opt.data);
  const auto labels = resolve_labels(opt.labels, data);
  const ClusterReport r = run_fit(data.x, opt.k, opt);
  const fs::path dir = prepare_dir(opt.out);
  write_fit_outputs(dir, r);
  const std::string metrics = metrics_text(r, data.x.rows(), labels);
  write_file(dir / "metrics.txt", metrics);
  std::cout << metrics;
}

void cmd_evaluate(const EvaluateOptions& opt) {
  std::ifstream is = open_input(opt.model);
  std::stringstream buf;
  buf << is.rdbuf();
  const ModelFile mf = parse_model(buf.str());
  Dataset data = load_data(opt.data);
  const auto labels = resolve_labels(opt.labels, data);
  if (static_cast<int>(data.x.cols()) != mf.model.dim())
    throw SchemaError("model has " + std::to_string(mf.model.dim()) + " variables, data has " +
                      std::to_string(data.x.cols()));
  const Matrix post = e_step(mf.model, data.x);
  const Partition hard = hard_assignment(post);
  const double ll = data_loglik(mf.model, data.x);
  const int p = free_param_count(mf.model);
  std::cout << "k: " << mf.model.k() << '\n'
            << "n: " << data.x.rows() << '\n'
            << "loglik: " << num(ll) << '\n'
            << "bic: " << num(bic(ll, p, data.x.rows())) << '\n'
            << "free_params: " << p << '\n'
            << "iterations: " << mf.trace.iterations << '\n';
  if (labels) std::cout << "misclassification: " << num(misclassification_rate(hard, *labels)) << '\n';
}

void cmd_sweep(const FitOptions& opt) {
  if (opt.k_min < 1 || opt.k_max < opt.k_min)
    throw ConfigError("--k-min and --k-max must satisfy 1 <= k-min <= k-max");
  Dataset data = load_data(opt.data);
  const auto labels = resolve_labels(opt.labels, data);
  std::vector<int> ks;
  for (int k = opt.k_min; k <= opt.k_max; ++k) ks.push_back(k);
  const SweepResult res = sweep_k(data.x, ks, resolve_init(opt), opt.seeds, opt.config);
  const fs::path dir = prepare_dir(opt.out);
  std::ostringstream table;
  table << "k,status,loglik,bic,free_params,iterations" << (labels ? ",misclassification" : "")
        << '\n';
  for (const auto& row : res.rows) {
    table << row.k << ',';
    if (row.report) {
      const auto& r = *row.report;
      table << "ok," << num(r.loglik) << ',' << num(r.bic) << ',' << r.free_params << ','
            << r.trace.iterations;
      if (labels) table << ',' << num(misclassification_rate(r.labels, *labels));
    } else {
      table << "failed,,,," << (labels ? "," : "");
    }
    table << '\n';
  }
  write_file(dir / "sweep.csv", table.str());
  for (const auto& row : res.rows) {
    if (row.report && row.k == res.best_k) write_fit_outputs(dir, *row.report);
    if (!row.report) std::cerr << "k = " << row.k << " failed: " << row.error << '\n';
  }
  std::cout << table.str() << "best_k: " << res.best_k << '\n';
}

void cmd_replicate(const ReplicateOptions& opt) {
  const ScenarioSpec spec = builtin_scenario(opt.scenario);
  if (opt.n < 1) throw ConfigError("--n must be at least 1");
  const StudyResult study = replicate_study(spec, opt.n, opt.reps, opt.seed, opt.config);
  const fs::path dir = prepare_dir(opt.out);
  std::ostringstream wide, longf;
  write_replication_csv(wide, study);
  write_long_csv(longf, study);
  write_file(dir / "replications.csv", wide.str());
  write_file(dir / "replications_long.csv", longf.str());
  auto line = [](const char* name, const Summary& s) {
    std::cout << name << ": mean " << s.mean << ", variance " << s.variance << ", quartiles "
              << s.q25 << " / " << s.median << " / " << s.q75 << '\n';
  };
  std::cout << "replications: " << study.records.size() << ", failed: " << study.failures << '\n';
  line("kmeans misclassification", study.kmeans_miscl);
  line("vcmm misclassification", study.vcmm_miscl);
  line("bic", study.bic);
}

}  // namespace vcmm::cli
