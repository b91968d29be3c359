// rvsm: generate curve datasets, train sparse CNNs, evaluate checkpoints and
// print table-style reports.
//
// Every subcommand accepts `--config FILE` with `key = value` lines (`#`
// comments); each key is the long name of a flag, and explicit flags win.
//
// Exit codes: 0 success, 1 usage/config error, 2 I/O or format error,
// 3 numerical divergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rvsm/rvsm.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitDivergence = 3;

const std::vector<int> kBucketScales{2, 3, 4, 5, 10};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// `key = value` lines turned into `--key value` tokens.
std::vector<std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw rvsm::IoError("cannot read config file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError(path.string() + ":" + std::to_string(line_no) + ": empty key");
    tokens.push_back("--" + key);
    tokens.push_back(value);
  }
  return tokens;
}

/// Removes `--config FILE` from the arguments and splices the file's settings
/// in front of the remaining flags, so flags given on the command line win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) return args;
  std::optional<std::string> config;
  std::vector<std::string> rest;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file argument");
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  std::vector<std::string> out{args[0]};
  if (config) {
    auto tokens = read_config_file(*config);
    out.insert(out.end(), tokens.begin(), tokens.end());
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw rvsm::IoError("cannot write " + path.string());
  out << text;
  if (!out) throw rvsm::IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rvsm::IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- generate

struct GenerateOptions {
  std::string out;
  std::size_t n_train = 5000;
  std::size_t n_test = 1000;
  std::uint64_t seed = 1;
  std::size_t size = 100;
  rvsm::curvegen::AugmentParams augment;
};

void add_augment_options(CLI::App& cmd, rvsm::curvegen::AugmentParams& p) {
  cmd.add_option("--rotation_max", p.rotation_max, "Max |rotation| in radians")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd.add_option("--shear_max", p.shear_max, "Max |shear|")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd.add_option("--scale_min", p.scale_min, "Lower per-axis scale")->check(CLI::Range(0.5, 1.5))->capture_default_str();
  cmd.add_option("--scale_max", p.scale_max, "Upper per-axis scale")->check(CLI::Range(0.5, 1.5))->capture_default_str();
  cmd.add_option("--elastic_sigma", p.elastic_sigma, "Elastic field smoothing (px)")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd.add_option("--elastic_alpha", p.elastic_alpha, "Elastic field magnitude (px)")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd.add_option("--shaky_amplitude", p.shaky_amplitude, "RMS tremor displacement (px)")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd.add_option("--shaky_wavelength", p.shaky_wavelength, "Tremor correlation length (px)")->check(CLI::NonNegativeNumber)->capture_default_str();
}

int run_generate(const GenerateOptions& o) {
  try {
    o.augment.validate();
  } catch (const rvsm::InvalidParameter& e) {
    throw UsageError(e.what());
  }
  if (o.n_train < 2 || o.n_test < 2) throw UsageError("n_train and n_test must be >= 2");
  const auto [train, test] =
      rvsm::curvegen::generate_dataset(o.n_train, o.n_test, o.augment, rvsm::derive_seed(o.seed, "data"), o.size);
  rvsm::curvegen::write_split(fs::path(o.out) / "train", train);
  rvsm::curvegen::write_split(fs::path(o.out) / "test", test);
  std::cout << "wrote " << train.size() << " train and " << test.size() << " test images to " << o.out << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainOptions {
  std::string data;
  std::string run_dir;
  std::string penalty = "l0";
  std::string algorithm = "rvsm";
  double lambda = 0.0005;
  double beta = 0.1;
  double a = 1.0;
  double eta = 0.02;
  int epochs = 20;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  bool normalize_w = false;
  std::vector<std::string> thresholded_layers{"dense"};
  std::size_t channels = 32;
  std::size_t hidden = 128;
  std::size_t histogram_bins = 41;
};

rvsm::nn::ImageDataset load_split(const fs::path& dir) {
  return rvsm::curvegen::to_image_dataset(rvsm::curvegen::read_split(dir));
}

std::size_t image_size(const rvsm::nn::ImageDataset& data) {
  const auto n = data.front().image.dim(1);
  for (const auto& s : data)
    if (s.image.dim(1) != n) throw rvsm::FormatError("dataset mixes image sizes");
  return n;
}

std::string bucket_header() {
  std::string h = "layer,zero_fraction";
  for (int n : kBucketScales) h += ",bucket_" + std::to_string(n);
  return h + ",gap_indicator\n";
}

std::string bucket_row(const std::string& layer, const rvsm::Tensor& w, json& summary) {
  std::string row = layer + "," + fmt_double(rvsm::metrics::sparsity(w));
  summary["sparsity." + layer] = rvsm::metrics::sparsity(w);
  try {
    const auto r = rvsm::metrics::sparsity_buckets(w, kBucketScales, layer);
    for (int n : kBucketScales) {
      row += "," + fmt_double(r.buckets.at(n));
      summary["bucket." + layer + "." + std::to_string(n)] = r.buckets.at(n);
    }
    row += "," + fmt_double(r.gap_indicator);
    summary["gap_indicator." + layer] = r.gap_indicator;
  } catch (const rvsm::DegenerateNormalization&) {
    for (std::size_t i = 0; i <= kBucketScales.size(); ++i) row += ",nan";
  }
  return row + "\n";
}

std::string histogram_csv(const rvsm::Tensor& w, std::size_t bins) {
  std::string out = "bin_center,count\n";
  try {
    for (const auto& b : rvsm::metrics::weight_histogram(w, bins))
      out += fmt_double(b.center) + "," + std::to_string(b.count) + "\n";
  } catch (const rvsm::DegenerateNormalization&) {
  }
  return out;
}

int run_train(const TrainOptions& o) {
  rvsm::RvsmConfig cfg;
  cfg.eta = o.eta;
  cfg.beta = o.beta;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.normalize_w = o.normalize_w;
  cfg.thresholded_layers = o.thresholded_layers;
  cfg.seed = rvsm::derive_seed(o.seed, "shuffle");
  const auto kind = rvsm::parse_penalty_kind(o.penalty);
  cfg.penalty = {kind, kind == rvsm::PenaltyKind::TL1 ? o.a : 0.0, o.lambda};
  if (o.algorithm == "sgd-penalty" && kind == rvsm::PenaltyKind::L0)
    throw UsageError("--algorithm sgd-penalty needs --penalty l1 or tl1");
  try {
    cfg.validate();
  } catch (const rvsm::InvalidParameter& e) {
    throw UsageError(e.what());
  }

  const fs::path data_dir(o.data);
  const auto train = load_split(data_dir / "train");
  const auto test = load_split(data_dir / "test");
  const std::size_t size = image_size(train);
  if (image_size(test) != size) throw rvsm::FormatError("train and test image sizes differ");

  auto net = rvsm::nn::build_default_network(2, size, rvsm::derive_seed(o.seed, "init"), {o.channels, o.hidden});
  for (const auto& name : cfg.thresholded_layers)
    if (!net.parameters().contains(name)) throw UsageError("thresholded layer '" + name + "' does not exist");
  const rvsm::ParameterSet initial = net.parameters();

  const fs::path run(o.run_dir);
  std::error_code ec;
  fs::create_directories(run, ec);
  if (ec) throw rvsm::IoError("cannot create run directory " + run.string() + ": " + ec.message());

  json summary;
  summary["algorithm"] = o.algorithm;
  summary["penalty"] = o.penalty;
  summary["a"] = kind == rvsm::PenaltyKind::TL1 ? o.a : 0.0;
  summary["lambda"] = o.lambda;
  summary["beta"] = o.beta;
  summary["eta"] = o.eta;
  summary["epochs"] = o.epochs;
  summary["batch_size"] = o.batch_size;
  summary["seed"] = o.seed;
  summary["normalize_w"] = o.normalize_w;
  std::string layers_joined;
  for (const auto& l : cfg.thresholded_layers) layers_joined += (layers_joined.empty() ? "" : ";") + l;
  summary["thresholded_layers"] = layers_joined;
  summary["train_samples"] = train.size();
  summary["test_samples"] = test.size();

  std::vector<rvsm::EpochRecord> trace;
  rvsm::nn::Network deployed = net;
  std::optional<rvsm::EquilibriumReport> equilibrium;
  std::string lagrangian_csv = "iteration,lagrangian\n";
  std::int64_t iterations = 0;

  if (o.algorithm == "rvsm") {
    const auto state = rvsm::rvsm_train(net, train, &test, cfg);
    trace = state.loss_trace;
    iterations = state.iteration;
    deployed = rvsm::deployed_model(net, state);
    equilibrium = rvsm::equilibrium_residuals(cfg, net, state, train);
    for (const auto& [it, value] : state.lagrangian_trace)
      lagrangian_csv += std::to_string(it) + "," + fmt_double(value) + "\n";
    double w_minus_u = 0.0;
    for (const auto& [name, u] : state.u) {
      const auto& w = net.parameters().at(name).weight;
      for (std::size_t i = 0; i < u.size(); ++i) w_minus_u = std::max(w_minus_u, std::abs(w[i] - u[i]));
    }
    summary["w_minus_u_linf"] = w_minus_u;
  } else {
    const auto state = rvsm::penalized_sgd_train(net, train, &test, cfg);
    trace = state.loss_trace;
    iterations = state.iteration;
    deployed = net;
  }
  summary["iterations"] = iterations;

  rvsm::nn::save_checkpoint(run / "checkpoint.rvsm", deployed.parameters());

  std::string epochs_csv = "epoch,train_loss,test_loss,accuracy,sparsity\n";
  for (const auto& r : trace)
    epochs_csv += std::to_string(r.epoch) + "," + fmt_double(r.train_loss) + "," + fmt_double(r.test_loss) + "," +
                  fmt_double(r.accuracy) + "," + fmt_double(r.sparsity) + "\n";
  write_text(run / "epochs.csv", epochs_csv);
  if (equilibrium) write_text(run / "lagrangian.csv", lagrangian_csv);

  const auto test_eval = deployed.evaluate(test);
  summary["test_accuracy"] = test_eval.accuracy.value_or(0.0);
  summary["test_loss"] = test_eval.loss;
  summary["train_accuracy"] = deployed.evaluate(train).accuracy.value_or(0.0);
  {
    std::size_t zeros = 0, total = 0;
    for (const auto& name : cfg.thresholded_layers) {
      const auto& w = deployed.parameters().at(name).weight;
      zeros += static_cast<std::size_t>(std::count(w.begin(), w.end(), 0.0));
      total += w.size();
    }
    summary["sparsity"] = static_cast<double>(zeros) / static_cast<double>(total);
  }

  std::string sparsity_csv = bucket_header();
  for (const auto& name : cfg.thresholded_layers) {
    const auto& w = deployed.parameters().at(name).weight;
    sparsity_csv += bucket_row(name, w, summary);
    write_text(run / ("histogram_" + name + ".csv"), histogram_csv(w, o.histogram_bins));
  }
  write_text(run / "sparsity.csv", sparsity_csv);

  std::string signs_csv = "layer,changed,total,percent\n";
  for (const auto& layer : deployed.parameters().layers()) {
    if (layer.weight.rank() != 4) continue;
    const auto r = rvsm::metrics::sign_changes(initial.at(layer.name).weight, layer.weight, layer.name);
    signs_csv += r.layer + "," + std::to_string(r.changed) + "," + std::to_string(r.total) + "," +
                 fmt_double(r.percent) + "\n";
    summary["sign_changes." + r.layer] = r.changed;
  }
  write_text(run / "sign_changes.csv", signs_csv);

  if (equilibrium) {
    summary["u_residual"] = equilibrium->u_residual;
    summary["grad_residual"] = equilibrium->grad_residual;
  }
  write_text(run / "summary.json", summary.dump(2) + "\n");

  std::cout << "test accuracy = " << fmt_double(summary["test_accuracy"].get<double>()) << "\n"
            << "sparsity = " << fmt_double(summary["sparsity"].get<double>()) << "\n"
            << "outputs in " << run.string() << "\n";
  return kExitOk;
}

// -------------------------------------------------------------------- eval

struct EvalOptions {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
};

int run_eval(const EvalOptions& o) {
  const auto params = rvsm::nn::load_checkpoint(o.checkpoint);
  fs::path dir(o.data);
  if (fs::exists(dir / o.split / rvsm::curvegen::kManifestName)) dir /= o.split;
  const auto data = load_split(dir);
  const std::size_t size = image_size(data);

  if (!params.contains("conv1") || !params.contains("dense") || !params.contains("output"))
    throw rvsm::FormatError("checkpoint does not describe the default architecture");
  const auto channels = params.at("conv1").weight.dim(0);
  const auto hidden = params.at("dense").weight.dim(1);
  const auto classes = params.at("output").weight.dim(1);
  auto net = rvsm::nn::build_default_network(classes, size, 0, {channels, hidden});
  rvsm::nn::assign_parameters(net.parameters(), params);

  const auto ev = net.evaluate(data);
  std::cout << "samples = " << data.size() << "\n"
            << "accuracy = " << fmt_double(ev.accuracy.value_or(0.0)) << "\n"
            << "loss = " << fmt_double(ev.loss) << "\n";
  for (const auto& layer : net.parameters().layers())
    std::cout << "sparsity." << layer.name << " = " << fmt_double(rvsm::metrics::sparsity(layer.weight)) << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ report

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(rvsm::csv::parse_line(line));
  if (rows.empty()) throw rvsm::FormatError(path.string() + " is empty");
  return rows;
}

std::string pct(double fraction) { return rvsm::metrics::format_percent(100.0 * fraction); }

int run_report(const std::vector<std::string>& run_dirs) {
  std::ostringstream t1, t3, t4;
  t1 << "# Sparsity and accuracy\n"
     << "run\talgorithm\tlambda\tbeta\ta\tpenalty\tsparsity(%)\taccuracy(%)\n";
  t3 << "# Scale buckets: % of normalized weights below 10^-n\n"
     << "run\tlayer\ta\talgorithm";
  for (int n : kBucketScales) t3 << "\t1e-" << n;
  t3 << "\taccuracy(%)\n";
  t4 << "# Sign changes in convolution kernels\n"
     << "run\tlayer\tchanged\ttotal\tpercent\n";

  for (const auto& dir_str : run_dirs) {
    const fs::path dir(dir_str);
    json s;
    try {
      s = json::parse(read_text(dir / "summary.json"));
    } catch (const json::exception& e) {
      throw rvsm::FormatError(dir.string() + "/summary.json: " + e.what());
    }
    const std::string name = dir.filename().string();
    const std::string penalty = s.value("penalty", "?");
    const std::string a = penalty == "tl1" ? fmt_double(s.value("a", 0.0)) : penalty == "l0" ? "0" : "inf";
    const double acc = s.value("test_accuracy", 0.0);
    t1 << name << '\t' << s.value("algorithm", "?") << '\t' << fmt_double(s.value("lambda", 0.0)) << '\t'
       << fmt_double(s.value("beta", 0.0)) << '\t' << a << '\t' << penalty << '\t' << pct(s.value("sparsity", 0.0))
       << '\t' << pct(acc) << '\n';

    const auto buckets = read_csv_rows(dir / "sparsity.csv");
    for (std::size_t r = 1; r < buckets.size(); ++r) {
      const auto& row = buckets[r];
      if (row.size() != kBucketScales.size() + 3) throw rvsm::FormatError("malformed sparsity.csv in " + dir.string());
      t3 << name << '\t' << row[0] << '\t' << a << '\t' << s.value("algorithm", "?");
      for (std::size_t k = 0; k < kBucketScales.size(); ++k) {
        const double v = std::stod(row[2 + k]);
        t3 << '\t' << (std::isnan(v) ? std::string("nan") : pct(v));
      }
      t3 << '\t' << pct(acc) << '\n';
    }

    const auto signs = read_csv_rows(dir / "sign_changes.csv");
    for (std::size_t r = 1; r < signs.size(); ++r) {
      const auto& row = signs[r];
      if (row.size() != 4) throw rvsm::FormatError("malformed sign_changes.csv in " + dir.string());
      t4 << name << '\t' << row[0] << '\t' << row[1] << '\t' << row[2] << '\t' << rvsm::metrics::format_percent(std::stod(row[3]))
         << '\n';
    }
  }
  std::cout << t1.str() << '\n' << t3.str() << '\n' << t4.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse CNN training by relaxed variable splitting"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string unused_config;

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Write a normal/shaky curve dataset (train/ and test/ splits)");
  generate->add_option("--config", unused_config, "key = value settings file");
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--n_train", gen.n_train, "Training images")->check(CLI::Range(2, 10000000))->capture_default_str();
  generate->add_option("--n_test", gen.n_test, "Test images")->check(CLI::Range(2, 10000000))->capture_default_str();
  generate->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
  generate->add_option("--size", gen.size, "Image side in pixels")->check(CLI::Range(8, 4096))->capture_default_str();
  add_augment_options(*generate, gen.augment);

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train the CNN with RVSM or direct penalized SGD");
  train->add_option("--config", unused_config, "key = value settings file");
  train->add_option("--data", tr.data, "Dataset directory (with train/ and test/)")->required();
  train->add_option("--run_dir", tr.run_dir, "Output directory for checkpoint and reports")->required();
  train->add_option("--penalty", tr.penalty, "l0, l1 or tl1")->check(CLI::IsMember({"l0", "l1", "tl1"}))->capture_default_str();
  train->add_option("--algorithm", tr.algorithm, "rvsm or sgd-penalty")->check(CLI::IsMember({"rvsm", "sgd-penalty"}))->capture_default_str();
  train->add_option("--lambda", tr.lambda, "Penalty weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--beta", tr.beta, "Splitting weight")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--a", tr.a, "TL1 shape parameter")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--eta", tr.eta, "Learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--epochs", tr.epochs, "Training epochs")->check(CLI::Range(1, 100000))->capture_default_str();
  train->add_option("--batch_size", tr.batch_size, "Minibatch size")->check(CLI::Range(1, 1000000))->capture_default_str();
  train->add_option("--seed", tr.seed, "Master seed (init and shuffle streams)")->capture_default_str();
  train->add_option("--normalize_w", tr.normalize_w, "Renormalize thresholded weights each step")->capture_default_str();
  train->add_option("--thresholded_layers", tr.thresholded_layers, "Layers whose weights are split/thresholded")
      ->delimiter(';')
      ->capture_default_str();
  train->add_option("--channels", tr.channels, "Filters per convolution")->check(CLI::Range(1, 4096))->capture_default_str();
  train->add_option("--hidden", tr.hidden, "Width of the dense hidden layer")->check(CLI::Range(1, 1000000))->capture_default_str();
  train->add_option("--histogram_bins", tr.histogram_bins, "Weight histogram bins")->check(CLI::Range(2, 100000))->capture_default_str();

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Accuracy and per-layer sparsity of a checkpoint");
  eval->add_option("--config", unused_config, "key = value settings file");
  eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", ev.data, "Dataset directory or split directory")->required();
  eval->add_option("--split", ev.split, "Split to evaluate when --data has train/ and test/")->capture_default_str();

  std::vector<std::string> report_dirs;
  auto* report = app.add_subcommand("report", "Table-style summary of one or more run directories");
  report->add_option("--config", unused_config, "key = value settings file");
  report->add_option("--run_dir", report_dirs, "Run directory (repeatable)")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const rvsm::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*train) return run_train(tr);
    if (*eval) return run_eval(ev);
    if (*report) return run_report(report_dirs);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const rvsm::DivergenceError& e) {
    std::cerr << "error: training diverged at iteration " << e.iteration() << ": " << e.what() << "\n";
    return kExitDivergence;
  } catch (const rvsm::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const rvsm::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const rvsm::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const rvsm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
