// Acceptance suite: runs every acceptance criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit status is nonzero when any
// selected criterion fails.
//
// RVSM_ACCEPTANCE_CRITERIA=1,2,8 restricts the run to the listed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "rvsm/rvsm.hpp"
#include "toy_regression.hpp"

namespace fs = std::filesystem;
using namespace rvsm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------ 1. prox

/// Grid oracle restricted to [min(0,w), max(0,w)] (padded by one step and
/// aligned with the global grid lo + k*step). Every penalty here is even and
/// nondecreasing in |x|, so no point outside that interval can beat its
/// nearest endpoint; the restricted search returns the global grid argmin.
double windowed_oracle(const PenaltySpec& spec, double gamma, double w, double lo, double hi, double step) {
  const double a = std::min(0.0, w), b = std::max(0.0, w);
  const double wlo = std::max(lo, lo + (std::floor((a - lo) / step) - 1.0) * step);
  const double whi = std::min(hi, lo + (std::ceil((b - lo) / step) + 1.0) * step);
  return prox_oracle(spec, gamma, w, wlo, whi, step);
}

Outcome prox_oracle_equivalence() {
  const double step = 1e-6, tol = 2e-6;
  double worst = 0.0;
  std::string where;
  std::size_t cases = 0;
  for (auto kind : {PenaltyKind::L0, PenaltyKind::L1, PenaltyKind::TL1})
    for (double a : {0.01, 0.1, 1.0, 100.0})
      for (double gamma : {1e-4, 5e-3, 0.1})
        for (int k = 0; k < 200; ++k) {
          const double w = -1.0 + (2.0 * k + 1.0) / 200.0;
          const PenaltySpec spec{kind, a, 1.0};
          const double closed = threshold(spec, gamma, w);
          const double oracle = windowed_oracle(spec, gamma, w, -1.0, 1.0, step);
          const double d = std::abs(closed - oracle);
          ++cases;
          if (d > worst) {
            worst = d;
            where = fmt("%s a=%g gamma=%g w=%g", std::string(to_string(kind)).c_str(), a, gamma, w);
          }
        }
  return {worst <= tol, fmt("%zu cases, max |closed - oracle| = %.3g (tol %.0e)%s%s", cases, worst, tol,
                            where.empty() ? "" : " at ", where.c_str())};
}

// ----------------------------------------------------------- 2. TL1 limits

Outcome tl1_interpolation() {
  bool pass = true;
  double soft_gap = 0.0, level_gap = 0.0, hard_gap = 0.0;
  for (double gamma : {1e-4, 5e-3, 0.1}) {
    const double level = std::sqrt(2.0 * gamma);
    level_gap = std::max(level_gap, std::abs(tl1_threshold_level(1e-8, gamma) - level));
    for (int k = 0; k <= 20000; ++k) {
      const double w = -1.0 + k * 1e-4;
      soft_gap = std::max(soft_gap, std::abs(tl1_threshold(1e8, gamma, w) - soft_threshold(gamma, w)));
      if (std::abs(std::abs(w) - level) > 1e-3)
        hard_gap = std::max(hard_gap, std::abs(tl1_threshold(1e-8, gamma, w) - hard_threshold(gamma, w)));
    }
  }
  pass = soft_gap <= 1e-6 && level_gap <= 1e-4 && hard_gap <= 1e-6;
  return {pass, fmt("a=1e8 vs soft: %.3g (tol 1e-6); a=1e-8 level vs sqrt(2 gamma): %.3g (tol 1e-4); "
                    "a=1e-8 vs hard outside band: %.3g (tol 1e-6)",
                    soft_gap, level_gap, hard_gap)};
}

// ----------------------------------------------------- 3. gradient checking

Outcome gradient_correctness() {
  auto p = testing::make_gradcheck_problem(1);
  const auto r = testing::check_gradients(p, 1e-5, 1e-4, 1e-7);
  return {r.failures == 0 && r.checked > 0,
          fmt("%zu parameters checked, %zu failures, worst absolute error %.2g, worst relative error above the "
              "1e-7 floor %.3g%s%s",
              r.checked, r.failures, r.worst_absolute, r.worst_relative, r.worst_entry.empty() ? "" : " at ",
              r.worst_entry.c_str())};
}

// -------------------------------------------------- 4. Lagrangian descent

Outcome lagrangian_descent() {
  const auto data = testing::make_toy_regression(2024);
  bool pass = true;
  std::string detail;
  for (const auto& pen : {PenaltySpec::l0(0.0005), PenaltySpec::l1(0.0005), PenaltySpec::tl1(1.0, 0.0005)}) {
    nn::LinearRegression model(10, false);
    RvsmConfig cfg;
    cfg.eta = 1e-2;
    cfg.beta = 0.1;
    cfg.penalty = pen;
    cfg.batch_size = data.size();
    cfg.epochs = 500;
    const auto st = rvsm_train(model, data, nullptr, cfg);
    double worst_rise = 0.0;
    for (std::size_t t = 1; t < st.lagrangian_trace.size(); ++t)
      worst_rise = std::max(worst_rise, st.lagrangian_trace[t].second - st.lagrangian_trace[t - 1].second);
    const auto eq = equilibrium_residuals(cfg, model, st, data);
    const bool ok = st.lagrangian_trace.size() == 500 && worst_rise <= 1e-8 && eq.grad_residual <= 1e-4;
    pass = pass && ok;
    detail += fmt("%s%s: max rise %.2g, grad_residual %.2g", detail.empty() ? "" : "; ",
                  std::string(to_string(pen.kind)).c_str(), worst_rise, eq.grad_residual);
  }
  return {pass, detail + " (tol 1e-8 / 1e-4, 500 iterations)"};
}

// ------------------------------------------------ 5-7. desk-scale training

/// Training settings shared by the desk-scale criteria.
constexpr std::size_t kTrain = 1000;
constexpr std::size_t kTest = 200;
constexpr std::uint64_t kSeed = 1;
constexpr double kEta = 0.02;
constexpr std::size_t kBatch = 8;
constexpr int kEpochs = 20;

struct DeskRun {
  double accuracy = 0.0;
  double sparsity = 0.0;
  Tensor dense;  ///< deployed dense weights (u for RVSM, w for SGD)
  ParameterSet initial;
  ParameterSet final_params;
  double seconds = 0.0;
};

class DeskScale {
 public:
  const DeskRun& run(const std::string& name) {
    if (const auto it = runs_.find(name); it != runs_.end()) return it->second;
    RvsmConfig cfg;
    cfg.eta = kEta;
    cfg.batch_size = kBatch;
    cfg.epochs = kEpochs;
    cfg.beta = 0.1;
    cfg.seed = derive_seed(kSeed, "shuffle");
    bool sgd = false;
    if (name == "l0") {
      cfg.penalty = PenaltySpec::l0(0.0005);
    } else if (name == "control") {
      cfg.penalty = PenaltySpec::l0(0.0);
    } else if (name == "l0_half_beta") {
      cfg.penalty = PenaltySpec::l0(0.0005);
      cfg.beta = 0.05;
    } else if (name == "tl1") {
      cfg.penalty = PenaltySpec::tl1(0.01, 0.0005);
    } else if (name == "tl1_sgd") {
      cfg.penalty = PenaltySpec::tl1(0.01, 0.0005);
      sgd = true;
    }
    const auto& [train, test] = data();
    auto net = nn::build_default_network(2, 100, derive_seed(kSeed, "init"));
    DeskRun r;
    r.initial = net.parameters();
    const auto t0 = std::chrono::steady_clock::now();
    if (sgd) {
      penalized_sgd_train(net, train, &test, cfg);
    } else {
      const auto st = rvsm_train(net, train, &test, cfg);
      net = deployed_model(net, st);
    }
    r.seconds = elapsed_s(t0);
    r.final_params = net.parameters();
    r.dense = net.parameters().at("dense").weight;
    r.sparsity = metrics::sparsity(r.dense);
    r.accuracy = metrics::accuracy(net, test);
    std::printf("    [run %-12s] accuracy %.4f, dense sparsity %.4f, %.0f s\n", name.c_str(), r.accuracy, r.sparsity,
                r.seconds);
    std::fflush(stdout);
    return runs_.emplace(name, std::move(r)).first->second;
  }

  bool has(const std::string& name) const { return runs_.count(name) != 0; }

 private:
  const std::pair<nn::ImageDataset, nn::ImageDataset>& data() {
    if (!data_) {
      const auto [train, test] = curvegen::generate_dataset(kTrain, kTest, {}, derive_seed(kSeed, "data"));
      data_.emplace(curvegen::to_image_dataset(train), curvegen::to_image_dataset(test));
    }
    return *data_;
  }

  std::optional<std::pair<nn::ImageDataset, nn::ImageDataset>> data_;
  std::map<std::string, DeskRun> runs_;
};

Outcome desk_scale_l0(DeskScale& desk) {
  const auto& l0 = desk.run("l0");
  const auto& control = desk.run("control");
  const double gap = std::abs(l0.accuracy - control.accuracy);
  const bool pass = l0.sparsity >= 0.70 && l0.accuracy >= 0.95 && gap <= 0.02;
  return {pass, fmt("l0 u-sparsity %.4f (>= 0.70), accuracy %.4f (>= 0.95), control accuracy %.4f, gap %.4f (<= 0.02)",
                    l0.sparsity, l0.accuracy, control.accuracy, gap)};
}

Outcome scale_gap(DeskScale& desk) {
  const auto& rv = desk.run("tl1");
  const auto& sgd = desk.run("tl1_sgd");
  const std::vector<int> scales{2, 3, 4, 5, 10};
  // Buckets are undefined for an all-zero tensor; report whichever side is measurable.
  auto buckets = [&](const Tensor& w) -> std::optional<metrics::SparsityReport> {
    try {
      return metrics::sparsity_buckets(w, scales, "dense");
    } catch (const DegenerateNormalization&) {
      return std::nullopt;
    }
  };
  const auto br = buckets(rv.dense);
  const auto bs = buckets(sgd.dense);
  auto row = [&](const char* name, double acc, const std::optional<metrics::SparsityReport>& b) {
    std::string line = fmt("\n    %-4s (acc %.3f):", name, acc);
    if (!b) return line + " all weights zero";
    for (int n : scales) line += " " + metrics::format_percent(100.0 * b->buckets.at(n));
    return line;
  };
  std::string table = "    bucket(1e-n) %: n=";
  for (int n : scales) table += fmt(" %d", n);
  std::printf("%s%s%s\n", table.c_str(), row("RVSM", rv.accuracy, br).c_str(), row("SGD", sgd.accuracy, bs).c_str());

  std::string detail;
  bool pass = br.has_value() && bs.has_value();
  if (br) {
    const double r4 = br->buckets.at(4), r10 = br->buckets.at(10);
    pass = pass && r10 >= 0.9 * r4;
    detail = fmt("RVSM bucket(1e-10) %.4f vs 0.9 * bucket(1e-4) %.4f", r10, 0.9 * r4);
  } else {
    detail = "RVSM u is identically zero, buckets undefined";
  }
  if (bs) {
    const double s10 = bs->buckets.at(10);
    pass = pass && s10 <= 0.01;
    detail += fmt("; SGD bucket(1e-10) %.2e (<= 0.01)", s10);
  } else {
    detail += "; SGD weights identically zero";
  }
  return {pass, detail};
}

Outcome threshold_monotonicity(DeskScale& desk) {
  const auto& base = desk.run("l0");
  const auto& doubled = desk.run("l0_half_beta");
  const bool vacuous = base.sparsity == 1.0;
  return {doubled.sparsity >= base.sparsity,
          fmt("u-sparsity gamma=0.005: %.4f, gamma=0.01 (beta halved): %.4f%s", base.sparsity, doubled.sparsity,
              vacuous ? " (u is identically zero in both runs, so the ordering holds trivially)" : "")};
}

// ------------------------------------------------------------- 8. census

Outcome architecture_census() {
  const auto net = nn::build_default_network(2, 100, 0);
  std::vector<std::size_t> counts;
  for (const auto& l : net.parameters().layers()) counts.push_back(l.weight.size());
  std::vector<std::size_t> chain{net.input_shape()[1]};
  for (std::size_t i = 0; i < net.layers().size(); ++i)
    if (std::holds_alternative<nn::MaxPoolSpec>(net.layers()[i])) chain.push_back(net.activation_shapes()[i][1]);
  const bool pass = counts == std::vector<std::size_t>{288, 9216, 9216, 692224, 256} &&
                    chain == std::vector<std::size_t>{100, 50, 25, 13};
  std::string c, s;
  for (auto v : counts) c += (c.empty() ? "" : ", ") + std::to_string(v);
  for (auto v : chain) s += (s.empty() ? "" : "->") + std::to_string(v);
  return {pass, "weights (" + c + "), spatial " + s};
}

// ------------------------------------------------------ 9. sign changes

Outcome sign_change_arithmetic(DeskScale& desk) {
  struct Row {
    const char* layer;
    std::size_t changed, total;
    const char* printed;
  };
  const Row rows[] = {{"conv1", 72, 288, "25.0"}, {"conv2", 1120, 9216, "12.2"}, {"conv3", 769, 9216, "8.34"}};
  bool pass = true;
  std::string detail;
  for (const auto& r : rows) {
    const auto rep = metrics::make_sign_change_report(r.layer, r.changed, r.total);
    const auto got = metrics::format_percent(rep.percent);
    pass = pass && got == r.printed;
    detail += fmt("%s(%zu,%zu)->%s%% ", r.layer, r.changed, r.total, got.c_str());
  }
  if (desk.has("l0")) {
    const auto& run = desk.run("l0");
    std::string counts = "    sign changes in the l0 run (informational):";
    for (const char* layer : {"conv1", "conv2", "conv3"}) {
      const auto rep =
          metrics::sign_changes(run.initial.at(layer).weight, run.final_params.at(layer).weight, layer);
      counts += fmt(" %s %zu/%zu (%s%%)", layer, rep.changed, rep.total, metrics::format_percent(rep.percent).c_str());
    }
    std::printf("%s\n", counts.c_str());
  }
  return {pass, detail};
}

// ------------------------------------------------------- 10. determinism

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RVSM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  const auto root = fs::temp_directory_path() / "rvsm_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string data = (root / "data").string();
  if (run_cli("generate --out " + data + " --n_train 64 --n_test 16 --seed 11") != 0)
    return {false, "generate failed"};
  const std::string common = "train --data " + data + " --penalty tl1 --a 0.5 --epochs 2 --batch_size 16 --seed 5";
  if (run_cli(common + " --run_dir " + (root / "a").string()) != 0 ||
      run_cli(common + " --run_dir " + (root / "b").string()) != 0)
    return {false, "train failed"};
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const auto name = entry.path().filename();
    const auto ext = name.extension();
    if (ext != ".csv" && ext != ".rvsm" && ext != ".json") continue;
    ++compared;
    if (!fs::exists(root / "b" / name) || slurp(entry.path()) != slurp(root / "b" / name))
      differing.push_back(name.string());
  }
  const bool has_ckpt = fs::exists(root / "a" / "checkpoint.rvsm");
  fs::remove_all(root);
  std::string diff;
  for (const auto& d : differing) diff += " " + d;
  return {has_ckpt && differing.empty() && compared >= 5,
          fmt("%zu files compared byte-for-byte, %zu differ%s", compared, differing.size(), diff.c_str())};
}

}  // namespace

int main() {
  std::set<int> selected;
  if (const char* env = std::getenv("RVSM_ACCEPTANCE_CRITERIA")) {
    std::stringstream ss(env);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) selected.insert(std::stoi(item));
  }
  auto wanted = [&](int id) { return selected.empty() || selected.count(id) != 0; };

  DeskScale desk;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"prox-oracle equivalence", prox_oracle_equivalence},
      {"TL1 interpolation limits", tl1_interpolation},
      {"gradient correctness", gradient_correctness},
      {"Lagrangian descent", lagrangian_descent},
      {"desk-scale l0 sparsity/accuracy", [&] { return desk_scale_l0(desk); }},
      {"TL1 scale gap RVSM vs SGD", [&] { return scale_gap(desk); }},
      {"threshold monotonicity", [&] { return threshold_monotonicity(desk); }},
      {"architecture census", architecture_census},
      {"sign-change arithmetic", [&] { return sign_change_arithmetic(desk); }},
      {"CLI determinism", cli_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %2d: %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), elapsed_s(t0));
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
