// Acceptance checks: one PASS/FAIL line per criterion. Exit status is
// nonzero when any gated criterion fails. Pass criterion numbers as
// arguments to run a subset.

#include "dcca/deep_cca.hpp"
#include "dcca/error.hpp"
#include "dcca/linear_cca.hpp"
#include "dcca/mcca.hpp"
#include "dcca/metrics.hpp"
#include "dcca/pipeline.hpp"
#include "dcca/synth.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace dcca;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, skip, info };

struct Outcome {
  Status status = Status::fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

Matrix randn(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = n(rng);
  return M;
}

// 1. corr_objective gradients against central differences.
Outcome gradient_fidelity() {
  const double h = 1e-5;
  std::mt19937_64 rng(101);
  double worst = 0.0;
  int batches = 0;
  for (Index d : {1, 4}) {
    for (int b = 0; b < 20; ++b, ++batches) {
      const Matrix Z = randn(64, d, rng);
      const Matrix Hx = Z + randn(64, d, rng);
      const Matrix Hy = Z * randn(d, d, rng) + randn(64, d, rng);
      const auto obj = corr_objective(Hx, Hy);
      for (int side = 0; side < 2; ++side) {
        Matrix A = side == 0 ? Hx : Hy;
        Matrix fd(A.rows(), A.cols());
        for (Index i = 0; i < A.size(); ++i) {
          const double a0 = A.data()[i];
          A.data()[i] = a0 + h;
          const double up = side == 0 ? corr_objective(A, Hy).rho : corr_objective(Hx, A).rho;
          A.data()[i] = a0 - h;
          const double dn = side == 0 ? corr_objective(A, Hy).rho : corr_objective(Hx, A).rho;
          A.data()[i] = a0;
          fd.data()[i] = (up - dn) / (2.0 * h);
        }
        const Matrix& g = side == 0 ? obj.grad_x : obj.grad_y;
        worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff());
      }
    }
  }
  return verdict(worst <= 1e-4, fmt("max relative error %.3g over %d batches (limit 1e-4)", worst, batches));
}

// 2. Linear DCCA reduces to linear CCA.
Outcome linear_reduction() {
  SynthSpec s;
  s.n_views = 2;
  s.latent_dim = 1;
  s.view_dims = {16, 16};
  s.snr_db = {0.0};
  s.m = 100000;
  s.seed = 202;
  const auto b = generate(s);
  const Matrix& X = b.views[0].data;
  const Matrix& Y = b.views[1].data;
  const Index m = s.m, n_train = m * 8 / 10, n_val = m / 10;
  Split split;
  for (Index i = 0; i < n_train; ++i) split.train.push_back(i);
  for (Index i = n_train; i < n_train + n_val; ++i) split.validation.push_back(i);
  const Index t0 = n_train + n_val;
  const Matrix Xt = X.bottomRows(m - t0), Yt = Y.bottomRows(m - t0);

  const auto lin = fit_cca(X.topRows(n_train), Y.topRows(n_train), 1);
  const double r_lin = pearson(Vector(project(lin, Xt, View::stimulus).col(0)), Vector(project(lin, Yt, View::response).col(0)));
  DccaHyper h;
  h.d = 1;
  h.hidden = {16};
  h.linear = true;
  h.dropout = 0.0;
  h.seed = 7;
  const auto model = train_dcca(X, Y, split, h);
  const double r_deep = evaluate_dcca(model, Xt, Yt)[0];
  return verdict(std::abs(r_deep - r_lin) <= 0.02,
                 fmt("linear DCCA %.4f vs CCA %.4f, |diff| %.4f (limit 0.02)", r_deep, r_lin, std::abs(r_deep - r_lin)));
}

// 3. Two-view MCCA equals CCA.
Outcome multiway_equivalence() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Index m = 300 + 100 * t, p = 2 + t % 5, q = 3 + t % 4;
    const Matrix Z = randn(m, 2, rng);
    const Matrix X = Z * randn(2, p, rng) + randn(m, p, rng);
    const Matrix Y = Z * randn(2, q, rng) + 1.5 * randn(m, q, rng);
    const double rho = fit_cca(X, Y, 1, Ridge::none()).canon_corr[0];
    const std::vector<Matrix> views{X, Y};
    const double isc = fit_mcca(views, 1, Ridge::none()).isc()[0];
    worst = std::max(worst, std::abs(rho - isc));
  }
  return verdict(worst <= 1e-6, fmt("max |ISC - rho| %.3g over 10 datasets (limit 1e-6)", worst));
}

// 4. Grid search over unit directions.
Outcome brute_force() {
  SynthSpec s;
  s.n_views = 2;
  s.latent_dim = 1;
  s.view_dims = {2, 2};
  s.snr_db = {0.0};
  s.m = 500;
  s.seed = 404;
  const auto bundle = generate(s);
  const Matrix& X = bundle.views[0].data;
  const Matrix& Y = bundle.views[1].data;
  const Matrix Xc = X.rowwise() - X.colwise().mean(), Yc = Y.rowwise() - Y.colwise().mean();
  const Matrix Sxx = Xc.transpose() * Xc, Syy = Yc.transpose() * Yc, Sxy = Xc.transpose() * Yc;
  double best = -1.0;
  for (int i = 0; i < 360; ++i) {
    const double ti = i * std::numbers::pi / 180.0;
    const Vector a = Vector{{std::cos(ti), std::sin(ti)}};
    const double va = a.dot(Sxx * a);
    for (int j = 0; j < 360; ++j) {
      const double tj = j * std::numbers::pi / 180.0;
      const Vector b = Vector{{std::cos(tj), std::sin(tj)}};
      best = std::max(best, a.dot(Sxy * b) / std::sqrt(va * b.dot(Syy * b)));
    }
  }
  const double rho = fit_cca(X, Y, 1, Ridge::none()).canon_corr[0];
  return verdict(std::abs(rho - best) <= 1e-3, fmt("CCA %.6f vs 1-degree grid %.6f (limit 1e-3)", rho, best));
}

// 5. End-to-end recovery of the population correlation.
Outcome population_recovery() {
  const json j = {{"pipeline", "lcca"},
                  {"seed", 5},
                  {"cv", {{"folds", 5}}},
                  {"segments", {{"seconds", json::array()}}},
                  {"synthetic",
                   {{"n_views", 2}, {"latent_dim", 1}, {"view_dims", {1, 16}}, {"snr_db", {0.0}}, {"m", 100000}, {"seed", 505}}}};
  const auto c = parse_config(j);
  const auto b = generate(c.synthetic->spec);
  const double population = b.population_corr[0] * b.population_corr[1];
  const auto rep = run_pipeline(c, load_dataset(c));
  return verdict(std::abs(rep.overall - 0.5) <= 0.03 && std::abs(population - 0.5) < 1e-12,
                 fmt("lcca overall %.4f, analytic %.4f (limit 0.5 +- 0.03); dims %ld -> %ld -> %ld, stimulus %ld", rep.overall,
                     population, static_cast<long>(rep.dims.response_in), static_cast<long>(rep.dims.after_filterbank),
                     static_cast<long>(rep.dims.response_final), static_cast<long>(rep.dims.stimulus_final)));
}

json cubic_config(const std::string& pipeline) {
  return {{"pipeline", pipeline},
          {"seed", 7},
          {"preprocessing", {{"filterbank", false}}},
          {"cv", {{"folds", 5}}},
          {"segments", {{"seconds", json::array()}}},
          {"stimulus", {{"lags", 3}}},
          {"model",
           {{"hidden", {64, 64}},
            {"enc_hidden", {32, 32}},
            {"dec_hidden", {32, 32}},
            {"epochs", 60},
            {"batch", 256},
            {"seeds", 2},
            {"mcca_d", 2}}},
          {"synthetic",
           {{"n_views", 4},
            {"latent_dim", 1},
            {"view_dims", {1, 8, 8, 8}},
            {"snr_db", {20.0}},
            {"mixing", "cubic"},
            {"m", 20000},
            {"seed", 3}}}};
}

// 6. Deep models beat linear ones on cubic mixing.
Outcome nonlinear_advantage() {
  std::map<std::string, double> r;
  const auto ds = load_dataset(parse_config(cubic_config("lcca")));
  for (const auto* p : {"lcca", "dcca", "lmlc", "dmlc"}) r[p] = run_pipeline(parse_config(cubic_config(p)), ds).overall;
  const double g1 = r["dcca"] - r["lcca"], g2 = r["dmlc"] - r["lmlc"];
  return verdict(g1 >= 0.05 && g2 >= 0.05,
                 fmt("DCCA %.4f - LCCA %.4f = %.4f; DMLC %.4f - LMLC %.4f = %.4f (limit >= 0.05 each)", r["dcca"], r["lcca"], g1,
                     r["dmlc"], r["lmlc"], g2));
}

// 7. Reconstruction weight sweep.
Outcome mse_tradeoff() {
  const json j = {{"pipeline", "dmlc"},
                  {"seed", 7},
                  {"preprocessing", {{"filterbank", false}}},
                  {"cv", {{"folds", 5}}},
                  {"segments", {{"seconds", json::array()}}},
                  {"stimulus", {{"lags", 3}}},
                  {"model",
                   {{"enc_hidden", {128, 128}},
                    {"dec_hidden", {128, 128}},
                    {"eta", 2e-4},
                    {"epochs", 150},
                    {"batch", 256},
                    {"seeds", 2},
                    {"mcca_d", 2}}},
                  {"synthetic",
                   {{"n_views", 4},
                    {"latent_dim", 1},
                    {"view_dims", {1, 48, 48, 48}},
                    {"snr_db", {10.0}},
                    {"mixing", "cubic"},
                    {"m", 1000},
                    {"seed", 3}}}};
  const auto c = parse_config(j);
  const auto rep = sweep(c, load_dataset(c), "mse_weight", {0.0, 0.1, 1.0, 10.0, 100.0, 1000.0});
  double best_interior = -2.0;
  std::string row;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    row += fmt("%s%g:%.4f", i ? " " : "", rep.rows[i].value, rep.rows[i].overall);
    if (i > 0 && i + 1 < rep.rows.size()) best_interior = std::max(best_interior, rep.rows[i].overall);
  }
  const bool ok = rep.rows.front().overall < best_interior && rep.rows.back().overall < best_interior;
  return verdict(ok, "mse_weight -> overall: " + row + " (endpoints must be strictly below the best interior value)");
}

// 8. d' grows with segment length and vanishes under a shuffled response.
Outcome d_prime_behaviour() {
  const json j = {{"pipeline", "lcca"},
                  {"seed", 8},
                  {"cv", {{"folds", 5}}},
                  {"segments", {{"seconds", {1.0, 5.0, 30.0}}, {"count", 200}}},
                  {"synthetic",
                   {{"n_views", 2},
                    {"latent_dim", 1},
                    {"view_dims", {1, 16}},
                    {"snr_db", {0.0}},
                    {"temporal", "ar1"},
                    {"m", 50000},
                    {"seed", 808}}}};
  const auto c = parse_config(j);
  RunOptions o;
  o.keep_projections = true;
  const auto rep = run_pipeline(c, load_dataset(c), o);
  std::vector<double> d;
  for (const auto& r : rep.d_prime) d.push_back(r.d_prime.value_or(std::nan("")));
  const bool rising = d.size() == 3 && d[0] < d[1] && d[1] < d[2];

  double worst_null = 0.0;
  std::mt19937_64 rng(8080);
  for (std::size_t li = 0; li < c.segments.seconds.size(); ++li) {
    std::vector<double> al, mis;
    for (std::size_t f = 0; f < rep.projections.size(); ++f) {
      const auto& p = rep.projections[f][0];
      std::vector<Index> perm(static_cast<std::size_t>(p.response.size()));
      std::iota(perm.begin(), perm.end(), Index{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      const Vector shuffled = p.response(perm);
      const auto res = segment_classify(p.stimulus, shuffled, 64.0, c.segments.seconds[li], 200, rng());
      al.insert(al.end(), res.aligned_corrs.begin(), res.aligned_corrs.end());
      mis.insert(mis.end(), res.misaligned_corrs.begin(), res.misaligned_corrs.end());
    }
    worst_null = std::max(worst_null, cohens_d_prime(al, mis));
  }
  return verdict(rising && worst_null <= 0.3,
                 fmt("d' at 1/5/30 s: %.3f %.3f %.3f (must rise); shuffled-response max d' %.3f (limit 0.3)", d[0], d[1], d[2],
                     worst_null));
}

// 9. Calibration of the t-test and exact z-average identities.
Outcome calibration() {
  std::mt19937_64 rng(909);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> ps;
  for (int s = 0; s < 500; ++s) {
    std::vector<double> a(20), b(20);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    ps.push_back(paired_t_test(a, b).p);
  }
  const double ks = ks_uniform_distance(ps);
  bool exact = true;
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  for (int t = 0; t < 1000; ++t) {
    const double r = u(rng);
    exact = exact && z_average(std::vector<double>(static_cast<std::size_t>(1 + t % 10), r)) == r;
    exact = exact && z_average(std::vector<double>{r, -r}) == 0.0;
    std::vector<double> xs(static_cast<std::size_t>(2 + t % 7)), neg;
    for (auto& x : xs) x = u(rng);
    for (double x : xs) neg.push_back(-x);
    exact = exact && z_average(neg) == -z_average(xs);
  }
  return verdict(ks < 0.1 && exact, fmt("null p-value KS distance %.4f (limit 0.1); idempotence/antisymmetry exact: %s", ks,
                                        exact ? "yes" : "no"));
}

// 10. Preprocessing dimensions across all pipelines and two stimulus features.
Outcome dimensional_contract() {
  std::vector<std::string> bad;
  int runs = 0;
  for (const auto* p : {"lcca", "dcca", "lmlc", "lmdc", "dmlc", "dmdc"}) {
    for (const auto* feat : {"envelope", "pc1"}) {
      const json j = {{"pipeline", p},
                      {"seed", 10},
                      {"cv", {{"folds", 5}}},
                      {"segments", {{"seconds", json::array()}}},
                      {"stimulus", {{"feature", feat}}},
                      {"model",
                       {{"hidden", {8}}, {"enc_hidden", {8}}, {"dec_hidden", {8}}, {"epochs", 1}, {"seeds", 1}, {"batch", 512}}},
                      {"synthetic",
                       {{"n_views", 3},
                        {"latent_dim", 1},
                        {"view_dims", {1, 128, 128}},
                        {"snr_db", {0.0}},
                        {"m", 2500},
                        {"seed", 1010},
                        {"audio_fs_hz", 4000.0}}}};
      const auto c = parse_config(j);
      RunOptions o;
      o.only_fold = 0;
      const auto rep = run_pipeline(c, load_dataset(c), o);
      ++runs;
      const auto& d = rep.dims;
      const bool dm = has_deep_multiway(c.pipeline);
      const Index fb_in = dm ? c.model.mcca_d : 60;
      const bool ok = d.response_in == 128 && d.after_pca_response == 60 && d.after_filterbank == fb_in * 21 &&
                      d.response_final == 139 && d.stimulus_final == 21 && (!dm || d.multiway_out == c.model.mcca_d) &&
                      std::isfinite(rep.overall);
      if (!ok)
        bad.push_back(fmt("%s/%s: %ld->%ld->%ld->%ld stim %ld", p, feat, static_cast<long>(d.response_in),
                          static_cast<long>(d.after_pca_response), static_cast<long>(d.after_filterbank),
                          static_cast<long>(d.response_final), static_cast<long>(d.stimulus_final)));
    }
  }
  std::string detail = fmt("%d runs: response 128 -> 60 -> 1260 (deep multiway: 10 codes -> 210) -> 139, stimulus 21", runs);
  for (const auto& b : bad) detail += "; mismatch " + b;
  return verdict(bad.empty(), detail);
}

// 11. CLI reports are byte-identical across thread counts.
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "dcca_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const json cfg = {{"pipeline", "dmdc"},
                    {"seed", 11},
                    {"compare_with", "lmlc"},
                    {"cv", {{"folds", 4}}},
                    {"stimulus", {{"lags", 8}}},
                    {"segments", {{"seconds", {1.0, 5.0}}, {"count", 50}}},
                    {"model",
                     {{"hidden", {16}}, {"enc_hidden", {16}}, {"dec_hidden", {16}}, {"epochs", 4}, {"seeds", 3}, {"batch", 256}, {"dropout", 0.1}, {"mcca_d", 3}}},
                    {"synthetic", {{"n_views", 4}, {"latent_dim", 1}, {"view_dims", {1, 12, 12, 12}}, {"m", 4000}, {"seed", 1111}}}};
  std::ofstream(dir / "config.json") << cfg.dump(2);
  std::vector<std::string> reports;
  for (int t : {1, 4, 3}) {
    const fs::path out = dir / ("t" + std::to_string(t));
    const std::string cmd = std::string("\"") + DCCA_CLI_PATH + "\" evaluate --config \"" + (dir / "config.json").string() +
                            "\" --out-dir \"" + out.string() + "\" --threads " + std::to_string(t) + " --no-plots > \"" +
                            (dir / "log.txt").string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) return {Status::fail, fmt("CLI exited with status %d at --threads %d", rc, t)};
    std::ifstream in(out / "report.json", std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    reports.push_back(ss.str());
  }
  const bool same = !reports[0].empty() && reports[0] == reports[1] && reports[0] == reports[2];
  return verdict(same, fmt("report.json at --threads 1/4/3: %s (%zu bytes)", same ? "byte-identical" : "DIFFERENT",
                           reports[0].size()));
}

// 12. Optional real-data check, never gated.
Outcome real_data() {
  const char* path = std::getenv("DCCA_SPEECH_EEG_CONFIG");
  if (path == nullptr || *path == '\0') return {Status::skip, "set DCCA_SPEECH_EEG_CONFIG to a data config to run"};
  auto c = load_config(path);
  const auto ds = load_dataset(c);
  c.pipeline = PipelineKind::lcca;
  c.compare_with.reset();
  const auto lin = run_pipeline(c, ds);
  c.pipeline = PipelineKind::dcca;
  const auto deep = run_pipeline(c, ds);
  int in_band = 0;
  std::string subs;
  for (const auto& [s, r] : lin.per_subject) {
    in_band += r >= 0.17 && r <= 0.32;
    subs += fmt(" %s=%.3f", s.c_str(), r);
  }
  return {Status::info, fmt("LCCA per subject:%s; %d/%zu in [0.17, 0.32]; overall LCCA %.4f, DCCA %.4f (%s)", subs.c_str(),
                            in_band, lin.per_subject.size(), lin.overall, deep.overall,
                            deep.overall > lin.overall ? "DCCA higher" : "DCCA not higher")};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "gradient fidelity", 10, gradient_fidelity},
      {2, "linear reduction", 120, linear_reduction},
      {3, "two-view multiway equivalence", 30, multiway_equivalence},
      {4, "brute-force CCA oracle", 60, brute_force},
      {5, "population-correlation recovery", 0, population_recovery},
      {6, "nonlinear advantage ordering", 600, nonlinear_advantage},
      {7, "reconstruction trade-off", 0, mse_tradeoff},
      {8, "d' behaviour", 0, d_prime_behaviour},
      {9, "statistical calibration", 0, calibration},
      {10, "pipeline dimensional contract", 0, dimensional_contract},
      {11, "determinism across threads", 0, determinism},
      {12, "speech-EEG dataset (informational)", 0, real_data},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs >= c.limit_s && o.status == Status::pass) {
      o.status = Status::fail;
      o.detail += fmt("; runtime %.1f s exceeds %.0f s", secs, c.limit_s);
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : o.status == Status::skip ? "SKIP" : "INFO";
    if (o.status == Status::fail) ++failed;
    std::cout << tag << " [" << c.id << "] " << c.name << ": " << o.detail << fmt(" (%.1f s)", secs) << std::endl;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criterion(s) failed" : std::string("acceptance: all gated criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
