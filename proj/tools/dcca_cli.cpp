#include "dcca/error.hpp"
#include "dcca/features.hpp"
#include "dcca/io.hpp"
#include "dcca/pipeline.hpp"
#include "dcca/svg.hpp"
#include "dcca/version.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace dcca;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c, bool need_config) {
  auto* opt = cmd->add_option("--config", c.config, "pipeline config (JSON)");
  if (need_config) opt->required();
  cmd->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "override the master seed");
  cmd->add_option("--threads", c.threads, "worker threads (0 = OpenMP default)");
}

PipelineConfig load(const Common& c) {
  auto cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

void write_plots(const json& rep, const fs::path& dir) {
  std::vector<std::string> subjects;
  svg::Series main{rep.at("pipeline").get<std::string>(), {}};
  for (const auto& s : rep.at("per_subject")) {
    subjects.push_back(s.at("subject").get<std::string>());
    main.values.push_back(s.at("z_average").get<double>());
  }
  std::vector<svg::Series> bars{main};
  if (rep.contains("comparison")) {
    const auto& cmp = rep.at("comparison");
    svg::Series base{cmp.at("baseline").get<std::string>(), {}};
    for (std::size_t n = 0; n < subjects.size(); ++n) {
      std::vector<double> r;
      for (const auto& f : cmp.at("baseline_folds")) r.push_back(f.at("subjects").at(n).at("test_corr").get<double>());
      base.values.push_back(z_average(r));
    }
    bars.push_back(base);
  }
  write_text(dir / "subjects.svg", svg::bar_chart("Test correlation per subject", subjects, bars, "correlation"));

  std::vector<double> secs;
  svg::Series dp{"d'", {}};
  for (const auto& r : rep.at("d_prime")) {
    secs.push_back(r.at("segment_s").get<double>());
    dp.values.push_back(r.at("d_prime").is_null() ? std::nan("") : r.at("d_prime").get<double>());
  }
  if (!secs.empty()) write_text(dir / "d_prime.svg", svg::line_plot("d' by segment length", secs, {dp}, "segment (s)", "d'"));
}

std::string summary(const json& rep) {
  std::ostringstream o;
  o << "pipeline " << rep.at("pipeline").get<std::string>() << ", overall " << rep.at("overall").get<double>() << "\n";
  for (const auto& s : rep.at("per_subject"))
    o << "  " << s.at("subject").get<std::string>() << "  " << s.at("z_average").get<double>() << "\n";
  for (const auto& r : rep.at("d_prime")) {
    o << "  d' @ " << r.at("segment_s").get<double>() << " s: ";
    if (r.at("d_prime").is_null()) o << "n/a";
    else o << r.at("d_prime").get<double>();
    o << "\n";
  }
  if (rep.contains("comparison")) {
    const auto& c = rep.at("comparison");
    o << "  vs " << c.at("baseline").get<std::string>() << " (overall " << c.at("baseline_overall").get<double>()
      << "): t = " << c.at("overall").at("t").get<double>() << ", p = " << c.at("overall").at("p").get<double>()
      << (c.at("overall_significant").get<bool>() ? " significant" : " not significant") << " at alpha "
      << c.at("alpha_corrected").get<double>() << "\n";
  }
  return o.str();
}

void write_models(const RunReport& rep, const fs::path& dir) {
  for (std::size_t f = 0; f < rep.models.size(); ++f) {
    const fs::path fold_dir = dir / "models" / ("fold" + std::to_string(rep.folds[f].fold));
    for (const auto& [name, j] : rep.models[f]) {
      if (j.is_string()) write_text(fold_dir / (name + ".jsonl"), j.get<std::string>());
      else write_json(fold_dir / (name + ".json"), j);
    }
  }
}

int cmd_fit(const Common& c, Index fold) {
  const auto cfg = load(c);
  RunOptions o;
  o.only_fold = fold;
  o.keep_models = true;
  const auto rep = run_pipeline(cfg, load_dataset(cfg), o);
  const fs::path dir(c.out_dir);
  write_json(dir / "fit_report.json", rep.to_json());
  write_json(dir / "timing.json", rep.timing_json());
  write_models(rep, dir);
  std::cout << summary(rep.to_json());
  return 0;
}

int cmd_evaluate(const Common& c, bool plots) {
  const auto cfg = load(c);
  const auto rep = run_pipeline(cfg, load_dataset(cfg));
  const fs::path dir(c.out_dir);
  const auto j = rep.to_json();
  write_json(dir / "report.json", j);
  write_json(dir / "timing.json", rep.timing_json());
  if (plots) write_plots(j, dir);
  std::cout << summary(j);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& param, const std::vector<double>& values) {
  const auto cfg = load(c);
  const auto rep = sweep(cfg, load_dataset(cfg), param, values);
  const fs::path dir(c.out_dir);
  write_json(dir / "sweep.json", rep.to_json());
  svg::Series s{to_string(rep.pipeline), {}};
  std::vector<double> x;
  for (const auto& r : rep.rows) {
    x.push_back(r.value);
    s.values.push_back(r.overall);
    std::cout << param << " = " << r.value << ": " << r.overall << "\n";
  }
  // wide ranges (mse_weight) read better by position
  const bool by_index = x.size() > 2 && x.back() > 100.0 * std::max(1e-12, x[1]);
  std::vector<double> xs = x;
  if (by_index)
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
  write_text(dir / "sweep.svg", svg::line_plot("Sweep over " + param, xs, {s},
                                               by_index ? param + " (value index)" : param, "overall correlation"));
  return 0;
}

int cmd_synth(const Common& c, const std::string& format_name) {
  const auto fmt = parse_format(format_name);
  PipelineConfig cfg;
  if (!c.config.empty()) cfg = load(c);
  else cfg.synthetic = SyntheticConfig{};
  require(cfg.synthetic.has_value(), ErrorKind::config, "synth needs a config with a 'synthetic' block");
  const auto ds = load_dataset(cfg);
  const fs::path dir(c.out_dir);
  const std::string ext = fmt == DataFormat::csv ? ".csv" : ".f64";
  write_series(dir / ("stimulus" + ext), ds.stimulus, fmt);
  DataConfig d;
  d.format = fmt;
  d.stimulus = "stimulus" + ext;
  for (std::size_t n = 0; n < ds.responses.size(); ++n) {
    write_series(dir / (ds.subjects[n] + ext), ds.responses[n], fmt);
    d.responses.push_back(ds.subjects[n] + ext);
  }
  d.subjects = ds.subjects;
  PipelineConfig out = cfg;
  out.synthetic.reset();
  out.data = d;
  write_json(dir / "config.json", to_json(out));
  std::cout << "wrote " << ds.responses.size() << " responses and a stimulus to " << dir.string() << "\n";
  return 0;
}

int cmd_features(const std::string& audio_path, const std::string& format_name, double fs, const std::string& out_dir) {
  const auto audio = ingest(audio_path, parse_format(format_name), fs);
  require(audio.channels() == 1, ErrorKind::data, "audio must have one channel");
  const auto feats = extract_features(std::span<const double>(audio.data.data(), static_cast<std::size_t>(audio.samples())),
                                      audio.fs_hz);
  const fs::path dir(out_dir);
  write_series(dir / "features.csv", feats, DataFormat::csv);
  const auto s3 = stimulus_3d(feats);
  write_series(dir / "stimulus_3d.csv", s3.data, DataFormat::csv);
  std::cout << feats.samples() << " frames at " << feats.fs_hz << " Hz";
  if (!s3.excluded.empty()) std::cout << " (constant features left out of PC1: " << s3.excluded.size() << ")";
  std::cout << "\n";
  return 0;
}

int cmd_report(const std::string& input, const std::string& out_dir) {
  json rep;
  try {
    rep = json::parse(read_text(input));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::parse, input + ": malformed JSON at byte " + std::to_string(e.byte));
  }
  try {
    std::vector<double> r;
    for (const auto& f : rep.at("folds"))
      for (const auto& s : f.at("subjects")) r.push_back(s.at("test_corr").get<double>());
    const double overall = z_average(r);
    require(overall == rep.at("overall").get<double>(), ErrorKind::data,
            "report overall does not equal the z-average of its fold entries");
    const fs::path dir(out_dir);
    write_plots(rep, dir);
    write_text(dir / "summary.txt", summary(rep));
    std::cout << summary(rep);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, input + ": not a run report (" + e.what() + ")");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear and deep CCA / multiway CCA for stimulus-response decoding"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  Index fold = 0;
  std::string param, values_str, format = "csv", audio, input;
  double fs = 0.0;
  bool plots = true;

  auto* fit = app.add_subcommand("fit", "train on one train/validation/test split and save checkpoints");
  add_common(fit, common, true);
  fit->add_option("--fold", fold, "which fold's split to use")->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "cross-validate a pipeline and write report.json");
  add_common(evaluate, common, true);
  evaluate->add_flag("!--no-plots", plots, "skip SVG plots");

  auto* sw = app.add_subcommand("sweep", "re-run a pipeline over values of one hyperparameter");
  add_common(sw, common, true);
  sw->add_option("--param", param, "dropout, batch, d, d_s, mse_weight or depth")->required();
  sw->add_option("--values", values_str, "comma-separated values")->required();

  auto* synth = app.add_subcommand("synth", "write a synthetic bundle and a matching data config");
  add_common(synth, common, false);
  synth->add_option("--format", format, "csv or raw-f64")->capture_default_str();

  auto* feats = app.add_subcommand("features", "extract the 20 frame features from an audio file");
  std::string feat_out = "out";
  feats->add_option("--audio", audio, "audio file (one channel)")->required();
  feats->add_option("--format", format, "csv or raw-f64")->capture_default_str();
  feats->add_option("--fs", fs, "sampling rate when no sidecar gives one");
  feats->add_option("--out-dir", feat_out, "output directory")->capture_default_str();
  feats->add_option("--threads", common.threads, "worker threads");

  auto* report = app.add_subcommand("report", "render plots and a summary from report.json");
  std::string report_out = "out";
  report->add_option("--input", input, "report.json")->required();
  report->add_option("--out-dir", report_out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (common.threads < 0) fail(ErrorKind::config, "--threads must be >= 0");
    if (common.threads > 0) omp_set_num_threads(common.threads);
    if (*fit) return cmd_fit(common, fold);
    if (*evaluate) return cmd_evaluate(common, plots);
    if (*sw) {
      std::vector<double> values;
      std::stringstream ss(values_str);
      for (std::string tok; std::getline(ss, tok, ',');) {
        try {
          std::size_t used = 0;
          values.push_back(std::stod(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::logic_error&) {
          fail(ErrorKind::config, "bad sweep value '" + tok + "'");
        }
      }
      return cmd_sweep(common, param, values);
    }
    if (*synth) return cmd_synth(common, format);
    if (*feats) return cmd_features(audio, format, fs, feat_out);
    if (*report) return cmd_report(input, report_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
