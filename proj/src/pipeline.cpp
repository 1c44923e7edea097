#include "dcca/pipeline.hpp"

#include "dcca/deep_cca.hpp"
#include "dcca/deep_mcca.hpp"
#include "dcca/error.hpp"
#include "dcca/features.hpp"
#include "dcca/version.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>

namespace dcca {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- enums ----

PipelineKind parse_pipeline(const std::string& s) {
  if (s == "lcca") return PipelineKind::lcca;
  if (s == "dcca") return PipelineKind::dcca;
  if (s == "lmlc") return PipelineKind::lmlc;
  if (s == "lmdc") return PipelineKind::lmdc;
  if (s == "dmlc") return PipelineKind::dmlc;
  if (s == "dmdc") return PipelineKind::dmdc;
  fail(ErrorKind::config, "unknown pipeline '" + s + "' (lcca, dcca, lmlc, lmdc, dmlc, dmdc)");
}

std::string to_string(PipelineKind k) {
  switch (k) {
    case PipelineKind::lcca: return "lcca";
    case PipelineKind::dcca: return "dcca";
    case PipelineKind::lmlc: return "lmlc";
    case PipelineKind::lmdc: return "lmdc";
    case PipelineKind::dmlc: return "dmlc";
    case PipelineKind::dmdc: return "dmdc";
  }
  return "?";
}

StimulusFeature parse_feature(const std::string& s) {
  if (s == "envelope") return StimulusFeature::envelope;
  if (s == "pc1") return StimulusFeature::pc1;
  if (s == "rms") return StimulusFeature::rms;
  if (s == "flux") return StimulusFeature::flux;
  fail(ErrorKind::config, "unknown stimulus feature '" + s + "' (envelope, pc1, rms, flux)");
}

std::string to_string(StimulusFeature f) {
  switch (f) {
    case StimulusFeature::envelope: return "envelope";
    case StimulusFeature::pc1: return "pc1";
    case StimulusFeature::rms: return "rms";
    case StimulusFeature::flux: return "flux";
  }
  return "?";
}

SplitMode parse_split_mode(const std::string& s) {
  if (s == "contiguous") return SplitMode::contiguous;
  if (s == "random") return SplitMode::random;
  fail(ErrorKind::config, "unknown cv mode '" + s + "' (contiguous, random)");
}

std::string to_string(SplitMode m) { return m == SplitMode::contiguous ? "contiguous" : "random"; }

bool is_multiway(PipelineKind k) { return k != PipelineKind::lcca && k != PipelineKind::dcca; }
bool has_deep_multiway(PipelineKind k) { return k == PipelineKind::dmlc || k == PipelineKind::dmdc; }
bool has_deep_cca(PipelineKind k) {
  return k == PipelineKind::dcca || k == PipelineKind::lmdc || k == PipelineKind::dmdc;
}

// ---- config ----

std::array<double, 3> CvConfig::fractions() const {
  if (!split.empty()) return {split[0], split[1], split[2]};
  const double k = static_cast<double>(folds);
  return {(k - 2.0) / k, 1.0 / k, 1.0 / k};
}

void PipelineConfig::validate() const {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorKind::config, what); };
  check(schema_version == kConfigSchemaVersion,
        "schema_version " + std::to_string(schema_version) + " is not supported (expected " +
            std::to_string(kConfigSchemaVersion) + ")");
  check(data.has_value() != synthetic.has_value(), "exactly one of 'data' and 'synthetic' must be given");
  const auto& p = preprocessing;
  if (p.bandpass) check(p.bandpass->first > 0.0 && p.bandpass->second > p.bandpass->first, "bandpass edges must satisfy 0 < low < high");
  check(p.pca_response >= 1 && p.pca_filterbank >= 1, "PCA dims must be >= 1");
  check(p.filterbank_bands >= 1, "filterbank_bands must be >= 1");
  check(stimulus.lags >= 1, "stimulus lags must be >= 1");
  const auto& m = model;
  check(m.d >= 1 && m.mcca_d >= 1, "model dims must be >= 1");
  check(std::isfinite(m.eta) && m.eta >= 0.0, "eta must be >= 0");
  check(m.batch >= 2, "batch must be >= 2");
  check(m.dropout >= 0.0 && m.dropout < 1.0, "dropout must lie in [0, 1)");
  check(m.mse_weight >= 0.0, "mse_weight must be >= 0");
  check(m.epochs >= 0 && m.patience >= 1 && m.seeds >= 1, "epochs >= 0, patience >= 1, seeds >= 1 required");
  for (auto w : m.hidden) check(w >= 1, "hidden widths must be >= 1");
  for (auto w : m.enc_hidden) check(w >= 1, "hidden widths must be >= 1");
  for (auto w : m.dec_hidden) check(w >= 1, "hidden widths must be >= 1");
  check(cv.folds >= 1, "cv.folds must be >= 1");
  if (cv.split.empty()) {
    check(cv.folds >= 3, "cv.folds must be >= 3 without an explicit split");
  } else {
    check(cv.split.size() == 3, "cv.split must hold [train, validation, test]");
    for (double f : cv.split) check(f > 0.0, "cv.split fractions must be positive");
    check(std::abs(cv.split[0] + cv.split[1] + cv.split[2] - 1.0) <= 1e-9, "cv.split fractions must sum to 1");
  }
  for (double s : segments.seconds) check(s > 0.0, "segment lengths must be positive");
  check(segments.count >= 2, "segments.count must be >= 2");
  check(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  check(comparisons >= 1, "comparisons must be >= 1");
  if (data) {
    check(!data->stimulus.empty(), "data.stimulus is required");
    check(!data->responses.empty(), "data.responses must list at least one file");
    check(data->subjects.empty() || data->subjects.size() == data->responses.size(),
          "data.subjects must match data.responses");
  }
  if (synthetic) {
    synthetic->spec.validate();
    check(synthetic->spec.n_views >= 2, "synthetic data needs a stimulus view and at least one response");
    check(synthetic->audio_fs_hz >= 0.0, "synthetic.audio_fs_hz must be >= 0");
  }
}

namespace {

// Reads an object field by field and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    require(j.is_object(), ErrorKind::config, (ctx_.empty() ? "config" : ctx_) + " must be an object");
  }

  template <class T>
  bool get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return false;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::config, "'" + ctx_ + key + "' has the wrong type");
    }
    return true;
  }

  const json* sub(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null() ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items())
      require(seen_.count(item.key()) > 0, ErrorKind::config, "unknown config key '" + ctx_ + item.key() + "'");
  }

 private:
  const json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

template <class E, class Parse>
void get_enum(Reader& r, const std::string& key, E& out, Parse parse) {
  std::string s;
  if (r.get(key, s)) out = parse(s);
}

}  // namespace

PipelineConfig parse_config(const json& j, const fs::path& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  Reader r(j, "");
  r.get("schema_version", c.schema_version);
  std::string pipeline;
  require(r.get("pipeline", pipeline), ErrorKind::config, "config lacks 'pipeline'");
  c.pipeline = parse_pipeline(pipeline);
  r.get("seed", c.seed);
  r.get("alpha", c.alpha);
  r.get("comparisons", c.comparisons);
  std::string cmp;
  if (r.get("compare_with", cmp)) c.compare_with = parse_pipeline(cmp);

  if (const json* p = r.sub("preprocessing")) {
    Reader q(*p, "preprocessing.");
    std::vector<double> edges;
    if (q.sub("bandpass")) {
      q.get("bandpass", edges);
      require(edges.size() == 2, ErrorKind::config, "preprocessing.bandpass must be [low, high] or null");
      c.preprocessing.bandpass = std::make_pair(edges[0], edges[1]);
    }
    q.get("pca_response", c.preprocessing.pca_response);
    q.get("filterbank", c.preprocessing.filterbank);
    q.get("filterbank_bands", c.preprocessing.filterbank_bands);
    q.get("pca_filterbank", c.preprocessing.pca_filterbank);
    q.finish();
  }
  if (const json* p = r.sub("stimulus")) {
    Reader q(*p, "stimulus.");
    get_enum(q, "feature", c.stimulus.feature, parse_feature);
    q.get("lags", c.stimulus.lags);
    q.finish();
  }
  if (const json* p = r.sub("model")) {
    Reader q(*p, "model.");
    auto& m = c.model;
    q.get("d", m.d);
    q.get("mcca_d", m.mcca_d);
    q.get("eta", m.eta);
    q.get("batch", m.batch);
    q.get("dropout", m.dropout);
    q.get("mse_weight", m.mse_weight);
    q.get("epochs", m.epochs);
    q.get("patience", m.patience);
    q.get("seeds", m.seeds);
    q.get("hidden", m.hidden);
    q.get("enc_hidden", m.enc_hidden);
    q.get("dec_hidden", m.dec_hidden);
    q.get("leaky_slope", m.leaky_slope);
    q.get("linear", m.linear);
    q.finish();
  }
  if (const json* p = r.sub("cv")) {
    Reader q(*p, "cv.");
    q.get("folds", c.cv.folds);
    q.get("split", c.cv.split);
    get_enum(q, "mode", c.cv.mode, parse_split_mode);
    q.finish();
  }
  if (const json* p = r.sub("segments")) {
    Reader q(*p, "segments.");
    q.get("seconds", c.segments.seconds);
    q.get("count", c.segments.count);
    q.finish();
  }
  if (const json* p = r.sub("data")) {
    Reader q(*p, "data.");
    DataConfig d;
    get_enum(q, "format", d.format, parse_format);
    q.get("fs_hz", d.fs_hz);
    q.get("stimulus", d.stimulus);
    q.get("responses", d.responses);
    q.get("subjects", d.subjects);
    q.finish();
    c.data = d;
  }
  if (const json* p = r.sub("synthetic")) {
    Reader q(*p, "synthetic.");
    SyntheticConfig s;
    auto& sp = s.spec;
    q.get("n_views", sp.n_views);
    q.get("latent_dim", sp.latent_dim);
    q.get("view_dims", sp.view_dims);
    q.get("snr_db", sp.snr_db);
    get_enum(q, "mixing", sp.mixing, parse_mixing);
    get_enum(q, "temporal", sp.temporal, parse_temporal);
    q.get("ar_coef", sp.ar_coef);
    q.get("m", sp.m);
    q.get("fs_hz", sp.fs_hz);
    q.get("seed", sp.seed);
    q.get("audio_fs_hz", s.audio_fs_hz);
    q.finish();
    c.synthetic = s;
  }
  r.finish();
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  require(fs::exists(path), ErrorKind::config, "config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, path.string() + ": malformed JSON at byte " + std::to_string(e.byte));
  }
  return parse_config(j, path.parent_path());
}

json to_json(const PipelineConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["pipeline"] = to_string(c.pipeline);
  j["seed"] = c.seed;
  j["alpha"] = c.alpha;
  j["comparisons"] = c.comparisons;
  if (c.compare_with) j["compare_with"] = to_string(*c.compare_with);
  const auto& p = c.preprocessing;
  j["preprocessing"] = {{"bandpass", p.bandpass ? json::array({p.bandpass->first, p.bandpass->second}) : json()},
                        {"pca_response", p.pca_response},
                        {"filterbank", p.filterbank},
                        {"filterbank_bands", p.filterbank_bands},
                        {"pca_filterbank", p.pca_filterbank}};
  j["stimulus"] = {{"feature", to_string(c.stimulus.feature)}, {"lags", c.stimulus.lags}};
  const auto& m = c.model;
  j["model"] = {{"d", m.d},
                {"mcca_d", m.mcca_d},
                {"eta", m.eta},
                {"batch", m.batch},
                {"dropout", m.dropout},
                {"mse_weight", m.mse_weight},
                {"epochs", m.epochs},
                {"patience", m.patience},
                {"seeds", m.seeds},
                {"hidden", m.hidden},
                {"enc_hidden", m.enc_hidden},
                {"dec_hidden", m.dec_hidden},
                {"leaky_slope", m.leaky_slope},
                {"linear", m.linear}};
  const auto fr = c.cv.fractions();
  j["cv"] = {{"folds", c.cv.folds}, {"split", {fr[0], fr[1], fr[2]}}, {"mode", to_string(c.cv.mode)}};
  j["segments"] = {{"seconds", c.segments.seconds}, {"count", c.segments.count}};
  if (c.data) {
    j["data"] = {{"format", to_string(c.data->format)},
                 {"fs_hz", c.data->fs_hz},
                 {"stimulus", c.data->stimulus},
                 {"responses", c.data->responses},
                 {"subjects", c.data->subjects}};
  }
  if (c.synthetic) {
    const auto& s = c.synthetic->spec;
    j["synthetic"] = {{"n_views", s.n_views},   {"latent_dim", s.latent_dim},
                      {"view_dims", s.view_dims}, {"snr_db", s.snr_db},
                      {"mixing", to_string(s.mixing)}, {"temporal", to_string(s.temporal)},
                      {"ar_coef", s.ar_coef},   {"m", s.m},
                      {"fs_hz", s.fs_hz},       {"seed", s.seed},
                      {"audio_fs_hz", c.synthetic->audio_fs_hz}};
  }
  return j;
}

// ---- data ----

Dataset load_dataset(const PipelineConfig& c) {
  c.validate();
  Dataset ds;
  if (c.synthetic) {
    const auto b = generate(c.synthetic->spec);
    ds.stimulus = b.views[0];
    if (c.synthetic->audio_fs_hz > 0.0)
      ds.stimulus = synth_audio(b.views[0], c.synthetic->audio_fs_hz, derive_seed(c.synthetic->spec.seed, 0xa0d10));
    for (std::size_t n = 1; n < b.views.size(); ++n) {
      ds.responses.push_back(b.views[n]);
      ds.subjects.push_back("sub" + std::to_string(n));
    }
    return ds;
  }
  const auto& d = *c.data;
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || c.base_dir.empty() ? path : c.base_dir / path;
  };
  ds.stimulus = ingest(resolve(d.stimulus), d.format, d.fs_hz);
  for (std::size_t n = 0; n < d.responses.size(); ++n) {
    const auto path = resolve(d.responses[n]);
    ds.responses.push_back(ingest(path, d.format, d.fs_hz));
    ds.subjects.push_back(d.subjects.empty() ? path.stem().string() : d.subjects[n]);
  }
  return ds;
}

PreparedData prepare(const Dataset& ds, const PipelineConfig& c) {
  require(!ds.responses.empty(), ErrorKind::input, "no response recordings");
  require(ds.subjects.size() == ds.responses.size(), ErrorKind::state, "one subject id per response expected");
  const double fs = ds.responses[0].fs_hz;
  for (const auto& r : ds.responses) {
    r.validate();
    require(r.fs_hz == fs, ErrorKind::data, "responses have different sampling rates");
    require(r.channels() == ds.responses[0].channels(), ErrorKind::data, "responses have different channel counts");
  }
  ds.stimulus.validate();
  PreparedData out;
  out.subjects = ds.subjects;
  const auto feature = c.stimulus.feature;
  const auto& s = ds.stimulus;
  auto pick = [&](const TimeSeries& features) {
    require(feature != StimulusFeature::envelope, ErrorKind::config,
            "the envelope needs an audio stimulus, not a feature matrix");
    const auto s3 = stimulus_3d(features);
    const Index col = feature == StimulusFeature::pc1 ? 0 : feature == StimulusFeature::rms ? 1 : 2;
    TimeSeries t;
    t.data = s3.data.data.col(col);
    t.fs_hz = s3.data.fs_hz;
    t.labels = {to_string(feature)};
    return t;
  };
  if (s.fs_hz > fs) {
    require(s.channels() == 1, ErrorKind::data, "an audio stimulus must have one channel");
    const std::span<const double> audio(s.data.data(), static_cast<std::size_t>(s.samples()));
    if (feature == StimulusFeature::envelope) {
      out.stimulus = envelope(audio, s.fs_hz, fs);
      out.stimulus.labels = {"envelope"};
    } else {
      auto f = pick(extract_features(audio, s.fs_hz));
      f.data = resample(f.data, f.fs_hz, fs);
      f.fs_hz = fs;
      out.stimulus = std::move(f);
    }
    out.stimulus_source = "audio:" + to_string(feature);
  } else {
    require(s.fs_hz == fs, ErrorKind::data, "stimulus rate is below the response rate");
    if (s.channels() == 1) {
      out.stimulus = s;
      out.stimulus_source = "precomputed";
    } else {
      require(s.channels() == kFeatureCount, ErrorKind::data,
              "a stimulus at the response rate must have 1 channel or " + std::to_string(kFeatureCount) +
                  " feature columns");
      out.stimulus = pick(s);
      out.stimulus_source = "features:" + to_string(feature);
    }
  }
  Index m = out.stimulus.samples();
  for (const auto& r : ds.responses) m = std::min(m, r.samples());
  const Index longest = std::accumulate(ds.responses.begin(), ds.responses.end(), out.stimulus.samples(),
                                        [](Index a, const TimeSeries& r) { return std::max(a, r.samples()); });
  require(longest - m <= static_cast<Index>(std::ceil(fs)), ErrorKind::data,
          "stimulus and responses differ in length by more than one second after resampling");
  out.stimulus.data.conservativeResize(m, Eigen::NoChange);
  for (const auto& r : ds.responses) {
    TimeSeries t = r;
    t.data.conservativeResize(m, Eigen::NoChange);
    out.responses.push_back(std::move(t));
  }
  return out;
}

FoldIndices fold_indices(Index m, Index head, Index tail, const CvConfig& cv, Index fold, std::uint64_t seed) {
  require(fold >= 0 && fold < cv.folds, ErrorKind::config, "fold index out of range");
  const Index n = m - head - tail;
  require(n >= 3, ErrorKind::input, "too few usable samples after edge trimming");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), head);
  if (cv.mode == SplitMode::random) {
    Rng rng(derive_seed(seed, 0x5b117));
    std::shuffle(order.begin(), order.end(), rng);
  }
  const auto fr = cv.fractions();
  const Index n_test = std::max<Index>(1, static_cast<Index>(std::llround(fr[2] * static_cast<double>(n))));
  const Index n_val = std::max<Index>(1, static_cast<Index>(std::llround(fr[1] * static_cast<double>(n))));
  require(n_test + n_val < n, ErrorKind::input, "no training rows left in the split");
  const Index start = fold * n / cv.folds;
  std::vector<char> role(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n_test; ++i) role[static_cast<std::size_t>((start + i) % n)] = 2;
  for (Index i = 0; i < n_val; ++i) role[static_cast<std::size_t>((start + n_test + i) % n)] = 1;
  FoldIndices out;
  for (Index i = 0; i < n; ++i) {
    const auto r = role[static_cast<std::size_t>(i)];
    (r == 0 ? out.train : r == 1 ? out.validation : out.test).push_back(order[static_cast<std::size_t>(i)]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

json to_json(const Dimensions& d) {
  return {{"response_in", d.response_in},         {"after_pca_response", d.after_pca_response},
          {"multiway_out", d.multiway_out},       {"after_filterbank", d.after_filterbank},
          {"response_final", d.response_final},   {"stimulus_lagged", d.stimulus_lagged},
          {"stimulus_final", d.stimulus_final}};
}

// ---- run ----

namespace {

constexpr std::uint64_t kTagCca = 0xcca;
constexpr std::uint64_t kTagMultiway = 0x3c;
constexpr std::uint64_t kTagSegments = 0x5e9;

Matrix take(const Matrix& X, const std::vector<Index>& idx) { return X(idx, Eigen::all); }

template <class F>
auto stage(const std::string& name, Index fold, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    fail(e.kind(), "fold " + std::to_string(fold) + ", stage '" + name + "': " + e.what());
  }
}

json pca_json(const PcaTransform& t) {
  return {{"mean", std::vector<double>(t.mean.data(), t.mean.data() + t.mean.size())},
          {"components", matrix_to_json(t.components)}};
}

struct Shared {
  const PipelineConfig* config;
  PipelineKind kind;
  const PreparedData* data;
  std::vector<Matrix> responses;  // after the optional band-pass
  Matrix lagged;                  // multiway stimulus view
  std::optional<FilterBank> fb;
  Index head = 0, tail = 0;
};

struct FoldOutput {
  FoldResult result;
  Dimensions dims;
  std::vector<TestProjection> proj;
  std::vector<std::pair<std::string, json>> models;
  double wall_ms = 0.0;
};

// PCA fitted on the training rows; identity when the input is narrow enough.
Matrix pca_stage(const Matrix& X, const std::vector<Index>& train, Index k, const std::string& name,
                 std::vector<std::pair<std::string, json>>* models) {
  if (X.cols() <= k) return X;
  const auto t = fit_pca(take(X, train), k);
  if (models) models->emplace_back(name, pca_json(t));
  return apply_pca(t, X);
}

Matrix filter_stage(const Matrix& X, const FilterBank& fb) {
  TimeSeries ts;
  ts.data = X;
  ts.fs_hz = fb.fs_hz;
  return apply_filterbank(ts, fb).data;
}

DccaHyper dcca_hyper(const ModelConfig& m, std::uint64_t seed) {
  DccaHyper h;
  h.d = m.d;
  h.hidden = m.hidden;
  h.eta = m.eta;
  h.batch = m.batch;
  h.dropout = m.dropout;
  h.epochs = m.epochs;
  h.patience = m.patience;
  h.seeds = m.seeds;
  h.leaky_slope = m.leaky_slope;
  h.linear = m.linear;
  h.seed = seed;
  return h;
}

DmccaHyper dmcca_hyper(const ModelConfig& m, std::uint64_t seed) {
  DmccaHyper h;
  h.d = m.mcca_d;
  h.enc_hidden = m.enc_hidden;
  h.dec_hidden = m.dec_hidden;
  h.eta = m.eta;
  h.batch = m.batch;
  h.dropout = m.dropout;
  h.epochs = m.epochs;
  h.patience = m.patience;
  h.seeds = m.seeds;
  h.mse_weight = m.mse_weight;
  h.leaky_slope = m.leaky_slope;
  h.linear = m.linear;
  h.seed = seed;
  return h;
}

FoldOutput run_fold(const Shared& sh, Index fold, bool keep_models) {
  const auto t0 = std::chrono::steady_clock::now();
  const PipelineConfig& c = *sh.config;
  const auto& pre = c.preprocessing;
  const Index m = sh.data->stimulus.samples();
  const auto N = static_cast<Index>(sh.responses.size());
  const auto idx = fold_indices(m, sh.head, sh.tail, c.cv, fold, c.seed);
  FoldOutput out;
  auto* models = keep_models ? &out.models : nullptr;
  out.result.fold = fold;
  out.result.train_rows = static_cast<Index>(idx.train.size());
  out.result.validation_rows = static_cast<Index>(idx.validation.size());
  out.result.test_rows = static_cast<Index>(idx.test.size());

  std::vector<Matrix> R(static_cast<std::size_t>(N));
  for (Index n = 0; n < N; ++n) {
    R[static_cast<std::size_t>(n)] = stage("response pca", fold, [&] {
      return pca_stage(sh.responses[static_cast<std::size_t>(n)], idx.train, pre.pca_response,
                       sh.data->subjects[static_cast<std::size_t>(n)] + "/pca_response", models);
    });
  }
  out.dims.response_in = sh.responses[0].cols();
  out.dims.after_pca_response = R[0].cols();

  Matrix S = sh.data->stimulus.data;
  if (is_multiway(sh.kind)) {
    std::vector<Matrix> views{sh.lagged};
    views.insert(views.end(), R.begin(), R.end());
    out.dims.stimulus_lagged = sh.lagged.cols();
    Matrix stim_out;
    if (has_deep_multiway(sh.kind)) {
      const auto model = stage("deep multiway cca", fold, [&] {
        return train_dmcca(views, Split{idx.train, idx.validation},
                           dmcca_hyper(c.model, derive_seed(c.seed, static_cast<std::uint64_t>(fold), kTagMultiway)));
      });
      for (Index n = 0; n < N; ++n)
        R[static_cast<std::size_t>(n)] = encode(model, n + 1, views[static_cast<std::size_t>(n + 1)]);
      stim_out = encode(model, 0, views[0]);
      if (models) {
        out.models.emplace_back("dmcca", to_json(model));
        out.models.emplace_back("dmcca_log", training_log_jsonl(model.log));
      }
    } else {
      std::vector<Matrix> train_views;
      for (const auto& v : views) train_views.push_back(take(v, idx.train));
      const auto model = stage("multiway cca", fold, [&] { return fit_mcca(train_views, c.model.mcca_d); });
      for (Index n = 0; n < N; ++n)
        R[static_cast<std::size_t>(n)] = denoise(model, n + 1, views[static_cast<std::size_t>(n + 1)], true);
      stim_out = denoise(model, 0, views[0], true);
      if (models) out.models.emplace_back("mcca", to_json(model));
    }
    out.dims.multiway_out = R[0].cols();
    S = stage("stimulus pca", fold, [&] { return pca_stage(stim_out, idx.train, 1, "stimulus_pca", models); });
  }
  if (sh.fb) {
    S = stage("stimulus filterbank", fold, [&] { return filter_stage(S, *sh.fb); });
    for (auto& r : R) r = stage("response filterbank", fold, [&] { return filter_stage(r, *sh.fb); });
  }
  out.dims.after_filterbank = R[0].cols();
  for (Index n = 0; n < N; ++n) {
    auto& r = R[static_cast<std::size_t>(n)];
    r = stage("filterbank pca", fold, [&] {
      return pca_stage(r, idx.train, pre.pca_filterbank, sh.data->subjects[static_cast<std::size_t>(n)] + "/pca_filterbank",
                       models);
    });
  }
  out.dims.response_final = R[0].cols();
  out.dims.stimulus_final = S.cols();

  const Matrix S_train = take(S, idx.train), S_val = take(S, idx.validation), S_test = take(S, idx.test);
  for (Index n = 0; n < N; ++n) {
    const auto& subject = sh.data->subjects[static_cast<std::size_t>(n)];
    const Matrix& Y = R[static_cast<std::size_t>(n)];
    SubjectResult res;
    res.subject = subject;
    TestProjection proj;
    if (has_deep_cca(sh.kind)) {
      const auto model = stage("deep cca (" + subject + ")", fold, [&] {
        return train_dcca(S, Y, Split{idx.train, idx.validation},
                          dcca_hyper(c.model, derive_seed(c.seed, static_cast<std::uint64_t>(fold),
                                                          kTagCca + static_cast<std::uint64_t>(n))));
      });
      stage("deep cca evaluation (" + subject + ")", fold, [&] {
        res.train_corr = evaluate_dcca(model, S_train, take(Y, idx.train))[0];
        res.validation_corr = evaluate_dcca(model, S_val, take(Y, idx.validation))[0];
        const auto [px, py] = transform_dcca(model, S_test, take(Y, idx.test));
        proj.stimulus = px.col(0);
        proj.response = py.col(0);
        res.test_corr = pearson(proj.stimulus, proj.response);
        return 0;
      });
      if (models) {
        out.models.emplace_back(subject + "/dcca", to_json(model));
        out.models.emplace_back(subject + "/dcca_log", training_log_jsonl(model.log));
      }
    } else {
      const auto model = stage("linear cca (" + subject + ")", fold,
                               [&] { return fit_cca(S_train, take(Y, idx.train), c.model.d); });
      stage("linear cca evaluation (" + subject + ")", fold, [&] {
        auto corr_on = [&](const Matrix& X, const Matrix& Yr) {
          return pearson(Vector(project(model, X, View::stimulus).col(0)), Vector(project(model, Yr, View::response).col(0)));
        };
        res.train_corr = model.canon_corr[0];
        res.validation_corr = corr_on(S_val, take(Y, idx.validation));
        proj.stimulus = project(model, S_test, View::stimulus).col(0);
        proj.response = project(model, take(Y, idx.test), View::response).col(0);
        res.test_corr = pearson(proj.stimulus, proj.response);
        return 0;
      });
      if (models) out.models.emplace_back(subject + "/cca", to_json(model));
    }
    out.result.subjects.push_back(res);
    out.proj.push_back(std::move(proj));
  }
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<FoldOutput> run_folds(const Shared& sh, const std::vector<Index>& folds, bool keep_models) {
  const auto F = static_cast<Index>(folds.size());
  std::vector<FoldOutput> outs(static_cast<std::size_t>(F));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(F));
#pragma omp parallel for schedule(dynamic, 1)
  for (Index i = 0; i < F; ++i) {
    try {
      outs[static_cast<std::size_t>(i)] = run_fold(sh, folds[static_cast<std::size_t>(i)], keep_models);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return outs;
}

Shared make_shared_state(const PipelineConfig& c, PipelineKind kind, const PreparedData& data) {
  Shared sh;
  sh.config = &c;
  sh.kind = kind;
  sh.data = &data;
  const double fs = data.stimulus.fs_hz;
  const auto N = data.responses.size();
  require(!is_multiway(kind) || N >= 2, ErrorKind::input,
          "multiway pipelines need at least two subjects, got " + std::to_string(N));
  Index half_orders = 0;
  for (const auto& r : data.responses) {
    if (c.preprocessing.bandpass) {
      sh.responses.push_back(bandpass(r, c.preprocessing.bandpass->first, c.preprocessing.bandpass->second).data);
    } else {
      sh.responses.push_back(r.data);
    }
  }
  if (c.preprocessing.bandpass) half_orders += bandpass_order(fs) / 2;
  if (c.preprocessing.filterbank) {
    sh.fb = design_filterbank(fs, c.preprocessing.filterbank_bands);
    half_orders += sh.fb->order() / 2;
  }
  Index lag_pad = 0;
  if (is_multiway(kind)) {
    sh.lagged = time_lag(data.stimulus, c.stimulus.lags).data;
    lag_pad = c.stimulus.lags - 1;
  }
  sh.head = lag_pad + half_orders;
  sh.tail = half_orders;
  return sh;
}

std::vector<Index> fold_list(const PipelineConfig& c, const RunOptions& opts) {
  if (opts.only_fold) {
    require(*opts.only_fold >= 0 && *opts.only_fold < c.cv.folds, ErrorKind::config, "fold index out of range");
    return {*opts.only_fold};
  }
  std::vector<Index> f(static_cast<std::size_t>(c.cv.folds));
  std::iota(f.begin(), f.end(), 0);
  return f;
}

std::vector<std::pair<std::string, double>> per_subject_z(const std::vector<FoldResult>& folds) {
  std::vector<std::pair<std::string, double>> out;
  if (folds.empty()) return out;
  for (std::size_t n = 0; n < folds[0].subjects.size(); ++n) {
    std::vector<double> r;
    for (const auto& f : folds) r.push_back(f.subjects[n].test_corr);
    out.emplace_back(folds[0].subjects[n].subject, z_average(r));
  }
  return out;
}

json folds_json(const std::vector<FoldResult>& folds) {
  json arr = json::array();
  for (const auto& f : folds) {
    json subs = json::array();
    for (const auto& s : f.subjects)
      subs.push_back({{"subject", s.subject},
                      {"test_corr", s.test_corr},
                      {"validation_corr", s.validation_corr},
                      {"train_corr", s.train_corr}});
    arr.push_back({{"fold", f.fold},
                   {"train_rows", f.train_rows},
                   {"validation_rows", f.validation_rows},
                   {"test_rows", f.test_rows},
                   {"subjects", subs}});
  }
  return arr;
}

json ttest_json(const TTestResult& t) { return {{"t", t.t}, {"p", t.p}, {"df", t.df}}; }

}  // namespace

double overall_from_folds(const std::vector<FoldResult>& folds) {
  std::vector<double> r;
  for (const auto& f : folds)
    for (const auto& s : f.subjects) r.push_back(s.test_corr);
  return z_average(r);
}

RunReport run_pipeline(const PipelineConfig& config, const Dataset& ds, const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  const PreparedData data = prepare(ds, config);
  RunReport rep;
  rep.config = config;
  rep.stimulus_source = data.stimulus_source;
  const auto folds = fold_list(config, opts);

  const Shared sh = make_shared_state(config, config.pipeline, data);
  rep.excluded_head = sh.head;
  rep.excluded_tail = sh.tail;
  auto outs = run_folds(sh, folds, opts.keep_models);
  rep.dims = outs.front().dims;
  for (auto& o : outs) {
    rep.folds.push_back(o.result);
    rep.fold_wall_ms.push_back(o.wall_ms);
    if (opts.keep_models) rep.models.push_back(std::move(o.models));
  }
  rep.per_subject = per_subject_z(rep.folds);
  rep.overall = overall_from_folds(rep.folds);

  const double fs = data.stimulus.fs_hz;
  for (std::size_t li = 0; li < config.segments.seconds.size(); ++li) {
    const double sec = config.segments.seconds[li];
    const auto L = static_cast<Index>(std::llround(sec * fs));
    DPrimeRow row;
    row.seconds = sec;
    std::vector<double> aligned, misaligned;
    for (const auto& o : outs) {
      for (std::size_t n = 0; n < o.proj.size(); ++n) {
        const auto& p = o.proj[n];
        if (p.stimulus.size() < 2 * L) continue;
        const auto seed = derive_seed(derive_seed(config.seed, static_cast<std::uint64_t>(o.result.fold), n), kTagSegments, li);
        const auto res = segment_classify(p.stimulus, p.response, fs, sec, config.segments.count, seed);
        aligned.insert(aligned.end(), res.aligned_corrs.begin(), res.aligned_corrs.end());
        misaligned.insert(misaligned.end(), res.misaligned_corrs.begin(), res.misaligned_corrs.end());
      }
    }
    row.aligned = static_cast<Index>(aligned.size());
    row.misaligned = static_cast<Index>(misaligned.size());
    if (!aligned.empty()) row.d_prime = cohens_d_prime(aligned, misaligned);
    rep.d_prime.push_back(row);
  }
  if (opts.keep_projections)
    for (auto& o : outs) rep.projections.push_back(std::move(o.proj));

  if (config.compare_with) {
    const Shared base = make_shared_state(config, *config.compare_with, data);
    require(base.head == sh.head, ErrorKind::config,
            "compare_with must trim the same edges as the main pipeline (both multiway or both not)");
    const auto bouts = run_folds(base, folds, false);
    Comparison cmp;
    cmp.baseline = *config.compare_with;
    for (const auto& o : bouts) cmp.baseline_folds.push_back(o.result);
    cmp.baseline_overall = overall_from_folds(cmp.baseline_folds);
    cmp.alpha_corrected = bonferroni(config.alpha, config.comparisons);
    std::vector<double> a_all, b_all;
    for (std::size_t n = 0; n < data.subjects.size(); ++n) {
      std::vector<double> a, b;
      for (std::size_t f = 0; f < rep.folds.size(); ++f) {
        a.push_back(rep.folds[f].subjects[n].test_corr);
        b.push_back(cmp.baseline_folds[f].subjects[n].test_corr);
      }
      a_all.insert(a_all.end(), a.begin(), a.end());
      b_all.insert(b_all.end(), b.begin(), b.end());
      if (a.size() >= 2) cmp.per_subject.push_back({data.subjects[n], paired_t_test(a, b)});
    }
    require(a_all.size() >= 2, ErrorKind::input, "a t-test needs at least two fold x subject pairs");
    cmp.overall = paired_t_test(a_all, b_all);
    rep.comparison = cmp;
  }
  rep.total_wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

json RunReport::to_json() const {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["library_version"] = kVersion;
  j["pipeline"] = dcca::to_string(config.pipeline);
  j["config"] = dcca::to_json(config);
  j["stimulus_source"] = stimulus_source;
  j["excluded_rows"] = {{"head", excluded_head}, {"tail", excluded_tail}};
  j["dimensions"] = dcca::to_json(dims);
  j["folds"] = folds_json(folds);
  json subs = json::array();
  for (const auto& [s, z] : per_subject) subs.push_back({{"subject", s}, {"z_average", z}});
  j["per_subject"] = subs;
  j["overall"] = overall;
  json dp = json::array();
  for (const auto& r : d_prime)
    dp.push_back({{"segment_s", r.seconds},
                  {"d_prime", r.d_prime ? json(*r.d_prime) : json()},
                  {"aligned", r.aligned},
                  {"misaligned", r.misaligned}});
  j["d_prime"] = dp;
  if (comparison) {
    const auto& c = *comparison;
    json per = json::array();
    for (const auto& s : c.per_subject)
      per.push_back({{"subject", s.subject}, {"test", ttest_json(s.test)}, {"significant", s.test.p < c.alpha_corrected}});
    j["comparison"] = {{"baseline", dcca::to_string(c.baseline)},
                       {"alternative", "greater"},
                       {"alpha_corrected", c.alpha_corrected},
                       {"baseline_overall", c.baseline_overall},
                       {"baseline_folds", folds_json(c.baseline_folds)},
                       {"per_subject", per},
                       {"overall", ttest_json(c.overall)},
                       {"overall_significant", c.overall.p < c.alpha_corrected}};
  }
  return j;
}

json RunReport::timing_json() const {
  json folds_ms = json::array();
  for (std::size_t i = 0; i < fold_wall_ms.size(); ++i)
    folds_ms.push_back({{"fold", folds[i].fold}, {"wall_ms", fold_wall_ms[i]}});
  return {{"total_wall_ms", total_wall_ms}, {"folds", folds_ms}, {"threads", omp_get_max_threads()}};
}

// ---- sweep ----

PipelineConfig with_parameter(PipelineConfig c, const std::string& param, double value) {
  auto as_index = [&] {
    require(value >= 1.0 && value == std::floor(value), ErrorKind::config,
            "sweep value for '" + param + "' must be a positive integer");
    return static_cast<Index>(value);
  };
  if (param == "dropout") {
    c.model.dropout = value;
  } else if (param == "batch") {
    c.model.batch = as_index();
  } else if (param == "d") {
    (is_multiway(c.pipeline) ? c.model.mcca_d : c.model.d) = as_index();
  } else if (param == "d_s") {
    c.stimulus.lags = as_index();
  } else if (param == "mse_weight") {
    c.model.mse_weight = value;
  } else if (param == "depth") {
    const Index k = as_index();
    auto repeat = [k](std::vector<Index>& h, Index fallback) { h.assign(static_cast<std::size_t>(k), h.empty() ? fallback : h[0]); };
    repeat(c.model.hidden, 64);
    repeat(c.model.enc_hidden, 60);
  } else {
    fail(ErrorKind::config, "unknown sweep parameter '" + param + "' (dropout, batch, d, d_s, mse_weight, depth)");
  }
  c.validate();
  return c;
}

SweepReport sweep(const PipelineConfig& config, const Dataset& ds, const std::string& param,
                  const std::vector<double>& values) {
  require(!values.empty(), ErrorKind::config, "sweep needs at least one value");
  for (double v : values) with_parameter(config, param, v);  // reject bad values before any work
  SweepReport rep;
  rep.parameter = param;
  rep.pipeline = config.pipeline;
  for (double v : values) {
    auto c = with_parameter(config, param, v);
    c.compare_with.reset();
    c.segments.seconds.clear();
    const auto r = run_pipeline(c, ds);
    rep.rows.push_back({v, r.overall, r.per_subject});
  }
  return rep;
}

json SweepReport::to_json() const {
  json rows_j = json::array();
  for (const auto& r : rows) {
    json subs = json::array();
    for (const auto& [s, z] : r.per_subject) subs.push_back({{"subject", s}, {"z_average", z}});
    rows_j.push_back({{"value", r.value}, {"overall", r.overall}, {"per_subject", subs}});
  }
  return {{"schema_version", kConfigSchemaVersion},
          {"library_version", kVersion},
          {"pipeline", dcca::to_string(pipeline)},
          {"parameter", parameter},
          {"rows", rows_j}};
}

}  // namespace dcca
