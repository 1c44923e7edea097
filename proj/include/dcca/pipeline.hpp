#pragma once

#include "dcca/io.hpp"
#include "dcca/metrics.hpp"
#include "dcca/synth.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dcca {

inline constexpr int kConfigSchemaVersion = 1;

enum class PipelineKind { lcca, dcca, lmlc, lmdc, dmlc, dmdc };
enum class StimulusFeature { envelope, pc1, rms, flux };
enum class SplitMode { contiguous, random };

PipelineKind parse_pipeline(const std::string& s);
std::string to_string(PipelineKind k);
StimulusFeature parse_feature(const std::string& s);
std::string to_string(StimulusFeature f);
SplitMode parse_split_mode(const std::string& s);
std::string to_string(SplitMode m);

bool is_multiway(PipelineKind k);
bool has_deep_multiway(PipelineKind k);
bool has_deep_cca(PipelineKind k);

struct PreprocessConfig {
  std::optional<std::pair<double, double>> bandpass;  // response band edges in Hz
  Index pca_response = 60;    // skipped when the response has <= this many channels
  bool filterbank = true;
  Index filterbank_bands = kFilterBankBands;
  Index pca_filterbank = 139;  // skipped when the filterbank output is no wider
};

struct StimulusConfig {
  StimulusFeature feature = StimulusFeature::envelope;
  Index lags = 60;  // d_s, multiway pipelines only
};

struct ModelConfig {
  Index d = 1;        // CCA-stage output dims
  Index mcca_d = 10;  // shared dims of the multiway stage
  double eta = 1e-3;
  Index batch = 2048;
  double dropout = 0.0;
  double mse_weight = 0.1;
  Index epochs = 100;
  Index patience = 10;
  Index seeds = 3;
  std::vector<Index> hidden{2038, 1608};
  std::vector<Index> enc_hidden{60, 60};
  std::vector<Index> dec_hidden{60, 110};
  double leaky_slope = 0.1;
  bool linear = false;
};

struct CvConfig {
  Index folds = 20;
  // train, validation, test; empty means (K-2)/K, 1/K, 1/K
  std::vector<double> split;
  SplitMode mode = SplitMode::contiguous;

  std::array<double, 3> fractions() const;
};

struct SegmentConfig {
  std::vector<double> seconds{1.0, 5.0, 30.0};
  Index count = 200;
};

struct DataConfig {
  DataFormat format = DataFormat::csv;
  double fs_hz = 0.0;  // fallback rate for csv files without a sidecar
  std::string stimulus;
  std::vector<std::string> responses;
  std::vector<std::string> subjects;  // defaults to response file stems
};

struct SyntheticConfig {
  SynthSpec spec;
  double audio_fs_hz = 0.0;  // > 0: view 0 becomes an audio carrier at this rate
};

struct PipelineConfig {
  int schema_version = kConfigSchemaVersion;
  PipelineKind pipeline = PipelineKind::lcca;
  std::uint64_t seed = 0;
  PreprocessConfig preprocessing;
  StimulusConfig stimulus;
  ModelConfig model;
  CvConfig cv;
  SegmentConfig segments;
  std::optional<DataConfig> data;
  std::optional<SyntheticConfig> synthetic;
  std::optional<PipelineKind> compare_with;
  double alpha = 0.05;
  Index comparisons = 1;  // Bonferroni divisor
  std::filesystem::path base_dir;  // relative data paths resolve here

  void validate() const;
};

// Unknown keys anywhere are config errors.
PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& c);

struct Dataset {
  TimeSeries stimulus;  // audio, a 20-column feature matrix, or one feature channel
  std::vector<TimeSeries> responses;
  std::vector<std::string> subjects;
};

Dataset load_dataset(const PipelineConfig& c);

// One channel at the response rate, trimmed with the responses to a common length.
struct PreparedData {
  TimeSeries stimulus;
  std::vector<TimeSeries> responses;
  std::vector<std::string> subjects;
  std::string stimulus_source;
};

PreparedData prepare(const Dataset& ds, const PipelineConfig& c);

struct FoldIndices {
  std::vector<Index> train;
  std::vector<Index> validation;
  std::vector<Index> test;
};

// Rows [head, m - tail) split for fold f; the test window starts at f/K of
// the usable rows and the validation window follows it, wrapping around.
FoldIndices fold_indices(Index m, Index head, Index tail, const CvConfig& cv, Index fold, std::uint64_t seed);

struct Dimensions {
  Index response_in = 0;
  Index after_pca_response = 0;
  Index multiway_out = 0;  // 0 for intra-subject pipelines
  Index after_filterbank = 0;
  Index response_final = 0;
  Index stimulus_lagged = 0;
  Index stimulus_final = 0;
};

nlohmann::json to_json(const Dimensions& d);

struct SubjectResult {
  std::string subject;
  double test_corr = 0.0;
  double validation_corr = 0.0;
  double train_corr = 0.0;
};

struct FoldResult {
  Index fold = 0;
  Index train_rows = 0, validation_rows = 0, test_rows = 0;
  std::vector<SubjectResult> subjects;
};

// First canonical component on the test rows.
struct TestProjection {
  Vector stimulus;
  Vector response;
};

struct DPrimeRow {
  double seconds = 0.0;
  std::optional<double> d_prime;
  Index aligned = 0;
  Index misaligned = 0;
};

struct SubjectTTest {
  std::string subject;
  TTestResult test;
};

struct Comparison {
  PipelineKind baseline = PipelineKind::lcca;
  std::vector<FoldResult> baseline_folds;
  double baseline_overall = 0.0;
  std::vector<SubjectTTest> per_subject;
  TTestResult overall;
  double alpha_corrected = 0.05;
};

struct RunOptions {
  bool keep_projections = false;
  bool keep_models = false;
  std::optional<Index> only_fold;
};

struct RunReport {
  PipelineConfig config;
  std::string stimulus_source;
  Index excluded_head = 0, excluded_tail = 0;
  Dimensions dims;
  std::vector<FoldResult> folds;
  std::vector<std::pair<std::string, double>> per_subject;  // z-averaged over folds
  double overall = 0.0;
  std::vector<DPrimeRow> d_prime;
  std::optional<Comparison> comparison;

  // Not serialized into the report.
  std::vector<std::vector<TestProjection>> projections;   // [fold][subject]
  std::vector<std::vector<std::pair<std::string, nlohmann::json>>> models;  // [fold] named artifacts
  std::vector<double> fold_wall_ms;
  double total_wall_ms = 0.0;

  // Deterministic: no timing fields.
  nlohmann::json to_json() const;
  nlohmann::json timing_json() const;
};

// z_average of every fold x subject test correlation in report order.
double overall_from_folds(const std::vector<FoldResult>& folds);

RunReport run_pipeline(const PipelineConfig& config, const Dataset& ds, const RunOptions& opts = {});

inline const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> p{"dropout", "batch", "d", "d_s", "mse_weight", "depth"};
  return p;
}

// Copy of `c` with one parameter set. d maps to the multiway dims for
// multiway pipelines; depth repeats the first hidden width.
PipelineConfig with_parameter(PipelineConfig c, const std::string& param, double value);

struct SweepRow {
  double value = 0.0;
  double overall = 0.0;
  std::vector<std::pair<std::string, double>> per_subject;
};

struct SweepReport {
  std::string parameter;
  PipelineKind pipeline = PipelineKind::lcca;
  std::vector<SweepRow> rows;
  nlohmann::json to_json() const;
};

SweepReport sweep(const PipelineConfig& config, const Dataset& ds, const std::string& param,
                  const std::vector<double>& values);

}  // namespace dcca
