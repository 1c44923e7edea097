#include "dcca/io.hpp"

#include "dcca/error.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dcca {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

json read_sidecar(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::parse, path.string() + ": malformed sidecar at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

template <class T>
T sidecar_field(const json& j, const char* key, const fs::path& path) {
  if (!j.contains(key)) fail(ErrorKind::parse, path.string() + ": sidecar lacks '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, path.string() + ": sidecar field '" + key + "' has the wrong type");
  }
}

TimeSeries ingest_csv(const fs::path& path, double default_fs) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::input, "cannot open " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::parse, path.string() + ": empty file, expected a header");
  TimeSeries ts;
  for (const auto& h : split_line(line)) {
    const std::string name = trim(h);
    require(!name.empty(), ErrorKind::parse, path.string() + ":1: empty column name in header");
    ts.labels.push_back(name);
  }
  const auto cols = static_cast<Index>(ts.labels.size());
  std::vector<double> values;
  Index row = 0;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    require(static_cast<Index>(cells.size()) == cols, ErrorKind::parse,
            path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) + " cells, got " +
                std::to_string(cells.size()));
    for (Index c = 0; c < cols; ++c) {
      const std::string cell = trim(cells[static_cast<std::size_t>(c)]);
      double v = 0.0;
      const char* first = cell.data();
      if (!cell.empty() && cell[0] == '+') ++first;
      const auto res = std::from_chars(first, cell.data() + cell.size(), v);
      require(res.ec == std::errc() && res.ptr == cell.data() + cell.size() && !cell.empty(), ErrorKind::parse,
              path.string() + ":" + std::to_string(line_no) + ": cannot parse '" + cell + "' in column '" +
                  ts.labels[static_cast<std::size_t>(c)] + "'");
      require(std::isfinite(v), ErrorKind::data,
              path.string() + ": non-finite value at row " + std::to_string(row) + ", column '" +
                  ts.labels[static_cast<std::size_t>(c)] + "'");
      values.push_back(v);
    }
    ++row;
  }
  ts.data.resize(row, cols);
  for (Index i = 0; i < row; ++i)
    for (Index c = 0; c < cols; ++c) ts.data(i, c) = values[static_cast<std::size_t>(i * cols + c)];
  ts.fs_hz = default_fs;
  const fs::path side = sidecar_path(path);
  if (fs::exists(side)) {
    const json j = read_sidecar(side);
    if (j.contains("fs_hz")) ts.fs_hz = sidecar_field<double>(j, "fs_hz", side);
  }
  require(ts.fs_hz > 0.0, ErrorKind::config, path.string() + ": no sampling rate (sidecar or config)");
  return ts;
}

TimeSeries ingest_raw(const fs::path& path) {
  const fs::path side = sidecar_path(path);
  require(fs::exists(side), ErrorKind::input, "raw-f64 file " + path.string() + " has no sidecar " + side.string());
  const json j = read_sidecar(side);
  const auto rows = sidecar_field<long long>(j, "rows", side);
  const auto cols = sidecar_field<long long>(j, "cols", side);
  require(rows >= 0 && cols >= 1, ErrorKind::parse, side.string() + ": invalid rows/cols");
  TimeSeries ts;
  ts.fs_hz = sidecar_field<double>(j, "fs_hz", side);
  if (j.contains("labels")) ts.labels = sidecar_field<std::vector<std::string>>(j, "labels", side);
  const auto expected = static_cast<std::uintmax_t>(rows) * static_cast<std::uintmax_t>(cols) * 8u;
  const auto actual = fs::file_size(path);
  require(actual == expected, ErrorKind::data,
          path.string() + ": size mismatch, expected " + std::to_string(expected) + " bytes (rows*cols*8), found " +
              std::to_string(actual));
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::input, "cannot open " + path.string());
  std::vector<double> buf(static_cast<std::size_t>(rows * cols));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expected));
  require(static_cast<bool>(in), ErrorKind::input, path.string() + ": short read");
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : buf) {
      std::uint64_t u;
      std::memcpy(&u, &v, 8);
      u = __builtin_bswap64(u);
      std::memcpy(&v, &u, 8);
    }
  }
  ts.data.resize(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) {
      const double v = buf[static_cast<std::size_t>(i * cols + c)];
      require(std::isfinite(v), ErrorKind::data,
              path.string() + ": non-finite value at row " + std::to_string(i) + ", column " + std::to_string(c));
      ts.data(i, c) = v;
    }
  ts.validate();
  return ts;
}

}  // namespace

DataFormat parse_format(const std::string& s) {
  if (s == "csv") return DataFormat::csv;
  if (s == "raw-f64") return DataFormat::raw_f64;
  fail(ErrorKind::config, "unknown data format '" + s + "' (csv or raw-f64)");
}

std::string to_string(DataFormat f) { return f == DataFormat::csv ? "csv" : "raw-f64"; }

fs::path sidecar_path(const fs::path& path) { return fs::path(path.string() + ".meta.json"); }

TimeSeries ingest(const fs::path& path, DataFormat format, double default_fs) {
  require(fs::exists(path), ErrorKind::input, "file not found: " + path.string());
  return format == DataFormat::csv ? ingest_csv(path, default_fs) : ingest_raw(path);
}

void write_series(const fs::path& path, const TimeSeries& ts, DataFormat format) {
  ts.validate();
  std::vector<std::string> labels = ts.labels;
  if (labels.empty())
    for (Index c = 0; c < ts.channels(); ++c) labels.push_back("ch" + std::to_string(c));
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  json side;
  side["fs_hz"] = ts.fs_hz;
  if (format == DataFormat::csv) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::input, "cannot write " + path.string());
    for (std::size_t c = 0; c < labels.size(); ++c) out << (c ? "," : "") << labels[c];
    out << '\n';
    for (Index i = 0; i < ts.samples(); ++i) {
      for (Index c = 0; c < ts.channels(); ++c) out << (c ? "," : "") << format_double(ts.data(i, c));
      out << '\n';
    }
  } else {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::input, "cannot write " + path.string());
    std::vector<double> buf(static_cast<std::size_t>(ts.data.size()));
    for (Index i = 0; i < ts.samples(); ++i)
      for (Index c = 0; c < ts.channels(); ++c) buf[static_cast<std::size_t>(i * ts.channels() + c)] = ts.data(i, c);
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& v : buf) {
        std::uint64_t u;
        std::memcpy(&u, &v, 8);
        u = __builtin_bswap64(u);
        std::memcpy(&v, &u, 8);
      }
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
    side["rows"] = ts.samples();
    side["cols"] = ts.channels();
  }
  side["labels"] = labels;
  write_text(sidecar_path(path), side.dump(2) + "\n");
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  require(j.is_array(), ErrorKind::parse, "matrix must be an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j[0].size()) : 0;
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    require(j[static_cast<std::size_t>(i)].is_array() && static_cast<Index>(j[static_cast<std::size_t>(i)].size()) == cols,
            ErrorKind::parse, "ragged matrix rows");
    for (Index c = 0; c < cols; ++c) M(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  }
  return M;
}

namespace {

json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

json to_json(const LinearCcaModel& m) {
  return {{"kind", "linear_cca"},
          {"proj_x", matrix_to_json(m.proj_x)},
          {"proj_y", matrix_to_json(m.proj_y)},
          {"canon_corr", vec(m.canon_corr)},
          {"mean_x", vec(m.mean_x)},
          {"mean_y", vec(m.mean_y)},
          {"ridge_x", m.ridge_x},
          {"ridge_y", m.ridge_y},
          {"clamped", m.clamped}};
}

LinearCcaModel linear_cca_from_json(const json& j) {
  try {
    LinearCcaModel m;
    m.proj_x = matrix_from_json(j.at("proj_x"));
    m.proj_y = matrix_from_json(j.at("proj_y"));
    m.canon_corr = to_vec(j.at("canon_corr"));
    m.mean_x = to_vec(j.at("mean_x"));
    m.mean_y = to_vec(j.at("mean_y"));
    m.ridge_x = j.at("ridge_x").get<double>();
    m.ridge_y = j.at("ridge_y").get<double>();
    m.clamped = j.value("clamped", Index{0});
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("linear CCA model: ") + e.what());
  }
}

json to_json(const MccaModel& m) {
  json proj = json::array(), back = json::array(), means = json::array();
  for (const auto& p : m.proj) proj.push_back(matrix_to_json(p));
  for (const auto& b : m.back_proj) back.push_back(matrix_to_json(b));
  for (const auto& v : m.means) means.push_back(vec(v));
  return {{"kind", "mcca"},       {"proj", proj},       {"eigenvalues", vec(m.eigenvalues)},
          {"view_dims", m.view_dims}, {"means", means}, {"back_proj", back},
          {"clamped", m.clamped}};
}

MccaModel mcca_from_json(const json& j) {
  try {
    MccaModel m;
    for (const auto& p : j.at("proj")) m.proj.push_back(matrix_from_json(p));
    for (const auto& b : j.at("back_proj")) m.back_proj.push_back(matrix_from_json(b));
    for (const auto& v : j.at("means")) m.means.push_back(to_vec(v));
    m.eigenvalues = to_vec(j.at("eigenvalues"));
    m.view_dims = j.at("view_dims").get<std::vector<Index>>();
    m.clamped = j.value("clamped", Index{0});
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("multiway CCA model: ") + e.what());
  }
}

json to_json(const DenseNetwork& net) {
  json layers = json::array();
  for (const auto& l : net.layers) {
    json a = {{"kind", l.activation.kind == ActivationKind::linear ? "linear" : "leaky_relu"}};
    if (l.activation.kind == ActivationKind::leaky_relu) a["slope"] = l.activation.slope;
    std::vector<double> w;
    for (Index i = 0; i < l.weights.rows(); ++i)
      for (Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(i, c));
    layers.push_back({{"in", l.in_dim()},
                      {"out", l.out_dim()},
                      {"activation", a},
                      {"dropout", l.dropout},
                      {"weights", w},
                      {"bias", vec(l.bias)}});
  }
  return {{"kind", "dense_network"}, {"rng_seed", net.rng_seed}, {"layers", layers}};
}

DenseNetwork network_from_json(const json& j) {
  try {
    DenseNetwork net;
    net.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    for (const auto& l : j.at("layers")) {
      DenseLayer layer;
      const auto in = l.at("in").get<Index>(), out = l.at("out").get<Index>();
      const auto w = l.at("weights").get<std::vector<double>>();
      require(static_cast<Index>(w.size()) == in * out, ErrorKind::parse, "weight count does not match layer dims");
      layer.weights.resize(in, out);
      for (Index i = 0; i < in; ++i)
        for (Index c = 0; c < out; ++c) layer.weights(i, c) = w[static_cast<std::size_t>(i * out + c)];
      layer.bias = to_vec(l.at("bias"));
      const auto& a = l.at("activation");
      layer.activation = a.at("kind").get<std::string>() == "linear" ? Activation::linear()
                                                                      : Activation::leaky_relu(a.at("slope").get<double>());
      layer.dropout = l.at("dropout").get<double>();
      net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("network checkpoint: ") + e.what());
  }
}

namespace {

json standardizer_json(const Standardizer& s) { return {{"mean", vec(s.mean)}, {"scale", vec(s.scale)}}; }

}  // namespace

json to_json(const DccaModel& m) {
  return {{"kind", "dcca"},
          {"net_x", to_json(m.net_x)},
          {"net_y", to_json(m.net_y)},
          {"input_x", standardizer_json(m.in_x)},
          {"input_y", standardizer_json(m.in_y)},
          {"readout", to_json(m.readout)},
          {"hyper",
           {{"d", m.hyper.d},
            {"hidden", m.hyper.hidden},
            {"eta", m.hyper.eta},
            {"batch", m.hyper.batch},
            {"dropout", m.hyper.dropout},
            {"epochs", m.hyper.epochs},
            {"patience", m.hyper.patience},
            {"seeds_tried", m.hyper.seeds}}},
          {"chosen_seed", m.chosen_seed},
          {"best_epoch", m.best_epoch},
          {"best_val_rho", m.best_val_rho}};
}

json to_json(const DmccaModel& m) {
  json enc = json::array(), dec = json::array(), inputs = json::array();
  for (const auto& n : m.nets.encoders) enc.push_back(to_json(n));
  for (const auto& n : m.nets.decoders) dec.push_back(to_json(n));
  for (const auto& s : m.inputs) inputs.push_back(standardizer_json(s));
  return {{"kind", "dmcca"},
          {"encoders", enc},
          {"decoders", dec},
          {"inputs", inputs},
          {"hyper",
           {{"d", m.hyper.d},
            {"enc_hidden", m.hyper.enc_hidden},
            {"dec_hidden", m.hyper.dec_hidden},
            {"eta", m.hyper.eta},
            {"batch", m.hyper.batch},
            {"dropout", m.hyper.dropout},
            {"epochs", m.hyper.epochs},
            {"mse_weight", m.hyper.mse_weight}}},
          {"chosen_seed", m.chosen_seed},
          {"best_epoch", m.best_epoch},
          {"best_val_rho", m.best_val_rho}};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::input, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::input, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dcca
